//! Portable random substreams.
//!
//! A substream is ChaCha8 keyed with the little-endian bytes of the 64-bit
//! seed in key bytes 0..8 (remaining key bytes zero) and the ChaCha stream id
//! set to the substream index. Bounded integers are drawn from `next_u64`
//! with the widening multiply `(x * n) >> 64`; no rejection step is used, so
//! the number of words consumed per draw is always one. Any implementation of
//! ChaCha8 following this recipe reproduces the same sample sequence.

use rand_chacha::rand_core::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Uniform integer in `0..n`. `n` must be nonzero.
#[inline]
pub fn below(rng: &mut impl RngCore, n: u64) -> u64 {
    debug_assert!(n > 0);
    ((rng.next_u64() as u128 * n as u128) >> 64) as u64
}

/// Uniform float in `[0, 1)` from the top 53 bits of one word.
#[inline]
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw by Box-Muller (one value per two words).
pub fn gaussian(rng: &mut impl RngCore) -> f64 {
    let u1 = 1.0 - unit_f64(rng);
    let u2 = unit_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Three distinct indices in `0..n`, uniform over ordered triples. `n >= 3`.
pub fn distinct_triple(rng: &mut impl RngCore, n: u64) -> (u64, u64, u64) {
    let a = below(rng, n);
    let mut b = below(rng, n - 1);
    if b >= a {
        b += 1;
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let mut c = below(rng, n - 2);
    if c >= lo {
        c += 1;
    }
    if c >= hi {
        c += 1;
    }
    (a, b, c)
}

/// Two distinct indices in `0..n`. `n >= 2`.
pub fn distinct_pair(rng: &mut impl RngCore, n: u64) -> (u64, u64) {
    let a = below(rng, n);
    let mut b = below(rng, n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

/// SplitMix64 finalizer, used to derive child seeds.
pub fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
