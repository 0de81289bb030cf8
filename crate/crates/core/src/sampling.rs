//! Constrained triplet sampling.
//!
//! Triplets are drawn by rejection sampling over valid pixels and accepted
//! when the back-projected ground-truth points satisfy both restrictions:
//!
//! * R1: the angles at A (between AB and AC) and at B (between BC and BA)
//!   lie in `[beta, alpha]`. The angle at C is not constrained.
//! * R2: all three pairwise distances exceed `theta`.
//!
//! Group `g` draws from substream `g` of the configured seed (see
//! [`crate::rng`]), so the accepted set does not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{backproject_map, CameraIntrinsics, DepthMap, Point3, EPS_DEGENERATE};
use crate::rng;

/// `(row, col)`.
pub type PixelIndex = (usize, usize);
pub type Triplet = [PixelIndex; 3];
pub type Pair = [PixelIndex; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub n_groups: usize,
    pub alpha_deg: f64,
    pub beta_deg: f64,
    pub theta_m: f64,
    pub seed: u64,
    pub max_attempts_per_group: u32,
}

impl SamplingConfig {
    pub const DEFAULT_ALPHA_DEG: f64 = 120.0;
    pub const DEFAULT_BETA_DEG: f64 = 30.0;
    pub const DEFAULT_THETA_M: f64 = 0.6;
    pub const DEFAULT_ATTEMPTS: u32 = 200;

    pub fn new(n_groups: usize, seed: u64) -> Self {
        SamplingConfig {
            n_groups,
            alpha_deg: Self::DEFAULT_ALPHA_DEG,
            beta_deg: Self::DEFAULT_BETA_DEG,
            theta_m: Self::DEFAULT_THETA_M,
            seed,
            max_attempts_per_group: Self::DEFAULT_ATTEMPTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_groups == 0 {
            return Err(Error::invalid("n_groups must be positive"));
        }
        if !(0.0 < self.beta_deg && self.beta_deg < self.alpha_deg && self.alpha_deg < 180.0) {
            return Err(Error::invalid(format!(
                "need 0 < beta < alpha < 180, got beta={} alpha={}",
                self.beta_deg, self.alpha_deg
            )));
        }
        if !(self.theta_m > 0.0 && self.theta_m.is_finite()) {
            return Err(Error::invalid("theta must be finite and positive"));
        }
        if self.max_attempts_per_group == 0 {
            return Err(Error::invalid("max_attempts_per_group must be positive"));
        }
        Ok(())
    }

    pub fn attempt_budget(&self) -> u64 {
        self.max_attempts_per_group as u64 * self.n_groups as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripletSet {
    pub triplets: Vec<Triplet>,
    pub config: SamplingConfig,
    pub attempts_used: u64,
    /// Fewer than `config.n_groups` triplets were accepted.
    pub underfull: bool,
}

impl TripletSet {
    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }
}

/// Angle between two vectors in degrees, in `[0, 180]`.
///
/// Evaluated as `atan2(|a x b|, a . b)`, which equals the arccosine of the
/// normalized dot product but keeps full precision near 0 and 180 degrees.
pub fn angle_deg(v1: &Point3, v2: &Point3) -> Result<f64> {
    if !(v1.norm() > EPS_DEGENERATE && v2.norm() > EPS_DEGENERATE) {
        return Err(Error::invalid("angle of a zero-length vector"));
    }
    Ok(angle_unchecked(v1, v2))
}

#[inline]
pub(crate) fn angle_unchecked(v1: &Point3, v2: &Point3) -> f64 {
    v1.cross(v2).norm().atan2(v1.dot(v2)).to_degrees()
}

pub fn satisfies_r1(pa: &Point3, pb: &Point3, pc: &Point3, alpha_deg: f64, beta_deg: f64) -> bool {
    let in_range = |v1: Point3, v2: Point3| match angle_deg(&v1, &v2) {
        Ok(a) => beta_deg <= a && a <= alpha_deg,
        Err(_) => false,
    };
    in_range(pb - pa, pc - pa) && in_range(pc - pb, pa - pb)
}

pub fn satisfies_r2(pa: &Point3, pb: &Point3, pc: &Point3, theta_m: f64) -> bool {
    (pb - pa).norm() > theta_m && (pc - pb).norm() > theta_m && (pa - pc).norm() > theta_m
}

/// Rejection-sampled index triplets over an arbitrary point list.
///
/// Returns the accepted triplets in group order and the total number of
/// attempts spent.
pub fn sample_point_triplets(points: &[Point3], cfg: &SamplingConfig) -> Result<(Vec<[usize; 3]>, u64)> {
    cfg.validate()?;
    if points.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 candidate points, have {}",
            points.len()
        )));
    }
    let n = points.len() as u64;
    let outcomes: Vec<(Option<[usize; 3]>, u64)> = (0..cfg.n_groups as u64)
        .into_par_iter()
        .map(|g| {
            let mut rng = rng::substream(cfg.seed, g);
            for attempt in 1..=cfg.max_attempts_per_group as u64 {
                let (a, b, c) = rng::distinct_triple(&mut rng, n);
                let (pa, pb, pc) = (&points[a as usize], &points[b as usize], &points[c as usize]);
                if satisfies_r2(pa, pb, pc, cfg.theta_m)
                    && satisfies_r1(pa, pb, pc, cfg.alpha_deg, cfg.beta_deg)
                {
                    return (Some([a as usize, b as usize, c as usize]), attempt);
                }
            }
            (None, cfg.max_attempts_per_group as u64)
        })
        .collect();
    let attempts = outcomes.iter().map(|o| o.1).sum();
    let accepted = outcomes.into_iter().filter_map(|o| o.0).collect();
    Ok((accepted, attempts))
}

/// Samples up to `cfg.n_groups` pixel triplets whose ground-truth points
/// satisfy R1 and R2.
pub fn sample_triplets(gt_depth: &DepthMap, k: &CameraIntrinsics, cfg: &SamplingConfig) -> Result<TripletSet> {
    let cloud = backproject_map(gt_depth, k);
    let pixels = cloud.pixel_index.as_deref().unwrap_or_default();
    let (accepted, attempts_used) = sample_point_triplets(&cloud.points, cfg)?;
    let triplets: Vec<Triplet> = accepted
        .into_iter()
        .map(|[a, b, c]| [pixels[a], pixels[b], pixels[c]])
        .collect();
    Ok(TripletSet {
        underfull: triplets.len() < cfg.n_groups,
        triplets,
        config: *cfg,
        attempts_used,
    })
}

/// Same as [`sample_triplets`] but inside a dedicated pool of `threads`
/// workers.
pub fn sample_triplets_with_threads(
    gt_depth: &DepthMap,
    k: &CameraIntrinsics,
    cfg: &SamplingConfig,
    threads: usize,
) -> Result<TripletSet> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| sample_triplets(gt_depth, k, cfg))
}

/// Pixel pairs whose ground-truth points are farther apart than `theta_m`.
/// Uses substreams offset from the triplet streams of the same seed.
pub fn sample_pairs(
    gt_depth: &DepthMap,
    k: &CameraIntrinsics,
    n_pairs: usize,
    theta_m: f64,
    seed: u64,
    max_attempts_per_pair: u32,
) -> Result<Vec<Pair>> {
    let cloud = backproject_map(gt_depth, k);
    if cloud.len() < 2 {
        return Err(Error::invalid("need at least 2 valid pixels"));
    }
    let pixels = cloud.pixel_index.as_deref().unwrap_or_default();
    let n = cloud.len() as u64;
    let seed = rng::mix(seed, 0x5041_4952);
    let pairs = (0..n_pairs as u64)
        .into_par_iter()
        .filter_map(|g| {
            let mut rng = rng::substream(seed, g);
            (0..max_attempts_per_pair).find_map(|_| {
                let (a, b) = rng::distinct_pair(&mut rng, n);
                let (a, b) = (a as usize, b as usize);
                ((cloud.points[a] - cloud.points[b]).norm() > theta_m).then(|| [pixels[a], pixels[b]])
            })
        })
        .collect();
    Ok(pairs)
}
