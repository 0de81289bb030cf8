#![allow(dead_code)]

//! Fixtures and naive re-implementations used as test oracles. The oracles
//! use plain arrays and loops and share no code with the library.

use vnl::scene::{synthesize_scene, NoiseModel, SceneSpec};
use vnl::{rng, CameraIntrinsics, DepthMap, NormalMap};

pub type V3 = [f64; 3];

pub fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

pub fn lift(k: &CameraIntrinsics, row: usize, col: usize, d: f64) -> V3 {
    [(col as f64 - k.u0) / k.fx * d, (row as f64 - k.v0) / k.fy * d, d]
}

pub fn tri_normal(a: V3, b: V3, c: V3) -> Option<V3> {
    let n = cross(sub(b, a), sub(c, a));
    let l = norm(n);
    (l >= 1e-8).then(|| [n[0] / l, n[1] / l, n[2] / l])
}

/// Indices of the `ceil(keep * n)` largest values, ties to the smaller
/// index, in ascending order.
pub fn ohem(values: &[f64], keep: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));
    let m = ((keep * values.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    let mut kept: Vec<usize> = idx.into_iter().take(m.min(values.len())).collect();
    kept.sort();
    kept
}

pub fn naive_vn_loss(pred: &DepthMap, gt: &DepthMap, k: &CameraIntrinsics, triplets: &[[(usize, usize); 3]], keep: f64) -> f64 {
    let mut residuals = Vec::new();
    for t in triplets {
        let p: Vec<V3> = t.iter().map(|&(r, c)| lift(k, r, c, pred.get(r, c).unwrap())).collect();
        let g: Vec<V3> = t.iter().map(|&(r, c)| lift(k, r, c, gt.get(r, c).unwrap())).collect();
        let (Some(np), Some(ng)) = (tri_normal(p[0], p[1], p[2]), tri_normal(g[0], g[1], g[2])) else {
            continue;
        };
        residuals.push((np[0] - ng[0]).abs() + (np[1] - ng[1]).abs() + (np[2] - ng[2]).abs());
    }
    let kept = ohem(&residuals, keep);
    kept.iter().map(|&i| residuals[i]).sum::<f64>() / kept.len() as f64
}

pub fn naive_pairwise(pred: &DepthMap, gt: &DepthMap, k: &CameraIntrinsics, pairs: &[[(usize, usize); 2]]) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for &[(ra, ca), (rb, cb)] in pairs {
        let g = sub(lift(k, rb, cb, gt.get(rb, cb).unwrap()), lift(k, ra, ca, gt.get(ra, ca).unwrap()));
        let p = sub(lift(k, rb, cb, pred.get(rb, cb).unwrap()), lift(k, ra, ca, pred.get(ra, ca).unwrap()));
        if norm(g) <= 1e-8 || norm(p) <= 1e-8 {
            continue;
        }
        let cos = (dot(g, p) / (norm(g) * norm(p))).clamp(-1.0, 1.0);
        total += 1.0 - cos;
        n += 1;
    }
    total / n as f64
}

/// Log-spaced binning, Gaussian information gain.
pub fn naive_wce(logits: &[f64], bins: usize, gt: &DepthMap, d_min: f64, d_max: f64, sigma: f64) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for i in 0..gt.len() {
        if !gt.mask()[i] {
            continue;
        }
        let d = gt.values()[i].clamp(d_min, d_max);
        let x = (d.ln() - d_min.ln()) / (d_max.ln() - d_min.ln()) * bins as f64;
        let p = (x.floor() as usize).min(bins - 1);
        let z = &logits[i * bins..(i + 1) * bins];
        let mut m = f64::NEG_INFINITY;
        for &v in z {
            m = m.max(v);
        }
        let mut s = 0.0;
        for &v in z {
            s += (v - m).exp();
        }
        let lse = m + s.ln();
        let mut ce = 0.0;
        for (q, &v) in z.iter().enumerate() {
            let dq = p as f64 - q as f64;
            ce -= (-sigma * dq * dq).exp() * (v - lse);
        }
        total += ce;
        n += 1;
    }
    total / n as f64
}

/// Eigenvalues (ascending) and the smallest-eigenvalue eigenvector of a
/// symmetric 3x3 matrix, by the trigonometric cubic solution and a row
/// cross product.
fn smallest_eigvec(a: [[f64; 3]; 3]) -> ([f64; 3], V3) {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let phi = (det_b / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lam = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let mid = 3.0 * q - hi - lam;
    let null_dir = |lam: f64| {
        let m: Vec<V3> = (0..3)
            .map(|i| {
                let mut r = a[i];
                r[i] -= lam;
                r
            })
            .collect();
        // The largest of the three row cross products is the most accurate.
        let cands = [cross(m[0], m[1]), cross(m[0], m[2]), cross(m[1], m[2])];
        let best = cands.into_iter().max_by(|x, y| norm(*x).total_cmp(&norm(*y))).unwrap();
        let l = norm(best);
        [best[0] / l, best[1] / l, best[2] / l]
    };
    // One Rayleigh-quotient pass sharpens the closed-form eigenvalue.
    let v = null_dir(lam);
    let av = [dot(a[0], v), dot(a[1], v), dot(a[2], v)];
    let v = null_dir(dot(v, av));
    ([lam, mid, hi], v)
}

/// Camera-facing plane-fit normal of the full `(2h+1)^2` window, or `None`
/// when the window leaves the image, the center is invalid, or the patch
/// is not plane-like (`mid / min` eigenvalue ratio at most 1.5).
pub fn naive_patch_normal(depth: &DepthMap, k: &CameraIntrinsics, row: usize, col: usize, h: usize) -> Option<V3> {
    if row < h || col < h || row + h >= depth.height() || col + h >= depth.width() {
        return None;
    }
    depth.get(row, col)?;
    let mut pts = Vec::new();
    for r in row - h..=row + h {
        for c in col - h..=col + h {
            pts.push(lift(k, r, c, depth.get(r, c)?));
        }
    }
    let n = pts.len() as f64;
    let mut mean = [0.0; 3];
    for p in &pts {
        for i in 0..3 {
            mean[i] += p[i] / n;
        }
    }
    let mut cov = [[0.0; 3]; 3];
    for p in &pts {
        let d = sub(*p, mean);
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += d[i] * d[j] / n;
            }
        }
    }
    let ([lo, mid, hi], v) = smallest_eigvec(cov);
    if mid <= 1e-12 * hi || (lo > 0.0 && mid / lo <= 1.5) {
        return None;
    }
    Some(if dot(v, mean) > 0.0 { [-v[0], -v[1], -v[2]] } else { v })
}

pub fn angle_deg(a: V3, b: V3) -> f64 {
    norm(cross(a, b)).atan2(dot(a, b)).to_degrees()
}

pub fn naive_surface_loss(pred: &DepthMap, gt: &DepthMap, k: &CameraIntrinsics, h: usize) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for r in 0..gt.height() {
        for c in 0..gt.width() {
            if let (Some(a), Some(b)) = (naive_patch_normal(pred, k, r, c, h), naive_patch_normal(gt, k, r, c, h)) {
                total += angle_deg(a, b);
                n += 1;
            }
        }
    }
    total / n as f64
}

/// Uniform random depths in `[lo, hi]`.
pub fn random_depth(w: usize, h: usize, lo: f64, hi: f64, seed: u64) -> DepthMap {
    let mut g = rng::substream(seed, 0xD0);
    let vals = (0..w * h).map(|_| lo + (hi - lo) * rng::unit_f64(&mut g)).collect();
    DepthMap::from_values(w, h, vals).unwrap()
}

/// Smooth slanted surface with small per-pixel noise.
pub fn bumpy_depth(w: usize, h: usize, sigma: f64, seed: u64) -> DepthMap {
    let mut g = rng::substream(seed, 0xB0);
    let vals = (0..w * h)
        .map(|i| 2.0 + 0.04 * (i % w) as f64 + 0.02 * (i / w) as f64 + sigma * rng::gaussian(&mut g))
        .collect();
    DepthMap::from_values(w, h, vals).unwrap()
}

pub fn standard_scene() -> (DepthMap, NormalMap, CameraIntrinsics) {
    let spec = SceneSpec::standard();
    let (d, n) = synthesize_scene(&spec).unwrap();
    (d, n, spec.intrinsics)
}

/// The standard scene rendered with additive Gaussian depth noise.
pub fn noisy_standard_scene(sigma: f64, seed: u64) -> DepthMap {
    let spec = SceneSpec {
        noise: Some(NoiseModel { sigma }),
        seed,
        ..SceneSpec::standard()
    };
    synthesize_scene(&spec).unwrap().0
}

pub struct FdSummary {
    pub checked: usize,
    pub skipped: usize,
    pub max_rel_err: f64,
    pub worst_pixel: Option<usize>,
}

/// Central differences with `h = 1e-4 * d` against the analytic gradient.
/// A pixel is checked when every triplet that uses it has all normal
/// difference components at least `1e-6` away from zero.
pub fn fd_check(pred: &DepthMap, gt: &DepthMap, k: &CameraIntrinsics, triplets: &[[(usize, usize); 3]]) -> FdSummary {
    fd_check_with(pred, gt, k, triplets, 1e-4, false)
}

/// Signs of the components of `n_pred - n_gt` with pixel `px` of `pred`
/// moved by `delta`.
fn component_signs(pred: &DepthMap, gt: &DepthMap, k: &CameraIntrinsics, t: &[(usize, usize); 3], px: (usize, usize), delta: f64) -> Option<[f64; 3]> {
    let p: Vec<V3> = t
        .iter()
        .map(|&(r, c)| lift(k, r, c, pred.get(r, c).unwrap() + if (r, c) == px { delta } else { 0.0 }))
        .collect();
    let g: Vec<V3> = t.iter().map(|&(r, c)| lift(k, r, c, gt.get(r, c).unwrap())).collect();
    let np = tri_normal(p[0], p[1], p[2])?;
    let ng = tri_normal(g[0], g[1], g[2])?;
    Some([0, 1, 2].map(|i| (np[i] - ng[i]).signum()))
}

/// As [`fd_check`] with step `h = h_rel * d`. With `stencil_safe` a pixel
/// is also skipped when a component sign of a triplet using it changes
/// between `d - h` and `d + h`: the central difference then straddles a
/// kink of `|x|`.
pub fn fd_check_with(
    pred: &DepthMap,
    gt: &DepthMap,
    k: &CameraIntrinsics,
    triplets: &[[(usize, usize); 3]],
    h_rel: f64,
    stencil_safe: bool,
) -> FdSummary {
    let (_, grad) = vnl::vn_loss_grad(pred, gt, k, triplets, 1.0).unwrap();
    let w = pred.width();
    let mut eligible = vec![true; pred.len()];
    for t in triplets {
        let p: Vec<V3> = t.iter().map(|&(r, c)| lift(k, r, c, pred.get(r, c).unwrap())).collect();
        let g: Vec<V3> = t.iter().map(|&(r, c)| lift(k, r, c, gt.get(r, c).unwrap())).collect();
        let ok = match (tri_normal(p[0], p[1], p[2]), tri_normal(g[0], g[1], g[2])) {
            (Some(np), Some(ng)) => (0..3).all(|i| (np[i] - ng[i]).abs() >= 1e-6),
            _ => false,
        };
        if !ok {
            for &(r, c) in t {
                eligible[r * w + c] = false;
            }
        }
    }
    let mut s = FdSummary {
        checked: 0,
        skipped: 0,
        max_rel_err: 0.0,
        worst_pixel: None,
    };
    for i in 0..pred.len() {
        if !eligible[i] {
            s.skipped += 1;
            continue;
        }
        let d = pred.values()[i];
        let h = h_rel * d;
        let px = (i / w, i % w);
        if stencil_safe
            && triplets.iter().filter(|t| t.contains(&px)).any(|t| {
                let s0 = component_signs(pred, gt, k, t, px, 0.0);
                s0 != component_signs(pred, gt, k, t, px, h) || s0 != component_signs(pred, gt, k, t, px, -h)
            })
        {
            s.skipped += 1;
            continue;
        }
        let at = |x: f64| {
            let mut v = pred.values().to_vec();
            v[i] = x;
            vnl::vn_loss(&pred.with_values(v).unwrap(), gt, k, triplets, 1.0).unwrap().value
        };
        let fd = (at(d + h) - at(d - h)) / (2.0 * h);
        let rel = (grad.values[i] - fd).abs() / fd.abs().max(1e-8);
        if rel > s.max_rel_err {
            s.max_rel_err = rel;
            s.worst_pixel = Some(i);
        }
        s.checked += 1;
    }
    s
}

/// Random smooth surface (slanted plane plus a sinusoidal bump) as gt and
/// the same surface with Gaussian noise as pred.
pub fn smooth_pair(w: usize, h: usize, noise: f64, seed: u64) -> (DepthMap, DepthMap) {
    let mut g = rng::substream(seed, 0x5A);
    let mut u = || rng::unit_f64(&mut g);
    let (base, gx, gy) = (1.5 + 2.0 * u(), 0.15 * (u() - 0.5), 0.15 * (u() - 0.5));
    let (amp, fx, fy, ph) = (0.3 * u(), 0.2 + 0.6 * u(), 0.2 + 0.6 * u(), 6.0 * u());
    let gt: Vec<f64> = (0..w * h)
        .map(|i| {
            let (r, c) = ((i / w) as f64, (i % w) as f64);
            base + gx * c + gy * r + amp * (fx * c + fy * r + ph).sin()
        })
        .collect();
    let mut n = rng::substream(seed, 0x5B);
    let pred: Vec<f64> = gt.iter().map(|d| d + noise * rng::gaussian(&mut n)).collect();
    (DepthMap::from_values(w, h, pred).unwrap(), DepthMap::from_values(w, h, gt).unwrap())
}

/// Angle at vertex `o` between rays to `a` and `b`, via arccosine.
pub fn vertex_angle_deg(o: V3, a: V3, b: V3) -> f64 {
    let (u, v) = (sub(a, o), sub(b, o));
    (dot(u, v) / (norm(u) * norm(v))).clamp(-1.0, 1.0).acos().to_degrees()
}

/// R1 (angles at the first two vertices in `[beta, alpha]`) and R2 (all
/// pairwise distances above `theta`).
pub fn naive_r1_r2(p: [V3; 3], alpha: f64, beta: f64, theta: f64) -> bool {
    let at_a = vertex_angle_deg(p[0], p[1], p[2]);
    let at_b = vertex_angle_deg(p[1], p[0], p[2]);
    let r1 = [at_a, at_b].iter().all(|x| (beta..=alpha).contains(x));
    let r2 = [(0, 1), (0, 2), (1, 2)].iter().all(|&(i, j)| norm(sub(p[i], p[j])) > theta);
    r1 && r2
}
