//! Direct gradient-descent refinement of a depth grid under a pixel-wise L1
//! loss plus a weighted virtual-normal loss.
//!
//! Each step evaluates `mean|d - d_gt| + lambda * vn_loss`, records it, then
//! takes a plain gradient step and clamps depths into `[depth_min,
//! depth_max]`. Triplets are resampled from the ground truth every
//! `triplet_refresh_every` steps, round `r` using seed `mix(seed, r)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthMap};
use crate::losses::{vn_loss_grad, DEFAULT_LAMBDA_VN};
use crate::metrics::{depth_metrics, normal_metrics, DepthMetricsReport, NormalMetricsReport};
use crate::normals::estimate_normal_map;
use crate::reduce::chunked_sum;
use crate::rng;
use crate::sampling::{sample_triplets, SamplingConfig, Triplet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PixelLoss {
    L1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    pub steps: usize,
    pub step_size: f64,
    pub lambda_vn: f64,
    pub pixel_loss: PixelLoss,
    pub triplet_refresh_every: usize,
    pub n_triplets: usize,
    pub ohem_keep: f64,
    pub alpha_deg: f64,
    pub beta_deg: f64,
    pub theta_m: f64,
    pub depth_min: f64,
    pub depth_max: f64,
    pub seed: u64,
}

impl RefineConfig {
    pub const DEFAULT_STEPS: usize = 200;
    /// Largest step size at which the total loss on the standard scene is
    /// non-increasing over every 10-step window of a 200-step run.
    pub const STABLE_STEP_SIZE: f64 = 0.25;

    pub fn new(steps: usize, step_size: f64, seed: u64) -> Self {
        RefineConfig {
            steps,
            step_size,
            lambda_vn: DEFAULT_LAMBDA_VN,
            pixel_loss: PixelLoss::L1,
            triplet_refresh_every: 50,
            n_triplets: 20_000,
            ohem_keep: 1.0,
            alpha_deg: SamplingConfig::DEFAULT_ALPHA_DEG,
            beta_deg: SamplingConfig::DEFAULT_BETA_DEG,
            theta_m: SamplingConfig::DEFAULT_THETA_M,
            depth_min: 0.1,
            depth_max: 80.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.triplet_refresh_every == 0 || self.n_triplets == 0 {
            return Err(Error::invalid("steps, refresh interval and triplet count must be positive"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid("step_size must be positive"));
        }
        if !(self.lambda_vn >= 0.0 && self.lambda_vn.is_finite()) {
            return Err(Error::invalid("lambda_vn must be non-negative"));
        }
        if !(self.depth_min > 0.0 && self.depth_min < self.depth_max) {
            return Err(Error::invalid("need 0 < depth_min < depth_max"));
        }
        self.sampling(0).validate()
    }

    fn sampling(&self, round: u64) -> SamplingConfig {
        SamplingConfig {
            n_groups: self.n_triplets,
            alpha_deg: self.alpha_deg,
            beta_deg: self.beta_deg,
            theta_m: self.theta_m,
            seed: rng::mix(self.seed, round),
            max_attempts_per_group: SamplingConfig::DEFAULT_ATTEMPTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub step: usize,
    pub pixel_loss: f64,
    pub vn_loss: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub depth: DepthMap,
    pub history: Vec<HistoryEntry>,
}

/// Returned when the loss stops being finite; carries the history so far.
#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub step: usize,
    pub history: Vec<HistoryEntry>,
}

pub fn refine_depth(init: &DepthMap, gt: &DepthMap, k: &CameraIntrinsics, cfg: &RefineConfig) -> Result<RefineOutcome> {
    refine_depth_traced(init, gt, k, cfg).map_err(|e| match e {
        RefineError::Diverged(d) => Error::Diverged { step: d.step },
        RefineError::Other(e) => e,
    })
}

#[derive(Debug)]
pub enum RefineError {
    Diverged(Divergence),
    Other(Error),
}

impl From<Error> for RefineError {
    fn from(e: Error) -> Self {
        RefineError::Other(e)
    }
}

/// Same as [`refine_depth`], but a divergence returns the recorded history.
pub fn refine_depth_traced(
    init: &DepthMap,
    gt: &DepthMap,
    k: &CameraIntrinsics,
    cfg: &RefineConfig,
) -> std::result::Result<RefineOutcome, RefineError> {
    cfg.validate()?;
    if !init.same_shape(gt) || init.mask() != gt.mask() {
        return Err(Error::DimensionMismatch("init and gt must share size and mask".into()).into());
    }
    let valid = gt.valid_indices();
    if valid.is_empty() {
        return Err(Error::EmptySample("refinement pixels").into());
    }
    let inv_n = 1.0 / valid.len() as f64;
    let gt_values = gt.values();
    let mut depth = init.clone();
    let mut triplets: Vec<Triplet> = Vec::new();
    let mut history = Vec::with_capacity(cfg.steps);

    for step in 0..cfg.steps {
        if step % cfg.triplet_refresh_every == 0 {
            let round = (step / cfg.triplet_refresh_every) as u64;
            triplets = sample_triplets(gt, k, &cfg.sampling(round))?.triplets;
        }
        let cur = depth.values();
        let abs: Vec<f64> = valid.iter().map(|&i| (cur[i] - gt_values[i]).abs()).collect();
        let pixel_loss = chunked_sum(&abs) * inv_n;
        let (vn, vn_grad) = vn_loss_grad(&depth, gt, k, &triplets, cfg.ohem_keep)?;
        let total = pixel_loss + cfg.lambda_vn * vn.value;
        history.push(HistoryEntry {
            step,
            pixel_loss,
            vn_loss: vn.value,
            total,
        });
        if !total.is_finite() {
            return Err(RefineError::Diverged(Divergence { step, history }));
        }

        let mut next = cur.to_vec();
        for &i in &valid {
            let diff = cur[i] - gt_values[i];
            let g_pix = if diff > 0.0 {
                inv_n
            } else if diff < 0.0 {
                -inv_n
            } else {
                0.0
            };
            let g = g_pix + cfg.lambda_vn * vn_grad.values[i];
            next[i] = (cur[i] - cfg.step_size * g).clamp(cfg.depth_min, cfg.depth_max);
        }
        depth = depth.with_values(next)?;
    }
    Ok(RefineOutcome { depth, history })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefineEvaluation {
    pub depth: DepthMetricsReport,
    /// Plane-fit normals of the refined depth against plane-fit normals of
    /// the ground-truth depth.
    pub normals: NormalMetricsReport,
}

pub fn evaluate_refinement(refined: &DepthMap, gt: &DepthMap, k: &CameraIntrinsics, half_size: usize) -> Result<RefineEvaluation> {
    let depth = depth_metrics(refined, gt)?;
    let normals = normal_metrics(&estimate_normal_map(refined, k, half_size), &estimate_normal_map(gt, k, half_size))?;
    Ok(RefineEvaluation { depth, normals })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(12.0, 12.0, 7.5, 7.5, 0.001).unwrap()
    }

    fn gt() -> DepthMap {
        DepthMap::from_values(16, 16, (0..256).map(|i| 2.0 + 0.01 * (i % 16) as f64 + 0.02 * (i / 16) as f64).collect())
            .unwrap()
    }

    fn small(lambda: f64) -> RefineConfig {
        RefineConfig {
            lambda_vn: lambda,
            n_triplets: 200,
            triplet_refresh_every: 10,
            ..RefineConfig::new(30, 1.0, 3)
        }
    }

    #[test]
    fn starting_at_gt_stays_there() {
        let out = refine_depth(&gt(), &gt(), &k(), &small(5.0)).unwrap();
        assert_eq!(out.depth, gt());
        assert!(out.history.iter().all(|h| h.total == 0.0));
    }

    #[test]
    fn l1_only_decreases_monotonically() {
        let init = gt().map_valid(|_, d| d + 0.05).unwrap();
        // 256 pixels, step 1.0: each pixel moves 1/256 m per step, so ten
        // steps stay short of the 5 cm offset.
        let cfg = RefineConfig { steps: 10, ..small(0.0) };
        let out = refine_depth(&init, &gt(), &k(), &cfg).unwrap();
        for w in out.history.windows(2) {
            assert!(w[1].pixel_loss < w[0].pixel_loss);
        }
    }

    #[test]
    fn deterministic() {
        let init = gt().map_valid(|i, d| d + 0.02 * ((i * 13 % 7) as f64 - 3.0) / 3.0).unwrap();
        let a = refine_depth(&init, &gt(), &k(), &small(5.0)).unwrap();
        let b = refine_depth(&init, &gt(), &k(), &small(5.0)).unwrap();
        let bits = |o: &RefineOutcome| o.history.iter().map(|h| h.total.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.depth, b.depth);
    }

    #[test]
    fn huge_steps_stay_in_range() {
        let init = gt().map_valid(|i, d| d + 0.02 * ((i * 13 % 7) as f64 - 3.0) / 3.0).unwrap();
        let cfg = RefineConfig {
            step_size: f64::MAX,
            ..small(5.0)
        };
        let out = refine_depth(&init, &gt(), &k(), &cfg).unwrap();
        assert!(out.depth.values().iter().all(|v| (cfg.depth_min..=cfg.depth_max).contains(v)));
    }

    #[test]
    fn mask_mismatch_rejected() {
        let mut mask = vec![true; 256];
        mask[3] = false;
        let init = DepthMap::new(16, 16, gt().values().to_vec(), mask).unwrap();
        assert!(refine_depth(&init, &gt(), &k(), &small(0.0)).is_err());
    }
}
