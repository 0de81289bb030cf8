//! Training losses: virtual-normal loss (with analytic gradient), pairwise
//! direction loss, surface-normal loss, weighted cross-entropy over depth
//! bins, hard-example mining and the combined objective.

mod ohem;
mod pairwise;
mod surface;
mod vn;
mod wce;

pub use ohem::{ohem_filter, retained_count};
pub use pairwise::{direction_residual, pairwise_loss};
pub use surface::surface_normal_loss;
pub use vn::{normal_residual, vn_loss, vn_loss_grad};
pub use wce::{dequantize_bin, quantize_depth, wce_loss, BinSpacing, DepthBinning, InfoGain, Logits};

use serde::Serialize;

use crate::error::Result;
use crate::geometry::{CameraIntrinsics, DepthMap};
use crate::reduce::chunked_mean;
use crate::sampling::Triplet;

/// Weight of the virtual-normal term in the combined objective.
pub const DEFAULT_LAMBDA_VN: f64 = 5.0;

/// Keep-rate for hard-example mining in training-style runs.
pub const DEFAULT_OHEM_KEEP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossReport {
    pub value: f64,
    /// Residual of every non-skipped sample, in input order.
    pub per_sample: Vec<f64>,
    /// Samples that contributed to `value`.
    pub n_effective: usize,
}

impl LossReport {
    pub(crate) fn mean_of(per_sample: Vec<f64>, what: &'static str) -> Result<Self> {
        let value = chunked_mean(&per_sample).ok_or(crate::Error::EmptySample(what))?;
        Ok(LossReport {
            value,
            n_effective: per_sample.len(),
            per_sample,
        })
    }
}

/// d(loss)/d(depth) on the pixel grid; exactly zero at invalid pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientGrid {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl GradientGrid {
    pub fn zeros(width: usize, height: usize) -> Self {
        GradientGrid {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedLoss {
    pub value: f64,
    pub lambda: f64,
    pub wce: LossReport,
    pub vn: LossReport,
}

/// `wce + lambda * vn`.
#[allow(clippy::too_many_arguments)]
pub fn combined_loss(
    logits: &Logits,
    pred_depth: &DepthMap,
    gt_depth: &DepthMap,
    k: &CameraIntrinsics,
    triplets: &[Triplet],
    binning: &DepthBinning,
    info_gain: InfoGain,
    ohem_keep: f64,
    lambda: f64,
) -> Result<CombinedLoss> {
    let wce = wce_loss(logits, gt_depth, binning, info_gain)?;
    let vn = vn_loss(pred_depth, gt_depth, k, triplets, ohem_keep)?;
    Ok(CombinedLoss {
        value: wce.value + lambda * vn.value,
        lambda,
        wce,
        vn,
    })
}
