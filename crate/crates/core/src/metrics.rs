//! Depth and surface-normal evaluation metrics.
//!
//! Depth: `rel`, `log10`, `rms`, `rms_log` and the threshold accuracies
//! `delta_i` (fraction of pixels with `max(p/g, g/p) < 1.25^i`, strict).
//! Predictions `<= 0` are clipped to [`LOG_CLIP_M`] for the log-based
//! metrics and for `delta_i`, and counted in `n_clipped`.
//!
//! Normals: mean and median angular error plus the fraction of pixels below
//! 11.25, 22.5 and 30 degrees (strict). The median takes the lower middle
//! element for even counts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::DepthMap;
use crate::normals::{angular_differences, NormalMap};
use crate::reduce::chunked_mean;

pub const LOG_CLIP_M: f64 = 1e-6;
pub const NORMAL_THRESHOLDS_DEG: [f64; 3] = [11.25, 22.5, 30.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthMetricsReport {
    pub rel: f64,
    pub log10: f64,
    pub rms: f64,
    pub rms_log: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub n_pixels: usize,
    pub n_clipped: usize,
}

impl DepthMetricsReport {
    pub const CSV_HEADER: &'static str = "rel,log10,rms,rms_log,delta1,delta2,delta3,n_pixels,n_clipped";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.rel,
            self.log10,
            self.rms,
            self.rms_log,
            self.delta1,
            self.delta2,
            self.delta3,
            self.n_pixels,
            self.n_clipped
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DepthEvalOptions {
    /// Ignore pixels whose ground truth exceeds this depth.
    pub max_depth: Option<f64>,
}

/// Evaluates `pred` against `gt` over pixels where the gt is valid (and below
/// the optional cap) and the prediction is present.
pub fn depth_metrics(pred: &DepthMap, gt: &DepthMap) -> Result<DepthMetricsReport> {
    depth_metrics_with(pred, gt, DepthEvalOptions::default())
}

/// Like [`depth_metrics`] but on raw prediction values, which may be
/// non-positive. `pred` is row-major with the same size as `gt`.
pub fn depth_metrics_raw(pred: &[f64], gt: &DepthMap, opts: DepthEvalOptions) -> Result<DepthMetricsReport> {
    if pred.len() != gt.len() {
        return Err(Error::DimensionMismatch("pred and gt differ in size".into()));
    }
    let pixels: Vec<(f64, f64)> = (0..gt.len())
        .filter(|&i| gt.mask()[i] && pred[i].is_finite())
        .map(|i| (pred[i], gt.values()[i]))
        .filter(|&(_, g)| opts.max_depth.map_or(true, |cap| g <= cap))
        .collect();
    if pixels.is_empty() {
        return Err(Error::EmptySample("depth metrics"));
    }
    let n_clipped = pixels.iter().filter(|(p, _)| *p <= 0.0).count();
    let col = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
        let v: Vec<f64> = pixels.iter().map(|&(p, g)| f(p, g)).collect();
        chunked_mean(&v).unwrap_or_default()
    };
    let clip = |p: f64| if p > 0.0 { p } else { LOG_CLIP_M };
    let delta = |i: i32| {
        let t = 1.25f64.powi(i);
        col(&|p, g| {
            let p = clip(p);
            if (p / g).max(g / p) < t {
                1.0
            } else {
                0.0
            }
        })
    };
    Ok(DepthMetricsReport {
        rel: col(&|p, g| (p - g).abs() / g),
        log10: col(&|p, g| (clip(p).log10() - g.log10()).abs()),
        rms: col(&|p, g| (p - g).powi(2)).sqrt(),
        rms_log: col(&|p, g| (clip(p).ln() - g.ln()).powi(2)).sqrt(),
        delta1: delta(1),
        delta2: delta(2),
        delta3: delta(3),
        n_pixels: pixels.len(),
        n_clipped,
    })
}

pub fn depth_metrics_with(pred: &DepthMap, gt: &DepthMap, opts: DepthEvalOptions) -> Result<DepthMetricsReport> {
    if !pred.same_shape(gt) {
        return Err(Error::DimensionMismatch("pred and gt differ in size".into()));
    }
    let raw: Vec<f64> = (0..pred.len())
        .map(|i| if pred.mask()[i] { pred.values()[i] } else { f64::NAN })
        .collect();
    depth_metrics_raw(&raw, gt, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalMetricsReport {
    pub mean_deg: f64,
    pub median_deg: f64,
    pub pct_11_25: f64,
    pub pct_22_5: f64,
    pub pct_30: f64,
    pub n_pixels: usize,
}

impl NormalMetricsReport {
    pub const CSV_HEADER: &'static str = "mean_deg,median_deg,pct_11_25,pct_22_5,pct_30,n_pixels";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.mean_deg, self.median_deg, self.pct_11_25, self.pct_22_5, self.pct_30, self.n_pixels
        )
    }

    pub fn from_errors(errors: &[f64]) -> Result<Self> {
        let mean_deg = chunked_mean(errors).ok_or(Error::EmptySample("normal metrics"))?;
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median_deg = sorted[(sorted.len() - 1) / 2];
        let frac = |t: f64| sorted.iter().filter(|e| **e < t).count() as f64 / sorted.len() as f64;
        let [a, b, c] = NORMAL_THRESHOLDS_DEG;
        Ok(NormalMetricsReport {
            mean_deg,
            median_deg,
            pct_11_25: frac(a),
            pct_22_5: frac(b),
            pct_30: frac(c),
            n_pixels: sorted.len(),
        })
    }
}

pub fn normal_metrics(pred: &NormalMap, gt: &NormalMap) -> Result<NormalMetricsReport> {
    NormalMetricsReport::from_errors(&angular_differences(pred, gt)?)
}
