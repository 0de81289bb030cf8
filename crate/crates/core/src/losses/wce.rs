//! Depth quantization and weighted cross-entropy.
//!
//! Depths in `[d_min, d_max]` map onto `n_bins` bins, uniformly in log depth
//! by default. The cross-entropy against ground-truth bin `p` weights every
//! bin `q` by the information gain `H(p, q) = exp(-sigma * (p - q)^2)`, so
//! probability mass on neighbouring bins is penalized less than mass far from
//! the truth.

use serde::{Deserialize, Serialize};

use super::LossReport;
use crate::error::{Error, Result};
use crate::geometry::DepthMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinSpacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthBinning {
    pub d_min: f64,
    pub d_max: f64,
    pub n_bins: usize,
    pub spacing: BinSpacing,
}

impl DepthBinning {
    pub const DEFAULT_BINS: usize = 150;

    pub fn new(d_min: f64, d_max: f64, n_bins: usize, spacing: BinSpacing) -> Result<Self> {
        if !(d_min > 0.0 && d_min < d_max && d_max.is_finite()) {
            return Err(Error::invalid(format!("need 0 < d_min < d_max, got {d_min}, {d_max}")));
        }
        if n_bins < 2 {
            return Err(Error::invalid("need at least two bins"));
        }
        Ok(DepthBinning {
            d_min,
            d_max,
            n_bins,
            spacing,
        })
    }

    pub fn log(d_min: f64, d_max: f64, n_bins: usize) -> Result<Self> {
        Self::new(d_min, d_max, n_bins, BinSpacing::Log)
    }

    fn to_axis(&self, d: f64) -> f64 {
        match self.spacing {
            BinSpacing::Log => d.ln(),
            BinSpacing::Linear => d,
        }
    }

    fn from_axis(&self, x: f64) -> f64 {
        match self.spacing {
            BinSpacing::Log => x.exp(),
            BinSpacing::Linear => x,
        }
    }

    /// Bin width on the binning axis (log-meters for log spacing).
    pub fn width(&self) -> f64 {
        (self.to_axis(self.d_max) - self.to_axis(self.d_min)) / self.n_bins as f64
    }
}

pub fn quantize_depth(d: f64, b: &DepthBinning) -> usize {
    let d = if d.is_nan() { b.d_min } else { d.clamp(b.d_min, b.d_max) };
    let lo = b.to_axis(b.d_min);
    let span = b.to_axis(b.d_max) - lo;
    let idx = (b.n_bins as f64 * (b.to_axis(d) - lo) / span).floor();
    (idx.max(0.0) as usize).min(b.n_bins - 1)
}

/// Bin center on the binning axis: the geometric midpoint for log spacing.
pub fn dequantize_bin(idx: usize, b: &DepthBinning) -> f64 {
    let idx = idx.min(b.n_bins - 1);
    b.from_axis(b.to_axis(b.d_min) + (idx as f64 + 0.5) * b.width())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoGain {
    /// `exp(-sigma * (p - q)^2)` with `sigma` in bin-index units.
    Gaussian { sigma: f64 },
    /// Ordinary cross-entropy.
    OneHot,
}

impl Default for InfoGain {
    fn default() -> Self {
        InfoGain::Gaussian { sigma: 0.5 }
    }
}

impl InfoGain {
    #[inline]
    pub fn weight(&self, p: usize, q: usize) -> f64 {
        match *self {
            InfoGain::Gaussian { sigma } => {
                let d = p as f64 - q as f64;
                (-sigma * d * d).exp()
            }
            InfoGain::OneHot => {
                if p == q {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Per-pixel class scores, `bins` values per pixel, pixels row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits {
    pub width: usize,
    pub height: usize,
    pub bins: usize,
    pub data: Vec<f64>,
}

impl Logits {
    pub fn new(width: usize, height: usize, bins: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * bins {
            return Err(Error::DimensionMismatch(format!(
                "{}x{}x{} logits but {} values",
                width,
                height,
                bins,
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("logits must be finite"));
        }
        Ok(Logits {
            width,
            height,
            bins,
            data,
        })
    }

    pub fn pixel(&self, i: usize) -> &[f64] {
        &self.data[i * self.bins..(i + 1) * self.bins]
    }
}

fn log_softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    x.iter().map(|v| v - lse).collect()
}

/// Mean over valid gt pixels of `-sum_q H(p, q) log softmax(logits)_q`.
pub fn wce_loss(logits: &Logits, gt_depth: &DepthMap, b: &DepthBinning, info_gain: InfoGain) -> Result<LossReport> {
    if logits.width != gt_depth.width() || logits.height != gt_depth.height() {
        return Err(Error::DimensionMismatch("logits and gt differ in size".into()));
    }
    if logits.bins != b.n_bins {
        return Err(Error::DimensionMismatch(format!(
            "{} logit channels for {} bins",
            logits.bins, b.n_bins
        )));
    }
    let per_sample = (0..gt_depth.len())
        .filter(|&i| gt_depth.mask()[i])
        .map(|i| {
            let p = quantize_depth(gt_depth.values()[i], b);
            let ls = log_softmax(logits.pixel(i));
            -ls.iter().enumerate().map(|(q, l)| info_gain.weight(p, q) * l).sum::<f64>()
        })
        .collect();
    LossReport::mean_of(per_sample, "weighted cross-entropy")
}
