use super::LossReport;
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthMap, Point3, EPS_DEGENERATE};
use crate::sampling::Pair;

/// Mean of `1 - cos` between the gt vector `P*_A -> P*_B` and the predicted
/// vector `P_A -> P_B`. Pairs with a zero-length vector are skipped.
pub fn pairwise_loss(pred_depth: &DepthMap, gt_depth: &DepthMap, k: &CameraIntrinsics, pairs: &[Pair]) -> Result<LossReport> {
    if !pred_depth.same_shape(gt_depth) {
        return Err(Error::DimensionMismatch("pred and gt differ in size".into()));
    }
    let lift = |d: &DepthMap, (r, c): (usize, usize)| -> Result<_> {
        let depth = d
            .get(r, c)
            .ok_or_else(|| Error::invalid(format!("pair pixel ({r}, {c}) is not valid")))?;
        Ok(k.pixel_ray(r, c) * depth)
    };
    let mut per_sample = Vec::with_capacity(pairs.len());
    for &[a, b] in pairs {
        let gt_vec = lift(gt_depth, b)? - lift(gt_depth, a)?;
        let pred_vec = lift(pred_depth, b)? - lift(pred_depth, a)?;
        if let Some(r) = direction_residual(&gt_vec, &pred_vec) {
            per_sample.push(r);
        }
    }
    LossReport::mean_of(per_sample, "pairwise loss")
}

/// `1 - cos` of the angle between two vectors; `None` if either is
/// (nearly) zero-length.
pub fn direction_residual(gt_vec: &Point3, pred_vec: &Point3) -> Option<f64> {
    let (ng, np) = (gt_vec.norm(), pred_vec.norm());
    if !(np > EPS_DEGENERATE && ng > EPS_DEGENERATE) {
        return None;
    }
    Some(1.0 - (gt_vec.dot(pred_vec) / (ng * np)).clamp(-1.0, 1.0))
}
