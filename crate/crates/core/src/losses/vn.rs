//! Virtual-normal loss.
//!
//! For each triplet the pred and gt depths are lifted to 3D, each triangle
//! gives a unit normal, and the residual is the L1 distance between the two
//! normals. The loss is the mean residual over the triplets kept by hard
//! example mining.
//!
//! Gradient. With `P = d * ray` for every vertex, `e1 = P_B - P_A`,
//! `e2 = P_C - P_A`, `c = e1 x e2` and `n = c / |c|`:
//!
//! ```text
//! dL/dn = sign(n - n_gt) / m          (sign(0) = 0, m = retained count)
//! v     = (I - n n^T) dL/dn / |c|     (= dL/dc)
//! dL/dP_B = e2 x v,  dL/dP_C = v x e1,  dL/dP_A = -(dL/dP_B + dL/dP_C)
//! dL/dd_X = dL/dP_X . ray_X
//! ```
//!
//! The mining selection is held fixed while differentiating.

use rayon::prelude::*;

use super::{ohem_filter, GradientGrid, LossReport};
use crate::error::{Error, Result};
use crate::geometry::{triangle_normal, CameraIntrinsics, DepthMap, Point3, UnitVector3};
use crate::reduce::chunked_sum;
use crate::sampling::Triplet;

struct Evaluated {
    pixels: [usize; 3],
    points: [Point3; 3],
    normal: UnitVector3,
    cross_norm: f64,
    /// `n_pred - n_gt`.
    diff: Point3,
}

impl Evaluated {
    fn residual(&self) -> f64 {
        self.diff.abs().sum()
    }
}

/// L1 distance between two unit normals, in `[0, 6]`.
pub fn normal_residual(pred: &UnitVector3, gt: &UnitVector3) -> f64 {
    (pred.into_inner() - gt.into_inner()).abs().sum()
}

fn check_inputs(pred: &DepthMap, gt: &DepthMap, k: &CameraIntrinsics, triplets: &[Triplet], keep: f64) -> Result<()> {
    k.validate()?;
    if !pred.same_shape(gt) {
        return Err(Error::DimensionMismatch(format!(
            "pred {}x{} vs gt {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    if !(keep > 0.0 && keep <= 1.0) {
        return Err(Error::invalid(format!("ohem keep fraction {keep} not in (0, 1]")));
    }
    for t in triplets {
        for &(r, c) in t {
            if !pred.is_valid(r, c) || !gt.is_valid(r, c) {
                return Err(Error::invalid(format!("triplet pixel ({r}, {c}) is not valid in both maps")));
            }
        }
    }
    Ok(())
}

fn lift(depth: &DepthMap, k: &CameraIntrinsics, t: &Triplet) -> [Point3; 3] {
    t.map(|(r, c)| k.pixel_ray(r, c) * depth.get(r, c).unwrap_or_default())
}

/// Evaluates every triplet; triplets degenerate in either cloud are dropped.
fn evaluate(pred: &DepthMap, gt: &DepthMap, k: &CameraIntrinsics, triplets: &[Triplet]) -> Vec<Evaluated> {
    triplets
        .par_iter()
        .filter_map(|t| {
            let [ga, gb, gc] = lift(gt, k, t);
            let n_gt = triangle_normal(&ga, &gb, &gc).ok()?;
            let points = lift(pred, k, t);
            let [a, b, c] = &points;
            let cross = (b - a).cross(&(c - a));
            let normal = triangle_normal(a, b, c).ok()?;
            Some(Evaluated {
                pixels: t.map(|(r, c)| pred.index(r, c)),
                points,
                cross_norm: cross.norm(),
                diff: normal.into_inner() - n_gt.into_inner(),
                normal,
            })
        })
        .collect()
}

fn report(evals: &[Evaluated], keep: f64) -> Result<(LossReport, Vec<usize>)> {
    let per_sample: Vec<f64> = evals.iter().map(Evaluated::residual).collect();
    let retained = ohem_filter(&per_sample, keep);
    if retained.is_empty() {
        return Err(Error::EmptySample("virtual-normal loss"));
    }
    let kept: Vec<f64> = retained.iter().map(|&i| per_sample[i]).collect();
    let value = chunked_sum(&kept) / kept.len() as f64;
    Ok((
        LossReport {
            value,
            n_effective: retained.len(),
            per_sample,
        },
        retained,
    ))
}

pub fn vn_loss(
    pred_depth: &DepthMap,
    gt_depth: &DepthMap,
    k: &CameraIntrinsics,
    triplets: &[Triplet],
    ohem_keep: f64,
) -> Result<LossReport> {
    check_inputs(pred_depth, gt_depth, k, triplets, ohem_keep)?;
    let evals = evaluate(pred_depth, gt_depth, k, triplets);
    report(&evals, ohem_keep).map(|(r, _)| r)
}

#[inline]
fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Loss and its gradient with respect to every predicted depth.
pub fn vn_loss_grad(
    pred_depth: &DepthMap,
    gt_depth: &DepthMap,
    k: &CameraIntrinsics,
    triplets: &[Triplet],
    ohem_keep: f64,
) -> Result<(LossReport, GradientGrid)> {
    check_inputs(pred_depth, gt_depth, k, triplets, ohem_keep)?;
    let evals = evaluate(pred_depth, gt_depth, k, triplets);
    let (report, retained) = report(&evals, ohem_keep)?;
    let scale = 1.0 / retained.len() as f64;
    let w = pred_depth.width();

    let contributions: Vec<[(usize, f64); 3]> = retained
        .par_iter()
        .map(|&i| {
            let e = &evals[i];
            let n = e.normal.into_inner();
            let dn = e.diff.map(sign0) * scale;
            let v = (dn - n * n.dot(&dn)) / e.cross_norm;
            let [a, b, c] = &e.points;
            let (e1, e2) = (b - a, c - a);
            let gb = e2.cross(&v);
            let gc = v.cross(&e1);
            let ga = -(gb + gc);
            let ray = |p: usize| k.pixel_ray(p / w, p % w);
            let [pa, pb, pc] = e.pixels;
            [(pa, ga.dot(&ray(pa))), (pb, gb.dot(&ray(pb))), (pc, gc.dot(&ray(pc)))]
        })
        .collect();

    let mut grad = GradientGrid::zeros(w, pred_depth.height());
    for triple in &contributions {
        for &(p, g) in triple {
            grad.values[p] += g;
        }
    }
    Ok((report, grad))
}
