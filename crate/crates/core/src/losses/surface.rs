use super::LossReport;
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthMap};
use crate::normals::{angular_differences, estimate_normal_map};

/// Mean angle (degrees) between plane-fit normals of the predicted and
/// ground-truth clouds, over pixels where both fits succeed.
pub fn surface_normal_loss(
    pred_depth: &DepthMap,
    gt_depth: &DepthMap,
    k: &CameraIntrinsics,
    patch_half_size: usize,
) -> Result<LossReport> {
    if !pred_depth.same_shape(gt_depth) {
        return Err(Error::DimensionMismatch("pred and gt differ in size".into()));
    }
    let pred = estimate_normal_map(pred_depth, k, patch_half_size);
    let gt = estimate_normal_map(gt_depth, k, patch_half_size);
    LossReport::mean_of(angular_differences(&pred, &gt)?, "surface-normal loss")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(12.0, 12.0, 7.5, 7.5, 0.001).unwrap()
    }

    /// Depth of the plane `n . P = c` along every pixel ray.
    fn plane(k: &CameraIntrinsics, n: [f64; 3], c: f64) -> DepthMap {
        let n = nalgebra::Vector3::from(n);
        let vals = (0..256).map(|i| c / n.dot(&k.pixel_ray(i / 16, i % 16))).collect();
        DepthMap::from_values(16, 16, vals).unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let d = plane(&k(), [0.2, 0.1, 1.0], 3.0);
        assert_eq!(surface_normal_loss(&d, &d, &k(), 1).unwrap().value, 0.0);
    }

    #[test]
    fn orthogonal_planes_give_ninety() {
        let k = k();
        let pred = plane(&k, [1.0, 0.0, 1.0], 3.0);
        let gt = plane(&k, [-1.0, 0.0, 1.0], 3.0);
        let r = surface_normal_loss(&pred, &gt, &k, 1).unwrap();
        assert!((r.value - 90.0).abs() < 1e-9, "{}", r.value);
        assert_eq!(r.n_effective, 14 * 14);
    }

    #[test]
    fn too_small_for_patch() {
        let d = DepthMap::constant(2, 2, 1.0).unwrap();
        assert!(matches!(surface_normal_loss(&d, &d, &k(), 1), Err(Error::EmptySample(_))));
    }
}
