//! Surface normals from local plane fits.
//!
//! A patch of `(2i + 1) x (2i + 1)` pixels around a target pixel is lifted to
//! 3D and fitted with a least-squares plane: the normal is the eigenvector of
//! the smallest eigenvalue of the centered covariance. Fitted normals are
//! oriented toward the camera (`n . -centroid >= 0`).

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use nalgebra::{Matrix3, SymmetricEigen, Unit, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{backproject_grid, CameraIntrinsics, DepthMap, OrganizedCloud, Point3, UnitVector3};
use crate::reduce::chunked_mean;
use crate::sampling::angle_unchecked;

/// Minimum ratio between the middle and smallest covariance eigenvalue.
pub const MIN_EIGEN_RATIO: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    pub width: usize,
    pub height: usize,
    pub normals: Vec<Option<UnitVector3>>,
}

impl NormalMap {
    pub fn invalid(width: usize, height: usize) -> Self {
        NormalMap {
            width,
            height,
            normals: vec![None; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<UnitVector3> {
        if row < self.height && col < self.width {
            self.normals[row * self.width + col]
        } else {
            None
        }
    }

    pub fn valid_count(&self) -> usize {
        self.normals.iter().filter(|n| n.is_some()).count()
    }

    pub fn same_shape(&self, other: &NormalMap) -> bool {
        self.width == other.width && self.height == other.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFit {
    /// Unoriented unit normal.
    pub normal: UnitVector3,
    pub centroid: Point3,
    /// Covariance eigenvalues, ascending.
    pub eigenvalues: [f64; 3],
    /// Mean squared point-to-plane distance.
    pub residual: f64,
}

pub fn fit_plane(points: &[Point3]) -> Result<PlaneFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} points, need 3", points.len())));
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Point3::zeros(), |acc, p| acc + p) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= n;
    if !cov.iter().all(|v| v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite covariance".into()));
    }

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.map(|i| eig.eigenvalues[i]);
    let [lo, mid, hi] = eigenvalues;
    if !(mid > 1e-12 * hi) {
        return Err(Error::DegenerateFit("points are (nearly) colinear".into()));
    }
    if lo > 0.0 && mid / lo <= MIN_EIGEN_RATIO {
        return Err(Error::DegenerateFit(format!(
            "eigenvalue ratio {:.3} not above {}",
            mid / lo,
            MIN_EIGEN_RATIO
        )));
    }
    let normal = Unit::new_normalize(polish(&cov, eig.eigenvectors.column(order[0]).into_owned()));
    let residual = points.iter().map(|p| (p - centroid).dot(&normal).powi(2)).sum::<f64>() / n;
    Ok(PlaneFit {
        normal,
        centroid,
        eigenvalues,
        residual,
    })
}

/// Refines an eigenvector estimate by taking the null direction of
/// `cov - mu*I` at its Rayleigh quotient `mu`. The QR sweep can leave ~1e-11
/// error in an eigenvector whose eigenvalue is close to another one.
fn polish(cov: &Matrix3<f64>, v: Vector3<f64>) -> Vector3<f64> {
    let mu = v.dot(&(cov * v));
    let m = cov - Matrix3::identity() * mu;
    let (r0, r1, r2) = (m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose());
    let x = [r0.cross(&r1), r0.cross(&r2), r1.cross(&r2)]
        .into_iter()
        .max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))
        .unwrap_or(v);
    if !(x.iter().all(|c| c.is_finite()) && x.norm() > 0.0) {
        return v;
    }
    let x = x.normalize();
    if x.dot(&v) < 0.0 { -x } else { x }
}

/// Flips `n` so it faces a camera at the origin when seen from `at`.
#[inline]
pub fn orient_toward_camera(n: UnitVector3, at: &Point3) -> UnitVector3 {
    if n.dot(at) > 0.0 {
        -n
    } else {
        n
    }
}

fn window(center: usize, half: usize, len: usize) -> std::ops::Range<usize> {
    center.saturating_sub(half)..(center + half + 1).min(len)
}

/// Plane-fit normal of the `(2 * half_size + 1)^2` patch centred at
/// `(row, col)`. The window is clipped at the image border; invalid pixels
/// inside it are skipped.
pub fn patch_normal(cloud: &OrganizedCloud, row: usize, col: usize, half_size: usize) -> Result<UnitVector3> {
    let mut pts = Vec::with_capacity((2 * half_size + 1).pow(2));
    for r in window(row, half_size, cloud.height) {
        for c in window(col, half_size, cloud.width) {
            if let Some(p) = cloud.get(r, c) {
                pts.push(p);
            }
        }
    }
    let fit = fit_plane(&pts)?;
    Ok(orient_toward_camera(fit.normal, &fit.centroid))
}

/// Normal at every valid pixel whose full patch lies inside the image.
pub fn estimate_normal_map(depth: &DepthMap, k: &CameraIntrinsics, half_size: usize) -> NormalMap {
    let cloud = backproject_grid(depth, k);
    normal_map_from_cloud(&cloud, half_size)
}

pub fn normal_map_from_cloud(cloud: &OrganizedCloud, half_size: usize) -> NormalMap {
    let (w, h) = (cloud.width, cloud.height);
    let normals = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (row, col) = (i / w, i % w);
            let interior = row >= half_size && col >= half_size && row + half_size < h && col + half_size < w;
            if !interior || cloud.get(row, col).is_none() {
                return None;
            }
            patch_normal(cloud, row, col, half_size).ok()
        })
        .collect();
    NormalMap {
        width: w,
        height: h,
        normals,
    }
}

/// Per-pixel angle (degrees) at pixels valid in both maps, row-major.
pub fn angular_differences(a: &NormalMap, b: &NormalMap) -> Result<Vec<f64>> {
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch("normal maps differ in size".into()));
    }
    Ok(a
        .normals
        .iter()
        .zip(&b.normals)
        .filter_map(|(x, y)| Some(angle_unchecked(&x.as_ref()?.into_inner(), &y.as_ref()?.into_inner())))
        .collect())
}

/// Pairwise mean angular difference between normal maps computed with
/// different patch half-sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMatrix {
    pub half_sizes: Vec<usize>,
    /// `mean_deg[a][b]`, symmetric with a zero diagonal.
    pub mean_deg: Vec<Vec<f64>>,
}

impl SensitivityMatrix {
    pub fn entry(&self, size_a: usize, size_b: usize) -> Option<f64> {
        let a = self.half_sizes.iter().position(|&s| s == size_a)?;
        let b = self.half_sizes.iter().position(|&s| s == size_b)?;
        Some(self.mean_deg[a][b])
    }
}

pub fn patch_size_sensitivity(depth: &DepthMap, k: &CameraIntrinsics, half_sizes: &[usize]) -> Result<SensitivityMatrix> {
    if half_sizes.len() < 2 {
        return Err(Error::invalid("need at least two patch sizes"));
    }
    let cloud = backproject_grid(depth, k);
    let maps: Vec<NormalMap> = half_sizes.iter().map(|&i| normal_map_from_cloud(&cloud, i)).collect();
    let n = maps.len();
    let mut mean_deg = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let diffs = angular_differences(&maps[a], &maps[b])?;
            let m = chunked_mean(&diffs).ok_or(Error::EmptySample("patch-size comparison"))?;
            mean_deg[a][b] = m;
            mean_deg[b][a] = m;
        }
    }
    Ok(SensitivityMatrix {
        half_sizes: half_sizes.to_vec(),
        mean_deg,
    })
}

/// k-nearest-neighbour plane-fit normals for an unordered cloud, evaluated at
/// `queries` (indices into `points`). The query point is its own first
/// neighbour. Normals are unoriented; `None` marks degenerate fits.
pub fn knn_normals(points: &[Point3], queries: &[usize], k_neighbors: usize) -> Vec<Option<UnitVector3>> {
    let coords: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
    let tree: ImmutableKdTree<f64, 3> = ImmutableKdTree::new_from_slice(&coords);
    queries
        .par_iter()
        .map(|&q| {
            let nn = tree.nearest_n::<SquaredEuclidean>(&coords[q], k_neighbors);
            let pts: Vec<Point3> = nn.iter().map(|n| points[n.item as usize]).collect();
            fit_plane(&pts).ok().map(|f| f.normal)
        })
        .collect()
}
