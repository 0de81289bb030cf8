//! Pinhole camera model, depth maps and back-projection.
//!
//! The camera frame is the world frame: +x right, +y down, +z along the
//! optical axis. Pixel `(u, v)` = (column, row); integer coordinates are pixel
//! centers. A pixel with depth `d` lifts to `d * ((u - u0)/fx, (v - v0)/fy, 1)`,
//! which is linear in `d`. The gradient code relies on that.

use nalgebra::{Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = Vector3<f64>;
pub type UnitVector3 = Unit<Vector3<f64>>;

/// Triplets whose cross-product norm falls below this (m²) are rejected.
pub const EPS_DEGENERATE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntrinsics")]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub u0: f64,
    pub v0: f64,
    /// Meters per raw unit for integer depth formats.
    pub depth_scale: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntrinsics {
    fx: f64,
    fy: f64,
    u0: f64,
    v0: f64,
    depth_scale: f64,
}

impl TryFrom<RawIntrinsics> for CameraIntrinsics {
    type Error = Error;

    fn try_from(r: RawIntrinsics) -> Result<Self> {
        CameraIntrinsics::new(r.fx, r.fy, r.u0, r.v0, r.depth_scale)
    }
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, u0: f64, v0: f64, depth_scale: f64) -> Result<Self> {
        let k = CameraIntrinsics {
            fx,
            fy,
            u0,
            v0,
            depth_scale,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.fx) || !pos(self.fy) {
            return Err(Error::invalid("focal lengths must be finite and positive"));
        }
        if !pos(self.depth_scale) {
            return Err(Error::invalid("depth_scale must be finite and positive"));
        }
        if !self.u0.is_finite() || !self.v0.is_finite() {
            return Err(Error::invalid("principal point must be finite"));
        }
        Ok(())
    }

    /// Direction of the ray through pixel `(u, v)`, scaled so that z = 1.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.u0) / self.fx, (v - self.v0) / self.fy, 1.0)
    }

    /// Ray through the center of pixel `(row, col)`.
    #[inline]
    pub fn pixel_ray(&self, row: usize, col: usize) -> Vector3<f64> {
        self.ray(col as f64, row as f64)
    }
}

/// Row-major grid of metric depths with a validity mask.
///
/// Invalid pixels always store `0.0` so that two maps with equal masks and
/// equal valid depths compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl DepthMap {
    /// Builds a map from explicit values and mask. Masked-valid values must be
    /// finite and positive.
    pub fn new(width: usize, height: usize, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        Self::check_dims(width, height, values.len())?;
        if mask.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} entries, values {}",
                mask.len(),
                values.len()
            )));
        }
        let mut values = values;
        for (i, (v, &m)) in values.iter_mut().zip(&mask).enumerate() {
            if m {
                if !(v.is_finite() && *v > 0.0) {
                    return Err(Error::invalid(format!(
                        "valid pixel {} has depth {}",
                        i, v
                    )));
                }
            } else {
                *v = 0.0;
            }
        }
        Ok(DepthMap {
            width,
            height,
            values,
            mask,
        })
    }

    /// Builds a map whose mask marks every finite positive value as valid.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        Self::check_dims(width, height, values.len())?;
        let mask: Vec<bool> = values.iter().map(|v| v.is_finite() && *v > 0.0).collect();
        Self::new(width, height, values, mask)
    }

    pub fn constant(width: usize, height: usize, depth: f64) -> Result<Self> {
        Self::from_values(width, height, vec![depth; width * height])
    }

    fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("depth map dimensions must be positive"));
        }
        match width.checked_mul(height) {
            Some(n) if n == len => Ok(()),
            _ => Err(Error::DimensionMismatch(format!(
                "{}x{} grid but {} values",
                width, height, len
            ))),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        if row >= self.height || col >= self.width {
            return None;
        }
        let i = self.index(row, col);
        self.mask[i].then_some(self.values[i])
    }

    #[inline]
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        row < self.height && col < self.width && self.mask[self.index(row, col)]
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Flat indices of valid pixels in row-major order.
    pub fn valid_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.mask[i]).collect()
    }

    pub fn same_shape(&self, other: &DepthMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Applies `f` to every valid depth. The result must stay finite and
    /// positive.
    pub fn map_valid(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let values = self
            .values
            .iter()
            .zip(&self.mask)
            .enumerate()
            .map(|(i, (&v, &m))| if m { f(i, v) } else { 0.0 })
            .collect();
        Self::new(self.width, self.height, values, self.mask.clone())
    }

    /// Replaces the valid depths with `values` (length equals the grid size;
    /// entries at invalid pixels are ignored).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.width, self.height, values, self.mask.clone())
    }
}

/// Ordered 3D points, optionally tagged with their source pixel.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub pixel_index: Option<Vec<(usize, usize)>>,
}

impl PointCloud {
    pub fn from_points(points: Vec<Point3>) -> Self {
        PointCloud {
            points,
            pixel_index: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Scatters a pixel-indexed cloud back onto a `width x height` grid.
    pub fn organize(&self, width: usize, height: usize) -> Result<OrganizedCloud> {
        let idx = self
            .pixel_index
            .as_ref()
            .ok_or_else(|| Error::invalid("cloud has no pixel index"))?;
        let mut grid = vec![None; width * height];
        for (p, &(r, c)) in self.points.iter().zip(idx) {
            if r >= height || c >= width {
                return Err(Error::invalid(format!("pixel ({r}, {c}) outside grid")));
            }
            grid[r * width + c] = Some(*p);
        }
        Ok(OrganizedCloud {
            width,
            height,
            points: grid,
        })
    }
}

/// Point cloud laid out on the pixel grid; `None` where the depth is invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct OrganizedCloud {
    pub width: usize,
    pub height: usize,
    pub points: Vec<Option<Point3>>,
}

impl OrganizedCloud {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<Point3> {
        if row < self.height && col < self.width {
            self.points[row * self.width + col]
        } else {
            None
        }
    }
}

/// Lifts pixel `(u, v)` at depth `d` into camera coordinates.
pub fn backproject_pixel(u: f64, v: f64, d: f64, k: &CameraIntrinsics) -> Result<Point3> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::invalid(format!("depth must be finite and positive, got {d}")));
    }
    if !u.is_finite() || !v.is_finite() {
        return Err(Error::invalid("pixel coordinates must be finite"));
    }
    Ok(k.ray(u, v) * d)
}

/// One point per valid pixel, row-major.
pub fn backproject_map(depth: &DepthMap, k: &CameraIntrinsics) -> PointCloud {
    let mut points = Vec::with_capacity(depth.valid_count());
    let mut index = Vec::with_capacity(points.capacity());
    for row in 0..depth.height() {
        for col in 0..depth.width() {
            if let Some(d) = depth.get(row, col) {
                points.push(k.pixel_ray(row, col) * d);
                index.push((row, col));
            }
        }
    }
    PointCloud {
        points,
        pixel_index: Some(index),
    }
}

pub fn backproject_grid(depth: &DepthMap, k: &CameraIntrinsics) -> OrganizedCloud {
    let points = (0..depth.len())
        .map(|i| {
            let (row, col) = (i / depth.width(), i % depth.width());
            depth.get(row, col).map(|d| k.pixel_ray(row, col) * d)
        })
        .collect();
    OrganizedCloud {
        width: depth.width(),
        height: depth.height(),
        points,
    }
}

/// Unit normal of the plane through three points, `(b - a) x (c - a)` normalized.
pub fn triangle_normal(pa: &Point3, pb: &Point3, pc: &Point3) -> Result<UnitVector3> {
    let cross = (pb - pa).cross(&(pc - pa));
    let norm = cross.norm();
    if !(norm > EPS_DEGENERATE) {
        return Err(Error::DegenerateTriplet { norm });
    }
    Ok(Unit::new_unchecked(cross / norm))
}
