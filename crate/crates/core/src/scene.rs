//! Declarative synthetic scenes rendered to depth and normal maps.

use nalgebra::{Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthMap, Point3};
use crate::normals::{orient_toward_camera, NormalMap};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneSpec {
    pub point: [f64; 3],
    pub normal: [f64; 3],
    /// Hits farther than this from `point` miss the plane.
    #[serde(default)]
    pub extent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereSpec {
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Standard deviation of additive Gaussian depth noise, meters.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub intrinsics: CameraIntrinsics,
    pub depth_min: f64,
    pub depth_max: f64,
    #[serde(default)]
    pub planes: Vec<PlaneSpec>,
    #[serde(default)]
    pub spheres: Vec<SphereSpec>,
    #[serde(default)]
    pub noise: Option<NoiseModel>,
    #[serde(default)]
    pub seed: u64,
}

impl SceneSpec {
    /// 64x64 view of two slanted planes (a tilted back wall and a sloping
    /// floor) with a sphere cap in front of the wall.
    pub fn standard() -> Self {
        SceneSpec {
            width: 64,
            height: 64,
            intrinsics: CameraIntrinsics {
                fx: 60.0,
                fy: 60.0,
                u0: 31.5,
                v0: 31.5,
                depth_scale: 0.001,
            },
            depth_min: 0.5,
            depth_max: 10.0,
            planes: vec![
                PlaneSpec {
                    point: [0.0, 0.0, 4.0],
                    normal: [0.35, 0.0, -1.0],
                    extent: None,
                },
                PlaneSpec {
                    point: [0.0, 1.1, 0.0],
                    normal: [0.0, -1.0, 0.25],
                    extent: None,
                },
            ],
            spheres: vec![SphereSpec {
                center: [-0.45, -0.1, 2.7],
                radius: 0.6,
            }],
            noise: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("scene dimensions must be positive"));
        }
        if !(self.depth_min > 0.0 && self.depth_min < self.depth_max) {
            return Err(Error::invalid("need 0 < depth_min < depth_max"));
        }
        for p in &self.planes {
            if Vector3::from(p.normal).norm() == 0.0 {
                return Err(Error::invalid("plane normal must be nonzero"));
            }
        }
        for s in &self.spheres {
            if !(s.radius > 0.0) {
                return Err(Error::invalid("sphere radius must be positive"));
            }
        }
        if let Some(n) = self.noise {
            if !(n.sigma >= 0.0) {
                return Err(Error::invalid("noise sigma must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Nearest intersection along `ray` (z = 1 scaling, so `t` is the depth).
fn intersect(spec: &SceneSpec, ray: &Vector3<f64>) -> Option<(f64, Vector3<f64>)> {
    let mut best: Option<(f64, Vector3<f64>)> = None;
    let mut consider = |t: f64, n: Vector3<f64>| {
        if t > 0.0 && best.map_or(true, |(b, _)| t < b) {
            best = Some((t, n));
        }
    };
    for p in &spec.planes {
        let n = Vector3::from(p.normal).normalize();
        let p0 = Vector3::from(p.point);
        let denom = n.dot(ray);
        if denom.abs() < 1e-12 {
            continue;
        }
        let t = n.dot(&p0) / denom;
        if let Some(ext) = p.extent {
            if (ray * t - p0).norm() > ext {
                continue;
            }
        }
        consider(t, n);
    }
    for s in &spec.spheres {
        let c = Vector3::from(s.center);
        let a = ray.norm_squared();
        let b = ray.dot(&c);
        let disc = b * b - a * (c.norm_squared() - s.radius * s.radius);
        if disc < 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        for t in [(b - sq) / a, (b + sq) / a] {
            if t > 0.0 {
                consider(t, (ray * t - c) / s.radius);
                break;
            }
        }
    }
    best
}

/// Renders per-pixel depth of the nearest surface and its analytic normal
/// (oriented toward the camera). Misses and depths outside
/// `[depth_min, depth_max]` are invalid. Optional noise perturbs depths only;
/// noisy depths are clamped back into range.
pub fn synthesize_scene(spec: &SceneSpec) -> Result<(DepthMap, NormalMap)> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let k = &spec.intrinsics;
    let mut values = vec![0.0; w * h];
    let mut mask = vec![false; w * h];
    let mut normals = NormalMap::invalid(w, h);
    for row in 0..h {
        for col in 0..w {
            let ray = k.pixel_ray(row, col);
            if let Some((t, n)) = intersect(spec, &ray) {
                if t >= spec.depth_min && t <= spec.depth_max {
                    let i = row * w + col;
                    values[i] = t;
                    mask[i] = true;
                    let p: Point3 = ray * t;
                    normals.normals[i] = Some(orient_toward_camera(Unit::new_normalize(n), &p));
                }
            }
        }
    }
    if let Some(noise) = spec.noise.filter(|n| n.sigma > 0.0) {
        let mut rng = rng::substream(spec.seed, 0);
        for (v, &m) in values.iter_mut().zip(&mask) {
            if m {
                *v = (*v + noise.sigma * rng::gaussian(&mut rng)).clamp(spec.depth_min, spec.depth_max);
            }
        }
    }
    Ok((DepthMap::new(w, h, values, mask)?, normals))
}
