//! Robustness of virtual normals versus local surface normals under point
//! noise, measured on a sphere.
//!
//! A clean unit-area-uniform sphere cloud is perturbed with isotropic
//! Gaussian noise. Virtual normals are compared at identical index triplets
//! (sampled once on the clean cloud); surface normals are k-NN plane fits at
//! identical query indices. Every comparison ignores sign, so the reported
//! angle lies in `[0, 90]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{triangle_normal, Point3, PointCloud, UnitVector3};
use crate::normals::knn_normals;
use crate::reduce::chunked_mean;
use crate::rng;
use crate::sampling::{sample_point_triplets, SamplingConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Noise standard deviations, ascending, in scene units.
    pub sigmas: Vec<f64>,
    pub mu: f64,
    pub n_vn_groups: usize,
    pub n_sn_points: usize,
    /// Size of the sphere cloud; at least `n_sn_points`.
    pub cloud_points: usize,
    pub radius: f64,
    pub k_neighbors: usize,
    /// Minimum triplet edge length as a fraction of the radius.
    pub theta_ratio: f64,
    pub alpha_deg: f64,
    pub beta_deg: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub const STANDARD_SIGMAS: [f64; 4] = [0.0002, 0.001, 0.003, 0.01];

    pub fn new(sigmas: Vec<f64>, seed: u64) -> Self {
        NoiseConfig {
            sigmas,
            mu: 0.0,
            n_vn_groups: 100_000,
            n_sn_points: 100_000,
            cloud_points: 100_000,
            radius: 1.0,
            k_neighbors: 16,
            theta_ratio: 0.6,
            alpha_deg: SamplingConfig::DEFAULT_ALPHA_DEG,
            beta_deg: SamplingConfig::DEFAULT_BETA_DEG,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::invalid("sigmas must be finite and non-negative"));
        }
        if self.sigmas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sigmas must be strictly ascending"));
        }
        if self.n_vn_groups == 0 || self.n_sn_points == 0 {
            return Err(Error::invalid("sample counts must be positive"));
        }
        if self.cloud_points < self.n_sn_points.max(4) {
            return Err(Error::invalid("cloud_points must be at least n_sn_points and 4"));
        }
        if self.k_neighbors < 3 {
            return Err(Error::invalid("need at least 3 neighbours"));
        }
        if !(self.radius > 0.0 && self.theta_ratio > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid("radius and theta_ratio must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sphere {
    pub cloud: PointCloud,
    /// Outward analytic normal per point.
    pub normals: Vec<UnitVector3>,
}

/// `n` points distributed uniformly by area on a sphere centred at the
/// origin (normalized Gaussian triples).
pub fn make_sphere(n: usize, radius: f64, seed: u64) -> Result<Sphere> {
    if n < 4 {
        return Err(Error::invalid("sphere needs at least 4 points"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid("radius must be positive"));
    }
    let mut rng = rng::substream(seed, 0);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    while points.len() < n {
        let g = Point3::new(rng::gaussian(&mut rng), rng::gaussian(&mut rng), rng::gaussian(&mut rng));
        let norm = g.norm();
        if norm < 1e-12 {
            continue;
        }
        let u = g / norm;
        points.push(u * radius);
        normals.push(UnitVector3::new_unchecked(u));
    }
    Ok(Sphere {
        cloud: PointCloud::from_points(points),
        normals,
    })
}

/// Adds independent `N(mu, sigma^2)` noise to every coordinate.
pub fn add_gaussian_noise(cloud: &PointCloud, sigma: f64, mu: f64, seed: u64) -> PointCloud {
    if sigma == 0.0 && mu == 0.0 {
        return cloud.clone();
    }
    let mut rng = rng::substream(seed, 0);
    let mut jitter = || mu + sigma * rng::gaussian(&mut rng);
    let points = cloud
        .points
        .iter()
        .map(|p| Point3::new(p.x + jitter(), p.y + jitter(), p.z + jitter()))
        .collect();
    PointCloud {
        points,
        pixel_index: cloud.pixel_index.clone(),
    }
}

/// Angle in degrees between two normals, ignoring orientation.
#[inline]
pub fn unsigned_angle_deg(a: &UnitVector3, b: &UnitVector3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b).abs()).to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub sigma: f64,
    pub vn_mean_deg: f64,
    pub sn_mean_deg: f64,
}

pub fn vn_sn_robustness(cfg: &NoiseConfig) -> Result<Vec<RobustnessRow>> {
    cfg.validate()?;
    let sphere = make_sphere(cfg.cloud_points, cfg.radius, cfg.seed)?;
    let clean = &sphere.cloud.points;

    let sampling = SamplingConfig {
        n_groups: cfg.n_vn_groups,
        alpha_deg: cfg.alpha_deg,
        beta_deg: cfg.beta_deg,
        theta_m: cfg.theta_ratio * cfg.radius,
        seed: rng::mix(cfg.seed, 1),
        max_attempts_per_group: SamplingConfig::DEFAULT_ATTEMPTS,
    };
    let (triplets, _) = sample_point_triplets(clean, &sampling)?;
    if triplets.is_empty() {
        return Err(Error::EmptySample("sphere triplets"));
    }
    let vn_of = |pts: &[Point3]| -> Vec<Option<UnitVector3>> {
        triplets
            .par_iter()
            .map(|&[a, b, c]| triangle_normal(&pts[a], &pts[b], &pts[c]).ok())
            .collect()
    };
    let clean_vn = vn_of(clean);

    let queries: Vec<usize> = (0..cfg.n_sn_points).collect();
    let clean_sn = knn_normals(clean, &queries, cfg.k_neighbors);

    let compare = |x: &[Option<UnitVector3>], y: &[Option<UnitVector3>], what| {
        let angles: Vec<f64> = x
            .iter()
            .zip(y)
            .filter_map(|(a, b)| Some(unsigned_angle_deg(a.as_ref()?, b.as_ref()?)))
            .collect();
        chunked_mean(&angles).ok_or(Error::EmptySample(what))
    };

    cfg.sigmas
        .iter()
        .enumerate()
        .map(|(i, &sigma)| {
            let noisy = add_gaussian_noise(&sphere.cloud, sigma, cfg.mu, rng::mix(cfg.seed, 100 + i as u64));
            let vn = compare(&clean_vn, &vn_of(&noisy.points), "virtual normals")?;
            let sn = compare(&clean_sn, &knn_normals(&noisy.points, &queries, cfg.k_neighbors), "surface normals")?;
            Ok(RobustnessRow {
                sigma,
                vn_mean_deg: vn,
                sn_mean_deg: sn,
            })
        })
        .collect()
}
