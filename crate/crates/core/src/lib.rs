//! Virtual-normal geometry toolkit.
//!
//! Depth maps are lifted to camera-frame point clouds with a pinhole model.
//! Triplets of pixels whose 3D points are far apart and well-shaped define
//! "virtual" planes; comparing the normals of those planes between a
//! predicted and a reference depth map gives a loss that captures global
//! scene structure. The crate provides that loss with an analytic gradient,
//! baseline geometric losses, plane-fit surface normals, evaluation metrics,
//! the noise-robustness experiment on a sphere, and a gradient-descent
//! refinement harness.

pub mod error;
pub mod geometry;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod noise_lab;
pub mod normals;
pub mod reduce;
pub mod refine;
pub mod rng;
pub mod sampling;
pub mod scene;

pub use error::{Error, Result};
pub use geometry::{
    backproject_grid, backproject_map, backproject_pixel, triangle_normal, CameraIntrinsics, DepthMap,
    OrganizedCloud, Point3, PointCloud, UnitVector3,
};
pub use losses::{
    combined_loss, ohem_filter, pairwise_loss, surface_normal_loss, vn_loss, vn_loss_grad, wce_loss,
    DepthBinning, GradientGrid, InfoGain, LossReport,
};
pub use metrics::{depth_metrics, normal_metrics, DepthMetricsReport, NormalMetricsReport};
pub use normals::{estimate_normal_map, patch_normal, patch_size_sensitivity, NormalMap};
pub use sampling::{angle_deg, sample_triplets, satisfies_r1, satisfies_r2, SamplingConfig, Triplet, TripletSet};
