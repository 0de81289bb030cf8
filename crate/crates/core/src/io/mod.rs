//! File formats: PFM and 16-bit PNG depth, PLY point clouds, triplet CSV and
//! intrinsics JSON.

pub mod pfm;
pub mod ply;
pub mod png16;
pub mod triplets;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthMap};

pub use pfm::{read_normal_map_pfm, read_pfm, write_grid_pfm, write_normal_map_pfm, write_pfm, Pfm};
pub use ply::{write_ply, write_ply_to, PlyMode};
pub use triplets::{read_triplets_csv, write_triplets_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthFormat {
    Pfm,
    Png16,
}

impl DepthFormat {
    /// `.pfm` or `.png`, case-insensitive.
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "pfm" => Some(DepthFormat::Pfm),
            "png" => Some(DepthFormat::Png16),
            _ => None,
        }
    }
}

/// Reads a depth map. PFM values are meters; PNG16 raw values are scaled by
/// `k.depth_scale` and raw 0 is invalid.
pub fn read_depth(path: &Path, format: DepthFormat, k: &CameraIntrinsics) -> Result<DepthMap> {
    let bytes = fs::read(path)?;
    match format {
        DepthFormat::Pfm => pfm::decode_depth(&bytes),
        DepthFormat::Png16 => png16::decode_depth(&bytes, k.depth_scale),
    }
}

pub fn write_depth(path: &Path, format: DepthFormat, depth: &DepthMap, k: &CameraIntrinsics) -> Result<()> {
    let bytes = match format {
        DepthFormat::Pfm => pfm::encode_depth(depth),
        DepthFormat::Png16 => png16::encode_depth(depth, k.depth_scale)?,
    };
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_intrinsics(path: &Path) -> Result<CameraIntrinsics> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

pub fn write_intrinsics(path: &Path, k: &CameraIntrinsics) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(k)? + "\n")?;
    Ok(())
}
