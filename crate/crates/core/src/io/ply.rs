//! PLY point clouds with float32 `x y z` and optional `nx ny nz`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::normals::NormalMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyMode {
    Ascii,
    BinaryLittleEndian,
}

/// Writes `cloud`; normals are looked up through the cloud's pixel index,
/// pixels without a normal get the zero vector.
pub fn write_ply(path: &Path, cloud: &PointCloud, normals: Option<&NormalMap>, mode: PlyMode) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_ply_to(&mut w, cloud, normals, mode)?;
    w.flush()?;
    Ok(())
}

pub fn write_ply_to(w: &mut impl Write, cloud: &PointCloud, normals: Option<&NormalMap>, mode: PlyMode) -> Result<()> {
    if cloud.is_empty() {
        return Err(Error::invalid("cannot write an empty point cloud"));
    }
    let per_point: Option<Vec<Vector3<f64>>> = match normals {
        None => None,
        Some(map) => {
            let pix = cloud
                .pixel_index
                .as_ref()
                .ok_or_else(|| Error::invalid("normals need a cloud with pixel indices"))?;
            Some(
                pix.iter()
                    .map(|&(r, c)| {
                        if r < map.height && c < map.width {
                            map.get(r, c).map_or(Vector3::zeros(), |n| n.into_inner())
                        } else {
                            Vector3::zeros()
                        }
                    })
                    .collect(),
            )
        }
    };
    let format = match mode {
        PlyMode::Ascii => "ascii",
        PlyMode::BinaryLittleEndian => "binary_little_endian",
    };
    writeln!(w, "ply\nformat {format} 1.0\nelement vertex {}", cloud.len())?;
    writeln!(w, "property float x\nproperty float y\nproperty float z")?;
    if per_point.is_some() {
        writeln!(w, "property float nx\nproperty float ny\nproperty float nz")?;
    }
    writeln!(w, "end_header")?;
    for (i, p) in cloud.points.iter().enumerate() {
        let mut vals = vec![p.x as f32, p.y as f32, p.z as f32];
        if let Some(ns) = &per_point {
            vals.extend(ns[i].iter().map(|&v| v as f32));
        }
        match mode {
            PlyMode::Ascii => {
                let line: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
                writeln!(w, "{}", line.join(" "))?;
            }
            PlyMode::BinaryLittleEndian => {
                for v in vals {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}
