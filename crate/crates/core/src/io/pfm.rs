//! Portable float map.
//!
//! Header: `Pf` (one channel) or `PF` (three channels), then width and
//! height, then a scale whose sign gives the byte order (negative = little
//! endian), each followed by a single whitespace byte. Rows are stored
//! bottom-to-top as 32-bit floats. Writers always emit little-endian.
//!
//! Depth maps store invalid pixels as `0.0`; on read any value that is not
//! finite and positive is invalid. Normal maps store invalid pixels as the
//! zero vector.

use std::fs;
use std::path::Path;

use nalgebra::{Unit, Vector3};

use crate::error::{Error, Result};
use crate::geometry::DepthMap;
use crate::losses::GradientGrid;
use crate::normals::NormalMap;

/// Decoded PFM image, rows top-to-bottom, channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct Pfm {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl Pfm {
    pub fn encode(&self) -> Vec<u8> {
        let tag = if self.channels == 3 { "PF" } else { "Pf" };
        let mut out = format!("{tag}\n{} {}\n-1.0\n", self.width, self.height).into_bytes();
        out.reserve(self.data.len() * 4);
        let row_len = self.width * self.channels;
        for row in (0..self.height).rev() {
            for v in &self.data[row * row_len..(row + 1) * row_len] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor {
            bytes,
            pos: 0,
            last_start: 0,
        };
        let tag = cur.token()?;
        let channels = match tag.as_str() {
            "Pf" => 1,
            "PF" => 3,
            other => return Err(Error::format(0, format!("bad magic {other:?}"))),
        };
        let width = cur.number::<usize>("width")?;
        let height = cur.number::<usize>("height")?;
        let scale = cur.number::<f32>("scale")?;
        let scale_at = cur.last_start;
        if scale == 0.0 || !scale.is_finite() {
            return Err(Error::format(scale_at as u64, "scale must be finite and nonzero"));
        }
        if width == 0 || height == 0 {
            return Err(Error::format(scale_at as u64, "zero dimension"));
        }
        let little = scale < 0.0;
        // Exactly one whitespace byte separates the header from the data.
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(Error::format(cur.pos as u64, "missing whitespace after scale"));
        }
        let start = cur.pos + 1;
        let count = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .filter(|n| n.checked_mul(4).is_some())
            .ok_or_else(|| Error::format(start as u64, "dimensions overflow"))?;
        let payload = &bytes[start..];
        if payload.len() != count * 4 {
            return Err(Error::format(
                start as u64,
                format!("expected {} data bytes, found {}", count * 4, payload.len()),
            ));
        }
        let row_len = width * channels;
        let mut data = vec![0f32; count];
        for (file_row, chunk) in payload.chunks_exact(row_len * 4).enumerate() {
            let row = height - 1 - file_row;
            for (j, b) in chunk.chunks_exact(4).enumerate() {
                let b = [b[0], b[1], b[2], b[3]];
                data[row * row_len + j] = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
            }
        }
        Ok(Pfm {
            width,
            height,
            channels,
            data,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    last_start: usize,
}

impl Cursor<'_> {
    fn token(&mut self) -> Result<String> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        self.last_start = start;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() && self.pos - start < 32 {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(start as u64, "unexpected end of header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map(str::to_owned)
            .map_err(|_| Error::format(start as u64, "non-ASCII header"))
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::format(self.last_start as u64, format!("invalid {what} {tok:?}")))
    }
}

pub fn encode_depth(depth: &DepthMap) -> Vec<u8> {
    Pfm {
        width: depth.width(),
        height: depth.height(),
        channels: 1,
        data: depth.values().iter().map(|&v| v as f32).collect(),
    }
    .encode()
}

pub fn decode_depth(bytes: &[u8]) -> Result<DepthMap> {
    let pfm = Pfm::decode(bytes)?;
    if pfm.channels != 1 {
        return Err(Error::format(0, "depth PFM must have one channel"));
    }
    DepthMap::from_values(pfm.width, pfm.height, pfm.data.iter().map(|&v| v as f64).collect())
}

pub fn read_pfm(path: &Path) -> Result<Pfm> {
    Pfm::decode(&fs::read(path)?)
}

pub fn write_pfm(path: &Path, depth: &DepthMap) -> Result<()> {
    fs::write(path, encode_depth(depth))?;
    Ok(())
}

pub fn write_grid_pfm(path: &Path, grid: &GradientGrid) -> Result<()> {
    let pfm = Pfm {
        width: grid.width,
        height: grid.height,
        channels: 1,
        data: grid.values.iter().map(|&v| v as f32).collect(),
    };
    fs::write(path, pfm.encode())?;
    Ok(())
}

pub fn encode_normal_map(map: &NormalMap) -> Vec<u8> {
    let data = map
        .normals
        .iter()
        .flat_map(|n| n.map_or([0.0; 3], |n| [n.x as f32, n.y as f32, n.z as f32]))
        .collect();
    Pfm {
        width: map.width,
        height: map.height,
        channels: 3,
        data,
    }
    .encode()
}

pub fn decode_normal_map(bytes: &[u8]) -> Result<NormalMap> {
    let pfm = Pfm::decode(bytes)?;
    if pfm.channels != 3 {
        return Err(Error::format(0, "normal-map PFM must have three channels"));
    }
    let normals = pfm
        .data
        .chunks_exact(3)
        .map(|c| {
            let v = Vector3::new(c[0] as f64, c[1] as f64, c[2] as f64);
            (v.iter().all(|x| x.is_finite()) && v.norm() > 1e-6).then(|| Unit::new_normalize(v))
        })
        .collect();
    Ok(NormalMap {
        width: pfm.width,
        height: pfm.height,
        normals,
    })
}

pub fn write_normal_map_pfm(path: &Path, map: &NormalMap) -> Result<()> {
    fs::write(path, encode_normal_map(map))?;
    Ok(())
}

pub fn read_normal_map_pfm(path: &Path) -> Result<NormalMap> {
    decode_normal_map(&fs::read(path)?)
}
