//! Single-channel 16-bit PNG depth. Raw value 0 marks an invalid pixel.

use crate::error::{Error, Result};
use crate::geometry::DepthMap;

pub fn decode_depth(bytes: &[u8], depth_scale: f64) -> Result<DepthMap> {
    let decoder = png::Decoder::new(bytes);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format(0, format!("png: {e}")))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(Error::format(
            0,
            format!(
                "expected 16-bit single-channel PNG, found {:?} {:?}",
                info.color_type, info.bit_depth
            ),
        ));
    }
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(0, format!("png: {e}")))?;
    let (w, h) = (frame.width as usize, frame.height as usize);
    let raw = &buf[..frame.buffer_size()];
    let mut values = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    for px in raw.chunks_exact(2) {
        let r = u16::from_be_bytes([px[0], px[1]]);
        values.push(r as f64 * depth_scale);
        mask.push(r != 0);
    }
    DepthMap::new(w, h, values, mask)
}

/// Valid depths are rounded to the nearest raw step; depths that would
/// round to 0 or exceed 65535 steps are rejected.
pub fn encode_depth(depth: &DepthMap, depth_scale: f64) -> Result<Vec<u8>> {
    let mut raw = Vec::with_capacity(depth.len() * 2);
    for (i, (&v, &ok)) in depth.values().iter().zip(depth.mask()).enumerate() {
        let r = if ok {
            let r = (v / depth_scale).round();
            if !(1.0..=65535.0).contains(&r) {
                return Err(Error::invalid(format!(
                    "depth {v} at pixel {i} not representable with scale {depth_scale}"
                )));
            }
            r as u16
        } else {
            0
        };
        raw.extend_from_slice(&r.to_be_bytes());
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, depth.width() as u32, depth.height() as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        let mut w = enc
            .write_header()
            .map_err(|e| Error::invalid(format!("png: {e}")))?;
        w.write_image_data(&raw)
            .map_err(|e| Error::invalid(format!("png: {e}")))?;
    }
    Ok(out)
}
