//! Fixed-order summation.
//!
//! Every mean reported by the crate goes through [`chunked_sum`]: values are
//! summed left-to-right inside 1024-element chunks, then the chunk sums are
//! added left-to-right. Chunk sums may be computed on any number of threads;
//! the result is bitwise identical for every schedule.

use rayon::prelude::*;

pub const CHUNK: usize = 1024;

pub fn chunked_sum(values: &[f64]) -> f64 {
    let partials: Vec<f64> = values
        .par_chunks(CHUNK)
        .map(|c| c.iter().fold(0.0, |acc, v| acc + v))
        .collect();
    partials.iter().fold(0.0, |acc, v| acc + v)
}

/// Returns `None` for an empty slice.
pub fn chunked_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(chunked_sum(values) / values.len() as f64)
    }
}
