//! Continuous-to-discrete conversion of sampled adjacency matrices.

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Threshold applied after mapping samples from `[-1, 1]` back to `[0, 1]`.
pub const EDGE_THRESHOLD: f64 = 0.5;

/// Maps a sample in `[-1, 1]` to `[0, 1]`.
#[inline]
pub fn to_unit_interval(x: f64) -> f64 {
    (x + 1.0) / 2.0
}

/// Quantizes a row-major n×n matrix with entries in `[0, 1]`.
///
/// The matrix is symmetrized as `(x + xᵀ)/2` before thresholding at 0.5; the
/// diagonal is ignored.
pub fn quantize(n: usize, x: &[f64]) -> Result<Graph> {
    if x.len() != n * n {
        return Err(Error::SizeMismatch {
            expected: n * n,
            found: x.len(),
        });
    }
    if let Some(k) = x.iter().position(|v| v.is_nan()) {
        return Err(Error::SamplingDiverged(format!(
            "NaN at entry ({}, {})",
            k / n,
            k % n
        )));
    }
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if 0.5 * (x[i * n + j] + x[j * n + i]) >= EDGE_THRESHOLD {
                g.add_edge(i, j)?;
            }
        }
    }
    Ok(g)
}

/// Quantizes a sample that still lives in `[-1, 1]`.
pub fn quantize_signed(n: usize, x: &[f64]) -> Result<Graph> {
    let unit: Vec<f64> = x.iter().map(|&v| to_unit_interval(v)).collect();
    quantize(n, &unit)
}
