//! Cosine similarity kernels, all-pairs scoring, threshold calibration, and
//! the false-match graph.
//!
//! One dot-product kernel ([`dot_f64`]) backs every similarity in the crate:
//! it widens `f32` inputs to `f64` and accumulates in a fixed lane order, so
//! a score computed anywhere (streamed, blocked, parallel, or in a test
//! oracle) is bit-identical for the same pair of vectors.

mod allpairs;
mod calibrate;
mod graph;

pub use allpairs::{collect_edges_above, stream_pairs, ScoredPair, DEFAULT_BLOCK};
pub use calibrate::{calibrate_threshold, ThresholdCalibration};
pub use graph::{score_order_key, FalseMatchGraph, GraphEdge};

use crate::error::{Error, Result};

const LANES: usize = 8;

/// Dot product of two equal-length `f32` slices, accumulated in `f64`.
///
/// The accumulation order is fixed (8 independent lanes combined in lane
/// order, then the tail): the result never depends on blocking, threading, or
/// call site. Callers must have checked the lengths match.
#[inline]
pub(crate) fn dot_f64(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / LANES;
    let mut acc = [0.0f64; LANES];
    for c in 0..chunks {
        let base = c * LANES;
        for l in 0..LANES {
            acc[l] += a[base + l] as f64 * b[base + l] as f64;
        }
    }
    let mut sum = 0.0f64;
    for l in 0..LANES {
        sum += acc[l];
    }
    for i in chunks * LANES..a.len() {
        sum += a[i] as f64 * b[i] as f64;
    }
    sum
}

/// Cosine similarity of two unit vectors: their dot product, clamped to
/// `[-1, 1]` against rounding.
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "cosine similarity dim mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(dot_f64(a, b).clamp(-1.0, 1.0))
}

/// Dataset-wide false-match rate: `edges / C(n, 2)`.
///
/// `n < 2` has no pairs and yields 0.
pub fn dataset_fmr(n_edges: usize, n_identities: usize) -> f64 {
    if n_identities < 2 {
        return 0.0;
    }
    let pairs = n_identities as f64 * (n_identities as f64 - 1.0) / 2.0;
    n_edges as f64 / pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_hand_cases() {
        let v = [0.6f32, 0.8];
        assert!((cosine_similarity(&v, &v).unwrap() - 1.0).abs() < 1e-9);

        let e0 = [1.0f32, 0.0];
        let e1 = [0.0f32, 1.0];
        assert_eq!(cosine_similarity(&e0, &e1).unwrap(), 0.0);

        // (0.6, 0.8)·(0.8, 0.6) = 0.48 + 0.48 = 0.96
        let a = [0.6f32, 0.8];
        let b = [0.8f32, 0.6];
        let s = cosine_similarity(&a, &b).unwrap();
        assert!((s - 0.96).abs() < 1e-7, "{s}");

        assert!(cosine_similarity(&a, &e0[..1]).is_err());
    }

    #[test]
    fn cosine_is_symmetric_and_clamped() {
        let a = [0.33f32, -0.91, 0.24, 0.1];
        let b = [-0.5f32, 0.2, 0.84, -0.05];
        assert_eq!(
            cosine_similarity(&a, &b).unwrap(),
            cosine_similarity(&b, &a).unwrap()
        );
        let v = [1.0f32; 4];
        assert!(cosine_similarity(&v, &v).unwrap() <= 1.0);
    }

    #[test]
    fn dataset_fmr_cases() {
        assert_eq!(dataset_fmr(0, 100), 0.0);
        assert_eq!(dataset_fmr(1, 3), 1.0 / 3.0);
        assert_eq!(dataset_fmr(3, 3), 1.0);
        assert_eq!(dataset_fmr(0, 1), 0.0);
        assert_eq!(dataset_fmr(5, 0), 0.0);
    }

    #[test]
    fn dot_accumulates_across_lane_boundary() {
        // 19 components exercises chunks + tail.
        let a: Vec<f32> = (0..19).map(|i| (i as f32 * 0.173).sin()).collect();
        let naive: f64 = a.iter().map(|&x| x as f64 * x as f64).sum();
        let lane = dot_f64(&a, &a);
        assert!((lane - naive).abs() < 1e-12);
    }
}
