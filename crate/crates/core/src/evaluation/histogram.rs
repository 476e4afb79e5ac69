//! Score histograms and KL divergence between them.
//!
//! Histograms use `bins` uniform-width bins over a closed range. Interior
//! bins are right-open `[e_i, e_{i+1})`; the last bin includes its right
//! edge, so the range endpoint lands in a bin rather than falling off.
//! Out-of-range scores are clamped into the end bins and tallied in
//! `clamped_low` / `clamped_high` so conservation still holds while the
//! clamping stays visible.
//!
//! KL divergence is the natural-log sum `Σ pᵢ·ln(pᵢ/qᵢ)` over smoothed
//! densities: `epsilon` is added to every bin of both histograms and each is
//! renormalized. Empty bins would otherwise make the divergence infinite;
//! additive smoothing keeps it finite at a documented, configurable cost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bin count used by the command-line tools when not overridden.
pub const DEFAULT_BINS: usize = 100;
/// Score range used by the command-line tools when not overridden: typical
/// support of face-embedding cosine scores.
pub const DEFAULT_RANGE: (f64, f64) = (-0.2, 1.0);
/// Smoothing constant for KL divergence when not overridden.
pub const DEFAULT_EPSILON: f64 = 1e-10;

/// A fixed-range histogram of scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreHistogram {
    /// `bins + 1` strictly increasing edges (serialized as `edges`).
    #[serde(rename = "edges")]
    pub bin_edges: Vec<f64>,
    /// Per-bin sample counts; sums to the input size.
    pub counts: Vec<u64>,
    /// Per-bin share of samples; sums to 1.
    pub density: Vec<f64>,
    /// Samples below the range, clamped into the first bin.
    pub clamped_low: u64,
    /// Samples above the range, clamped into the last bin.
    pub clamped_high: u64,
}

impl ScoreHistogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

/// Histogram `scores` into `bins` uniform bins over `range`.
pub fn histogram(scores: &[f64], bins: usize, range: (f64, f64)) -> Result<ScoreHistogram> {
    let (lo, hi) = range;
    if scores.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot histogram an empty score list".into(),
        ));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("bin count must be ≥ 1".into()));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "invalid histogram range [{lo}, {hi}]"
        )));
    }

    let mut bin_edges = Vec::with_capacity(bins + 1);
    for i in 0..=bins {
        bin_edges.push(lo + (hi - lo) * (i as f64 / bins as f64));
    }
    bin_edges[bins] = hi;
    if bin_edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "{bins} bins over [{lo}, {hi}] collapse to zero width"
        )));
    }

    let mut counts = vec![0u64; bins];
    let mut clamped_low = 0u64;
    let mut clamped_high = 0u64;
    let width = hi - lo;
    for &s in scores {
        if !s.is_finite() {
            return Err(Error::InvalidData(format!("non-finite score {s}")));
        }
        if s < lo {
            counts[0] += 1;
            clamped_low += 1;
        } else if s > hi {
            counts[bins - 1] += 1;
            clamped_high += 1;
        } else {
            let k = ((s - lo) / width * bins as f64) as usize;
            counts[k.min(bins - 1)] += 1;
        }
    }
    if clamped_low + clamped_high > 0 {
        log::warn!(
            "{} scores below and {} above [{lo}, {hi}] were clamped into end bins",
            clamped_low,
            clamped_high
        );
    }

    let n = scores.len() as f64;
    let density = counts.iter().map(|&c| c as f64 / n).collect();
    Ok(ScoreHistogram {
        bin_edges,
        counts,
        density,
        clamped_low,
        clamped_high,
    })
}

/// KL divergence `KL(p ‖ q)` in nats over epsilon-smoothed densities.
///
/// Requires identical bin edges. The result is clamped at 0: the true value
/// is non-negative, and summation round-off must not leak a negative sign.
pub fn kl_divergence(p: &ScoreHistogram, q: &ScoreHistogram, epsilon: f64) -> Result<f64> {
    if p.bin_edges != q.bin_edges {
        return Err(Error::InvalidArgument(
            "KL divergence requires histograms with identical bin edges".into(),
        ));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be a non-negative real, got {epsilon}"
        )));
    }

    let smooth = |h: &ScoreHistogram| -> Vec<f64> {
        let total: f64 = h.density.iter().map(|d| d + epsilon).sum();
        h.density.iter().map(|d| (d + epsilon) / total).collect()
    };
    let ps = smooth(p);
    let qs = smooth(q);

    let mut kl = 0.0f64;
    for (pi, qi) in ps.iter().zip(&qs) {
        if *pi > 0.0 {
            if *qi == 0.0 {
                // Only reachable with epsilon = 0 and an empty q bin.
                return Ok(f64::INFINITY);
            }
            kl += pi * (pi / qi).ln();
        }
    }
    Ok(kl.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_placement() {
        let h = histogram(&[0.25, 0.75], 2, (0.0, 1.0)).unwrap();
        assert_eq!(h.counts, vec![1, 1]);
        assert_eq!(h.bin_edges, vec![0.0, 0.5, 1.0]);
        assert_eq!(h.density, vec![0.5, 0.5]);
        assert_eq!(h.clamped_low + h.clamped_high, 0);
    }

    #[test]
    fn identical_scores_fill_one_bin() {
        let h = histogram(&[0.4; 9], 10, (0.0, 1.0)).unwrap();
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.counts[4], 9);
    }

    #[test]
    fn last_bin_includes_right_edge() {
        let h = histogram(&[1.0, 0.0, 0.999], 10, (0.0, 1.0)).unwrap();
        assert_eq!(h.counts[9], 2);
        assert_eq!(h.counts[0], 1);
    }

    #[test]
    fn out_of_range_scores_clamp_with_counters() {
        let h = histogram(&[-5.0, 0.5, 9.0, 10.0], 4, (0.0, 1.0)).unwrap();
        assert_eq!(h.clamped_low, 1);
        assert_eq!(h.clamped_high, 2);
        assert_eq!(h.total(), 4, "clamped scores still count");
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[3], 2);
    }

    #[test]
    fn conservation_holds() {
        let scores: Vec<f64> = (0..1234).map(|i| ((i * 37) % 1000) as f64 / 1000.0).collect();
        let h = histogram(&scores, 13, (0.0, 1.0)).unwrap();
        assert_eq!(h.total(), 1234);
        let density_sum: f64 = h.density.iter().sum();
        assert!((density_sum - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(histogram(&[], 10, (0.0, 1.0)).is_err());
        assert!(histogram(&[0.5], 0, (0.0, 1.0)).is_err());
        assert!(histogram(&[0.5], 10, (1.0, 0.0)).is_err());
        assert!(histogram(&[f64::NAN], 10, (0.0, 1.0)).is_err());
    }

    #[test]
    fn kl_of_identical_histograms_is_zero() {
        let h = histogram(&[0.1, 0.2, 0.2, 0.7, 0.9], 8, (0.0, 1.0)).unwrap();
        let kl = kl_divergence(&h, &h, DEFAULT_EPSILON).unwrap();
        assert!(kl.abs() <= 1e-12, "{kl}");
    }

    #[test]
    fn concentrated_vs_uniform_is_ln2() {
        // p = (1, 0), q = (0.5, 0.5): KL = 1·ln(1/0.5) = ln 2, and the
        // epsilon smoothing moves it by O(epsilon).
        let p = histogram(&[0.25, 0.25], 2, (0.0, 1.0)).unwrap();
        let q = histogram(&[0.25, 0.75], 2, (0.0, 1.0)).unwrap();
        let kl = kl_divergence(&p, &q, 1e-10).unwrap();
        assert!((kl - std::f64::consts::LN_2).abs() < 1e-6, "{kl}");
    }

    #[test]
    fn hand_oracle_three_to_one() {
        // p counts (3,1) → (0.75, 0.25); q counts (2,2) → (0.5, 0.5);
        // with epsilon 0: 0.75·ln1.5 + 0.25·ln0.5 = 0.13081203594113697
        // (verified with 120-bit arithmetic).
        let p = histogram(&[0.2, 0.3, 0.4, 0.7], 2, (0.0, 1.0)).unwrap();
        let q = histogram(&[0.2, 0.3, 0.7, 0.8], 2, (0.0, 1.0)).unwrap();
        let kl = kl_divergence(&p, &q, 0.0).unwrap();
        assert!((kl - 0.130_812_035_941_136_97).abs() < 1e-15, "{kl}");
    }

    #[test]
    fn kl_is_asymmetric() {
        let p = histogram(&[0.25, 0.25], 2, (0.0, 1.0)).unwrap();
        let q = histogram(&[0.25, 0.75], 2, (0.0, 1.0)).unwrap();
        let forward = kl_divergence(&p, &q, 1e-10).unwrap();
        let backward = kl_divergence(&q, &p, 1e-10).unwrap();
        assert!((forward - backward).abs() > 1e-3);
    }

    #[test]
    fn zero_epsilon_with_disjoint_support_is_infinite() {
        let p = histogram(&[0.25], 2, (0.0, 1.0)).unwrap();
        let q = histogram(&[0.75], 2, (0.0, 1.0)).unwrap();
        assert_eq!(kl_divergence(&p, &q, 0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn mismatched_edges_are_rejected() {
        let p = histogram(&[0.5], 2, (0.0, 1.0)).unwrap();
        let q = histogram(&[0.5], 3, (0.0, 1.0)).unwrap();
        assert!(kl_divergence(&p, &q, 1e-10).is_err());
        assert!(kl_divergence(&p, &p, -1.0).is_err());
    }

    #[test]
    fn histogram_json_round_trips() {
        let h = histogram(&[0.1, 0.4, 0.9], 5, (0.0, 1.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hist.json");
        h.save_json(&path).unwrap();
        assert_eq!(ScoreHistogram::load_json(&path).unwrap(), h);
    }
}
