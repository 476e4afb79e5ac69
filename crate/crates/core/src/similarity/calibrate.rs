//! Impostor-score threshold calibration against an FMR target.
//!
//! Given a sample of impostor (non-mated) scores, the calibrated threshold is
//! the smallest *observed* score `t` such that the fraction of scores strictly
//! greater than `t` does not exceed the target. A false match is a score
//! strictly greater than the threshold — the same convention every consumer
//! in this crate uses — which keeps degenerate cases well defined (a sample
//! where all scores are equal calibrates to that value with achieved FMR 0).
//!
//! No interpolation: picking an order statistic makes the result reproducible
//! across implementations and matches finite-sample FMR semantics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Result of calibrating a decision threshold on impostor scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCalibration {
    pub fmr_target: f64,
    pub threshold: f64,
    pub impostor_count: usize,
    pub achieved_fmr: f64,
}

/// Calibrate the decision threshold for `fmr_target` on `scores`.
///
/// Errors on an empty sample, a target outside `[0, 1]`, or non-finite
/// scores. Guarantees `achieved_fmr ≤ fmr_target`, and that the next lower
/// observed score (when one exists) would violate the target.
pub fn calibrate_threshold(scores: &[f64], fmr_target: f64) -> Result<ThresholdCalibration> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot calibrate a threshold on an empty score sample".into(),
        ));
    }
    if !(0.0..=1.0).contains(&fmr_target) {
        return Err(Error::InvalidArgument(format!(
            "fmr target must be in [0, 1], got {fmr_target}"
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidData(format!(
            "non-finite impostor score {bad}"
        )));
    }

    let mut sorted = scores.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let n = sorted.len();

    // Largest k with k/n ≤ target, computed by float division exactly as the
    // reported FMR will be. Start from floor(target·n) and adjust: float
    // rounding can put the first guess off by one in either direction.
    let mut allowed = (fmr_target * n as f64).floor() as usize;
    allowed = allowed.min(n);
    while allowed > 0 && allowed as f64 / n as f64 > fmr_target {
        allowed -= 1;
    }
    while allowed < n && (allowed + 1) as f64 / n as f64 <= fmr_target {
        allowed += 1;
    }

    // With k scores allowed above, the threshold is the (n-k)-th smallest
    // score — except that ties deflate the count of strictly-greater scores,
    // so the achieved FMR is computed from the actual value.
    let threshold = if allowed >= n {
        sorted[0]
    } else {
        sorted[n - 1 - allowed]
    };
    let above = sorted.partition_point(|&s| s <= threshold);
    let achieved_fmr = (n - above) as f64 / n as f64;
    debug_assert!(achieved_fmr <= fmr_target);

    Ok(ThresholdCalibration {
        fmr_target,
        threshold,
        impostor_count: n,
        achieved_fmr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decile_example() {
        // Order-statistic oracle by hand: with 10 scores 0.1..1.0 and target
        // 0.10, exactly one score may exceed the threshold → t = 0.9.
        let scores: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let cal = calibrate_threshold(&scores, 0.10).unwrap();
        assert_eq!(cal.threshold, 0.9);
        assert_eq!(cal.achieved_fmr, 0.10);
        assert_eq!(cal.impostor_count, 10);
    }

    #[test]
    fn all_equal_scores_with_zero_target() {
        // No score is strictly greater than itself.
        let cal = calibrate_threshold(&[0.5; 64], 0.0).unwrap();
        assert_eq!(cal.threshold, 0.5);
        assert_eq!(cal.achieved_fmr, 0.0);
    }

    #[test]
    fn tighter_target_never_lowers_threshold() {
        let scores: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.7919).sin()).collect();
        let loose = calibrate_threshold(&scores, 0.001).unwrap();
        let tight = calibrate_threshold(&scores, 0.0001).unwrap();
        assert!(tight.threshold >= loose.threshold);
    }

    #[test]
    fn achieved_fmr_counts_strictly_greater() {
        // Ties at the threshold do not count as false matches.
        let scores = [0.1, 0.5, 0.5, 0.5, 0.9];
        let cal = calibrate_threshold(&scores, 0.5).unwrap();
        assert_eq!(cal.threshold, 0.5);
        assert_eq!(cal.achieved_fmr, 0.2); // only 0.9 exceeds
    }

    #[test]
    fn target_one_allows_everything() {
        let scores = [0.3, 0.1, 0.2];
        let cal = calibrate_threshold(&scores, 1.0).unwrap();
        assert_eq!(cal.threshold, 0.1);
        // Two of three scores exceed 0.1.
        assert!((cal.achieved_fmr - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(calibrate_threshold(&[], 0.1).is_err());
        assert!(calibrate_threshold(&[0.5], -0.1).is_err());
        assert!(calibrate_threshold(&[0.5], 1.5).is_err());
        assert!(calibrate_threshold(&[f64::NAN], 0.1).is_err());
    }
}
