//! Probability that an identity falsely matches at least one other.
//!
//! With a dataset-wide false-match rate `fmr` and `n` identities, a single
//! identity faces `n − 1` independent comparisons, so
//!
//! ```text
//! P = 1 − (1 − fmr)^(n−1)
//! ```
//!
//! Evaluated as `-expm1((n−1) · ln1p(−fmr))`: the naive power loses all
//! precision exactly where this quantity matters, at small `fmr` and large
//! `n` (e.g. `fmr = 10⁻³`, `n ≈ 15000` puts `P` within 10⁻⁶ of 1).

use crate::error::{Error, Result};

/// `1 − (1 − fmr)^(n−1)`, numerically stable across the full range.
pub fn false_match_probability(fmr: f64, n: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&fmr) {
        return Err(Error::InvalidArgument(format!(
            "fmr must be in [0, 1], got {fmr}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "identity count must be at least 1".into(),
        ));
    }
    if n == 1 {
        // No other identities to match against.
        return Ok(0.0);
    }
    if fmr == 1.0 {
        return Ok(1.0);
    }
    // (1-fmr)^(n-1) = exp((n-1)·ln(1-fmr)); ln_1p(-fmr) keeps precision for
    // small fmr, exp_m1 keeps it when the result is near 0.
    Ok(-((n - 1) as f64 * (-fmr).ln_1p()).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_inputs() {
        assert_eq!(false_match_probability(0.0, 1).unwrap(), 0.0);
        assert_eq!(false_match_probability(0.0, 1_000_000).unwrap(), 0.0);
        assert_eq!(false_match_probability(0.37, 1).unwrap(), 0.0);
        assert_eq!(false_match_probability(1.0, 2).unwrap(), 1.0);
        assert_eq!(false_match_probability(1.0, 1).unwrap(), 0.0);
    }

    #[test]
    fn large_dataset_value_matches_high_precision_oracle() {
        // 1 − 0.999^14888 computed with 200-bit arithmetic: the f64 nearest
        // to the true value is 0.9999996603835575.
        let p = false_match_probability(0.001, 14_889).unwrap();
        assert!(
            (p - 0.999_999_660_383_557_5).abs() < 1e-9,
            "p = {p:.16}"
        );
    }

    #[test]
    fn small_cases_match_direct_power() {
        // Where the naive formula is still accurate, both agree.
        for &(fmr, n) in &[(0.5, 2u64), (0.25, 5), (0.9, 3), (0.01, 10)] {
            let stable = false_match_probability(fmr, n).unwrap();
            let naive = 1.0 - (1.0 - fmr).powi(n as i32 - 1);
            assert!((stable - naive).abs() < 1e-12, "fmr={fmr} n={n}");
        }
    }

    #[test]
    fn monotone_in_both_arguments() {
        let mut last = 0.0;
        for n in [2u64, 10, 100, 1000, 10_000] {
            let p = false_match_probability(1e-4, n).unwrap();
            assert!(p >= last);
            last = p;
        }
        let mut last = 0.0;
        for fmr in [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.5] {
            let p = false_match_probability(fmr, 100).unwrap();
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn out_of_domain_is_rejected() {
        assert!(false_match_probability(-0.1, 10).is_err());
        assert!(false_match_probability(1.1, 10).is_err());
        assert!(false_match_probability(f64::NAN, 10).is_err());
        assert!(false_match_probability(0.5, 0).is_err());
    }
}
