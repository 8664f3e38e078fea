//! Rank-biased overlap between a predicted and a ground-truth ranking, and
//! the length-weighted average used to aggregate per-survey scores.
//!
//! With `X_d` the overlap of the two depth-`d` prefixes (the shorter list
//! contributes all of its items once `d` passes its length), the truncated
//! score is `(1-p) sum_{d<=l} p^(d-1) X_d/d`. The extrapolated score adds
//! the tail correction for lists of lengths `s <= l`:
//!
//! ```text
//! (1-p) [ sum_{d<=l} p^(d-1) X_d/d + sum_{s<d<=l} p^(d-1) X_s (d-s)/(s d) ]
//!     + p^l ((X_l - X_s)/l + X_s/s)
//! ```

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::hash::Hash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RboVariant {
    Truncated,
    #[default]
    Extrapolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RboConfig {
    /// Persistence: probability of looking one rank deeper.
    pub p: f64,
    #[serde(default)]
    pub variant: RboVariant,
}

impl Default for RboConfig {
    fn default() -> Self {
        RboConfig {
            p: 0.98,
            variant: RboVariant::Extrapolated,
        }
    }
}

impl RboConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Config(format!("RBO persistence must lie in (0, 1), got {}", self.p)));
        }
        Ok(())
    }
}

fn has_duplicates<T: Eq + Hash>(list: &[T]) -> bool {
    let set: HashSet<&T> = list.iter().collect();
    set.len() != list.len()
}

/// Rank-biased overlap of two duplicate-free rankings.
///
/// Two empty lists agree perfectly (1); one empty list against a non-empty
/// one scores 0.
pub fn rbo<T: Eq + Hash>(predicted: &[T], truth: &[T], config: &RboConfig) -> Result<f64> {
    config.validate()?;
    if has_duplicates(predicted) || has_duplicates(truth) {
        return Err(Error::Validation("ranked lists must not contain duplicates".into()));
    }
    match (predicted.is_empty(), truth.is_empty()) {
        (true, true) => {
            log::trace!("rbo of two empty lists taken as 1");
            return Ok(1.0);
        }
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }

    let (short, long) = if predicted.len() <= truth.len() {
        (predicted, truth)
    } else {
        (truth, predicted)
    };
    let (s, l) = (short.len(), long.len());
    let p = config.p;

    let mut seen_short: HashSet<&T> = HashSet::with_capacity(s);
    let mut seen_long: HashSet<&T> = HashSet::with_capacity(l);
    let mut overlap = 0usize;
    let mut overlap_at_s = 0usize;
    let mut weight = 1.0; // p^(d-1)
    let mut agreement_sum = 0.0;
    let mut tail_sum = 0.0;

    for d in 1..=l {
        let from_long = &long[d - 1];
        if d <= s {
            let from_short = &short[d - 1];
            if from_short == from_long {
                overlap += 1;
            } else {
                if seen_long.contains(from_short) {
                    overlap += 1;
                }
                if seen_short.contains(from_long) {
                    overlap += 1;
                }
            }
            seen_short.insert(from_short);
        } else if seen_short.contains(from_long) {
            overlap += 1;
        }
        seen_long.insert(from_long);
        if d == s {
            overlap_at_s = overlap;
        }

        let df = d as f64;
        agreement_sum += weight * overlap as f64 / df;
        if d > s {
            tail_sum += weight * overlap_at_s as f64 * (d - s) as f64 / (s as f64 * df);
        }
        weight *= p;
    }
    // weight == p^l here
    let value = match config.variant {
        RboVariant::Truncated => (1.0 - p) * agreement_sum,
        RboVariant::Extrapolated => {
            let x_l = overlap as f64;
            let x_s = overlap_at_s as f64;
            (1.0 - p) * (agreement_sum + tail_sum)
                + weight * ((x_l - x_s) / l as f64 + x_s / s as f64)
        }
    };
    Ok(value.clamp(0.0, 1.0))
}

/// `sum rbo_i len_i / sum len_i`; entries with zero length carry no weight.
pub fn weighted_mean_rbo(scores: &[(f64, usize)]) -> Result<f64> {
    let total: usize = scores.iter().map(|&(_, n)| n).sum();
    if total == 0 {
        return Err(Error::UndefinedAverage);
    }
    let num: f64 = scores.iter().map(|&(r, n)| r * n as f64).sum();
    Ok(num / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ext() -> RboConfig {
        RboConfig::default()
    }

    fn trunc() -> RboConfig {
        RboConfig {
            p: 0.98,
            variant: RboVariant::Truncated,
        }
    }

    #[test]
    fn identical_lists_score_one() {
        let a = ['a', 'b', 'c', 'd'];
        assert_abs_diff_eq!(rbo(&a, &a, &ext()).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn disjoint_lists_score_zero() {
        assert_eq!(rbo(&['a', 'b'], &['c', 'd', 'e'], &ext()).unwrap(), 0.0);
        assert_eq!(rbo(&['a', 'b'], &['c', 'd'], &trunc()).unwrap(), 0.0);
    }

    #[test]
    fn swapped_head_example() {
        let pred = ['a', 'b', 'c'];
        let truth = ['b', 'a', 'c'];
        // A = [0, 1, 1]
        let e = rbo(&pred, &truth, &ext()).unwrap();
        assert_abs_diff_eq!(e, 0.02 * (0.98 + 0.98 * 0.98) + 0.98f64.powi(3), epsilon = 1e-12);
        assert_abs_diff_eq!(e, 0.980000, epsilon = 5e-7);
        let t = rbo(&pred, &truth, &trunc()).unwrap();
        assert_abs_diff_eq!(t, 0.038808, epsilon = 5e-7);
    }

    #[test]
    fn empty_list_conventions() {
        let none: [char; 0] = [];
        assert_eq!(rbo(&none, &none, &ext()).unwrap(), 1.0);
        assert_eq!(rbo(&none, &['a'], &ext()).unwrap(), 0.0);
        assert_eq!(rbo(&['a'], &none, &trunc()).unwrap(), 0.0);
    }

    #[test]
    fn duplicates_and_bad_p_rejected() {
        assert!(matches!(rbo(&['a', 'a'], &['a'], &ext()), Err(Error::Validation(_))));
        let bad = RboConfig { p: 1.0, ..ext() };
        assert!(matches!(rbo(&['a'], &['a'], &bad), Err(Error::Config(_))));
    }

    #[test]
    fn uneven_prefix_extrapolates() {
        // a prefix of the truth: agreement 1 at every visible depth
        let truth: Vec<u32> = (0..10).collect();
        let r = rbo(&truth[..4], &truth, &ext()).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn weighted_mean_examples() {
        assert_abs_diff_eq!(weighted_mean_rbo(&[(0.5, 10), (1.0, 10)]).unwrap(), 0.75);
        assert_abs_diff_eq!(weighted_mean_rbo(&[(0.2, 20), (0.8, 0)]).unwrap(), 0.2);
        assert_abs_diff_eq!(
            weighted_mean_rbo(&[(0.3, 5), (0.6, 15)]).unwrap(),
            (0.3 * 5.0 + 0.6 * 15.0) / 20.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(weighted_mean_rbo(&[(0.3, 5), (0.6, 15)]).unwrap(), 0.525, epsilon = 1e-12);
        assert_eq!(weighted_mean_rbo(&[(0.4, 0)]), Err(Error::UndefinedAverage));
    }
}
