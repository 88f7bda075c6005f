//! Benjamini-Hochberg false discovery rate control.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which hypotheses make up the tested family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FdrFamily {
    /// Only pairs with at least one observed motif.
    #[default]
    Nonzero,
    /// Every ordered (directed) or unordered (undirected) pair of nodes.
    AllPairs,
}

impl std::str::FromStr for FdrFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonzero" => Ok(Self::Nonzero),
            "all-pairs" | "all_pairs" => Ok(Self::AllPairs),
            other => Err(Error::InvalidInput(format!("unknown fdr family {other:?}"))),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Number of hypotheses rejected by the step-up rule: the largest `k` with
/// `p_(k) <= k α / m`. `family_size` may exceed `p_values.len()`; the
/// missing hypotheses are taken to have p-value 1.
pub fn bh_rejection_count(p_values: &[f64], alpha: f64, family_size: usize) -> Result<usize> {
    check_alpha(alpha)?;
    if p_values.is_empty() {
        return Err(Error::InvalidInput("empty hypothesis family".into()));
    }
    if family_size < p_values.len() {
        return Err(Error::InvalidInput(format!(
            "family size {family_size} smaller than the {} tested hypotheses",
            p_values.len()
        )));
    }
    let mut sorted: Vec<f64> = p_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = family_size as f64;
    let count = sorted
        .iter()
        .enumerate()
        .rev()
        .find(|(k, &p)| p <= (*k as f64 + 1.0) * alpha / m)
        .map_or(0, |(k, _)| k + 1);
    Ok(count)
}

/// BH threshold: the largest p-value that is rejected, if any.
pub fn bh_threshold(p_values: &[f64], alpha: f64, family_size: usize) -> Result<Option<f64>> {
    let count = bh_rejection_count(p_values, alpha, family_size)?;
    if count == 0 {
        return Ok(None);
    }
    let mut sorted: Vec<f64> = p_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Some(sorted[count - 1]))
}

/// Rejection mask aligned with `p_values`.
pub fn bh_reject_mask(p_values: &[f64], alpha: f64, family_size: usize) -> Result<Vec<bool>> {
    Ok(match bh_threshold(p_values, alpha, family_size)? {
        Some(t) => p_values.iter().map(|&p| p <= t).collect(),
        None => vec![false; p_values.len()],
    })
}

/// Returns the keys of the hypotheses rejected at level `alpha`, in input
/// order; the family is exactly the given list.
pub fn fdr_select<K: Clone>(p_values: &[(K, f64)], alpha: f64) -> Result<Vec<K>> {
    let ps: Vec<f64> = p_values.iter().map(|(_, p)| *p).collect();
    let mask = bh_reject_mask(&ps, alpha, ps.len())?;
    Ok(p_values
        .iter()
        .zip(mask)
        .filter(|(_, r)| *r)
        .map(|((k, _), _)| k.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_up_example() {
        let ps = [("a", 0.001), ("b", 0.02), ("c", 0.2), ("d", 0.9)];
        assert_eq!(fdr_select(&ps, 0.05).unwrap(), vec!["a", "b"]);
    }

    #[test]
    fn nothing_significant() {
        let ps = [(1, 1.0), (2, 1.0), (3, 1.0)];
        assert!(fdr_select(&ps, 0.05).unwrap().is_empty());
    }

    #[test]
    fn single_hypothesis() {
        assert_eq!(fdr_select(&[(7, 0.01)], 0.05).unwrap(), vec![7]);
        assert!(fdr_select(&[(7, 0.06)], 0.05).unwrap().is_empty());
    }

    #[test]
    fn step_up_rescues_earlier_failures() {
        // p_(1) = 0.03 > 0.0125 but p_(4) = 0.04 <= 0.05 rejects all four
        let ps = [0.03, 0.035, 0.036, 0.04];
        assert_eq!(bh_rejection_count(&ps, 0.05, 4).unwrap(), 4);
    }

    #[test]
    fn larger_family_is_stricter() {
        let ps = [0.001, 0.02];
        assert_eq!(bh_rejection_count(&ps, 0.05, 2).unwrap(), 2);
        assert_eq!(bh_rejection_count(&ps, 0.05, 40).unwrap(), 1);
        assert!(bh_rejection_count(&ps, 0.05, 1).is_err());
    }

    #[test]
    fn errors() {
        let empty: [(u8, f64); 0] = [];
        assert!(fdr_select(&empty, 0.05).is_err());
        assert!(fdr_select(&[(1, 0.01)], 0.0).is_err());
        assert!(fdr_select(&[(1, 0.01)], 1.0).is_err());
    }
}
