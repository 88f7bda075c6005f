//! Upper-tail p-values of motif counts.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionMode {
    Poisson,
    PoissonBinomial,
}

/// Null distribution of a motif count.
#[derive(Debug, Clone, Copy)]
pub enum MotifDistribution<'a> {
    /// Poisson with the given mean.
    Poisson { mean: f64 },
    /// Sum of independent Bernoulli variables.
    PoissonBinomial { probabilities: &'a [f64] },
}

impl MotifDistribution<'_> {
    pub fn mode(&self) -> DistributionMode {
        match self {
            Self::Poisson { .. } => DistributionMode::Poisson,
            Self::PoissonBinomial { .. } => DistributionMode::PoissonBinomial,
        }
    }
}

/// `P(X >= observed)`, floored at the smallest positive normal `f64` so that
/// p-values stay in `(0, 1]`.
pub fn motif_p_value(observed: i64, dist: MotifDistribution<'_>) -> Result<f64> {
    if observed < 0 {
        return Err(Error::InvalidInput(format!(
            "observed count must be non-negative, got {observed}"
        )));
    }
    let k = observed as u64;
    let p = match dist {
        MotifDistribution::Poisson { mean } => {
            if mean.is_nan() || mean < 0.0 || !mean.is_finite() {
                return Err(Error::InvalidInput(format!("invalid poisson mean {mean}")));
            }
            poisson_upper_tail(k, mean)
        }
        MotifDistribution::PoissonBinomial { probabilities } => {
            if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidInput(format!(
                    "probability {p} outside [0, 1]"
                )));
            }
            poisson_binomial_upper_tail(k, probabilities)
        }
    };
    Ok(p.clamp(f64::MIN_POSITIVE, 1.0))
}

/// `P(X >= k)` for `X ~ Poisson(mean)`.
///
/// Below the mean the complement of the lower sum is used; above it the
/// tail series is summed directly, starting from the log of its first term,
/// which keeps small tails accurate.
pub fn poisson_upper_tail(k: u64, mean: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if mean == 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    if kf <= mean {
        let mut term = (-mean).exp();
        let mut lower = term;
        for n in 1..k {
            term *= mean / n as f64;
            lower += term;
        }
        return (1.0 - lower).max(0.0);
    }
    let log_first = -mean + kf * mean.ln() - ln_gamma(kf + 1.0);
    let first = log_first.exp();
    if first == 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = kf;
    loop {
        n += 1.0;
        term *= mean / n;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    (first * sum).min(1.0)
}

/// `P(X >= k)` for a Poisson-binomial variable, by dynamic programming over
/// the states `0..k` with an absorbing state for `>= k`. The tail is read
/// off the absorbing state, so no subtraction from 1 is involved.
pub fn poisson_binomial_upper_tail(k: u64, probabilities: &[f64]) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k as usize > probabilities.len() {
        return 0.0;
    }
    let k = k as usize;
    let mut dist = vec![0.0f64; k];
    dist[0] = 1.0;
    let mut absorbed = 0.0;
    for &p in probabilities {
        if p == 0.0 {
            continue;
        }
        absorbed += dist[k - 1] * p;
        for s in (1..k).rev() {
            dist[s] = dist[s] * (1.0 - p) + dist[s - 1] * p;
        }
        dist[0] *= 1.0 - p;
    }
    absorbed.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_observed_is_one() {
        for mean in [0.0, 0.3, 5.0] {
            assert_eq!(
                motif_p_value(0, MotifDistribution::Poisson { mean }).unwrap(),
                1.0
            );
        }
        let probs = [0.2, 0.9];
        let d = MotifDistribution::PoissonBinomial {
            probabilities: &probs,
        };
        assert_eq!(motif_p_value(0, d).unwrap(), 1.0);
    }

    #[test]
    fn poisson_tail_unit_mean() {
        // 1 - e^-1 (1 + 1 + 1/2)
        let expected = 1.0 - (-1.0f64).exp() * 2.5;
        let got = motif_p_value(3, MotifDistribution::Poisson { mean: 1.0 }).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!((got - 0.080301).abs() < 1e-6);
    }

    #[test]
    fn two_fair_coins() {
        let probs = [0.5, 0.5];
        let d = MotifDistribution::PoissonBinomial {
            probabilities: &probs,
        };
        assert_eq!(motif_p_value(2, d).unwrap(), 0.25);
        assert_eq!(motif_p_value(1, d).unwrap(), 0.75);
    }

    #[test]
    fn negative_observed_rejected() {
        assert!(motif_p_value(-1, MotifDistribution::Poisson { mean: 1.0 }).is_err());
    }

    #[test]
    fn impossible_count_floors_at_min_positive() {
        let probs = [0.5];
        let d = MotifDistribution::PoissonBinomial {
            probabilities: &probs,
        };
        assert_eq!(motif_p_value(2, d).unwrap(), f64::MIN_POSITIVE);
    }

    #[test]
    fn small_tail_keeps_relative_accuracy() {
        // P(X >= 10), mean 0.01: dominated by the first term
        let first = (-0.01f64).exp() * 0.01f64.powi(10) / 3_628_800.0;
        let got = poisson_upper_tail(10, 0.01);
        assert!(((got - first) / first).abs() < 1e-3);
    }
}
