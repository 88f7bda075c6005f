//! Hub and authority scores by power iteration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Unit-norm hub and authority vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HubScores {
    pub hub: Vec<f64>,
    pub authority: Vec<f64>,
    pub iterations: usize,
}

fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

impl HubScores {
    /// Nodes by decreasing hub score (ties by index).
    pub fn hub_ranking(&self) -> Vec<usize> {
        ranking(&self.hub)
    }

    pub fn authority_ranking(&self) -> Vec<usize> {
        ranking(&self.authority)
    }
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

/// HITS on a weighted digraph with `n` nodes. Iterates `a = Aᵀh`,
/// `h = A a` with unit Euclidean normalisation until both vectors move by at
/// most `tol` in max norm.
pub fn hits_weighted(
    n: usize,
    edges: &[(usize, usize, f64)],
    tol: f64,
    max_iter: usize,
) -> Result<HubScores> {
    if edges.is_empty() {
        return Err(Error::InvalidInput("hits needs at least one edge".into()));
    }
    if let Some(&(s, t, _)) = edges.iter().find(|(s, t, _)| *s >= n || *t >= n) {
        return Err(Error::IndexOutOfRange {
            index: s.max(t),
            len: n,
        });
    }
    if let Some(&(_, _, w)) = edges
        .iter()
        .find(|(_, _, w)| w.is_nan() || *w <= 0.0 || !w.is_finite())
    {
        return Err(Error::InvalidInput(format!(
            "edge weights must be positive, got {w}"
        )));
    }
    let init = 1.0 / (n as f64).sqrt();
    let mut hub = vec![init; n];
    let mut auth = vec![init; n];
    for iteration in 1..=max_iter {
        let mut new_auth = vec![0.0; n];
        for &(s, t, w) in edges {
            new_auth[t] += w * hub[s];
        }
        normalize(&mut new_auth);
        let mut new_hub = vec![0.0; n];
        for &(s, t, w) in edges {
            new_hub[s] += w * new_auth[t];
        }
        normalize(&mut new_hub);
        let delta = hub
            .iter()
            .zip(&new_hub)
            .chain(auth.iter().zip(&new_auth))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        hub = new_hub;
        auth = new_auth;
        if delta <= tol {
            return Ok(HubScores {
                hub,
                authority: auth,
                iterations: iteration,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: f64::NAN,
    })
}

/// HITS on an unweighted digraph.
pub fn hits_scores(
    n: usize,
    edges: &[(usize, usize)],
    tol: f64,
    max_iter: usize,
) -> Result<HubScores> {
    let weighted: Vec<(usize, usize, f64)> = edges.iter().map(|&(s, t)| (s, t, 1.0)).collect();
    hits_weighted(n, &weighted, tol, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge() {
        let s = hits_scores(2, &[(0, 1)], DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((s.hub[0] - 1.0).abs() < 1e-12);
        assert!((s.authority[1] - 1.0).abs() < 1e-12);
        assert_eq!(s.hub[1], 0.0);
        assert_eq!(s.authority[0], 0.0);
    }

    #[test]
    fn symmetric_sources_share_hub_score() {
        // sources 0..3 each point at every sink 3..6
        let mut edges = Vec::new();
        for s in 0..3 {
            for t in 3..6 {
                edges.push((s, t));
            }
        }
        let sc = hits_scores(6, &edges, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        for s in 1..3 {
            assert!((sc.hub[s] - sc.hub[0]).abs() < 1e-12);
        }
        for t in 4..6 {
            assert!((sc.authority[t] - sc.authority[3]).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_weights_does_not_change_scores() {
        let edges = [
            (0, 1, 1.0),
            (0, 2, 1.0),
            (3, 2, 1.0),
            (1, 2, 1.0),
            (2, 0, 1.0),
        ];
        let scaled: Vec<_> = edges.iter().map(|&(s, t, w)| (s, t, 7.5 * w)).collect();
        let a = hits_weighted(4, &edges, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let b = hits_weighted(4, &scaled, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(a.hub_ranking(), b.hub_ranking());
        for k in 0..4 {
            assert!((a.hub[k] - b.hub[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn edgeless_is_an_error() {
        assert!(hits_scores(3, &[], DEFAULT_TOL, DEFAULT_MAX_ITER).is_err());
    }
}
