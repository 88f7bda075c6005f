//! Maximum-entropy null models for bipartite graphs.
//!
//! The BiCM gives every pair `(i, α)` an independent link probability
//! `p = x_i y_α / (1 + x_i y_α)` whose multipliers make the expected degree
//! of every node equal to the observed one. The Chung-Lu variant replaces
//! this with `k_i k_α / m`, capped at 1, which is accurate on sparse graphs.
//!
//! The BiDCM treats the user–post graph as two independent blocks. With a
//! single author per post the authorship block reduces to `k_out_i / N_Γ`;
//! the retweet block is an ordinary BiCM (or Chung-Lu) fit.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{connectance, BipartiteGraph, DirectedBipartiteGraph};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_SPARSE_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    Exact,
    ChungLu,
}

/// Model choice as exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullModelChoice {
    Exact,
    ChungLu,
    #[default]
    Auto,
}

impl std::str::FromStr for NullModelChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "chung-lu" | "chung_lu" => Ok(Self::ChungLu),
            "auto" => Ok(Self::Auto),
            other => Err(Error::InvalidInput(format!("unknown null model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on the max absolute degree residual.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub newton_steps: usize,
    pub max_residual: f64,
    /// Chung-Lu pairs whose raw value exceeded 1.
    pub capped_pairs: u64,
    pub connectance: f64,
}

/// Fitted BiCM. In Chung-Lu mode `x_i = k_i / √m` and `y_α = k_α / √m`, so
/// the link probability is `min(1, x_i y_α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicmParams {
    pub mode: FitMode,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub diagnostics: FitDiagnostics,
}

#[inline]
fn exact_probability(x: f64, y: f64) -> f64 {
    let xy = x * y;
    if xy.is_infinite() {
        1.0
    } else {
        xy / (1.0 + xy)
    }
}

impl BicmParams {
    pub fn n_left(&self) -> usize {
        self.x.len()
    }

    pub fn n_right(&self) -> usize {
        self.y.len()
    }

    /// Link probability from raw multipliers, without bounds checks.
    #[inline]
    pub fn probability_of(&self, x: f64, y: f64) -> f64 {
        match self.mode {
            FitMode::Exact => exact_probability(x, y),
            FitMode::ChungLu => (x * y).min(1.0),
        }
    }

    #[inline]
    pub fn p(&self, i: usize, alpha: usize) -> f64 {
        self.probability_of(self.x[i], self.y[alpha])
    }

    pub fn link_probability(&self, i: usize, alpha: usize) -> Result<f64> {
        if i >= self.x.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.x.len(),
            });
        }
        if alpha >= self.y.len() {
            return Err(Error::IndexOutOfRange {
                index: alpha,
                len: self.y.len(),
            });
        }
        Ok(self.p(i, alpha))
    }

    pub fn expected_left_degree(&self, i: usize) -> f64 {
        self.y
            .iter()
            .map(|&y| self.probability_of(self.x[i], y))
            .sum()
    }

    pub fn expected_right_degree(&self, alpha: usize) -> f64 {
        self.x
            .iter()
            .map(|&x| self.probability_of(x, self.y[alpha]))
            .sum()
    }

    /// Max absolute difference between expected and observed degrees over
    /// both layers.
    pub fn max_degree_residual(&self, g: &BipartiteGraph) -> f64 {
        let kl = g.left_degrees();
        let kr = g.right_degrees();
        let left = (0..self.n_left())
            .map(|i| (self.expected_left_degree(i) - kl[i] as f64).abs())
            .fold(0.0, f64::max);
        let right = (0..self.n_right())
            .map(|a| (self.expected_right_degree(a) - kr[a] as f64).abs())
            .fold(0.0, f64::max);
        left.max(right)
    }

    /// Log-likelihood of `g` under these probabilities.
    pub fn log_likelihood(&self, g: &BipartiteGraph) -> f64 {
        let mut ll = 0.0;
        for i in 0..self.n_left() {
            let nbrs = g.left_neighbors(i);
            let mut next = nbrs.iter().peekable();
            for a in 0..self.n_right() {
                let p = self.p(i, a);
                if next.peek().is_some_and(|&&n| n as usize == a) {
                    next.next();
                    ll += p.ln();
                } else {
                    ll += (1.0 - p).ln();
                }
            }
        }
        ll
    }

    /// Draws one graph from the ensemble, keeping `g`'s node ids.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<(u32, u32)> {
        let mut edges = Vec::new();
        for i in 0..self.n_left() {
            if self.x[i] == 0.0 {
                continue;
            }
            for a in 0..self.n_right() {
                if rng.random::<f64>() < self.p(i, a) {
                    edges.push((i as u32, a as u32));
                }
            }
        }
        edges
    }

    /// Distinct Γ multipliers with their multiplicities, zero multipliers
    /// skipped. Nodes with equal degree share a multiplier, so this is the
    /// compressed form used by motif expectations.
    pub fn right_classes(&self) -> Vec<(f64, usize)> {
        classes_of(&self.y)
    }

    /// Same as [`right_classes`](Self::right_classes), with the index of
    /// every Γ node's class (`None` for zero multipliers).
    pub fn right_class_index(&self) -> (Vec<(f64, usize)>, Vec<Option<u32>>) {
        let classes = self.right_classes();
        let lookup: BTreeMap<u64, u32> = classes
            .iter()
            .enumerate()
            .map(|(k, (y, _))| (y.to_bits(), k as u32))
            .collect();
        let index = self
            .y
            .iter()
            .map(|y| lookup.get(&y.to_bits()).copied())
            .collect();
        (classes, index)
    }
}

fn classes_of(values: &[f64]) -> Vec<(f64, usize)> {
    let mut map: BTreeMap<u64, usize> = BTreeMap::new();
    for &v in values {
        if v > 0.0 {
            *map.entry(v.to_bits()).or_default() += 1;
        }
    }
    map.into_iter()
        .map(|(b, c)| (f64::from_bits(b), c))
        .collect()
}

/// Distinct nonzero degrees with multiplicity, ascending.
fn degree_classes(degrees: &[usize]) -> Vec<(usize, usize)> {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    for &d in degrees {
        if d > 0 {
            *map.entry(d).or_default() += 1;
        }
    }
    map.into_iter().collect()
}

/// Reduced multiplier system: one unknown per distinct nonzero degree on
/// each layer, in log space.
struct ClassSystem {
    left: Vec<(usize, usize)>,
    right: Vec<(usize, usize)>,
}

impl ClassSystem {
    fn n(&self) -> usize {
        self.left.len() + self.right.len()
    }

    #[inline]
    fn prob(theta: f64, eta: f64) -> f64 {
        let s = theta + eta;
        if s >= 0.0 {
            1.0 / (1.0 + (-s).exp())
        } else {
            let e = s.exp();
            e / (1.0 + e)
        }
    }

    /// Residual `⟨k⟩ − k*` per class; left classes first.
    fn residual(&self, theta: &[f64], eta: &[f64]) -> Vec<f64> {
        let mut r = Vec::with_capacity(self.n());
        for (d, &(deg, _)) in self.left.iter().enumerate() {
            let s: f64 = self
                .right
                .iter()
                .zip(eta)
                .map(|(&(_, c), &e)| c as f64 * Self::prob(theta[d], e))
                .sum();
            r.push(s - deg as f64);
        }
        for (e, &(deg, _)) in self.right.iter().enumerate() {
            let s: f64 = self
                .left
                .iter()
                .zip(theta)
                .map(|(&(_, c), &t)| c as f64 * Self::prob(t, eta[e]))
                .sum();
            r.push(s - deg as f64);
        }
        r
    }

    /// One sweep of `x ← k / Σ c y/(1+xy)` on the left classes followed by
    /// the symmetric update on the right classes.
    fn fixed_point_sweep(&self, theta: &mut [f64], eta: &mut [f64]) {
        for (d, &(deg, _)) in self.left.iter().enumerate() {
            let x = theta[d].exp();
            let denom: f64 = self
                .right
                .iter()
                .zip(eta.iter())
                .map(|(&(_, c), &e)| {
                    let y = e.exp();
                    c as f64 * y / (1.0 + x * y)
                })
                .sum();
            theta[d] = (deg as f64).ln() - denom.ln();
        }
        for (e, &(deg, _)) in self.right.iter().enumerate() {
            let y = eta[e].exp();
            let denom: f64 = self
                .left
                .iter()
                .zip(theta.iter())
                .map(|(&(_, c), &t)| {
                    let x = t.exp();
                    c as f64 * x / (1.0 + x * y)
                })
                .sum();
            eta[e] = (deg as f64).ln() - denom.ln();
        }
    }

    /// Newton direction in log space for the residual system. The system has
    /// a one-dimensional gauge freedom (x·c, y/c); a tiny diagonal shift
    /// makes the matrix invertible without affecting the residual.
    fn newton_direction(&self, theta: &[f64], eta: &[f64], r: &[f64]) -> Option<Vec<f64>> {
        let nl = self.left.len();
        let n = self.n();
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for (d, &(_, cd)) in self.left.iter().enumerate() {
            for (e, &(_, ce)) in self.right.iter().enumerate() {
                let p = Self::prob(theta[d], eta[e]);
                let w = p * (1.0 - p);
                jac[(d, d)] += ce as f64 * w;
                jac[(d, nl + e)] = ce as f64 * w;
                jac[(nl + e, d)] = cd as f64 * w;
                jac[(nl + e, nl + e)] += cd as f64 * w;
            }
        }
        let scale = (0..n).map(|k| jac[(k, k)]).fold(0.0, f64::max);
        let shift = 1e-12 * (1.0 + scale);
        for k in 0..n {
            jac[(k, k)] += shift;
        }
        let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
        let step = jac.lu().solve(&rhs)?;
        if step.iter().all(|v| v.is_finite()) {
            Some(step.iter().copied().collect())
        } else {
            None
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Checks that no node is linked to every active node of the other layer;
/// such a node has an infinite multiplier.
fn check_degenerate(kl: &[usize], kr: &[usize]) -> Result<()> {
    let active_right = kr.iter().filter(|&&k| k > 0).count();
    let active_left = kl.iter().filter(|&&k| k > 0).count();
    if let Some((i, &k)) = kl
        .iter()
        .enumerate()
        .find(|(_, &k)| k > 0 && k >= active_right)
    {
        return Err(Error::DegenerateDegree {
            layer: "left",
            index: i,
            degree: k,
        });
    }
    if let Some((a, &k)) = kr
        .iter()
        .enumerate()
        .find(|(_, &k)| k > 0 && k >= active_left)
    {
        return Err(Error::DegenerateDegree {
            layer: "right",
            index: a,
            degree: k,
        });
    }
    Ok(())
}

/// Fits the exact BiCM by maximum likelihood.
///
/// Fixed-point sweeps run first; once the residual is small or stops
/// shrinking the solver switches to damped Newton steps with a backtracking
/// line search on the residual.
pub fn fit_bicm(g: &BipartiteGraph, opts: SolverOptions) -> Result<BicmParams> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let kl = g.left_degrees();
    let kr = g.right_degrees();
    let m = g.n_edges();
    if m == 0 {
        return Err(Error::EmptyGraph);
    }
    check_degenerate(kl.as_slice(), kr.as_slice())?;

    let sys = ClassSystem {
        left: degree_classes(kl.as_slice()),
        right: degree_classes(kr.as_slice()),
    };
    let sqrt_m = (m as f64).sqrt();
    let mut theta: Vec<f64> = sys
        .left
        .iter()
        .map(|&(d, _)| (d as f64 / sqrt_m).ln())
        .collect();
    let mut eta: Vec<f64> = sys
        .right
        .iter()
        .map(|&(d, _)| (d as f64 / sqrt_m).ln())
        .collect();

    let nl = sys.left.len();
    let mut r = sys.residual(&theta, &eta);
    let mut res = max_abs(&r);
    let mut history: Vec<f64> = Vec::new();
    let mut newton = false;
    let mut newton_steps = 0;
    let mut iterations = 0;

    while res > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NotConverged {
                iterations,
                residual: res,
            });
        }
        iterations += 1;

        if !newton {
            history.push(res);
            let stalled = history.len() > 20 && res > 0.5 * history[history.len() - 21];
            if res < 1e-3 || stalled {
                newton = true;
            }
        }

        let mut accepted = false;
        if newton {
            if let Some(step) = sys.newton_direction(&theta, &eta, &r) {
                let mut t = 1.0;
                for _ in 0..30 {
                    let cand_theta: Vec<f64> =
                        theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
                    let cand_eta: Vec<f64> = eta
                        .iter()
                        .zip(&step[nl..])
                        .map(|(a, s)| a + t * s)
                        .collect();
                    let cand_r = sys.residual(&cand_theta, &cand_eta);
                    let cand_res = max_abs(&cand_r);
                    if cand_res.is_finite() && cand_res < res {
                        theta = cand_theta;
                        eta = cand_eta;
                        r = cand_r;
                        res = cand_res;
                        accepted = true;
                        newton_steps += 1;
                        break;
                    }
                    t *= 0.5;
                }
            }
        }
        if !accepted {
            sys.fixed_point_sweep(&mut theta, &mut eta);
            r = sys.residual(&theta, &eta);
            let new_res = max_abs(&r);
            if !new_res.is_finite() {
                return Err(Error::NotConverged {
                    iterations,
                    residual: res,
                });
            }
            res = new_res;
        }
    }

    let left_mult: BTreeMap<usize, f64> = sys
        .left
        .iter()
        .zip(&theta)
        .map(|(&(d, _), t)| (d, t.exp()))
        .collect();
    let right_mult: BTreeMap<usize, f64> = sys
        .right
        .iter()
        .zip(&eta)
        .map(|(&(d, _), e)| (d, e.exp()))
        .collect();
    let x = kl
        .as_slice()
        .iter()
        .map(|d| left_mult.get(d).copied().unwrap_or(0.0))
        .collect();
    let y = kr
        .as_slice()
        .iter()
        .map(|d| right_mult.get(d).copied().unwrap_or(0.0))
        .collect();
    let params = BicmParams {
        mode: FitMode::Exact,
        x,
        y,
        diagnostics: FitDiagnostics {
            iterations,
            newton_steps,
            max_residual: res,
            capped_pairs: 0,
            connectance: connectance(g),
        },
    };
    log::debug!(
        "bicm fit: {} iterations ({} newton), residual {:e}",
        iterations,
        newton_steps,
        res
    );
    Ok(params)
}

/// Chung-Lu approximation `p = min(1, k_i k_α / m)`.
///
/// Warns when the graph is denser than `sparse_threshold` or when some pairs
/// had to be capped.
pub fn fit_chung_lu(g: &BipartiteGraph, sparse_threshold: f64) -> Result<BicmParams> {
    let m = g.n_edges();
    if m == 0 {
        return Err(Error::EmptyGraph);
    }
    let rho = connectance(g);
    if rho >= sparse_threshold {
        log::warn!(
            "chung-lu approximation on a graph with connectance {rho:.3e} (threshold {sparse_threshold:.1e})"
        );
    }
    let kl = g.left_degrees();
    let kr = g.right_degrees();
    let sqrt_m = (m as f64).sqrt();

    let mut sorted_right: Vec<usize> = kr.as_slice().to_vec();
    sorted_right.sort_unstable();
    let capped: u64 = kl
        .as_slice()
        .iter()
        .filter(|&&k| k > 0)
        .map(|&k| {
            // pairs with k * k_α > m
            let limit = m / k;
            (sorted_right.len() - sorted_right.partition_point(|&ka| ka <= limit)) as u64
        })
        .sum();
    if capped > 0 {
        log::warn!("chung-lu: {capped} pair probabilities exceeded 1 and were capped");
    }

    let params = BicmParams {
        mode: FitMode::ChungLu,
        x: kl.as_slice().iter().map(|&k| k as f64 / sqrt_m).collect(),
        y: kr.as_slice().iter().map(|&k| k as f64 / sqrt_m).collect(),
        diagnostics: FitDiagnostics {
            iterations: 0,
            newton_steps: 0,
            max_residual: 0.0,
            capped_pairs: capped,
            connectance: rho,
        },
    };
    Ok(params)
}

/// Resolves `Auto` by connectance: below `sparse_threshold` the Chung-Lu
/// approximation is used, otherwise the exact fit.
pub fn fit_undirected(
    g: &BipartiteGraph,
    choice: NullModelChoice,
    sparse_threshold: f64,
    opts: SolverOptions,
) -> Result<BicmParams> {
    match choice {
        NullModelChoice::Exact => fit_bicm(g, opts),
        NullModelChoice::ChungLu => fit_chung_lu(g, sparse_threshold),
        NullModelChoice::Auto => {
            if connectance(g) < sparse_threshold {
                fit_chung_lu(g, sparse_threshold)
            } else {
                match fit_bicm(g, opts) {
                    Err(Error::DegenerateDegree {
                        layer,
                        index,
                        degree,
                    }) => {
                        log::warn!(
                            "exact fit impossible ({layer} node {index} has full degree {degree}); using chung-lu"
                        );
                        fit_chung_lu(g, sparse_threshold)
                    }
                    other => other,
                }
            }
        }
    }
}

/// Authorship block of the BiDCM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AuthorshipModel {
    /// `q_iα = k_out_i / N_Γ`.
    ClosedForm,
    /// General multiplier fit over users × authored posts.
    Fitted { params: BicmParams },
}

/// Fitted BiDCM over users and authored posts. Post indices refer to the
/// dense authored-post numbering of
/// [`DirectedBipartiteGraph::authored_post_index`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidcmParams {
    pub n_posts: usize,
    /// Posts written by each user.
    pub out_degrees: Vec<usize>,
    /// Authored posts retweeted by each user.
    pub in_degrees: Vec<usize>,
    pub authorship: AuthorshipModel,
    /// Absent when the graph has no retweet links.
    pub retweet: Option<BicmParams>,
}

impl BidcmParams {
    pub fn n_users(&self) -> usize {
        self.out_degrees.len()
    }

    /// Probability that user `i` wrote authored post `alpha`.
    pub fn authorship_probability(&self, i: usize, alpha: usize) -> Result<f64> {
        if i >= self.n_users() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n_users(),
            });
        }
        if alpha >= self.n_posts {
            return Err(Error::IndexOutOfRange {
                index: alpha,
                len: self.n_posts,
            });
        }
        Ok(match &self.authorship {
            AuthorshipModel::ClosedForm => self.out_degrees[i] as f64 / self.n_posts as f64,
            AuthorshipModel::Fitted { params } => params.p(i, alpha),
        })
    }

    /// Probability that user `j` retweeted authored post `alpha`.
    pub fn retweet_probability(&self, j: usize, alpha: usize) -> Result<f64> {
        match &self.retweet {
            Some(params) => params.link_probability(j, alpha),
            None if j < self.n_users() && alpha < self.n_posts => Ok(0.0),
            None => Err(Error::IndexOutOfRange {
                index: j.max(alpha),
                len: self.n_users().min(self.n_posts),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidcmOptions {
    pub retweet_model: NullModelChoice,
    pub sparse_threshold: f64,
    pub solver: SolverOptions,
}

impl Default for BidcmOptions {
    fn default() -> Self {
        Self {
            retweet_model: NullModelChoice::Auto,
            sparse_threshold: DEFAULT_SPARSE_THRESHOLD,
            solver: SolverOptions::default(),
        }
    }
}

/// Fits the BiDCM using the closed form for the authorship block.
pub fn fit_bidcm(g: &DirectedBipartiteGraph, opts: BidcmOptions) -> Result<BidcmParams> {
    let n_posts = g.n_authored_posts();
    if n_posts == 0 {
        return Err(Error::InvalidInput("no authored posts (N_Γ = 0)".into()));
    }
    let retweet = if g.in_degrees().total() == 0 {
        None
    } else {
        let block = g.retweet_block()?;
        Some(fit_undirected(
            &block,
            opts.retweet_model,
            opts.sparse_threshold,
            opts.solver,
        )?)
    };
    Ok(BidcmParams {
        n_posts,
        out_degrees: g.out_degrees().0,
        in_degrees: g.in_degrees().0,
        authorship: AuthorshipModel::ClosedForm,
        retweet,
    })
}

/// Fits the BiDCM with the general multiplier system on the authorship
/// block as well. Used to check the closed form.
pub fn fit_bidcm_general(g: &DirectedBipartiteGraph, opts: BidcmOptions) -> Result<BidcmParams> {
    let mut params = fit_bidcm(g, opts)?;
    let block = g.authorship_block()?;
    params.authorship = AuthorshipModel::Fitted {
        params: fit_bicm(&block, opts.solver)?,
    };
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LinkKind;

    #[test]
    fn biregular_graph_gives_half() {
        // 4x4, every node degree 2
        let edges = [
            (0, 0),
            (0, 1),
            (1, 1),
            (1, 2),
            (2, 2),
            (2, 3),
            (3, 3),
            (3, 0),
        ];
        let g = BipartiteGraph::from_index_pairs(4, 4, edges).unwrap();
        let params = fit_bicm(&g, SolverOptions::default()).unwrap();
        for i in 0..4 {
            for a in 0..4 {
                assert!((params.p(i, a) - 0.5).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_degree_node_has_zero_multiplier() {
        let g = BipartiteGraph::from_index_pairs(
            4,
            4,
            [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 3)],
        )
        .unwrap();
        let params = fit_bicm(&g, SolverOptions::default()).unwrap();
        assert_eq!(params.x[3], 0.0);
        for a in 0..4 {
            assert_eq!(params.p(3, a), 0.0);
        }
        assert!(params.max_degree_residual(&g) <= 1e-8);
    }

    #[test]
    fn full_degree_is_degenerate() {
        // 2x2 with left degrees [2, 1]: node 0 links every right node
        let g = BipartiteGraph::from_index_pairs(2, 2, [(0, 0), (0, 1), (1, 0)]).unwrap();
        let err = fit_bicm(&g, SolverOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            Error::DegenerateDegree {
                layer: "left",
                index: 0,
                ..
            }
        ));
    }

    #[test]
    fn link_probability_formulas() {
        let params = BicmParams {
            mode: FitMode::Exact,
            x: vec![1.0, 0.0],
            y: vec![1.0],
            diagnostics: FitDiagnostics::default(),
        };
        assert_eq!(params.link_probability(0, 0).unwrap(), 0.5);
        assert_eq!(params.link_probability(1, 0).unwrap(), 0.0);
        assert!(params.link_probability(2, 0).is_err());
        assert!(params.link_probability(0, 1).is_err());

        // chung-lu with k_i = 3, k_α = 2, m = 12
        let s = 12f64.sqrt();
        let cl = BicmParams {
            mode: FitMode::ChungLu,
            x: vec![3.0 / s],
            y: vec![2.0 / s],
            diagnostics: FitDiagnostics::default(),
        };
        assert!((cl.link_probability(0, 0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn chung_lu_rows_sum_to_degree() {
        let g = BipartiteGraph::from_index_pairs(
            4,
            6,
            [(0, 0), (0, 1), (1, 2), (2, 3), (2, 4), (3, 5), (1, 5)],
        )
        .unwrap();
        let params = fit_chung_lu(&g, 1.0).unwrap();
        assert_eq!(params.diagnostics.capped_pairs, 0);
        let kl = g.left_degrees();
        for i in 0..4 {
            assert!((params.expected_left_degree(i) - kl[i] as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn chung_lu_caps_hub_pairs() {
        // hub with degree 4 meets a Γ node of degree 3, m = 6: 12/6 = 2
        let g = BipartiteGraph::from_index_pairs(
            3,
            4,
            [(0, 0), (0, 1), (0, 2), (0, 3), (1, 0), (2, 0)],
        )
        .unwrap();
        let params = fit_chung_lu(&g, 1.0).unwrap();
        assert!(params.diagnostics.capped_pairs >= 1);
        assert_eq!(params.p(0, 0), 1.0);
        for i in 0..3 {
            for a in 0..4 {
                assert!((0.0..=1.0).contains(&params.p(i, a)));
            }
        }
    }

    #[test]
    fn bidcm_closed_form() {
        use LinkKind::*;
        let mut links = Vec::new();
        for p in 0..3 {
            links.push(("a".to_string(), format!("p{p}"), Author));
        }
        for p in 3..6 {
            links.push(("b".to_string(), format!("p{p}"), Author));
        }
        links.push(("c".to_string(), "p0".to_string(), Retweet));
        links.push(("c".to_string(), "p4".to_string(), Retweet));
        let g = DirectedBipartiteGraph::from_links(&links).unwrap();
        let params = fit_bidcm(&g, BidcmOptions::default()).unwrap();
        assert_eq!(params.n_posts, 6);
        for a in 0..6 {
            assert_eq!(params.authorship_probability(0, a).unwrap(), 0.5);
            assert_eq!(params.authorship_probability(2, a).unwrap(), 0.0);
        }
        for i in 0..3 {
            let s: f64 = (0..6)
                .map(|a| params.authorship_probability(i, a).unwrap())
                .sum();
            assert!((s - params.out_degrees[i] as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn params_roundtrip_json() {
        let g = BipartiteGraph::from_index_pairs(3, 3, [(0, 0), (1, 1), (2, 2), (0, 1)]).unwrap();
        let params = fit_chung_lu(&g, 1.0).unwrap();
        let json = serde_json::to_string(&params).unwrap();
        assert!(json.contains("\"mode\":\"chung_lu\""));
        let back: BicmParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, params);
    }
}
