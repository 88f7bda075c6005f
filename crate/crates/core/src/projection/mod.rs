//! V-motif counting and statistically validated projections.
//!
//! For undirected graphs the motif between L-nodes `i` and `j` is a shared
//! Γ-neighbour; for the user–post graph it is a post written by `i` and
//! retweeted by `j`. Every pair with at least one motif is tested against
//! the fitted null model and the FDR-surviving pairs become the edges of the
//! projection.

pub mod fdr;
pub mod pvalue;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, DirectedBipartiteGraph};
use crate::nullmodel::{AuthorshipModel, BicmParams, BidcmParams};

pub use fdr::{bh_reject_mask, bh_rejection_count, bh_threshold, fdr_select, FdrFamily};
pub use pvalue::{
    motif_p_value, poisson_binomial_upper_tail, poisson_upper_tail, DistributionMode,
    MotifDistribution,
};

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Number of Γ-nodes shared by `i` and `j`.
pub fn count_v_motifs(g: &BipartiteGraph, i: usize, j: usize) -> Result<usize> {
    check_pair(i, j, g.n_left())?;
    Ok(sorted_intersection(
        g.left_neighbors(i),
        g.left_neighbors(j),
    ))
}

/// Number of posts written by `i` and retweeted by `j`.
pub fn count_directed_v_motifs(g: &DirectedBipartiteGraph, i: usize, j: usize) -> Result<usize> {
    check_pair(i, j, g.n_users())?;
    Ok(sorted_intersection(g.authored_by(i), g.retweeted_by(j)))
}

fn check_pair(i: usize, j: usize, n: usize) -> Result<()> {
    if i == j {
        return Err(Error::InvalidInput(format!(
            "motif pair needs two distinct nodes, got {i} twice"
        )));
    }
    for k in [i, j] {
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, len: n });
        }
    }
    Ok(())
}

fn sorted_intersection(a: &[u32], b: &[u32]) -> usize {
    let (mut x, mut y, mut n) = (0, 0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                x += 1;
                y += 1;
            }
        }
    }
    n
}

/// A null model that assigns independent probabilities to the Bernoulli
/// events making up a motif count.
pub trait MotifNull: Sync {
    /// Number of L-layer nodes.
    fn n_nodes(&self) -> usize;
    /// Number of Bernoulli terms in every pair's count.
    fn n_terms(&self) -> usize;
    /// Mean of the motif count for the pair.
    fn expected(&self, i: usize, j: usize) -> f64;
    /// Per-Γ-node probability of a motif.
    fn pair_probabilities(&self, i: usize, j: usize) -> Vec<f64>;
}

/// BiCM view with Γ multipliers grouped by value.
pub struct UndirectedNull<'a> {
    params: &'a BicmParams,
    classes: Vec<(f64, usize)>,
}

impl<'a> UndirectedNull<'a> {
    pub fn new(params: &'a BicmParams) -> Self {
        Self {
            params,
            classes: params.right_classes(),
        }
    }
}

impl MotifNull for UndirectedNull<'_> {
    fn n_nodes(&self) -> usize {
        self.params.n_left()
    }

    fn n_terms(&self) -> usize {
        self.params.n_right()
    }

    fn expected(&self, i: usize, j: usize) -> f64 {
        let (xi, xj) = (self.params.x[i], self.params.x[j]);
        if xi == 0.0 || xj == 0.0 {
            return 0.0;
        }
        self.classes
            .iter()
            .map(|&(y, c)| {
                c as f64 * self.params.probability_of(xi, y) * self.params.probability_of(xj, y)
            })
            .sum()
    }

    fn pair_probabilities(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.params.n_right())
            .map(|a| self.params.p(i, a) * self.params.p(j, a))
            .collect()
    }
}

/// BiDCM view: `i` authors, `j` retweets.
pub struct DirectedNull<'a> {
    params: &'a BidcmParams,
}

impl<'a> DirectedNull<'a> {
    pub fn new(params: &'a BidcmParams) -> Self {
        Self { params }
    }
}

impl MotifNull for DirectedNull<'_> {
    fn n_nodes(&self) -> usize {
        self.params.n_users()
    }

    fn n_terms(&self) -> usize {
        self.params.n_posts
    }

    fn expected(&self, i: usize, j: usize) -> f64 {
        match &self.params.authorship {
            AuthorshipModel::ClosedForm => {
                self.params.out_degrees[i] as f64 * self.params.in_degrees[j] as f64
                    / self.params.n_posts as f64
            }
            AuthorshipModel::Fitted { .. } => self.pair_probabilities(i, j).iter().sum(),
        }
    }

    fn pair_probabilities(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.params.n_posts)
            .map(|a| {
                let q = self.params.authorship_probability(i, a).unwrap_or(0.0);
                let r = self.params.retweet_probability(j, a).unwrap_or(0.0);
                q * r
            })
            .collect()
    }
}

/// Expected number of V-motifs between `i` and `j`.
pub fn expected_v_motifs<M: MotifNull + ?Sized>(null: &M, i: usize, j: usize) -> Result<f64> {
    check_pair(i, j, null.n_nodes())?;
    Ok(null.expected(i, j))
}

/// How p-values are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PValueMode {
    #[default]
    Poisson,
    PoissonBinomial,
    /// Exact when the number of Bernoulli terms is at most `cutoff`.
    Auto {
        cutoff: usize,
    },
}

impl PValueMode {
    fn resolve(self, n_terms: usize) -> DistributionMode {
        match self {
            PValueMode::Poisson => DistributionMode::Poisson,
            PValueMode::PoissonBinomial => DistributionMode::PoissonBinomial,
            PValueMode::Auto { cutoff } if n_terms <= cutoff => DistributionMode::PoissonBinomial,
            PValueMode::Auto { .. } => DistributionMode::Poisson,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub alpha: f64,
    pub family: FdrFamily,
    pub p_value: PValueMode,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            family: FdrFamily::Nonzero,
            p_value: PValueMode::Poisson,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotifStatistics {
    pub observed: u32,
    pub expected: f64,
    pub p_value: f64,
    pub distribution: DistributionMode,
}

/// A tested pair, in layer indices of the bipartite graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestedPair {
    pub source: usize,
    pub target: usize,
    pub stats: MotifStatistics,
}

/// Validated edge; endpoints index [`ValidatedProjection::node_ids`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedEdge {
    pub source: usize,
    pub target: usize,
    pub stats: MotifStatistics,
}

/// Monopartite projection holding the FDR-surviving pairs. Nodes without any
/// validated edge are dropped and counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedProjection {
    pub node_ids: Vec<String>,
    pub edges: Vec<ValidatedEdge>,
    pub directed: bool,
    pub alpha: f64,
    pub family: FdrFamily,
    /// Number of hypotheses in the BH family.
    pub family_size: usize,
    /// Pairs with at least one observed motif.
    pub tested: usize,
    pub rejected_count: usize,
    pub p_value_mode: PValueMode,
    /// Largest rejected p-value.
    pub threshold: Option<f64>,
    pub isolated_dropped: usize,
}

impl ValidatedProjection {
    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Undirected adjacency lists (sorted, without duplicates); direction is
    /// ignored for directed projections.
    pub fn undirected_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes()];
        for e in &self.edges {
            adj[e.source].push(e.target);
            adj[e.target].push(e.source);
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.source, e.target)).collect()
    }

    /// Index of every node id.
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.node_ids.binary_search_by(|n| n.as_str().cmp(id)).ok()
    }
}

fn p_value_for<M: MotifNull + ?Sized>(
    null: &M,
    i: usize,
    j: usize,
    observed: u32,
    mode: DistributionMode,
) -> Result<MotifStatistics> {
    let expected = null.expected(i, j);
    let p_value = match mode {
        DistributionMode::Poisson => motif_p_value(
            observed as i64,
            MotifDistribution::Poisson { mean: expected },
        )?,
        DistributionMode::PoissonBinomial => {
            let probabilities = null.pair_probabilities(i, j);
            motif_p_value(
                observed as i64,
                MotifDistribution::PoissonBinomial {
                    probabilities: &probabilities,
                },
            )?
        }
    };
    Ok(MotifStatistics {
        observed,
        expected,
        p_value,
        distribution: mode,
    })
}

/// Observed undirected motif counts for all pairs `i < j` with at least one
/// shared neighbour, sorted by pair.
pub fn nonzero_v_motifs(g: &BipartiteGraph) -> Vec<(usize, usize, u32)> {
    let n = g.n_left();
    (0..n)
        .into_par_iter()
        .map_init(
            || vec![0u32; n],
            |counts, i| {
                let mut touched = Vec::new();
                for &a in g.left_neighbors(i) {
                    for &j in g.right_neighbors(a as usize) {
                        let j = j as usize;
                        if j > i {
                            if counts[j] == 0 {
                                touched.push(j);
                            }
                            counts[j] += 1;
                        }
                    }
                }
                touched.sort_unstable();
                touched
                    .into_iter()
                    .map(|j| {
                        let c = std::mem::take(&mut counts[j]);
                        (i, j, c)
                    })
                    .collect::<Vec<_>>()
            },
        )
        .flatten()
        .collect()
}

/// Observed directed motif counts for all ordered pairs with at least one
/// post of `i` retweeted by `j`, sorted by pair.
pub fn nonzero_directed_v_motifs(g: &DirectedBipartiteGraph) -> Vec<(usize, usize, u32)> {
    let n = g.n_users();
    (0..n)
        .into_par_iter()
        .map_init(
            || vec![0u32; n],
            |counts, i| {
                let mut touched = Vec::new();
                for &p in g.authored_by(i) {
                    for &j in g.retweeters_of(p as usize) {
                        let j = j as usize;
                        if j == i {
                            continue;
                        }
                        if counts[j] == 0 {
                            touched.push(j);
                        }
                        counts[j] += 1;
                    }
                }
                touched.sort_unstable();
                touched
                    .into_iter()
                    .map(|j| {
                        let c = std::mem::take(&mut counts[j]);
                        (i, j, c)
                    })
                    .collect::<Vec<_>>()
            },
        )
        .flatten()
        .collect()
}

/// Computes the statistics of every observed pair. Pairs are processed in
/// parallel and returned in input order.
pub fn test_pairs<M: MotifNull + ?Sized>(
    null: &M,
    pairs: &[(usize, usize, u32)],
    mode: PValueMode,
) -> Result<Vec<TestedPair>> {
    let dist = mode.resolve(null.n_terms());
    pairs
        .par_iter()
        .map(|&(i, j, obs)| {
            p_value_for(null, i, j, obs, dist).map(|stats| TestedPair {
                source: i,
                target: j,
                stats,
            })
        })
        .collect()
}

fn family_size(n: usize, directed: bool, family: FdrFamily, tested: usize) -> usize {
    match family {
        FdrFamily::Nonzero => tested,
        FdrFamily::AllPairs if directed => n * n.saturating_sub(1),
        FdrFamily::AllPairs => n * n.saturating_sub(1) / 2,
    }
}

/// Applies BH to the tested pairs and assembles the projection.
pub fn assemble_projection(
    layer_ids: &[String],
    tested: &[TestedPair],
    directed: bool,
    opts: &ValidationOptions,
) -> Result<ValidatedProjection> {
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in (0, 1), got {}",
            opts.alpha
        )));
    }
    let m = family_size(layer_ids.len(), directed, opts.family, tested.len());
    let p_values: Vec<f64> = tested.iter().map(|t| t.stats.p_value).collect();
    let threshold = if tested.is_empty() {
        None
    } else {
        bh_threshold(&p_values, opts.alpha, m)?
    };
    let rejected: Vec<&TestedPair> = match threshold {
        Some(t) => tested.iter().filter(|p| p.stats.p_value <= t).collect(),
        None => Vec::new(),
    };

    let mut keep = vec![false; layer_ids.len()];
    for p in &rejected {
        keep[p.source] = true;
        keep[p.target] = true;
    }
    let mut new_index = vec![usize::MAX; layer_ids.len()];
    let mut node_ids = Vec::new();
    for (k, id) in layer_ids.iter().enumerate() {
        if keep[k] {
            new_index[k] = node_ids.len();
            node_ids.push(id.clone());
        }
    }
    let edges: Vec<ValidatedEdge> = rejected
        .iter()
        .map(|p| ValidatedEdge {
            source: new_index[p.source],
            target: new_index[p.target],
            stats: p.stats,
        })
        .collect();
    Ok(ValidatedProjection {
        isolated_dropped: layer_ids.len() - node_ids.len(),
        node_ids,
        rejected_count: edges.len(),
        edges,
        directed,
        alpha: opts.alpha,
        family: opts.family,
        family_size: m,
        tested: tested.len(),
        p_value_mode: opts.p_value,
        threshold,
    })
}

/// Validated projection of the L layer of an undirected bipartite graph.
pub fn validate_undirected(
    g: &BipartiteGraph,
    params: &BicmParams,
    opts: &ValidationOptions,
) -> Result<ValidatedProjection> {
    if params.n_left() != g.n_left() || params.n_right() != g.n_right() {
        return Err(Error::InvalidInput(
            "null model was fitted on a different graph".into(),
        ));
    }
    let null = UndirectedNull::new(params);
    let pairs = nonzero_v_motifs(g);
    let tested = test_pairs(&null, &pairs, opts.p_value)?;
    assemble_projection(g.left_ids(), &tested, false, opts)
}

/// Validated directed projection of the user layer: an edge `i → j` means
/// `j` retweeted `i`'s posts more than the BiDCM explains.
pub fn validate_directed(
    g: &DirectedBipartiteGraph,
    params: &BidcmParams,
    opts: &ValidationOptions,
) -> Result<ValidatedProjection> {
    if params.n_users() != g.n_users() || params.n_posts != g.n_authored_posts() {
        return Err(Error::InvalidInput(
            "null model was fitted on a different graph".into(),
        ));
    }
    let null = DirectedNull::new(params);
    let pairs = nonzero_directed_v_motifs(g);
    let tested = test_pairs(&null, &pairs, opts.p_value)?;
    assemble_projection(g.user_ids(), &tested, true, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LinkKind;
    use crate::nullmodel::{fit_bidcm, fit_chung_lu, BidcmOptions, FitDiagnostics, FitMode};

    #[test]
    fn undirected_counts() {
        // 0: {0,1,2,3}, 1: {0,1,2,3}, 2: {4,5}
        let mut edges = Vec::new();
        for a in 0..4 {
            edges.push((0, a));
            edges.push((1, a));
        }
        edges.extend([(2, 4), (2, 5)]);
        let g = BipartiteGraph::from_index_pairs(3, 6, edges).unwrap();
        assert_eq!(count_v_motifs(&g, 0, 1).unwrap(), 4);
        assert_eq!(count_v_motifs(&g, 0, 2).unwrap(), 0);
        assert!(count_v_motifs(&g, 1, 1).is_err());
        let nz = nonzero_v_motifs(&g);
        assert_eq!(nz, vec![(0, 1, 4)]);
    }

    #[test]
    fn directed_counts_are_asymmetric() {
        use LinkKind::*;
        let links = [
            ("i", "p1", Author),
            ("i", "p2", Author),
            ("i", "p3", Author),
            ("i", "p4", Author),
            ("i", "p5", Author),
            ("j", "q1", Author),
            ("j", "p1", Retweet),
            ("j", "p2", Retweet),
            ("j", "p3", Retweet),
            ("k", "q1", Retweet),
        ];
        let g = DirectedBipartiteGraph::from_links(&links).unwrap();
        let (i, j, k) = (0, 1, 2);
        assert_eq!(count_directed_v_motifs(&g, i, j).unwrap(), 3);
        assert_eq!(count_directed_v_motifs(&g, j, i).unwrap(), 0);
        assert_eq!(count_directed_v_motifs(&g, i, k).unwrap(), 0);
        assert_eq!(count_directed_v_motifs(&g, j, k).unwrap(), 1);
        assert!(count_directed_v_motifs(&g, i, i).is_err());
        assert_eq!(nonzero_directed_v_motifs(&g), vec![(0, 1, 3), (1, 2, 1)]);
    }

    #[test]
    fn directed_expectation_closed_form() {
        let params = BidcmParams {
            n_posts: 6,
            out_degrees: vec![3, 0],
            in_degrees: vec![0, 2],
            authorship: AuthorshipModel::ClosedForm,
            retweet: None,
        };
        let null = DirectedNull::new(&params);
        assert_eq!(expected_v_motifs(&null, 0, 1).unwrap(), 1.0);
        assert_eq!(expected_v_motifs(&null, 1, 0).unwrap(), 0.0);
    }

    #[test]
    fn undirected_expectation_uniform() {
        let params = BicmParams {
            mode: FitMode::Exact,
            x: vec![1.0, 1.0, 0.0],
            y: vec![1.0; 4],
            diagnostics: FitDiagnostics::default(),
        };
        let null = UndirectedNull::new(&params);
        assert_eq!(expected_v_motifs(&null, 0, 1).unwrap(), 1.0);
        assert_eq!(expected_v_motifs(&null, 0, 2).unwrap(), 0.0);
        let dense: f64 = null.pair_probabilities(0, 1).iter().sum();
        assert_eq!(dense, 1.0);
    }

    #[test]
    fn extreme_contrast_validates_one_pair() {
        // nodes 0 and 1 share all 12 Γ nodes; others have private neighbours
        let mut edges = Vec::new();
        for a in 0..12 {
            edges.push((0, a));
            edges.push((1, a));
        }
        for i in 2..20u32 {
            edges.push((i, 12 + i));
        }
        let g = BipartiteGraph::from_index_pairs(20, 32, edges).unwrap();
        let params = fit_chung_lu(&g, 1.0).unwrap();
        let proj = validate_undirected(&g, &params, &ValidationOptions::default()).unwrap();
        assert_eq!(proj.n_edges(), 1);
        assert_eq!(proj.node_ids, vec!["L00", "L01"]);
        assert_eq!(proj.isolated_dropped, 18);
        assert_eq!(proj.edges[0].stats.observed, 12);
    }

    #[test]
    fn no_retweets_means_no_directed_edges() {
        use LinkKind::*;
        let g =
            DirectedBipartiteGraph::from_links(&[("a", "p", Author), ("b", "q", Author)]).unwrap();
        let params = fit_bidcm(&g, BidcmOptions::default()).unwrap();
        let proj = validate_directed(&g, &params, &ValidationOptions::default()).unwrap();
        assert_eq!(proj.n_edges(), 0);
        assert_eq!(proj.tested, 0);
    }

    #[test]
    fn all_pairs_family_size() {
        assert_eq!(family_size(5, false, FdrFamily::AllPairs, 3), 10);
        assert_eq!(family_size(5, true, FdrFamily::AllPairs, 3), 20);
        assert_eq!(family_size(5, true, FdrFamily::Nonzero, 3), 3);
    }
}
