//! Louvain modularity optimisation with shuffled node orders.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Community assignment of every node with its modularity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Community id per node; ids are contiguous, ordered by decreasing
    /// community size (ties by smallest member).
    pub membership: Vec<usize>,
    pub modularity: f64,
    pub restart_count: usize,
    pub rng_seed: u64,
    /// Modularity reached by every restart, in restart order.
    pub restart_modularities: Vec<f64>,
}

impl Partition {
    pub fn n_communities(&self) -> usize {
        self.membership.iter().max().map_or(0, |m| m + 1)
    }

    pub fn members(&self, community: usize) -> Vec<usize> {
        self.membership
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == community)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_communities()];
        for &c in &self.membership {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Renumbers communities by decreasing size, ties broken by smallest member.
pub fn canonical_labels(membership: &[usize]) -> Vec<usize> {
    let n_labels = membership.iter().max().map_or(0, |m| m + 1);
    let mut size = vec![0usize; n_labels];
    let mut first = vec![usize::MAX; n_labels];
    for (i, &c) in membership.iter().enumerate() {
        size[c] += 1;
        first[c] = first[c].min(i);
    }
    let mut order: Vec<usize> = (0..n_labels).filter(|&c| size[c] > 0).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(size[c]), first[c]));
    let mut relabel = vec![usize::MAX; n_labels];
    for (new, &old) in order.iter().enumerate() {
        relabel[old] = new;
    }
    membership.iter().map(|&c| relabel[c]).collect()
}

/// Newman-Girvan modularity of a binary undirected graph given as sorted
/// adjacency lists. An edgeless graph has modularity 0.
pub fn modularity(adj: &[Vec<usize>], membership: &[usize]) -> Result<f64> {
    if membership.len() != adj.len() {
        return Err(Error::UncoveredNode(membership.len().min(adj.len())));
    }
    let two_m: usize = adj.iter().map(Vec::len).sum();
    if two_m == 0 {
        return Ok(0.0);
    }
    let n_labels = membership.iter().max().map_or(0, |m| m + 1);
    let mut internal = vec![0usize; n_labels];
    let mut degree = vec![0usize; n_labels];
    for (i, nbrs) in adj.iter().enumerate() {
        let c = membership[i];
        degree[c] += nbrs.len();
        internal[c] += nbrs.iter().filter(|&&j| membership[j] == c).count();
    }
    let two_m = two_m as f64;
    Ok(internal
        .iter()
        .zip(&degree)
        .map(|(&l, &d)| l as f64 / two_m - (d as f64 / two_m).powi(2))
        .sum())
}

/// Weighted graph used between aggregation levels. `self_loops[i]` counts
/// both ends of internal edges, so `Σ strength = 2m` at every level.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
}

impl Level {
    fn from_binary(adj: &[Vec<usize>]) -> Self {
        Self {
            adj: adj
                .iter()
                .map(|nbrs| nbrs.iter().map(|&j| (j, 1.0)).collect())
                .collect(),
            self_loops: vec![0.0; adj.len()],
        }
    }

    fn n(&self) -> usize {
        self.adj.len()
    }

    fn strength(&self, i: usize) -> f64 {
        self.self_loops[i] + self.adj[i].iter().map(|(_, w)| w).sum::<f64>()
    }

    /// Local moving phase. Returns the community of every node and whether
    /// any node moved.
    fn local_moves<R: Rng>(&self, two_m: f64, rng: &mut R) -> (Vec<usize>, bool) {
        let n = self.n();
        let strength: Vec<f64> = (0..n).map(|i| self.strength(i)).collect();
        let mut community: Vec<usize> = (0..n).collect();
        let mut total = strength.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);

        let mut weight_to = vec![0.0f64; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut moved_any = false;
        loop {
            let mut moved = false;
            for &i in &order {
                let own = community[i];
                let k = strength[i];
                for &(j, w) in &self.adj[i] {
                    let c = community[j];
                    if weight_to[c] == 0.0 {
                        touched.push(c);
                    }
                    weight_to[c] += w;
                }
                total[own] -= k;
                let gain = |c: usize, w: f64| w - total[c] * k / two_m;
                let mut best = own;
                let mut best_gain = gain(own, weight_to[own]);
                for &c in &touched {
                    let g = gain(c, weight_to[c]);
                    if g > best_gain + 1e-12 {
                        best = c;
                        best_gain = g;
                    }
                }
                total[best] += k;
                if best != own {
                    community[i] = best;
                    moved = true;
                    moved_any = true;
                }
                for &c in &touched {
                    weight_to[c] = 0.0;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
        }
        (community, moved_any)
    }

    fn aggregate(&self, community: &[usize]) -> (Self, Vec<usize>) {
        let mut relabel = vec![usize::MAX; self.n()];
        let mut next = 0;
        for &c in community {
            if relabel[c] == usize::MAX {
                relabel[c] = next;
                next += 1;
            }
        }
        let node_to_new: Vec<usize> = community.iter().map(|&c| relabel[c]).collect();
        let mut self_loops = vec![0.0; next];
        let mut maps: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); next];
        for i in 0..self.n() {
            let ci = node_to_new[i];
            self_loops[ci] += self.self_loops[i];
            for &(j, w) in &self.adj[i] {
                let cj = node_to_new[j];
                if ci == cj {
                    self_loops[ci] += w;
                } else {
                    *maps[ci].entry(cj).or_default() += w;
                }
            }
        }
        let adj = maps.into_iter().map(|m| m.into_iter().collect()).collect();
        (Self { adj, self_loops }, node_to_new)
    }
}

/// One Louvain run; returns the (non-canonical) membership.
pub fn louvain_once<R: Rng>(adj: &[Vec<usize>], rng: &mut R) -> Vec<usize> {
    let n = adj.len();
    let two_m: usize = adj.iter().map(Vec::len).sum();
    let mut membership: Vec<usize> = (0..n).collect();
    if two_m == 0 {
        return membership;
    }
    let two_m = two_m as f64;
    let mut level = Level::from_binary(adj);
    loop {
        let (community, moved) = level.local_moves(two_m, rng);
        if !moved {
            break;
        }
        let (next, node_to_new) = level.aggregate(&community);
        for c in membership.iter_mut() {
            *c = node_to_new[*c];
        }
        if next.n() == level.n() {
            break;
        }
        level = next;
    }
    membership
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Runs Louvain `n_restarts` times with independently shuffled node orders
/// and keeps the partition of highest modularity (earliest restart on ties).
pub fn louvain_best(adj: &[Vec<usize>], n_restarts: usize, seed: u64) -> Result<Partition> {
    if adj.is_empty() {
        return Err(Error::EmptyGraph);
    }
    if n_restarts == 0 {
        return Err(Error::InvalidInput(
            "at least one restart is required".into(),
        ));
    }
    let runs: Vec<(Vec<usize>, f64)> = (0..n_restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(seed, r);
            let membership = canonical_labels(&louvain_once(adj, &mut rng));
            let q = modularity(adj, &membership).expect("membership covers every node");
            (membership, q)
        })
        .collect();
    let restart_modularities: Vec<f64> = runs.iter().map(|(_, q)| *q).collect();
    let mut best = 0;
    for (r, &q) in restart_modularities.iter().enumerate() {
        if q > restart_modularities[best] {
            best = r;
        }
    }
    let (membership, modularity) = runs.into_iter().nth(best).expect("at least one restart");
    Ok(Partition {
        membership,
        modularity,
        restart_count: n_restarts,
        rng_seed: seed,
        restart_modularities,
    })
}

/// Partition of the subgraph induced by one community.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subpartition {
    pub parent: usize,
    /// Parent-graph indices of the community members, ascending.
    pub nodes: Vec<usize>,
    /// Partition of the induced subgraph, indexed like `nodes`.
    pub partition: Partition,
}

impl Subpartition {
    /// `"parent.sub"` label of the `k`-th member.
    pub fn label(&self, k: usize) -> String {
        format!("{}.{}", self.parent, self.partition.membership[k])
    }

    /// `(parent-graph node, label)` for every member.
    pub fn labels(&self) -> Vec<(usize, String)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(k, &node)| (node, self.label(k)))
            .collect()
    }
}

/// Adjacency lists of the subgraph induced by `nodes` (ascending).
pub fn induced_subgraph(adj: &[Vec<usize>], nodes: &[usize]) -> Vec<Vec<usize>> {
    let mut index = vec![usize::MAX; adj.len()];
    for (k, &v) in nodes.iter().enumerate() {
        index[v] = k;
    }
    nodes
        .iter()
        .map(|&v| {
            adj[v]
                .iter()
                .filter_map(|&u| (index[u] != usize::MAX).then_some(index[u]))
                .collect()
        })
        .collect()
}

/// Re-runs Louvain-best inside `community`.
pub fn subcommunities(
    adj: &[Vec<usize>],
    partition: &Partition,
    community: usize,
    n_restarts: usize,
    seed: u64,
) -> Result<Subpartition> {
    if partition.membership.len() != adj.len() {
        return Err(Error::UncoveredNode(
            partition.membership.len().min(adj.len()),
        ));
    }
    let nodes = partition.members(community);
    if nodes.is_empty() {
        return Err(Error::UnknownCommunity(community));
    }
    if nodes.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "community {community} has a single node"
        )));
    }
    let sub = induced_subgraph(adj, &nodes);
    Ok(Subpartition {
        parent: community,
        nodes,
        partition: louvain_best(&sub, n_restarts, seed)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    fn clique_edges(nodes: std::ops::Range<usize>) -> Vec<(usize, usize)> {
        let v: Vec<usize> = nodes.collect();
        let mut e = Vec::new();
        for (k, &a) in v.iter().enumerate() {
            for &b in &v[k + 1..] {
                e.push((a, b));
            }
        }
        e
    }

    #[test]
    fn two_triangles() {
        let mut e = clique_edges(0..3);
        e.extend(clique_edges(3..6));
        let adj = adjacency(6, &e);
        let q = modularity(&adj, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!((q - 0.5).abs() < 1e-12);
        assert_eq!(modularity(&adj, &[0; 6]).unwrap(), 0.0);
        // relabelling does not change modularity
        assert_eq!(modularity(&adj, &[1, 1, 1, 0, 0, 0]).unwrap(), q);
    }

    #[test]
    fn edgeless_graph() {
        let adj = vec![Vec::new(); 4];
        let p = louvain_best(&adj, 3, 1).unwrap();
        assert_eq!(p.n_communities(), 4);
        assert_eq!(p.modularity, 0.0);
        assert_eq!(modularity(&adj, &[0, 1, 2, 3]).unwrap(), 0.0);
    }

    #[test]
    fn uncovered_node() {
        let adj = adjacency(3, &[(0, 1)]);
        assert!(matches!(
            modularity(&adj, &[0, 0]),
            Err(Error::UncoveredNode(_))
        ));
    }

    #[test]
    fn complete_graph_is_one_community() {
        let adj = adjacency(6, &clique_edges(0..6));
        let p = louvain_best(&adj, 5, 3).unwrap();
        assert_eq!(p.n_communities(), 1);
    }

    #[test]
    fn barbell_of_cliques() {
        let mut e = clique_edges(0..10);
        e.extend(clique_edges(10..20));
        e.push((9, 10));
        let adj = adjacency(20, &e);
        let p = louvain_best(&adj, 10, 42).unwrap();
        assert_eq!(p.n_communities(), 2);
        assert!(p.membership[..10].iter().all(|&c| c == p.membership[0]));
        assert!(p.membership[10..].iter().all(|&c| c == p.membership[10]));
        for &q in &p.restart_modularities {
            assert!(p.modularity >= q);
        }
        let again = louvain_best(&adj, 10, 42).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn subcommunity_errors() {
        let mut e = clique_edges(0..4);
        e.push((4, 5));
        let adj = adjacency(7, &e);
        let p = Partition {
            membership: vec![0, 0, 0, 0, 1, 1, 2],
            modularity: 0.0,
            restart_count: 1,
            rng_seed: 0,
            restart_modularities: vec![0.0],
        };
        assert!(matches!(
            subcommunities(&adj, &p, 9, 2, 0),
            Err(Error::UnknownCommunity(9))
        ));
        assert!(subcommunities(&adj, &p, 2, 2, 0).is_err());
        let sub = subcommunities(&adj, &p, 0, 4, 0).unwrap();
        assert_eq!(sub.partition.n_communities(), 1);
        assert_eq!(sub.label(0), "0.0");
    }

    #[test]
    fn canonical_order() {
        assert_eq!(
            canonical_labels(&[5, 5, 2, 7, 7, 7]),
            vec![1, 1, 2, 0, 0, 0]
        );
    }
}
