//! Random bipartite graph generators for tests and benchmarks.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;

/// Erdős–Rényi bipartite graph: every pair is linked with probability `p`.
/// Returns `(i, α)` index pairs.
pub fn random_bipartite_edges<R: Rng + ?Sized>(
    n_left: usize,
    n_right: usize,
    p: f64,
    rng: &mut R,
) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    for i in 0..n_left {
        for a in 0..n_right {
            if rng.random::<f64>() < p {
                edges.push((i as u32, a as u32));
            }
        }
    }
    edges
}

/// Planted block structure: left block `b` and right block `b` are linked
/// with probability `p_in`, all other pairs with `p_out`. Block sizes of
/// both layers must have the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedBipartite {
    pub graph: BipartiteGraph,
    pub left_blocks: Vec<usize>,
    pub right_blocks: Vec<usize>,
}

pub fn planted_bipartite<R: Rng + ?Sized>(
    left_sizes: &[usize],
    right_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    rng: &mut R,
) -> Result<PlantedBipartite> {
    if left_sizes.len() != right_sizes.len() || left_sizes.is_empty() {
        return Err(Error::InvalidInput(
            "both layers need the same positive number of blocks".into(),
        ));
    }
    for p in [p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "probability {p} outside [0, 1]"
            )));
        }
    }
    let expand = |sizes: &[usize]| -> Vec<usize> {
        sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
            .collect()
    };
    let left_blocks = expand(left_sizes);
    let right_blocks = expand(right_sizes);
    let mut edges = Vec::new();
    for (i, &bi) in left_blocks.iter().enumerate() {
        for (a, &ba) in right_blocks.iter().enumerate() {
            let p = if bi == ba { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i as u32, a as u32));
            }
        }
    }
    let graph = BipartiteGraph::from_index_pairs(left_blocks.len(), right_blocks.len(), edges)?;
    Ok(PlantedBipartite {
        graph,
        left_blocks,
        right_blocks,
    })
}
