//! Community detection, label propagation and hub ranking on validated
//! projections.

pub mod hits;
pub mod louvain;
pub mod lpa;

pub use hits::{hits_scores, hits_weighted, HubScores};
pub use louvain::{
    canonical_labels, induced_subgraph, louvain_best, louvain_once, modularity, subcommunities,
    Partition, Subpartition,
};
pub use lpa::{propagate_labels, LabelAssignment, PropagationOptions};

/// Default restart count: one per node, capped at 1000.
pub fn default_restarts(n_nodes: usize) -> usize {
    n_nodes.clamp(1, 1000)
}
