//! Statistically validated projections of bipartite interaction networks.
//!
//! The crate fits maximum-entropy null models (BiCM and its directed
//! extension) to bipartite graphs, keeps only the node pairs whose shared
//! neighbourhoods the null model cannot explain, and analyses the resulting
//! projections: Louvain communities, label propagation and HITS hubs. The
//! [`reputability`] module aggregates news-domain credibility per community.

pub mod communities;
pub mod error;
pub mod graph;
pub mod io;
pub mod nullmodel;
pub mod projection;
pub mod reputability;
pub mod synth;

pub use error::{Error, Result};
