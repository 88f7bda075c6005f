//! Asynchronous label propagation from fixed seed labels.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_SWEEPS: usize = 1000;

/// Labels of every node. Label names are interned in `names`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelAssignment {
    pub names: Vec<String>,
    pub labels: Vec<Option<u32>>,
    pub is_seed: Vec<bool>,
    pub sweeps: usize,
    pub converged: bool,
    pub rng_seed: u64,
}

impl LabelAssignment {
    /// Seed-only assignment over `n` nodes.
    pub fn from_seeds<S: AsRef<str>>(n: usize, seeds: &[(usize, S)]) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut labels = vec![None; n];
        let mut is_seed = vec![false; n];
        for (node, name) in seeds {
            if *node >= n {
                return Err(Error::IndexOutOfRange {
                    index: *node,
                    len: n,
                });
            }
            let name = name.as_ref();
            let id = match names.iter().position(|x| x == name) {
                Some(k) => k,
                None => {
                    names.push(name.to_string());
                    names.len() - 1
                }
            };
            labels[*node] = Some(id as u32);
            is_seed[*node] = true;
        }
        Ok(Self {
            names,
            labels,
            is_seed,
            sweeps: 0,
            converged: true,
            rng_seed: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, node: usize) -> Option<&str> {
        self.labels[node].map(|l| self.names[l as usize].as_str())
    }

    pub fn seed_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_seed[i]).collect()
    }

    pub fn n_labeled(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    /// Every labelled node becomes a seed.
    pub fn freeze(&self) -> Self {
        let mut out = self.clone();
        out.is_seed = self.labels.iter().map(Option::is_some).collect();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PropagationOptions {
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            max_sweeps: DEFAULT_MAX_SWEEPS,
            seed: 0,
        }
    }
}

/// Propagates seed labels over an undirected adjacency.
///
/// Non-seed nodes are visited in a fresh random order every sweep and take
/// the most frequent label among their labelled neighbours; a node keeps its
/// label when it is among the most frequent, otherwise ties are broken
/// uniformly at random. Seeds never change. Stops after a sweep without
/// changes or after `max_sweeps`.
///
/// An unlabelled node only sees neighbours labelled in earlier sweeps, so
/// labels advance one hop per sweep from every seed at once. Relabelling is
/// fully asynchronous.
pub fn propagate_labels(
    adj: &[Vec<usize>],
    seeds: &LabelAssignment,
    opts: PropagationOptions,
) -> Result<LabelAssignment> {
    if seeds.len() != adj.len() {
        return Err(Error::InvalidInput(format!(
            "seed assignment covers {} nodes, graph has {}",
            seeds.len(),
            adj.len()
        )));
    }
    if !seeds.is_seed.iter().any(|&s| s) {
        return Err(Error::InvalidInput(
            "label propagation needs at least one seed".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut labels = seeds.labels.clone();
    let mut labelled_at: Vec<usize> = labels
        .iter()
        .map(|l| if l.is_some() { 0 } else { usize::MAX })
        .collect();
    let n_names = seeds.names.len();
    let mut order: Vec<usize> = (0..adj.len()).filter(|&i| !seeds.is_seed[i]).collect();
    let mut counts = vec![0usize; n_names];
    let mut tied: Vec<u32> = Vec::new();
    let mut sweeps = 0;
    let mut converged = false;

    while sweeps < opts.max_sweeps {
        sweeps += 1;
        order.shuffle(&mut rng);
        let mut changed = false;
        for &i in &order {
            let horizon = if labels[i].is_some() {
                usize::MAX
            } else {
                sweeps
            };
            let visible = |j: usize| labelled_at[j] < horizon;
            let mut best = 0;
            for &j in adj[i].iter().filter(|&&j| visible(j)) {
                if let Some(l) = labels[j] {
                    counts[l as usize] += 1;
                    best = best.max(counts[l as usize]);
                }
            }
            if best == 0 {
                continue;
            }
            tied.clear();
            for &j in adj[i].iter().filter(|&&j| visible(j)) {
                if let Some(l) = labels[j] {
                    if counts[l as usize] == best && !tied.contains(&l) {
                        tied.push(l);
                    }
                }
            }
            for &j in &adj[i] {
                if let Some(l) = labels[j] {
                    counts[l as usize] = 0;
                }
            }
            if labels[i].is_some_and(|l| tied.contains(&l)) {
                continue;
            }
            tied.sort_unstable();
            if labels[i].is_none() {
                labelled_at[i] = sweeps;
            }
            labels[i] = tied.choose(&mut rng).copied();
            changed = true;
        }
        if !changed {
            converged = true;
            break;
        }
    }
    Ok(LabelAssignment {
        names: seeds.names.clone(),
        labels,
        is_seed: seeds.is_seed.clone(),
        sweeps,
        converged,
        rng_seed: opts.seed,
    })
}
