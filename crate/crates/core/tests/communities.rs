use std::collections::BTreeMap;

use nalgebra::DMatrix;
use nullnet_core::communities::{
    hits_scores, louvain_best, modularity, propagate_labels, subcommunities, LabelAssignment,
    Partition, PropagationOptions,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
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

fn planted(sizes: &[usize], p_in: f64, p_out: f64, seed: u64) -> (Vec<Vec<usize>>, Vec<usize>) {
    let truth: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..truth.len() {
        for j in i + 1..truth.len() {
            let p = if truth[i] == truth[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    (adjacency(truth.len(), &edges), truth)
}

fn choose2(x: usize) -> f64 {
    (x * x.saturating_sub(1) / 2) as f64
}

fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    let mut table: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut ra: BTreeMap<usize, usize> = BTreeMap::new();
    let mut rb: BTreeMap<usize, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *ra.entry(x).or_default() += 1;
        *rb.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sa: f64 = ra.values().map(|&c| choose2(c)).sum();
    let sb: f64 = rb.values().map(|&c| choose2(c)).sum();
    let expected = sa * sb / choose2(a.len());
    let max = 0.5 * (sa + sb);
    (index - expected) / (max - expected)
}

#[test]
fn ari_oracle_sanity() {
    assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 2, 2]), 1.0);
    assert!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]) < 0.0);
}

#[test]
fn louvain_recovers_planted_blocks() {
    let (adj, truth) = planted(&[30, 30, 30, 30], 0.3, 0.01, 4);
    let best = louvain_best(&adj, 50, 1).unwrap();
    let ari = adjusted_rand_index(&best.membership, &truth);
    assert!(ari >= 0.95, "ARI {ari}");
    let q_truth = modularity(&adj, &truth).unwrap();
    assert!(best.modularity >= q_truth - 1e-12);
}

#[test]
fn louvain_best_is_max_over_restarts() {
    let (adj, _) = planted(&[20, 25, 15], 0.2, 0.03, 8);
    let best = louvain_best(&adj, 30, 2).unwrap();
    let max = best
        .restart_modularities
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(best.modularity, max);
    assert_eq!(louvain_best(&adj, 30, 2).unwrap(), best);
}

#[test]
fn subcommunities_split_nested_cliques() {
    // two groups, each made of two 8-cliques joined by 3 edges; groups
    // joined by one edge
    let mut edges = Vec::new();
    for c in 0..4 {
        for i in 0..8 {
            for j in i + 1..8 {
                edges.push((8 * c + i, 8 * c + j));
            }
        }
    }
    edges.extend([
        (0, 8),
        (1, 9),
        (2, 10),
        (16, 24),
        (17, 25),
        (18, 26),
        (7, 23),
    ]);
    let adj = adjacency(32, &edges);
    let membership: Vec<usize> = (0..32).map(|v| v / 16).collect();
    let parent = Partition {
        modularity: modularity(&adj, &membership).unwrap(),
        membership,
        restart_count: 1,
        rng_seed: 0,
        restart_modularities: vec![],
    };
    for community in 0..2 {
        let sub = subcommunities(&adj, &parent, community, 20, 3).unwrap();
        assert_eq!(sub.partition.n_communities(), 2);
        let truth: Vec<usize> = sub.nodes.iter().map(|v| v / 8).collect();
        assert_eq!(adjusted_rand_index(&sub.partition.membership, &truth), 1.0);
        assert!(sub
            .labels()
            .iter()
            .all(|(_, l)| l.starts_with(&format!("{community}."))));
    }
}

#[test]
fn propagation_recovers_planted_blocks() {
    let (adj, truth) = planted(&[50, 50, 50, 50], 0.15, 0.005, 6);
    let mut correct = 0;
    let mut total = 0;
    for run in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(run);
        let mut seeds = Vec::new();
        for b in 0..4 {
            let mut members: Vec<usize> = (0..truth.len()).filter(|&v| truth[v] == b).collect();
            members.shuffle(&mut rng);
            seeds.extend(members.into_iter().take(3).map(|v| (v, format!("c{b}"))));
        }
        let init = LabelAssignment::from_seeds(truth.len(), &seeds).unwrap();
        let out = propagate_labels(
            &adj,
            &init,
            PropagationOptions {
                max_sweeps: 1000,
                seed: run,
            },
        )
        .unwrap();
        assert!(out.converged);
        for v in 0..truth.len() {
            if let Some(l) = out.label(v) {
                total += 1;
                correct += usize::from(l == format!("c{}", truth[v]));
            }
        }
    }
    let acc = correct as f64 / total as f64;
    assert!(acc >= 0.95, "accuracy {acc}");
}

fn dominant_eigenvector(m: DMatrix<f64>) -> Vec<f64> {
    let eig = m.symmetric_eigen();
    let k = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(k);
    let sign = if v.sum() < 0.0 { -1.0 } else { 1.0 };
    v.iter().map(|x| sign * x).collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn hits_matches_dense_eigensolver() {
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(10..=50);
        let mut edges = Vec::new();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for s in 0..n {
            for t in 0..n {
                if s != t && rng.random::<f64>() < 0.15 {
                    edges.push((s, t));
                    a[(s, t)] = 1.0;
                }
            }
        }
        let scores = hits_scores(n, &edges, 1e-12, 100_000).unwrap();
        let hub = dominant_eigenvector(&a * a.transpose());
        let auth = dominant_eigenvector(a.transpose() * &a);
        assert!(pearson(&scores.hub, &hub) > 0.9999, "seed {seed}");
        assert!(pearson(&scores.authority, &auth) > 0.9999, "seed {seed}");
        for k in 0..n {
            assert!((scores.hub[k] - hub[k]).abs() < 1e-6);
        }
    }
}
