#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srcrank::{Graph, NodeId, Observation};

/// Connected undirected graph: a random tree on `n` nodes plus `extra` random edges.
pub fn random_connected(n: usize, extra: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = BTreeSet::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.insert((u, v));
    }
    for _ in 0..extra {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            edges.insert((u.min(v), u.max(v)));
        }
    }
    Graph::from_edges(n, edges, false).unwrap().0
}

pub fn random_tree(n: usize, seed: u64) -> Graph {
    random_connected(n, 0, seed)
}

/// Sparse planar-ish graph: each node joins its nearest earlier point, then
/// `extra` short edges between near neighbours close cycles.
pub fn geometric_grid(n: usize, extra: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
    let d = |a: usize, b: usize| (pts[a].0 - pts[b].0).powi(2) + (pts[a].1 - pts[b].1).powi(2);
    let mut edges = BTreeSet::new();
    for v in 1..n {
        let u = (0..v).min_by(|&a, &b| d(a, v).total_cmp(&d(b, v))).unwrap();
        edges.insert((u, v));
    }
    while edges.len() < n - 1 + extra {
        let v = rng.random_range(0..n);
        let mut near: Vec<usize> = (0..n).filter(|&u| u != v).collect();
        near.sort_by(|&a, &b| d(a, v).total_cmp(&d(b, v)));
        let u = near[rng.random_range(0..4)];
        edges.insert((u.min(v), u.max(v)));
    }
    Graph::from_edges(n, edges, false).unwrap().0
}

/// Whole graph infected; each node revealed with probability `p` at a random time.
pub fn random_observation(n: usize, p: f64, seed: u64) -> Observation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tau = std::collections::BTreeMap::new();
    for v in 0..n {
        if rng.random::<f64>() < p {
            tau.insert(v, rng.random_range(0.0..100.0));
        }
    }
    Observation::new(0..n, tau).unwrap()
}

/// (graph, observation) pairs on small connected graphs.
pub fn instance() -> impl Strategy<Value = (Graph, Observation)> {
    (2usize..14, 0usize..8, any::<u64>(), 0.1f64..0.9).prop_map(|(n, extra, seed, p)| {
        let g = random_connected(n, extra, seed);
        let o = random_observation(n, p, seed ^ 0x5eed);
        (g, o)
    })
}

pub fn line(n: usize) -> Graph {
    Graph::from_edges(n, (0..n - 1).map(|i| (i, i + 1)), false).unwrap().0
}

pub fn sorted(v: &[NodeId]) -> Vec<NodeId> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}
