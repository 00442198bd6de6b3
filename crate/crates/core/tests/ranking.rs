mod common;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use srcrank::ranking::{rank, rank_many, Algorithm};
use srcrank::{Graph, NodeId, Observation};

use common::{instance, random_connected, random_observation, random_tree};

/// Infected set: the first `k` nodes reached by BFS from node 0.
fn ball(g: &Graph, k: usize) -> Vec<NodeId> {
    let (_, order) = g.bfs_parents(0);
    let mut nodes: Vec<NodeId> = order.into_iter().take(k).collect();
    nodes.sort_unstable();
    nodes
}

fn floyd_warshall(g: &Graph, nodes: &[NodeId]) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        d[i][i] = 0.0;
        for j in 0..n {
            if g.has_arc(nodes[i], nodes[j]) {
                d[i][j] = 1.0;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Number of infection orders of the whole tree that start at `v`, counted
/// over subsets.
fn infection_orders(g: &Graph, v: NodeId) -> f64 {
    let n = g.node_count();
    let mut ways = vec![0.0f64; 1 << n];
    ways[1 << v] = 1.0;
    for s in 0..(1usize << n) {
        if ways[s] == 0.0 {
            continue;
        }
        for u in 0..n {
            if s >> u & 1 == 0 && g.successors(u).iter().any(|&w| s >> w & 1 == 1) {
                ways[s | 1 << u] += ways[s];
            }
        }
    }
    ways[(1 << n) - 1]
}

#[test]
fn eccentricity_matches_floyd_warshall() {
    for seed in 0..15 {
        let g = random_connected(40, 15, seed);
        let nodes = ball(&g, 25);
        let obs = Observation::new(nodes.iter().copied(), BTreeMap::new()).unwrap();
        let r = rank(&g, &obs, Algorithm::Ecce, None).unwrap();
        let d = floyd_warshall(&g, &nodes);
        for (i, &v) in nodes.iter().enumerate() {
            let ecc = d[i].iter().copied().fold(0.0, f64::max);
            assert_eq!(r.score[&v], ecc, "seed {seed} node {v}");
        }
        for w in r.ordered.windows(2) {
            assert!(r.score[&w[0]] <= r.score[&w[1]]);
        }
    }
}

#[test]
fn rumor_centrality_matches_order_counting() {
    for seed in 0..20 {
        let n = 6 + seed as usize % 5;
        let g = random_tree(n, seed);
        let obs = Observation::new(0..n, BTreeMap::new()).unwrap();
        let r = rank(&g, &obs, Algorithm::Rum, None).unwrap();
        for v in 0..n {
            let expected = infection_orders(&g, v).ln();
            assert!((r.score[&v] - expected).abs() < 1e-9, "seed {seed} node {v}: {} vs {expected}", r.score[&v]);
        }
    }
}

#[test]
fn netsleuth_matches_dense_eigensolver() {
    for seed in 0..15 {
        let g = random_connected(50, 30, seed);
        let nodes = ball(&g, 30);
        let obs = Observation::new(nodes.iter().copied(), BTreeMap::new()).unwrap();
        let r = rank(&g, &obs, Algorithm::Netsleuth, None).unwrap();
        let n = nodes.len();
        let mut lap = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            lap[(i, i)] = g.degree(nodes[i]) as f64;
            for j in 0..n {
                if i != j && g.has_arc(nodes[i], nodes[j]) {
                    lap[(i, j)] = -1.0;
                }
            }
        }
        let eig = SymmetricEigen::new(lap);
        let top = eig.eigenvalues.imax();
        let reference: Vec<f64> = eig.eigenvectors.column(top).iter().map(|x| x.abs()).collect();
        let ours: Vec<f64> = nodes.iter().map(|v| r.score[v]).collect();
        let dot: f64 = reference.iter().zip(&ours).map(|(a, b)| a * b).sum();
        let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cosine = dot / (norm(&reference) * norm(&ours));
        assert!(cosine > 1.0 - 1e-8, "seed {seed}: cosine {cosine}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn every_ranking_is_a_permutation((g, obs) in instance(), mu in prop::option::of(1.0f64..30.0)) {
        prop_assume!(obs.observed_count() >= 2 || mu.is_some());
        for r in rank_many(&g, &obs, &Algorithm::ALL, mu).unwrap() {
            prop_assert!(r.is_permutation_of(obs.infected()), "{} not a permutation", r.algorithm);
            prop_assert_eq!(r.score.len(), obs.infected().len());
        }
    }

    #[test]
    fn rankings_are_deterministic((g, obs) in instance(), mu in 1.0f64..30.0) {
        let a = rank_many(&g, &obs, &Algorithm::ALL, Some(mu)).unwrap();
        let b = rank_many(&g, &obs, &Algorithm::ALL, Some(mu)).unwrap();
        prop_assert_eq!(&a, &b);
        for (r, &alg) in a.iter().zip(&Algorithm::ALL) {
            let alone = rank(&g, &obs, alg, Some(mu)).unwrap();
            prop_assert_eq!(&alone, r);
        }
    }

    #[test]
    fn tr_starts_at_cheapest_root((g, obs) in instance(), mu in 1.0f64..30.0) {
        let cr = rank(&g, &obs, Algorithm::Cr, Some(mu)).unwrap();
        let tr = rank(&g, &obs, Algorithm::Tr, Some(mu)).unwrap();
        if cr.score[&cr.ordered[0]].is_finite() {
            prop_assert_eq!(tr.ordered[0], cr.ordered[0]);
        } else {
            prop_assert_eq!(&tr.ordered, &cr.ordered);
        }
    }

    #[test]
    fn gau_equals_cr_on_trees(n in 2usize..16, seed in any::<u64>(), p in 0.1f64..0.9, mu in 1.0f64..30.0) {
        let g = random_tree(n, seed);
        let obs = random_observation(n, p, seed ^ 1);
        let cr = rank(&g, &obs, Algorithm::Cr, Some(mu)).unwrap();
        let gau = rank(&g, &obs, Algorithm::Gau, Some(mu)).unwrap();
        prop_assert_eq!(&cr.ordered.len(), &gau.ordered.len());
        for v in 0..n {
            let (a, b) = (cr.score[&v], gau.score[&v]);
            prop_assert!(a == b || (a - b).abs() <= 1e-9 * a.abs().max(1.0), "node {}: cr {} gau {}", v, a, b);
        }
    }
}
