mod common;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srcrank::datasets::florentine;
use srcrank::eif::eif_candidate_costs;
use srcrank::oracle::{
    approximation_ratio, enumerate_spanning_trees, exact_candidate_costs, for_each_spanning_tree,
    min_cost_timestamps_qp, EPS_FEAS,
};
use srcrank::{Graph, NodeId, Observation};

use common::{random_connected, random_tree};

fn kirchhoff_count(g: &Graph) -> f64 {
    let n = g.node_count();
    let mut lap = DMatrix::<f64>::zeros(n - 1, n - 1);
    for u in 1..n {
        lap[(u - 1, u - 1)] = g.degree(u) as f64;
        for &v in g.successors(u) {
            if v > 0 {
                lap[(u - 1, v - 1)] -= 1.0;
            }
        }
    }
    lap.determinant()
}

/// Minimum cost by trying every set of tight edges and solving the resulting
/// equality-constrained least squares problem through its KKT system.
fn brute_force_qp(n: usize, edges: &[(NodeId, NodeId)], tau: &BTreeMap<NodeId, f64>, mu: f64) -> f64 {
    let m = edges.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << m) {
        let tight: Vec<usize> = (0..m).filter(|&e| mask >> e & 1 == 1).collect();
        let k = tau.len() + tight.len();
        let mut kkt = DMatrix::<f64>::zeros(n + k, n + k);
        let mut rhs = DVector::<f64>::zeros(n + k);
        for &(p, c) in edges {
            kkt[(c, c)] += 2.0;
            kkt[(p, p)] += 2.0;
            kkt[(c, p)] -= 2.0;
            kkt[(p, c)] -= 2.0;
            rhs[c] += 2.0 * mu;
            rhs[p] -= 2.0 * mu;
        }
        let mut row = n;
        let mut cons: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
        for (&v, &t) in tau {
            cons.push((vec![(v, 1.0)], t));
        }
        for &e in &tight {
            let (p, c) = edges[e];
            cons.push((vec![(c, 1.0), (p, -1.0)], EPS_FEAS));
        }
        for (terms, d) in &cons {
            for &(v, a) in terms {
                kkt[(row, v)] = a;
                kkt[(v, row)] = a;
            }
            rhs[row] = *d;
            row += 1;
        }
        let Ok(sol) = kkt.svd(true, true).solve(&rhs, 1e-11) else {
            continue;
        };
        let t = sol.rows(0, n);
        let satisfied = cons
            .iter()
            .all(|(terms, d)| (terms.iter().map(|&(v, a)| a * t[v]).sum::<f64>() - d).abs() <= 1e-6);
        let feasible = edges.iter().all(|&(p, c)| t[c] - t[p] >= EPS_FEAS - 1e-7);
        if satisfied && feasible {
            let cost: f64 = edges.iter().map(|&(p, c)| (t[c] - t[p] - mu).powi(2)).sum();
            best = best.min(cost);
        }
    }
    best
}

/// Orients tree edges away from `root` as (parent, child).
fn orient(g: &Graph, root: NodeId) -> Vec<(NodeId, NodeId)> {
    let (parent, _) = g.bfs_parents(root);
    parent
        .iter()
        .enumerate()
        .filter_map(|(c, p)| p.map(|p| (p, c)))
        .collect()
}

#[test]
fn florentine_tree_count_matches_matrix_tree_theorem() {
    let g = florentine();
    let mut count = 0u64;
    let visited = for_each_spanning_tree(&g, u64::MAX, |_| count += 1).unwrap();
    assert_eq!(count, visited);
    assert_eq!(count as f64, kirchhoff_count(&g).round());
}

#[test]
fn random_tree_counts_match_matrix_tree_theorem() {
    for seed in 0..20 {
        let g = random_connected(7 + seed as usize % 4, 6, seed);
        let trees = enumerate_spanning_trees(&g).unwrap();
        assert_eq!(trees.len() as f64, kirchhoff_count(&g).round(), "seed {seed}");
        let mut uniq: Vec<Vec<(NodeId, NodeId)>> = trees
            .into_iter()
            .map(|mut t| {
                for e in t.iter_mut() {
                    *e = (e.0.min(e.1), e.0.max(e.1));
                }
                t.sort_unstable();
                t
            })
            .collect();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len() as f64, kirchhoff_count(&g).round());
    }
}

#[test]
fn qp_matches_brute_force_on_small_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut infeasible = 0;
    for trial in 0..150 {
        let n = 8;
        let g = random_tree(n, trial);
        let root = rng.random_range(0..n);
        let mut nodes: Vec<NodeId> = (0..n).collect();
        nodes.shuffle(&mut rng);
        let tau: BTreeMap<NodeId, f64> = nodes[..3].iter().map(|&v| (v, rng.random_range(0.0..60.0))).collect();
        let mu = rng.random_range(1.0..20.0);
        let edges = orient(&g, root);
        let obs = Observation::new(0..n, tau.clone()).unwrap();
        let qp = min_cost_timestamps_qp(root, &edges, &obs, mu).unwrap();
        let brute = brute_force_qp(n, &edges, &tau, mu);
        if brute.is_infinite() {
            infeasible += 1;
            assert!(qp.cost.is_infinite(), "trial {trial}: qp {} but brute infeasible", qp.cost);
            continue;
        }
        assert!(
            (qp.cost - brute).abs() <= 1e-3 * brute.max(1.0),
            "trial {trial}: qp {} brute {brute}",
            qp.cost
        );
        let recomputed: f64 = edges.iter().map(|&(p, c)| (qp.times[&c] - qp.times[&p] - mu).powi(2)).sum();
        assert!((recomputed - qp.cost).abs() <= 1e-9 * qp.cost.max(1.0));
    }
    assert!(infeasible < 150);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qp_cost_is_label_invariant(seed in any::<u64>(), mu in 1.0f64..20.0, shift in -50.0f64..50.0) {
        let n = 9;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_tree(n, seed);
        let root = rng.random_range(0..n);
        let mut tau = BTreeMap::new();
        for v in 0..n {
            if rng.random::<f64>() < 0.4 {
                tau.insert(v, rng.random_range(0.0..80.0));
            }
        }
        let edges = orient(&g, root);
        let a = min_cost_timestamps_qp(root, &edges, &Observation::new(0..n, tau.clone()).unwrap(), mu).unwrap();

        let mut perm: Vec<NodeId> = (0..n).collect();
        perm.shuffle(&mut rng);
        let edges_p: Vec<_> = edges.iter().map(|&(p, c)| (perm[p], perm[c])).collect();
        let tau_p: BTreeMap<NodeId, f64> = tau.iter().map(|(&v, &t)| (perm[v], t + shift)).collect();
        let b = min_cost_timestamps_qp(perm[root], &edges_p, &Observation::new(0..n, tau_p).unwrap(), mu).unwrap();
        if a.cost.is_finite() {
            prop_assert!((a.cost - b.cost).abs() <= 1e-7 * a.cost.max(1.0), "{} vs {}", a.cost, b.cost);
            // Without observations nothing anchors the times and both roots sit at 0.
            let offset = if tau.is_empty() { 0.0 } else { shift };
            for v in 0..n {
                prop_assert!((a.times[&v] + offset - b.times[&perm[v]]).abs() <= 1e-6);
            }
        } else {
            prop_assert!(b.cost.is_infinite());
        }
    }

    #[test]
    fn exact_cost_never_exceeds_eif((n, extra, seed) in (3usize..8, 0usize..4, any::<u64>()), p in 0.2f64..0.8, mu in 1.0f64..30.0) {
        let g = random_connected(n, extra, seed);
        let obs = common::random_observation(n, p, seed ^ 7);
        let exact = exact_candidate_costs(&g, &obs, mu).unwrap();
        let eif = eif_candidate_costs(&g, &obs, mu).unwrap();
        prop_assert_eq!(exact.len(), eif.len());
        for ((v, c), (w, e)) in exact.iter().zip(&eif) {
            prop_assert_eq!(v, w);
            prop_assert!(*c <= e + 1e-6 * e.abs().max(1.0) || e.is_infinite() && c.is_infinite(),
                "node {}: exact {} eif {}", v, c, e);
        }
        let r = approximation_ratio(&g, &obs, mu).unwrap();
        prop_assert!(r.ratio >= 1.0 - 1e-9 || r.ratio.is_nan());
    }
}
