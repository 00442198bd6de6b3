//! Earliest-Infection-First: greedy construction of a low-cost spreading tree
//! rooted at a given node.
//!
//! Observed nodes are attached one at a time in order of their timestamps. Each
//! is joined to the current tree through the cheapest "modified" shortest path:
//! a minimum-hop path that touches the tree only at its start and contains no
//! observed node that is still waiting to be attached. Interior nodes of the
//! path get evenly spaced times (the optimum for a line with fixed ends).
//! Whatever is left unattached at the end hangs off the tree by BFS with gaps
//! of exactly `mu`, which adds nothing to the cost.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::observation::Observation;
use crate::tree::{interpolate, path_cost, SpreadingTree};
use crate::view::CascadeView;
use crate::NodeId;

/// Floor for the estimated per-hop delay.
pub const MIN_MU: f64 = 1e-9;

const NONE: usize = usize::MAX;

/// One observed node joining the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct AttachStep {
    pub node: NodeId,
    /// Tree node the path starts from.
    pub attach_point: NodeId,
    pub path_len: usize,
    /// Cost of the chosen path.
    pub cost: f64,
    /// Running tree cost after this step.
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct EifOutcome {
    /// Complete when `cost` is finite; otherwise holds whatever was built.
    pub tree: SpreadingTree,
    pub cost: f64,
    pub attach_log: Vec<AttachStep>,
}

/// Average per-hop delay over all pairs of observed nodes:
/// `sum |tau_v - tau_w| / sum hops(v, w)`, hop counts taken in the infected
/// subgraph from the earlier node to the later one. Pairs with no path are skipped.
pub fn estimate_mu(g: &Graph, obs: &Observation) -> Result<f64> {
    estimate_mu_view(&CascadeView::new(g, obs)?)
}

pub(crate) fn estimate_mu_view(view: &CascadeView) -> Result<f64> {
    if view.alpha.len() < 2 {
        return Err(Error::TooFewTimestamps {
            observed: view.alpha.len(),
        });
    }
    let mut time_sum = 0.0;
    let mut hop_sum = 0usize;
    let mut skipped = 0usize;
    for (i, &v) in view.alpha.iter().enumerate() {
        let dist = view.sub.bfs_distances(v);
        let tv = view.tau[v].unwrap_or_default();
        for &w in &view.alpha[i + 1..] {
            match dist[w] {
                Some(d) => {
                    time_sum += (view.tau[w].unwrap_or_default() - tv).abs();
                    hop_sum += d;
                }
                None => skipped += 1,
            }
        }
    }
    if skipped > 0 {
        log::warn!("estimate_mu: skipped {skipped} observed pairs with no connecting path");
    }
    if hop_sum == 0 {
        return Err(Error::InvalidArgument(
            "no pair of observed nodes is connected; pass mu explicitly".into(),
        ));
    }
    Ok((time_sum / hop_sum as f64).max(MIN_MU))
}

/// Unobserved infected nodes plus the earliest observed node(s).
pub fn candidate_set(obs: &Observation) -> Vec<NodeId> {
    obs.candidates()
}

/// Modified shortest paths into `alpha[k]` from every node of `tree_nodes`,
/// searched in `g` (normally the infected subgraph). Each path runs from the
/// tree node to `alpha[k]` inclusive. Tree nodes with no valid path are absent.
pub fn modified_bfs_paths(
    g: &Graph,
    tree_nodes: &[NodeId],
    alpha: &[NodeId],
    k: usize,
) -> Result<BTreeMap<NodeId, Vec<NodeId>>> {
    let target = *alpha
        .get(k)
        .ok_or_else(|| Error::InvalidArgument(format!("alpha has no index {k}")))?;
    let n = g.node_count();
    let mut in_tree = vec![false; n];
    for &m in tree_nodes {
        g.check_node(m)?;
        in_tree[m] = true;
    }
    if in_tree[target] {
        return Err(Error::InvalidArgument(format!("node {target} is already on the tree")));
    }
    let mut pending = vec![false; n];
    for &a in &alpha[k + 1..] {
        pending[a] = true;
    }
    let mut search = PathSearch::new(n);
    search.run(g, target, &in_tree, &pending);
    Ok(search
        .reached
        .iter()
        .map(|&(m, _)| (m, search.path_from(m, target)))
        .collect())
}

/// Reverse BFS from a target that stops at tree nodes and at pending observed nodes.
struct PathSearch {
    seen: Vec<u32>,
    epoch: u32,
    /// Next hop toward the target.
    toward: Vec<usize>,
    dist: Vec<usize>,
    queue: VecDeque<usize>,
    /// Tree nodes reached, with their hop distance, in discovery order.
    reached: Vec<(usize, usize)>,
}

impl PathSearch {
    fn new(n: usize) -> Self {
        PathSearch {
            seen: vec![0; n],
            epoch: 0,
            toward: vec![NONE; n],
            dist: vec![0; n],
            queue: VecDeque::new(),
            reached: Vec::new(),
        }
    }

    fn run(&mut self, g: &Graph, target: usize, in_tree: &[bool], pending: &[bool]) {
        self.epoch += 1;
        let epoch = self.epoch;
        self.reached.clear();
        self.queue.clear();
        self.seen[target] = epoch;
        self.dist[target] = 0;
        self.queue.push_back(target);
        while let Some(u) = self.queue.pop_front() {
            let d = self.dist[u] + 1;
            for &w in g.predecessors(u) {
                if self.seen[w] == epoch {
                    continue;
                }
                self.seen[w] = epoch;
                self.toward[w] = u;
                if in_tree[w] {
                    self.reached.push((w, d));
                } else if !pending[w] {
                    self.dist[w] = d;
                    self.queue.push_back(w);
                }
            }
        }
    }

    fn path_from(&self, m: usize, target: usize) -> Vec<usize> {
        let mut path = vec![m];
        let mut cur = m;
        while cur != target {
            cur = self.toward[cur];
            path.push(cur);
        }
        path
    }
}

/// EIF result in local ids of a [`CascadeView`].
#[derive(Debug, Clone)]
pub(crate) struct LocalTree {
    pub root: usize,
    pub parent: Vec<usize>,
    /// NaN for nodes not on the tree.
    pub time: Vec<f64>,
    pub cost: f64,
    pub log: Vec<(usize, usize, usize, f64, f64)>,
}

/// Runs EIF for many roots over one observation, reusing scratch space.
pub(crate) struct EifEngine<'v> {
    view: &'v CascadeView,
    mu: f64,
    search: PathSearch,
}

impl<'v> EifEngine<'v> {
    pub fn new(view: &'v CascadeView, mu: f64) -> Self {
        EifEngine {
            view,
            mu,
            search: PathSearch::new(view.len()),
        }
    }

    pub fn build(&mut self, root: usize, keep_log: bool) -> LocalTree {
        let view = self.view;
        let g = &view.sub;
        let mu = self.mu;
        let n = view.len();
        let mut parent = vec![NONE; n];
        let mut time = vec![f64::NAN; n];
        let mut in_tree = vec![false; n];
        let mut pending: Vec<bool> = view.tau.iter().map(Option::is_some).collect();
        let mut log = Vec::new();
        in_tree[root] = true;
        pending[root] = false;
        if let Some(t) = view.tau[root] {
            time[root] = t;
        }
        let mut cost = 0.0;

        for &a in &view.alpha {
            if in_tree[a] {
                continue;
            }
            pending[a] = false;
            let t_a = view.tau[a].unwrap_or_default();
            self.search.run(g, a, &in_tree, &pending);

            let mut best: Option<(f64, usize, usize)> = None;
            for &(m, len) in &self.search.reached {
                // The root has no time before the first attachment; it is back-dated
                // along the first path at exactly mu per hop, at no cost.
                let gamma = if time[m].is_nan() {
                    0.0
                } else {
                    path_cost(len, time[m], t_a, mu)
                };
                if !gamma.is_finite() {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bg, bm, _)) => gamma < bg || (gamma == bg && m < bm),
                };
                if better {
                    best = Some((gamma, m, len));
                }
            }
            let Some((gamma, m, len)) = best else {
                return LocalTree {
                    root,
                    parent,
                    time,
                    cost: f64::INFINITY,
                    log,
                };
            };

            if time[m].is_nan() {
                time[m] = t_a - len as f64 * mu;
            }
            let t_m = time[m];
            let mut prev = m;
            let mut node = self.search.toward[m];
            let mut hops = 1;
            while node != a {
                parent[node] = prev;
                time[node] = interpolate(t_m, t_a, len, hops);
                in_tree[node] = true;
                prev = node;
                node = self.search.toward[node];
                hops += 1;
            }
            parent[a] = prev;
            time[a] = t_a;
            in_tree[a] = true;
            cost += gamma;
            if keep_log {
                log.push((a, m, len, gamma, cost));
            }
        }

        if time[root].is_nan() {
            // Nothing observed: anchor the clock at the root.
            time[root] = 0.0;
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| in_tree[v]).collect();
        while let Some(u) = queue.pop_front() {
            for &w in g.successors(u) {
                if !in_tree[w] {
                    in_tree[w] = true;
                    parent[w] = u;
                    time[w] = time[u] + mu;
                    queue.push_back(w);
                }
            }
        }
        if in_tree.iter().any(|&b| !b) {
            cost = f64::INFINITY;
        }
        LocalTree {
            root,
            parent,
            time,
            cost,
            log,
        }
    }
}

impl LocalTree {
    pub(crate) fn to_outcome(&self, view: &CascadeView) -> EifOutcome {
        let mut tree = SpreadingTree {
            root: view.global[self.root],
            parent: BTreeMap::new(),
            time: BTreeMap::new(),
        };
        for v in 0..view.len() {
            if self.time[v].is_nan() {
                continue;
            }
            tree.time.insert(view.global[v], self.time[v]);
            if self.parent[v] != NONE {
                tree.parent.insert(view.global[v], view.global[self.parent[v]]);
            }
        }
        let attach_log = self
            .log
            .iter()
            .map(|&(a, m, len, gamma, total)| AttachStep {
                node: view.global[a],
                attach_point: view.global[m],
                path_len: len,
                cost: gamma,
                total,
            })
            .collect();
        EifOutcome {
            tree,
            cost: self.cost,
            attach_log,
        }
    }
}

/// EIF cost of every candidate, as (local candidate, cost) in id order.
pub(crate) fn eif_costs_view(view: &CascadeView, mu: f64) -> Vec<(usize, f64)> {
    use rayon::prelude::*;
    let candidates: Vec<usize> = view.candidates().collect();
    candidates
        .par_iter()
        .map_init(
            || EifEngine::new(view, mu),
            |engine, &c| (c, engine.build(c, false).cost),
        )
        .collect()
}

/// EIF cost of every candidate source, in id order.
pub fn eif_candidate_costs(g: &Graph, obs: &Observation, mu: f64) -> Result<Vec<(NodeId, f64)>> {
    let view = CascadeView::new(g, obs)?;
    Ok(eif_costs_view(&view, mu)
        .into_iter()
        .map(|(c, cost)| (view.global[c], cost))
        .collect())
}

/// Builds the EIF spreading tree rooted at `root` on the infected subgraph.
pub fn eif_build_tree(g: &Graph, obs: &Observation, root: NodeId, mu: f64) -> Result<EifOutcome> {
    let view = CascadeView::new(g, obs)?;
    let local = view.local_id(root).ok_or(Error::NotCandidate(root))?;
    if !view.candidate[local] {
        return Err(Error::NotCandidate(root));
    }
    let mut engine = EifEngine::new(&view, mu);
    Ok(engine.build(local, true).to_outcome(&view))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{assign_line_times, check_feasible_consistent, tree_cost};

    fn undirected(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::from_edges(n, edges.iter().copied(), false).unwrap().0
    }

    fn obs(infected: impl IntoIterator<Item = NodeId>, tau: &[(NodeId, f64)]) -> Observation {
        Observation::new(infected, tau.iter().copied().collect()).unwrap()
    }

    #[test]
    fn mu_on_three_node_path() {
        let g = undirected(3, &[(0, 1), (1, 2)]);
        let o = obs(0..3, &[(0, 0.0), (2, 20.0)]);
        assert_eq!(estimate_mu(&g, &o).unwrap(), 10.0);
    }

    #[test]
    fn mu_on_four_node_path() {
        let g = undirected(4, &[(0, 1), (1, 2), (2, 3)]);
        let o = obs(0..4, &[(0, 0.0), (2, 20.0), (3, 33.0)]);
        assert!((estimate_mu(&g, &o).unwrap() - 11.0).abs() < 1e-12);
    }

    #[test]
    fn mu_needs_two_timestamps() {
        let g = undirected(3, &[(0, 1), (1, 2)]);
        let o = obs(0..3, &[(0, 0.0)]);
        assert!(matches!(estimate_mu(&g, &o), Err(Error::TooFewTimestamps { observed: 1 })));
    }

    #[test]
    fn mu_skips_unreachable_pairs() {
        let g = Graph::from_edges(3, [(0, 1)], true).unwrap().0;
        // 2 is isolated in the infected subgraph.
        let o = obs(0..3, &[(0, 0.0), (1, 4.0), (2, 9.0)]);
        assert_eq!(estimate_mu(&g, &o).unwrap(), 4.0);
    }

    #[test]
    fn mu_is_floored() {
        let g = undirected(2, &[(0, 1)]);
        let o = obs(0..2, &[(0, 1.0), (1, 1.0)]);
        assert_eq!(estimate_mu(&g, &o).unwrap(), MIN_MU);
    }

    #[test]
    fn singleton_tree() {
        let g = undirected(1, &[]);
        let out = eif_build_tree(&g, &obs([0], &[]), 0, 3.0).unwrap();
        assert_eq!(out.cost, 0.0);
        assert_eq!(out.tree.len(), 1);
        assert!(out.tree.parent.is_empty());
    }

    #[test]
    fn non_candidate_root_rejected() {
        let g = undirected(2, &[(0, 1)]);
        let o = obs(0..2, &[(0, 1.0), (1, 2.0)]);
        assert!(matches!(eif_build_tree(&g, &o, 1, 1.0), Err(Error::NotCandidate(1))));
    }

    #[test]
    fn adjacent_root_gives_single_path() {
        let g = undirected(2, &[(0, 1)]);
        let paths = modified_bfs_paths(&g, &[0], &[1], 0).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[&0], vec![0, 1]);
    }

    #[test]
    fn line_matches_lemma_assignment() {
        let n = 6;
        let g = undirected(n, &(0..n - 1).map(|i| (i, i + 1)).collect::<Vec<_>>());
        let o = obs(0..n, &[(0, 2.0), (n - 1, 17.0)]);
        let mu = 2.0;
        let out = eif_build_tree(&g, &o, 0, mu).unwrap();
        let expected = assign_line_times(2.0, 17.0, n).unwrap();
        for (v, &t) in expected.iter().enumerate() {
            assert!((out.tree.time[&v] - t).abs() < 1e-12);
        }
        assert!((out.cost - path_cost(n - 1, 2.0, 17.0, mu)).abs() < 1e-12);
        assert_eq!(check_feasible_consistent(&out.tree, &o).unwrap(), None);
    }

    #[test]
    fn later_observed_node_blocks_path() {
        // 0 - 1 - 2 with 1 observed after 2: 2 cannot be reached from root 0.
        let g = undirected(3, &[(0, 1), (1, 2)]);
        let o = obs(0..3, &[(1, 9.0), (2, 5.0)]);
        let out = eif_build_tree(&g, &o, 0, 1.0).unwrap();
        assert_eq!(out.cost, f64::INFINITY);
    }

    /// Reconstruction of the worked example network: nodes named by their
    /// example ids, times in minutes.
    fn worked_example() -> (Graph, Observation, f64) {
        let ids = [1, 4, 5, 6, 7, 8, 9, 10, 12, 13];
        let idx = |x: usize| ids.iter().position(|&i| i == x).unwrap();
        let edges = [
            (10, 6),
            (6, 7),
            (7, 8),
            (8, 12),
            (7, 9),
            (9, 13),
            (7, 4),
            (4, 5),
            (5, 1),
            (8, 5),
            (10, 13),
        ];
        let labels = ids.iter().map(|i| i.to_string()).collect();
        let g = Graph::from_labeled_edges(labels, edges.iter().map(|&(a, b)| (idx(a), idx(b))), false)
            .unwrap()
            .0;
        let m = |h: f64, mm: f64| h * 60.0 + mm;
        let tau = [
            (idx(6), m(6.0, 5.0)),
            (idx(12), m(8.0, 5.0)),
            (idx(13), m(8.0, 10.0)),
            (idx(1), m(8.0, 50.0)),
        ];
        (g, obs(0..ids.len(), &tau), 36.94)
    }

    #[test]
    fn worked_example_third_iteration() {
        let (g, o, mu) = worked_example();
        let id = |label: &str| g.node_by_label(label).unwrap();
        let out = eif_build_tree(&g, &o, id("10"), mu).unwrap();
        let log = &out.attach_log;
        assert_eq!(log[0].node, id("6"));
        assert_eq!(log[0].cost, 0.0);
        assert!((out.tree.time[&id("10")] - (365.0 - 36.94)).abs() < 1e-9);
        assert_eq!((log[1].node, log[1].attach_point, log[1].path_len), (id("12"), id("6"), 3));
        assert!((log[1].total - 28.09).abs() < 1e-2);
        assert_eq!((log[2].node, log[2].attach_point, log[2].path_len), (id("13"), id("7"), 2));
        assert!((log[2].cost - 61.83).abs() < 1e-2);
        assert!((log[2].total - 89.92).abs() < 1e-2);
        // 7:28 PM, to the minute.
        assert!((out.tree.time[&id("9")] - (7.0 * 60.0 + 28.0)).abs() < 1.0);
        assert_eq!(out.tree.parent[&id("9")], id("7"));
        assert_eq!(check_feasible_consistent(&out.tree, &o).unwrap(), None);
        assert!((tree_cost(&out.tree, mu) - out.cost).abs() < 1e-9);
    }

    #[test]
    fn worked_example_modified_paths() {
        let (g, _, _) = worked_example();
        let id = |label: &str| g.node_by_label(label).unwrap();
        let tree: Vec<NodeId> = ["10", "6", "7", "8", "12"].iter().map(|l| id(l)).collect();
        let alpha: Vec<NodeId> = ["6", "12", "13", "1"].iter().map(|l| id(l)).collect();
        let paths = modified_bfs_paths(&g, &tree, &alpha, 2).unwrap();
        assert_eq!(paths[&id("7")], vec![id("7"), id("9"), id("13")]);
        assert!(!paths.contains_key(&id("12")));
        assert!(!paths.contains_key(&id("6")));
        assert_eq!(paths[&id("10")], vec![id("10"), id("13")]);
    }
}
