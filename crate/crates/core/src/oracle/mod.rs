//! Exact minimum tree costs on small graphs: every spanning tree of the
//! infected subgraph, each with optimal timestamps.

mod qp;
mod spanning;

pub use qp::{min_cost_timestamps_qp, QpSolution, EPS_FEAS};
pub use spanning::{enumerate_spanning_trees, for_each_spanning_tree, MAX_TREES};

use rayon::prelude::*;

use crate::eif::eif_costs_view;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::observation::Observation;
use crate::view::CascadeView;
use crate::NodeId;
use qp::{root_tree, TreeQp};

/// Spanning trees of an infected subgraph as adjacency lists, in local ids.
struct TreeSet {
    trees: Vec<Vec<Vec<usize>>>,
}

impl TreeSet {
    fn new(view: &CascadeView) -> Result<Self> {
        let n = view.len();
        let mut trees = Vec::new();
        for_each_spanning_tree(view.subgraph(), MAX_TREES, |edges| {
            let mut adj = vec![Vec::new(); n];
            for &(u, v) in edges {
                adj[u].push(v);
                adj[v].push(u);
            }
            trees.push(adj);
        })?;
        Ok(TreeSet { trees })
    }

    fn min_cost(&self, view: &CascadeView, root: usize, mu: f64, qp: &mut TreeQp) -> Result<f64> {
        let (mut parent, mut order) = (Vec::new(), Vec::new());
        let mut best = f64::INFINITY;
        for adj in &self.trees {
            root_tree(adj, root, &mut parent, &mut order);
            let c = qp.solve(&parent, &order, &view.tau, mu, false)?.cost;
            best = best.min(c);
        }
        Ok(best)
    }
}

fn exact_costs_view(view: &CascadeView, mu: f64) -> Result<Vec<(usize, f64)>> {
    let trees = TreeSet::new(view)?;
    let candidates: Vec<usize> = view.candidates().collect();
    candidates
        .par_iter()
        .map_init(TreeQp::new, |qp, &c| Ok((c, trees.min_cost(view, c, mu, qp)?)))
        .collect()
}

/// Exact minimum cost over all spreading trees rooted at `v`.
pub fn exact_node_cost(g: &Graph, obs: &Observation, v: NodeId, mu: f64) -> Result<f64> {
    let view = CascadeView::new(g, obs)?;
    let local = view.local_id(v).ok_or(Error::NotCandidate(v))?;
    if !view.candidate[local] {
        return Err(Error::NotCandidate(v));
    }
    TreeSet::new(&view)?.min_cost(&view, local, mu, &mut TreeQp::new())
}

/// Exact minimum cost of every candidate source, in id order.
pub fn exact_candidate_costs(g: &Graph, obs: &Observation, mu: f64) -> Result<Vec<(NodeId, f64)>> {
    let view = CascadeView::new(g, obs)?;
    Ok(exact_costs_view(&view, mu)?
        .into_iter()
        .map(|(c, cost)| (view.global[c], cost))
        .collect())
}

/// Both sides of the approximation ratio for one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioOutcome {
    /// Minimum EIF cost over candidates.
    pub eif: f64,
    /// Exact minimum cost over candidates.
    pub exact: f64,
    pub ratio: f64,
}

/// `min EIF cost / min exact cost` over the candidate sources. The ratio is 1
/// when both are zero and infinite when only the exact cost is zero.
pub fn approximation_ratio(g: &Graph, obs: &Observation, mu: f64) -> Result<RatioOutcome> {
    let view = CascadeView::new(g, obs)?;
    let min = |costs: Vec<(usize, f64)>| costs.into_iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let eif = min(eif_costs_view(&view, mu));
    let exact = min(exact_costs_view(&view, mu)?);
    let ratio = if exact == 0.0 {
        if eif == 0.0 {
            1.0
        } else {
            log::warn!("exact minimum cost is 0 but EIF found {eif}; ratio is infinite");
            f64::INFINITY
        }
    } else {
        eif / exact
    };
    Ok(RatioOutcome { eif, exact, ratio })
}
