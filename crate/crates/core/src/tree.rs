//! Spreading trees: who infected whom, and when.
//!
//! The cost of a tree is the sum over its edges of `(t_child - t_parent - mu)^2`,
//! i.e. the negative log-likelihood (up to constants) of Gaussian per-hop delays
//! with mean `mu`.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::observation::Observation;
use crate::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingTree {
    pub root: NodeId,
    /// Parent of every non-root node.
    pub parent: BTreeMap<NodeId, NodeId>,
    /// Time of every node, root included.
    pub time: BTreeMap<NodeId, f64>,
}

/// First broken requirement found by [`check_feasible_consistent`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Parent links do not lead back to the root from this node.
    NotATree(NodeId),
    /// The child is not strictly later than its parent.
    Infeasible { parent: NodeId, child: NodeId },
    /// An observed node was given a different time.
    Inconsistent {
        node: NodeId,
        assigned: f64,
        observed: f64,
    },
}

impl SpreadingTree {
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.time.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.parent.iter().map(|(&c, &p)| (p, c))
    }

    /// Writes `child<TAB>parent<TAB>time` lines; the root's parent field is empty.
    pub fn write_tsv<W: Write>(&self, g: &Graph, mut out: W) -> std::io::Result<()> {
        for (&v, &t) in &self.time {
            let parent = self.parent.get(&v).map(|&p| g.label(p)).unwrap_or("");
            writeln!(out, "{}\t{}\t{}", g.label(v), parent, t)?;
        }
        Ok(())
    }
}

pub fn tree_cost(tree: &SpreadingTree, mu: f64) -> f64 {
    tree.edges()
        .map(|(p, c)| {
            let gap = tree.time[&c] - tree.time[&p] - mu;
            gap * gap
        })
        .sum()
}

/// `Ok(None)` when the tree is feasible and consistent with `obs`.
pub fn check_feasible_consistent(tree: &SpreadingTree, obs: &Observation) -> Result<Option<Violation>> {
    if tree.time.len() != obs.infected().len()
        || !obs.infected().iter().all(|v| tree.time.contains_key(v))
    {
        return Err(Error::NodeSetMismatch);
    }
    for v in tree.nodes() {
        if v == tree.root {
            if tree.parent.contains_key(&v) {
                return Ok(Some(Violation::NotATree(v)));
            }
            continue;
        }
        // Walking up must reach the root within |T| steps.
        let mut cur = v;
        let mut steps = 0;
        while cur != tree.root {
            match tree.parent.get(&cur) {
                Some(&p) if tree.time.contains_key(&p) && steps < tree.len() => {
                    cur = p;
                    steps += 1;
                }
                _ => return Ok(Some(Violation::NotATree(v))),
            }
        }
    }
    for (p, c) in tree.edges() {
        if tree.time[&c] <= tree.time[&p] {
            return Ok(Some(Violation::Infeasible { parent: p, child: c }));
        }
    }
    for (&v, &observed) in obs.tau() {
        let assigned = tree.time[&v];
        if assigned != observed {
            return Ok(Some(Violation::Inconsistent {
                node: v,
                assigned,
                observed,
            }));
        }
    }
    Ok(None)
}

/// Time of the node `hops` steps along a line from a node at `start` to one at
/// `end`, `len` hops apart, with equal gaps.
#[inline]
pub(crate) fn interpolate(start: f64, end: f64, len: usize, hops: usize) -> f64 {
    start + hops as f64 * ((end - start) / len as f64)
}

/// Minimum-cost times on a line of `n` nodes whose end times are known: equal gaps.
pub fn assign_line_times(tau_start: f64, tau_end: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("a line needs at least 2 nodes, got {n}")));
    }
    if tau_start.is_nan() || tau_end.is_nan() || tau_start >= tau_end {
        return Err(Error::InvalidArgument(format!(
            "line end time {tau_end} must be later than start time {tau_start}"
        )));
    }
    let mut times: Vec<f64> = (0..n).map(|k| interpolate(tau_start, tau_end, n - 1, k)).collect();
    times[n - 1] = tau_end;
    Ok(times)
}

/// Cost of attaching a node at `t_alpha` through a path of `len` hops starting
/// at a tree node at `t_m`, with interior times spaced evenly. Infinite when the
/// path would run backwards in time.
pub fn path_cost(len: usize, t_m: f64, t_alpha: f64, mu: f64) -> f64 {
    debug_assert!(len >= 1);
    if t_alpha <= t_m {
        return f64::INFINITY;
    }
    let l = len as f64;
    let dev = (t_alpha - t_m) / l - mu;
    l * dev * dev
}
