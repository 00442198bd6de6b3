//! Minimum-cost timestamps on a fixed rooted tree.
//!
//! Minimises `sum (t_child - t_parent - mu)^2` over the unobserved times subject
//! to `t_child - t_parent >= EPS_FEAS` on every edge, with observed times fixed.
//! The problem is a small strictly convex QP once subtrees without observations
//! are dropped (their gaps are set to `mu` at zero cost) and the unobserved
//! chain above the first branching or observed node is contracted the same
//! way. What is left is solved exactly by a primal active-set method.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::observation::Observation;
use crate::NodeId;

pub const EPS_FEAS: f64 = 1e-9;
const MAX_ITERATIONS: usize = 1000;
const NONE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    /// Empty when infeasible.
    pub times: BTreeMap<NodeId, f64>,
    /// Infinite when the observed times cannot be ordered along the tree.
    pub cost: f64,
    /// Active-set iterations used.
    pub iterations: usize,
}

/// One edge with at least one free end: `t_c - t_p = x[c] - x[p] + beta + mu`.
#[derive(Debug, Clone, Copy)]
struct Row {
    c: usize,
    p: usize,
    beta: f64,
    /// Lower bound on `x[c] - x[p]`.
    b: f64,
}

impl Row {
    fn dot(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        if self.c != NONE {
            s += x[self.c];
        }
        if self.p != NONE {
            s -= x[self.p];
        }
        s
    }
}

/// Reusable scratch space for solving many tree QPs of similar size.
#[derive(Debug, Default)]
pub(crate) struct TreeQp {
    relevant: Vec<bool>,
    chain: Vec<bool>,
    var: Vec<usize>,
    obs_anc: Vec<usize>,
    depth: Vec<usize>,
    rel_children: Vec<usize>,
    last_rel_child: Vec<usize>,
    upper: Vec<f64>,
    rows: Vec<Row>,
    m: Vec<f64>,
    q: Vec<f64>,
    x: Vec<f64>,
    step: Vec<f64>,
    active: Vec<usize>,
    in_active: Vec<bool>,
    kkt: Vec<f64>,
    rhs: Vec<f64>,
}

/// Outcome in local ids.
#[derive(Debug, Clone)]
pub(crate) struct LocalQp {
    pub cost: f64,
    pub iterations: usize,
    pub times: Option<Vec<f64>>,
}

impl TreeQp {
    pub fn new() -> Self {
        Self::default()
    }

    /// `order` lists every node of the tree, root first, parents before children.
    pub fn solve(
        &mut self,
        parent: &[usize],
        order: &[usize],
        tau: &[Option<f64>],
        mu: f64,
        want_times: bool,
    ) -> Result<LocalQp> {
        let n = parent.len();
        let root = order[0];
        self.relevant.clear();
        self.relevant.extend(tau.iter().map(Option::is_some));
        self.rel_children.clear();
        self.rel_children.resize(n, 0);
        self.last_rel_child.clear();
        self.last_rel_child.resize(n, NONE);
        for &v in order.iter().rev() {
            let p = parent[v];
            if self.relevant[v] && p != NONE {
                self.relevant[p] = true;
                self.rel_children[p] += 1;
                self.last_rel_child[p] = v;
            }
        }
        let infeasible = LocalQp {
            cost: f64::INFINITY,
            iterations: 0,
            times: None,
        };

        // Each observed node against its nearest observed ancestor.
        self.obs_anc.clear();
        self.obs_anc.resize(n, NONE);
        self.depth.clear();
        self.depth.resize(n, 0);
        let mut min_gap = f64::INFINITY;
        for &v in &order[1..] {
            let p = parent[v];
            self.depth[v] = self.depth[p] + 1;
            self.obs_anc[v] = if tau[p].is_some() { p } else { self.obs_anc[p] };
            if let (Some(tv), a) = (tau[v], self.obs_anc[v]) {
                if a != NONE {
                    let k = (self.depth[v] - self.depth[a]) as f64;
                    let gap = tv - tau[a].unwrap_or_default();
                    if gap < EPS_FEAS * k {
                        return Ok(infeasible);
                    }
                    min_gap = min_gap.min(gap / k);
                }
            }
        }
        let s = if min_gap.is_finite() { min_gap } else { mu.max(EPS_FEAS) };

        self.chain.clear();
        self.chain.resize(n, false);
        let mut top = root;
        if self.relevant[root] {
            while tau[top].is_none() && self.rel_children[top] == 1 {
                self.chain[top] = true;
                top = self.last_rel_child[top];
            }
        }

        self.var.clear();
        self.var.resize(n, NONE);
        let mut nf = 0;
        for &v in order {
            if self.relevant[v] && !self.chain[v] && tau[v].is_none() {
                self.var[v] = nf;
                nf += 1;
            }
        }

        self.rows.clear();
        self.m.clear();
        self.m.resize(nf * nf, 0.0);
        self.q.clear();
        self.q.resize(nf, 0.0);
        let mut fixed_cost = 0.0;
        for &v in order {
            if !self.relevant[v] || self.chain[v] || v == top {
                continue;
            }
            let p = parent[v];
            let (c, pv) = (self.var[v], self.var[p]);
            if c == NONE && pv == NONE {
                let d = tau[v].unwrap_or_default() - tau[p].unwrap_or_default() - mu;
                fixed_cost += d * d;
                continue;
            }
            let beta = -mu + tau[v].unwrap_or(0.0) - tau[p].unwrap_or(0.0);
            self.rows.push(Row {
                c,
                p: pv,
                beta,
                b: EPS_FEAS - mu - beta,
            });
            if c != NONE {
                self.m[c * nf + c] += 2.0;
                self.q[c] += 2.0 * beta;
            }
            if pv != NONE {
                self.m[pv * nf + pv] += 2.0;
                self.q[pv] -= 2.0 * beta;
            }
            if c != NONE && pv != NONE {
                self.m[c * nf + pv] -= 2.0;
                self.m[pv * nf + c] -= 2.0;
            }
        }

        let scale = tau
            .iter()
            .flatten()
            .fold(mu.abs().max(1.0), |acc, t| acc.max(t.abs()));
        let iterations = if nf == 0 {
            self.x.clear();
            0
        } else {
            self.active_set(nf, order, parent, tau, s, scale)?
        };

        let mut cost = fixed_cost;
        for r in &self.rows {
            let d = r.dot(&self.x) + r.beta;
            cost += d * d;
        }

        let times = want_times.then(|| {
            let mut t = vec![f64::NAN; n];
            for &v in order {
                if let Some(tv) = tau[v] {
                    t[v] = tv;
                } else if self.var[v] != NONE {
                    t[v] = self.x[self.var[v]];
                }
            }
            if t[top].is_nan() {
                // No observations at all.
                t[top] = 0.0;
            }
            let mut cur = top;
            while cur != root {
                t[parent[cur]] = t[cur] - mu;
                cur = parent[cur];
            }
            for &v in order {
                if t[v].is_nan() {
                    t[v] = t[parent[v]] + mu;
                }
            }
            t
        });
        Ok(LocalQp {
            cost,
            iterations,
            times,
        })
    }

    fn active_set(
        &mut self,
        nf: usize,
        order: &[usize],
        parent: &[usize],
        tau: &[Option<f64>],
        s: f64,
        scale: f64,
    ) -> Result<usize> {
        let tol_x = 1e-10 * scale;
        let tol_lambda = -1e-10 * scale;
        self.active.clear();
        self.in_active.clear();
        self.in_active.resize(self.rows.len(), false);

        // Unconstrained minimiser first; it is usually feasible.
        self.solve_kkt(nf)?;
        if self.rows.iter().all(|r| r.dot(&self.step) >= r.b - tol_x) {
            std::mem::swap(&mut self.x, &mut self.step);
            return Ok(1);
        }

        // Feasible start: every free node `s` below the latest time its observed
        // descendants allow.
        self.upper.clear();
        self.upper.resize(parent.len(), f64::INFINITY);
        for &v in order.iter().rev() {
            if !self.relevant[v] || self.chain[v] {
                continue;
            }
            let p = parent[v];
            if p == NONE || self.var[p] == NONE {
                continue;
            }
            let tv = tau[v].unwrap_or(self.upper[v]);
            self.upper[p] = self.upper[p].min(tv - s);
        }
        self.x.clear();
        self.x.resize(nf, 0.0);
        for &v in order {
            if self.var[v] != NONE {
                self.x[self.var[v]] = self.upper[v];
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.dot(&self.x) - r.b <= tol_x {
                self.active.push(i);
                self.in_active[i] = true;
            }
        }

        for it in 1..=MAX_ITERATIONS {
            let lambda = self.solve_kkt(nf)?;
            for i in 0..nf {
                self.step[i] -= self.x[i];
            }
            let moved = self.step.iter().any(|d| d.abs() > tol_x);
            if !moved {
                match lambda
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                {
                    Some((j, &l)) if l < tol_lambda => {
                        let row = self.active.remove(j);
                        self.in_active[row] = false;
                    }
                    _ => return Ok(it + 1),
                }
                continue;
            }
            let mut alpha = 1.0;
            let mut blocking = None;
            for (i, r) in self.rows.iter().enumerate() {
                if self.in_active[i] {
                    continue;
                }
                let ap = r.dot(&self.step);
                if ap < 0.0 {
                    let a = ((r.b - r.dot(&self.x)) / ap).max(0.0);
                    if a < alpha {
                        alpha = a;
                        blocking = Some(i);
                    }
                }
            }
            for i in 0..nf {
                self.x[i] += alpha * self.step[i];
            }
            if let Some(i) = blocking {
                self.active.push(i);
                self.in_active[i] = true;
            }
        }
        Err(Error::NoConvergence {
            iterations: MAX_ITERATIONS,
        })
    }

    /// Minimiser over the active constraints held as equalities, written to
    /// `step`; returns the multipliers of the active rows.
    fn solve_kkt(&mut self, nf: usize) -> Result<Vec<f64>> {
        let k = nf + self.active.len();
        self.kkt.clear();
        self.kkt.resize(k * k, 0.0);
        self.rhs.clear();
        self.rhs.resize(k, 0.0);
        for i in 0..nf {
            self.kkt[i * k..i * k + nf].copy_from_slice(&self.m[i * nf..(i + 1) * nf]);
            self.rhs[i] = -self.q[i];
        }
        for (j, &ri) in self.active.iter().enumerate() {
            let r = self.rows[ri];
            let row = nf + j;
            if r.c != NONE {
                self.kkt[row * k + r.c] = 1.0;
                self.kkt[r.c * k + row] = -1.0;
            }
            if r.p != NONE {
                self.kkt[row * k + r.p] = -1.0;
                self.kkt[r.p * k + row] = 1.0;
            }
            self.rhs[row] = r.b;
        }
        gauss_solve(&mut self.kkt, &mut self.rhs, k)?;
        self.step.clear();
        self.step.extend_from_slice(&self.rhs[..nf]);
        Ok(self.rhs[nf..].to_vec())
    }
}

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
fn gauss_solve(a: &mut [f64], b: &mut [f64], k: usize) -> Result<()> {
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i * k + col].abs().total_cmp(&a[j * k + col].abs()))
            .unwrap_or(col);
        if a[pivot * k + col].abs() < 1e-12 {
            return Err(Error::InvalidArgument("degenerate active set in tree QP".into()));
        }
        if pivot != col {
            for j in 0..k {
                a.swap(col * k + j, pivot * k + j);
            }
            b.swap(col, pivot);
        }
        let d = a[col * k + col];
        for i in col + 1..k {
            let f = a[i * k + col] / d;
            if f != 0.0 {
                for j in col..k {
                    a[i * k + j] -= f * a[col * k + j];
                }
                b[i] -= f * b[col];
            }
        }
    }
    for i in (0..k).rev() {
        let mut s = b[i];
        for j in i + 1..k {
            s -= a[i * k + j] * b[j];
        }
        b[i] = s / a[i * k + i];
    }
    Ok(())
}

/// Parent array and root-first BFS order of a tree given by adjacency lists.
pub(crate) fn root_tree(adj: &[Vec<usize>], root: usize, parent: &mut Vec<usize>, order: &mut Vec<usize>) {
    parent.clear();
    parent.resize(adj.len(), NONE);
    order.clear();
    order.push(root);
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &w in &adj[u] {
            if w != root && parent[w] == NONE {
                parent[w] = u;
                order.push(w);
            }
        }
    }
}

/// Exact minimum-cost timestamps for the spanning tree of `obs.infected()`
/// given by undirected `edges`, rooted at `root`.
pub fn min_cost_timestamps_qp(
    root: NodeId,
    edges: &[(NodeId, NodeId)],
    obs: &Observation,
    mu: f64,
) -> Result<QpSolution> {
    let nodes = obs.infected();
    let local = |v: NodeId| nodes.binary_search(&v).map_err(|_| Error::UnknownNode(v));
    let n = nodes.len();
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        let (a, b) = (local(u)?, local(v)?);
        adj[a].push(b);
        adj[b].push(a);
    }
    let (mut parent, mut order) = (Vec::new(), Vec::new());
    root_tree(&adj, local(root)?, &mut parent, &mut order);
    if edges.len() + 1 != n || order.len() != n {
        return Err(Error::InvalidArgument(
            "edges do not form a spanning tree of the infected set".into(),
        ));
    }
    let tau: Vec<Option<f64>> = nodes.iter().map(|&v| obs.time(v)).collect();
    let out = TreeQp::new().solve(&parent, &order, &tau, mu, true)?;
    Ok(QpSolution {
        times: out
            .times
            .map(|t| nodes.iter().copied().zip(t).collect())
            .unwrap_or_default(),
        cost: out.cost,
        iterations: out.iterations,
    })
}
