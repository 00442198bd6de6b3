//! Cascade simulators and the samplers that turn a cascade into an observation.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::observation::Observation;
use crate::NodeId;

/// Ground truth of one simulated cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct ContagionResult {
    pub source: NodeId,
    /// Infection time of every infected node.
    pub times: BTreeMap<NodeId, f64>,
    /// Who infected whom; absent for the source.
    pub infector: BTreeMap<NodeId, NodeId>,
}

impl ContagionResult {
    pub fn infected(&self) -> Vec<NodeId> {
        self.times.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Infected nodes by increasing time, ties by id.
    pub fn infection_order(&self) -> Vec<NodeId> {
        let mut order: Vec<NodeId> = self.infected();
        order.sort_by(|a, b| self.times[a].total_cmp(&self.times[b]).then(a.cmp(b)));
        order
    }

    /// Adds independent uniform noise in `[0, magnitude)` to every non-source time so
    /// slotted cascades have no exact ties.
    pub fn jittered<R: Rng + ?Sized>(&self, magnitude: f64, rng: &mut R) -> ContagionResult {
        let mut out = self.clone();
        for (&v, t) in out.times.iter_mut() {
            if v != self.source {
                *t += magnitude * rng.random::<f64>();
            }
        }
        out
    }

    /// Checks the structural guarantees every simulator must give.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        let t_source = self.times.get(&self.source).copied().ok_or_else(|| {
            Error::InvalidArgument("source is not infected".into())
        })?;
        for (&v, &t) in &self.times {
            if v == self.source {
                continue;
            }
            if t <= t_source {
                return Err(Error::InvalidArgument(format!(
                    "node {v} infected no later than the source"
                )));
            }
            let ok = g
                .predecessors(v)
                .iter()
                .any(|u| self.times.get(u).is_some_and(|&tu| tu < t));
            if !ok {
                return Err(Error::InvalidArgument(format!(
                    "node {v} has no earlier-infected in-neighbour"
                )));
            }
        }
        Ok(())
    }

    /// `# source <label>` followed by `label time` lines in infection order.
    pub fn write_ground_truth<W: Write>(&self, g: &Graph, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# source {}", g.label(self.source))?;
        for v in self.infection_order() {
            writeln!(out, "{} {}", g.label(v), self.times[&v])?;
        }
        Ok(())
    }
}

#[derive(PartialEq)]
struct Arrival {
    time: f64,
    node: NodeId,
    from: NodeId,
}

impl Eq for Arrival {}

impl Ord for Arrival {
    // Reversed so the max-heap pops the earliest arrival; ties go to the smaller id.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.node.cmp(&self.node))
            .then(other.from.cmp(&self.from))
    }
}

impl PartialOrd for Arrival {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Draws from N(mu, sigma^2) conditioned on being strictly positive.
pub fn truncated_gaussian_delay<R: Rng + ?Sized>(mu: f64, sigma: f64, rng: &mut R) -> f64 {
    loop {
        let z: f64 = StandardNormal.sample(rng);
        let x = mu + sigma * z;
        if x > 0.0 {
            return x;
        }
    }
}

/// Continuous-time SI cascade: every arc out of an infected node carries an
/// independent positive Gaussian delay and a node is infected by its earliest
/// arrival. Stops once `stop_count` nodes are infected.
pub fn simulate_trunc_gaussian<R: Rng + ?Sized>(
    g: &Graph,
    source: NodeId,
    stop_count: usize,
    mu: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<ContagionResult> {
    g.check_node(source)?;
    if stop_count == 0 {
        return Err(Error::InvalidArgument("stop count must be at least 1".into()));
    }
    if mu.is_nan() || mu <= 0.0 || sigma.is_nan() || sigma < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "need mu > 0 and sigma >= 0, got mu={mu}, sigma={sigma}"
        )));
    }
    let n = g.node_count();
    let mut infected = vec![false; n];
    let mut times = BTreeMap::new();
    let mut infector = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    heap.push(Arrival {
        time: 0.0,
        node: source,
        from: source,
    });
    while let Some(Arrival { time, node, from }) = heap.pop() {
        if infected[node] {
            continue;
        }
        infected[node] = true;
        times.insert(node, time);
        if node != source {
            infector.insert(node, from);
        }
        if times.len() == stop_count {
            return Ok(ContagionResult {
                source,
                times,
                infector,
            });
        }
        for &v in g.successors(node) {
            if !infected[v] {
                let delay = truncated_gaussian_delay(mu, sigma, rng);
                heap.push(Arrival {
                    time: time + delay,
                    node: v,
                    from: node,
                });
            }
        }
    }
    Err(Error::Unreachable {
        reachable: times.len(),
        requested: stop_count,
    })
}

/// Independent cascade with a fresh uniform (0, 1) infection probability per arc.
pub fn simulate_ic<R: Rng + ?Sized>(
    g: &Graph,
    source: NodeId,
    stop_count: usize,
    rng: &mut R,
) -> Result<ContagionResult> {
    let mut probs = Vec::with_capacity(g.arc_count());
    for _ in 0..g.arc_count() {
        let mut p: f64 = rng.random();
        while p == 0.0 {
            p = rng.random();
        }
        probs.push(p);
    }
    simulate_ic_with_probs(g, source, stop_count, &probs, rng)
}

/// Independent cascade with given per-arc probabilities, indexed in [`Graph::arcs`] order.
/// Infection time is the slot index; each newly infected node tries every out-arc
/// once in the following slot.
pub fn simulate_ic_with_probs<R: Rng + ?Sized>(
    g: &Graph,
    source: NodeId,
    stop_count: usize,
    probs: &[f64],
    rng: &mut R,
) -> Result<ContagionResult> {
    g.check_node(source)?;
    if stop_count == 0 {
        return Err(Error::InvalidArgument("stop count must be at least 1".into()));
    }
    if probs.len() != g.arc_count() {
        return Err(Error::InvalidArgument(format!(
            "{} arc probabilities for {} arcs",
            probs.len(),
            g.arc_count()
        )));
    }
    let n = g.node_count();
    let mut offset = Vec::with_capacity(n + 1);
    offset.push(0);
    for u in 0..n {
        offset.push(offset[u] + g.out_degree(u));
    }

    let mut infected = vec![false; n];
    let mut times = BTreeMap::new();
    let mut infector = BTreeMap::new();
    infected[source] = true;
    times.insert(source, 0.0);
    let mut frontier = vec![source];
    let mut slot = 0usize;
    while times.len() < stop_count {
        slot += 1;
        let mut fresh: Vec<(NodeId, NodeId)> = Vec::new();
        for &u in &frontier {
            for (i, &v) in g.successors(u).iter().enumerate() {
                if infected[v] {
                    continue;
                }
                if rng.random::<f64>() < probs[offset[u] + i] {
                    infected[v] = true;
                    fresh.push((v, u));
                }
            }
        }
        if fresh.is_empty() {
            return Err(Error::Extinct {
                infected: times.len(),
                requested: stop_count,
            });
        }
        let room = stop_count - times.len();
        if fresh.len() > room {
            fresh.shuffle(rng);
            fresh.truncate(room);
        }
        fresh.sort_unstable();
        frontier.clear();
        for (v, u) in fresh {
            times.insert(v, slot as f64);
            infector.insert(v, u);
            frontier.push(v);
        }
    }
    Ok(ContagionResult {
        source,
        times,
        infector,
    })
}

/// Picks a source uniformly across degree classes: classes `1..bins-1` hold nodes
/// of exactly that degree, class `bins` everything at or above it. A non-empty
/// class is chosen uniformly, then a node within it.
pub fn sample_source_degree_binned<R: Rng + ?Sized>(g: &Graph, bins: usize, rng: &mut R) -> Result<NodeId> {
    if bins == 0 {
        return Err(Error::InvalidArgument("need at least one degree bin".into()));
    }
    if g.node_count() == 0 {
        return Err(Error::InvalidArgument("empty graph".into()));
    }
    let mut classes: Vec<Vec<NodeId>> = vec![Vec::new(); bins];
    for v in 0..g.node_count() {
        let d = g.degree(v).clamp(1, bins);
        classes[d - 1].push(v);
    }
    let non_empty: Vec<&Vec<NodeId>> = classes.iter().filter(|c| !c.is_empty()).collect();
    let class = non_empty[rng.random_range(0..non_empty.len())];
    Ok(class[rng.random_range(0..class.len())])
}

/// How revealed timestamps are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimestampDistribution {
    /// Uniformly without replacement.
    Unbiased,
    /// Iteratively, each remaining node with probability proportional to `t_i - t_source`.
    TimeBiased,
}

/// `round(fraction * n)` with halves rounded up.
pub fn revealed_count(fraction: f64, infected: usize) -> usize {
    (fraction * infected as f64 + 0.5).floor() as usize
}

pub fn sample_observed_unbiased<R: Rng + ?Sized>(
    result: &ContagionResult,
    fraction: f64,
    rng: &mut R,
) -> Result<Observation> {
    check_fraction(fraction)?;
    let count = revealed_count(fraction, result.len());
    sample_observed(result, count, TimestampDistribution::Unbiased, true, rng)
}

pub fn sample_observed_time_biased<R: Rng + ?Sized>(
    result: &ContagionResult,
    fraction: f64,
    rng: &mut R,
) -> Result<Observation> {
    check_fraction(fraction)?;
    let count = revealed_count(fraction, result.len());
    sample_observed(result, count, TimestampDistribution::TimeBiased, true, rng)
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "timestamp fraction must lie in (0, 1), got {fraction}"
        )))
    }
}

/// Reveals `count` timestamps. The whole infected set is always passed through.
/// With `exclude_source` the source's own time is never revealed.
pub fn sample_observed<R: Rng + ?Sized>(
    result: &ContagionResult,
    count: usize,
    dist: TimestampDistribution,
    exclude_source: bool,
    rng: &mut R,
) -> Result<Observation> {
    let pool: Vec<NodeId> = result
        .times
        .keys()
        .copied()
        .filter(|&v| !exclude_source || v != result.source)
        .collect();
    if count > pool.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot reveal {count} timestamps out of {} eligible nodes",
            pool.len()
        )));
    }
    let chosen = match dist {
        TimestampDistribution::Unbiased => {
            let mut pool = pool;
            let (picked, _) = pool.partial_shuffle(rng, count);
            picked.to_vec()
        }
        TimestampDistribution::TimeBiased => {
            let t_source = result.times[&result.source];
            let mut remaining: Vec<(NodeId, f64)> = pool
                .iter()
                .map(|&v| (v, (result.times[&v] - t_source).max(0.0)))
                .collect();
            let mut picked = Vec::with_capacity(count);
            for _ in 0..count {
                let total: f64 = remaining.iter().map(|&(_, w)| w).sum();
                let idx = if total > 0.0 {
                    let mut target = rng.random::<f64>() * total;
                    let mut idx = remaining.len() - 1;
                    for (i, &(_, w)) in remaining.iter().enumerate() {
                        if target < w {
                            idx = i;
                            break;
                        }
                        target -= w;
                    }
                    // Never land on a zero-weight entry through rounding.
                    while remaining[idx].1 == 0.0 && idx > 0 {
                        idx -= 1;
                    }
                    idx
                } else {
                    rng.random_range(0..remaining.len())
                };
                picked.push(remaining.remove(idx).0);
            }
            picked
        }
    };
    let tau = chosen.into_iter().map(|v| (v, result.times[&v])).collect();
    Observation::new(result.times.keys().copied(), tau)
}
