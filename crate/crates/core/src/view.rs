use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::observation::Observation;
use crate::NodeId;

/// An observation restricted to its infected subgraph, in dense local ids.
///
/// Local ids follow ascending global id, so tie-breaking by local id and by
/// global id agree.
#[derive(Debug, Clone)]
pub struct CascadeView {
    pub(crate) sub: Graph,
    pub(crate) global: Vec<NodeId>,
    pub(crate) tau: Vec<Option<f64>>,
    /// Observed nodes by ascending time, ties by id.
    pub(crate) alpha: Vec<usize>,
    pub(crate) candidate: Vec<bool>,
}

impl CascadeView {
    pub fn new(g: &Graph, obs: &Observation) -> Result<Self> {
        obs.check_against(g)?;
        let (sub, global) = g.induced_subgraph(obs.infected());
        let tau: Vec<Option<f64>> = global.iter().map(|&v| obs.time(v)).collect();
        let mut alpha: Vec<usize> = (0..global.len()).filter(|&i| tau[i].is_some()).collect();
        alpha.sort_by(|&a, &b| tau[a].unwrap().total_cmp(&tau[b].unwrap()).then(a.cmp(&b)));
        let earliest = alpha.first().and_then(|&a| tau[a]);
        let candidate = tau
            .iter()
            .map(|t| t.is_none() || *t == earliest)
            .collect();
        Ok(CascadeView {
            sub,
            global,
            tau,
            alpha,
            candidate,
        })
    }

    pub fn len(&self) -> usize {
        self.global.len()
    }

    pub fn is_empty(&self) -> bool {
        self.global.is_empty()
    }

    pub fn subgraph(&self) -> &Graph {
        &self.sub
    }

    pub fn global_id(&self, local: usize) -> NodeId {
        self.global[local]
    }

    pub fn local_id(&self, global: NodeId) -> Option<usize> {
        self.global.binary_search(&global).ok()
    }

    pub(crate) fn candidates(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.candidate[i])
    }

    /// Errors with the component membership (as labels) when the infected
    /// subgraph is not weakly connected.
    pub fn ensure_connected(&self) -> Result<()> {
        let comps = self.sub.components();
        if comps.len() <= 1 {
            return Ok(());
        }
        Err(Error::InfectedDisconnected(
            comps
                .into_iter()
                .map(|c| c.into_iter().map(|v| self.sub.label(v).to_string()).collect())
                .collect(),
        ))
    }
}
