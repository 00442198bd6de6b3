use thiserror::Error;

use crate::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("node {0} is not in the graph")]
    UnknownNode(NodeId),

    #[error("unknown node label '{0}'")]
    UnknownLabel(String),

    #[error("arc {from} -> {to} does not exist")]
    MissingArc { from: NodeId, to: NodeId },

    #[error("could only remove {removed} of {requested} edges without disconnecting the graph")]
    EdgeRemoval { requested: usize, removed: usize },

    #[error("graph is not connected ({components} components)")]
    Disconnected { components: usize },

    #[error("infected subgraph is disconnected: components {0:?}")]
    InfectedDisconnected(Vec<Vec<String>>),

    #[error("only {reachable} nodes are reachable from the source, {requested} requested")]
    Unreachable { reachable: usize, requested: usize },

    #[error("cascade died out after {infected} infections ({requested} requested)")]
    Extinct { infected: usize, requested: usize },

    #[error(
        "mu cannot be estimated from {observed} observed timestamp(s); pass it explicitly (--mu)"
    )]
    TooFewTimestamps { observed: usize },

    #[error("node {0} is not a candidate source for this observation")]
    NotCandidate(NodeId),

    #[error("spreading tree does not cover the infected set")]
    NodeSetMismatch,

    #[error("power iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("graph has more than {cap} spanning trees")]
    TooManyTrees { cap: u64 },

    #[error("graph is directed; {0} requires an undirected graph")]
    Directed(&'static str),

    #[error("source {0} does not appear in the ranking")]
    SourceNotRanked(NodeId),

    #[error("run {run}: gave up after {attempts} attempts ({last})")]
    RetriesExhausted {
        run: usize,
        attempts: usize,
        last: String,
    },

    #[error("{0}")]
    InvalidArgument(String),
}

impl Error {
    /// Whether the failure is an artifact of one random draw, so the caller may resample.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Extinct { .. } | Error::Unreachable { .. })
    }
}
