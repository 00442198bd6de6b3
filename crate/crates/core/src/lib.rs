//! Ranking candidate sources of a contagion from the infected set and a few
//! infection timestamps.
//!
//! ```
//! use srcrank::ranking::{rank, Algorithm};
//!
//! let g = srcrank::datasets::florentine();
//! let obs = srcrank::Observation::new(0..15, [(2, 0.0), (7, 120.0), (11, 260.0)].into())?;
//! let tr = rank(&g, &obs, Algorithm::Tr, Some(100.0))?;
//! assert_eq!(tr.len(), 15);
//! println!("most likely source: {}", g.label(tr.ordered[0]));
//! # Ok::<(), srcrank::Error>(())
//! ```

pub mod datasets;
pub mod diffusion;
pub mod eif;
pub mod error;
pub mod eval;
pub mod graph;
pub mod observation;
pub mod oracle;
pub mod ranking;
pub mod tree;
pub mod view;

pub use error::{Error, Result};
pub use graph::Graph;
pub use observation::Observation;
pub use tree::SpreadingTree;

/// Dense node index in `0..node_count`.
pub type NodeId = usize;
