//! Distributed data collection and storage for random wireless sensor networks.
//!
//! Every sensor is both a source and a storage node. Sources flood their
//! readings with a hop counter; receivers XOR accepted readings into a small
//! number of coded slots. A collector that queries a fraction of the nodes
//! recovers every reading by solving the resulting GF(2) system.
//!
//! Modules, bottom-up:
//! - [`netgraph`]: random geometric graph of the sensor field.
//! - [`coding`]: packets, soliton degree distributions, per-node coded storage.
//! - [`dsa1`]: counter-bounded flooding engine with counters `⌊n/d(u)⌋`.
//! - [`dsa2`]: local degree inference that sets counters without knowing `n`.
//! - [`decoder`]: query selection and the peeling + elimination solver.
//! - [`harness`]: Monte-Carlo sweeps, scaling regressions and table output.

pub mod coding;
pub mod decoder;
pub mod dsa1;
pub mod dsa2;
mod error;
pub mod harness;
pub mod netgraph;
pub mod seed;

pub use error::{Error, Result};

/// Node identifier, `0..n`.
pub type NodeId = usize;
