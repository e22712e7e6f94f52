//! Backdoor attacks on GNN-based link prediction.
//!
//! The crate trains graph auto-encoder link predictors (GAE and VGAE) from
//! scratch on a small dense/sparse numeric kernel, implements a single-node
//! trigger backdoor (trigger generation from feature statistics, NPS pair
//! selection, poisoning, activation) and the ASR / AUC / BPD evaluation
//! protocol used to measure it.
//!
//! Module map:
//!
//! - [`tensor`]: dense and CSR matrices, nonlinearities, seeded RNG, Adam.
//! - [`graph`]: attributed graphs, dataset loaders, edge splits, normalized adjacency.
//! - [`model`]: GAE / VGAE encoder, decoder, loss, manual backprop, training loop.
//! - [`attack`]: trigger construction, poisoned pair selection, injection, activation.
//! - [`eval`]: metrics, experiment / sweep / ablation drivers and reporting.
//! - [`config`]: the line-oriented run configuration shared with the CLI.

pub mod attack;
pub mod config;
pub mod error;
pub mod eval;
pub mod graph;
pub mod model;
pub mod tensor;

pub use error::{Error, Result};

/// Version string embedded into every artifact this crate writes.
pub const VERSION: &str = concat!("gbl ", env!("CARGO_PKG_VERSION"));
