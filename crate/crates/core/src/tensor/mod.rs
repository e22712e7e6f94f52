//! Deterministic numeric kernel: row-major dense matrices, CSR sparse
//! matrices, elementwise nonlinearities, a seeded RNG and Adam.
//!
//! Everything is `f64` and single-threaded, so results are bitwise
//! reproducible for a fixed seed.

mod adam;
pub(crate) mod dense;
mod rng;
mod sparse;

pub use adam::{Adam, AdamConfig};
pub use dense::{glorot_init, relu, sigmoid, DenseMatrix};
pub use rng::Rng;
pub use sparse::SparseMatrix;
