//! Randomized compression of far-field kernel interaction matrices.
//!
//! Rows of a target-by-source kernel matrix are subsampled, an interpolative
//! decomposition of the subsample picks skeleton sources, and the error of
//! the resulting reconstruction of the full matrix is measured exactly or
//! by Monte Carlo.

pub mod bounds_verify;
pub mod compress;
pub mod datagen;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod kernel;
pub mod lowrank;
pub mod rng;
pub mod sampling;

pub use error::{Error, Result};
