//! Deterministic coresets for constrained least-squares regression.

pub mod adversarial;
pub mod coreset;
pub mod error;
pub mod linalg;
pub mod solvers;
pub mod sparsify;

pub use error::{Error, Result};
