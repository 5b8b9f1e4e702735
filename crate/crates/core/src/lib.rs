//! Numerical laboratory for mean-field interacting particle systems.

pub mod entropy;
pub mod error;
pub mod experiments;
pub mod field;
pub mod io;
pub mod particle;
pub mod pde;
pub mod rng;
pub mod transport;

pub use error::{LabError, Result};
