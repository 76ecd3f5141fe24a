//! Structure-preserving integrators for the Benjamin and Benjamin–Ono equations
//! on a periodic domain.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod integrators;
pub mod solvers;
pub mod spectral;

pub use error::{Error, Result};
