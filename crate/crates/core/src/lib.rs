//! Asymptotic-preserving, positivity-preserving discontinuous Galerkin
//! solver for the one-dimensional semiconductor Boltzmann equation in the
//! diffusive scaling.

pub mod dg;
pub mod error;
pub mod field;
pub mod harness;
pub mod hermite;
pub mod limit;
pub mod quadrature;
pub mod scheme;
pub mod tridiag;

pub use error::{ApdgError, Result};
