//! Numerical laboratory for velocity averages of the free transport equation,
//! hyperbolic Sobolev smoothing, cone multipliers, and their sharp constants.

pub mod acceptance;
pub mod cli_runner;
pub mod error;
pub mod exponent_calculus;
pub mod quadrature;
pub mod radon_duality;
pub mod scaling_experiments;
pub mod spectral_grid;
pub mod velocity_average;
pub mod symbol_library;

pub use error::{Error, Result};
