//! Simulation and least-squares identification of stable linear stochastic
//! systems, with the spectral and moment diagnostics used to study how the
//! estimation error behaves for defective (Jordan) system matrices.

pub mod error;
pub mod lds;
pub mod linalg;
pub mod mc;
pub mod moments;
pub mod noise;
pub mod ols;
pub mod spectra;
pub mod talagrand;

pub use error::{Error, Result};
