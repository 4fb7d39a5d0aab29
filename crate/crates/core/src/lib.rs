//! Causal direction inference for bivariate continuous data based on the
//! Gaussianity of kernel ridge regression residuals, together with a
//! numerical lab for the cumulant-shrinkage asymmetry behind the method and
//! a synthetic benchmark harness.

pub mod asymmetry;
mod eig;
pub mod error;
pub mod gaussianity;
pub mod inference;
pub mod kernel;
pub mod pairfile;
pub mod rate_curve;
pub mod regression;
pub mod rng;
pub mod synthetic;
pub mod transform;
pub mod whitening;

pub use error::{Error, Result};
