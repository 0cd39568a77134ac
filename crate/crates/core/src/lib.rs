//! Correlated pseudo-marginal Metropolis-Hastings with Crank-Nicolson
//! updates of the auxiliary variables.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auxiliary;
pub mod diagnostics;
mod error;
pub mod estimators;
pub mod experiment;
pub mod models;
pub mod peskun;
pub mod sampler;

pub use error::{Error, Result};
pub use sampler::ChainRng;
