//! Likelihood estimators driven entirely by an [`AuxiliaryBlock`].
//!
//! [`AuxiliaryBlock`]: crate::auxiliary::AuxiliaryBlock

mod importance;
mod particle;
mod potential;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use importance::{is_loglik, IsScale};
pub use particle::{bpf_loglik, bpf_run, systematic_resample, BpfOutput, ParticlePaths};
pub use potential::{LikelihoodEstimator, ModelSpec, Potential, PotentialEvaluator};

/// A log-likelihood estimate and its per-time contributions
/// `log(sum_i w_t^(i)) - log N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLikelihoodEstimate {
    pub log_likelihood: f64,
    pub per_time_log_terms: Vec<f64>,
}

impl LogLikelihoodEstimate {
    fn from_terms(per_time_log_terms: Vec<f64>) -> Self {
        Self {
            log_likelihood: per_time_log_terms.iter().sum(),
            per_time_log_terms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("auxiliary block has shape {found:?}, estimator expects {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// Every weight vanished (or a state became undefined) at time `time`.
    #[error("all weights vanished at t = {time}")]
    Degenerate { time: usize },
    #[error("parameters outside the model's domain: {0}")]
    InvalidParameters(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    ImportanceSampling,
    BootstrapPf,
}

/// `log(sum exp(v))` with a max shift. Returns `-inf` when every term is
/// `-inf`, and NaN if any term is NaN.
pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.iter().any(|v| v.is_nan()) {
        return f64::NAN;
    }
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
