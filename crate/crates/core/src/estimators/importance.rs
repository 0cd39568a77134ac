use serde::{Deserialize, Serialize};

use super::{log_sum_exp, EstimatorError, LogLikelihoodEstimate};
use crate::auxiliary::AuxiliaryBlock;
use crate::models::{normal_log_density, GaussianIIDModel};

/// Scale multiplying the auxiliary variates when drawing `x_t = mu + s u_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsScale {
    /// `s = sigma_v^2`. The samples are then draws from `N(mu, sigma_v^4)`,
    /// and the estimator is unbiased for the IID model with `sigma_v`
    /// replaced by `sigma_v^2`.
    VarianceAsPrinted,
    /// `s = sigma_v`: the samples are prior draws of `x_t` and the estimator
    /// is unbiased for the model's own likelihood.
    #[default]
    Stddev,
}

impl IsScale {
    pub fn proposal_scale(self, model: &GaussianIIDModel) -> f64 {
        match self {
            IsScale::VarianceAsPrinted => model.sigma_v * model.sigma_v,
            IsScale::Stddev => model.sigma_v,
        }
    }

    /// The IID model whose exact likelihood this estimator targets.
    pub fn targeted_model(self, model: &GaussianIIDModel) -> GaussianIIDModel {
        GaussianIIDModel {
            sigma_v: self.proposal_scale(model),
            ..*model
        }
    }
}

/// Importance-sampling estimate with the state prior as proposal.
///
/// `u` must have shape `T x N`; row `t` drives the `N` samples at time `t`.
pub fn is_loglik(
    model: &GaussianIIDModel,
    scale: IsScale,
    y: &[f64],
    u: &AuxiliaryBlock,
) -> Result<LogLikelihoodEstimate, EstimatorError> {
    if u.rows() != y.len() {
        return Err(EstimatorError::ShapeMismatch {
            expected: (y.len(), u.cols()),
            found: u.shape(),
        });
    }
    let s = scale.proposal_scale(model);
    let ln_n = (u.cols() as f64).ln();
    let mut log_w = vec![0.0; u.cols()];
    let mut terms = Vec::with_capacity(y.len());
    for (t, &yt) in y.iter().enumerate() {
        for (w, &ui) in log_w.iter_mut().zip(u.row(t)) {
            *w = normal_log_density(yt, model.mu + s * ui, model.sigma_e);
        }
        let lse = log_sum_exp(&log_w);
        if !lse.is_finite() {
            return Err(EstimatorError::Degenerate { time: t + 1 });
        }
        terms.push(lse - ln_n);
    }
    Ok(LogLikelihoodEstimate::from_terms(terms))
}
