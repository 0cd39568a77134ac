use serde::{Deserialize, Serialize};

use super::{bpf_loglik, is_loglik, EstimatorError, EstimatorKind, IsScale, LogLikelihoodEstimate};
use crate::auxiliary::AuxiliaryBlock;
use crate::error::{Error, Result};
use crate::models::{
    log_prior, GaussianIIDModel, InitVariance, LeverageForm, LinearGaussianModel, PriorSpec,
    SVLeverageModel,
};

/// The extended-target kernel `Phi_theta(u) = -(log p_hat(y; u) + log p(theta))`.
///
/// Implementations must be pure: the same `(theta, u)` gives the same value.
pub trait Potential: Sync {
    fn aux_shape(&self) -> (usize, usize);

    /// `+inf` encodes zero prior density or a degenerate estimate.
    fn potential(&self, theta: &[f64], u: &AuxiliaryBlock) -> f64;

    fn log_prior(&self, _theta: &[f64]) -> f64 {
        0.0
    }
}

/// A log-likelihood estimator `u -> log p_hat_theta(y; u)`.
pub trait LikelihoodEstimator: Sync {
    fn aux_shape(&self) -> (usize, usize);

    fn log_likelihood(
        &self,
        theta: &[f64],
        u: &AuxiliaryBlock,
    ) -> Result<LogLikelihoodEstimate, EstimatorError>;
}

/// Which model a parameter vector is mapped into.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    /// IID Gaussian model with fixed scales; `theta = [mu]`.
    IidMean {
        sigma_v: f64,
        sigma_e: f64,
        scale: IsScale,
    },
    /// Leveraged SV model; `theta = [mu, phi, sigma_v, rho]`.
    SvLeverage {
        init: InitVariance,
        leverage: LeverageForm,
    },
    /// Linear Gaussian SSM with fixed dynamics; `theta = [mu]`.
    LinearGaussianMean {
        phi: f64,
        sigma_v: f64,
        sigma_e: f64,
    },
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::IidMean { .. } | ModelSpec::LinearGaussianMean { .. } => 1,
            ModelSpec::SvLeverage { .. } => 4,
        }
    }

    pub fn supports(&self, kind: EstimatorKind) -> bool {
        matches!(
            (self, kind),
            (ModelSpec::IidMean { .. }, EstimatorKind::ImportanceSampling)
                | (ModelSpec::SvLeverage { .. }, EstimatorKind::BootstrapPf)
                | (
                    ModelSpec::LinearGaussianMean { .. },
                    EstimatorKind::BootstrapPf
                )
        )
    }
}

/// Binds a model, its prior, the data and an estimator into a [`Potential`].
#[derive(Debug, Clone)]
pub struct PotentialEvaluator {
    spec: ModelSpec,
    prior: PriorSpec,
    data: Vec<f64>,
    kind: EstimatorKind,
    n_samples: usize,
}

impl PotentialEvaluator {
    pub fn new(
        spec: ModelSpec,
        prior: PriorSpec,
        data: Vec<f64>,
        kind: EstimatorKind,
        n_samples: usize,
    ) -> Result<Self> {
        if !spec.supports(kind) {
            return Err(Error::InvalidModel(format!(
                "{kind:?} is not available for {spec:?}"
            )));
        }
        if prior.dim() != spec.dim() {
            return Err(Error::InvalidPrior(format!(
                "prior has {} components, model has {} parameters",
                prior.dim(),
                spec.dim()
            )));
        }
        if n_samples == 0 {
            return Err(Error::InvalidModel("need at least one sample".into()));
        }
        if data.is_empty() {
            return Err(Error::InvalidModel("no observations".into()));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(*bad));
        }
        Ok(Self {
            spec,
            prior,
            data,
            kind,
            n_samples,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }
}

fn invalid(e: Error) -> EstimatorError {
    EstimatorError::InvalidParameters(e.to_string())
}

impl LikelihoodEstimator for PotentialEvaluator {
    fn aux_shape(&self) -> (usize, usize) {
        let t = self.data.len();
        match self.kind {
            EstimatorKind::ImportanceSampling => (t, self.n_samples),
            EstimatorKind::BootstrapPf => (t + 1, self.n_samples + 1),
        }
    }

    fn log_likelihood(
        &self,
        theta: &[f64],
        u: &AuxiliaryBlock,
    ) -> Result<LogLikelihoodEstimate, EstimatorError> {
        let expected = LikelihoodEstimator::aux_shape(self);
        if u.shape() != expected {
            return Err(EstimatorError::ShapeMismatch {
                expected,
                found: u.shape(),
            });
        }
        if theta.len() != self.dim() {
            return Err(EstimatorError::InvalidParameters(format!(
                "expected {} parameters, got {}",
                self.dim(),
                theta.len()
            )));
        }
        match self.spec {
            ModelSpec::IidMean {
                sigma_v,
                sigma_e,
                scale,
            } => {
                let model = GaussianIIDModel::new(theta[0], sigma_v, sigma_e).map_err(invalid)?;
                is_loglik(&model, scale, &self.data, u)
            }
            ModelSpec::SvLeverage { init, leverage } => {
                let model = SVLeverageModel::with_options(
                    theta[0], theta[1], theta[2], theta[3], init, leverage,
                )
                .map_err(invalid)?;
                bpf_loglik(&model, &self.data, u)
            }
            ModelSpec::LinearGaussianMean {
                phi,
                sigma_v,
                sigma_e,
            } => {
                let model =
                    LinearGaussianModel::new(theta[0], phi, sigma_v, sigma_e).map_err(invalid)?;
                bpf_loglik(&model, &self.data, u)
            }
        }
    }
}

impl Potential for PotentialEvaluator {
    fn aux_shape(&self) -> (usize, usize) {
        LikelihoodEstimator::aux_shape(self)
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        log_prior(&self.prior, theta)
    }

    /// Panics if `u` does not have [`Potential::aux_shape`].
    fn potential(&self, theta: &[f64], u: &AuxiliaryBlock) -> f64 {
        let lp = log_prior(&self.prior, theta);
        if lp == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        match self.log_likelihood(theta, u) {
            Ok(est) => {
                let phi = -(est.log_likelihood + lp);
                if phi.is_nan() {
                    f64::INFINITY
                } else {
                    phi
                }
            }
            Err(EstimatorError::ShapeMismatch { expected, found }) => {
                panic!("auxiliary block has shape {found:?}, potential expects {expected:?}")
            }
            Err(_) => f64::INFINITY,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auxiliary::sample_prior;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn iid(prior: PriorSpec) -> PotentialEvaluator {
        PotentialEvaluator::new(
            ModelSpec::IidMean {
                sigma_v: 0.3,
                sigma_e: 0.1,
                scale: IsScale::Stddev,
            },
            prior,
            vec![0.4, 0.6, 0.5],
            EstimatorKind::ImportanceSampling,
            10,
        )
        .unwrap()
    }

    #[test]
    fn outside_prior_support_is_infinite() {
        let ev = iid(PriorSpec::iid_mean(-1.0, 1.0).unwrap());
        let u = sample_prior(3, 10, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(ev.potential(&[1.5], &u), f64::INFINITY);
        assert!(ev.potential(&[0.5], &u).is_finite());
    }

    #[test]
    fn flat_prior_gives_negative_loglik() {
        let ev = iid(PriorSpec::flat(1));
        let u = sample_prior(3, 10, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let ll = ev.log_likelihood(&[0.45], &u).unwrap().log_likelihood;
        assert_eq!(ev.potential(&[0.45], &u), -ll);
    }

    #[test]
    fn sv_invalid_parameters_are_infinite() {
        let ev = PotentialEvaluator::new(
            ModelSpec::SvLeverage {
                init: InitVariance::AsPrinted,
                leverage: LeverageForm::Correlation,
            },
            PriorSpec::sv_leverage(),
            vec![0.1, -0.3, 0.2],
            EstimatorKind::BootstrapPf,
            5,
        )
        .unwrap();
        assert_eq!(Potential::aux_shape(&ev), (4, 6));
        let u = sample_prior(4, 6, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        // rho = -1.2 has positive prior density but no valid model.
        assert_eq!(ev.potential(&[0.0, 0.9, 0.2, -1.2], &u), f64::INFINITY);
        assert!(ev.potential(&[0.0, 0.9, 0.2, -0.5], &u).is_finite());
    }

    #[test]
    fn construction_checks() {
        let spec = ModelSpec::IidMean {
            sigma_v: 0.3,
            sigma_e: 0.1,
            scale: IsScale::Stddev,
        };
        let prior = PriorSpec::iid_mean(-1.0, 1.0).unwrap();
        assert!(PotentialEvaluator::new(
            spec,
            prior.clone(),
            vec![0.1],
            EstimatorKind::BootstrapPf,
            10
        )
        .is_err());
        assert!(PotentialEvaluator::new(
            spec,
            PriorSpec::sv_leverage(),
            vec![0.1],
            EstimatorKind::ImportanceSampling,
            10
        )
        .is_err());
        assert!(PotentialEvaluator::new(
            spec,
            prior.clone(),
            vec![],
            EstimatorKind::ImportanceSampling,
            10
        )
        .is_err());
        assert!(PotentialEvaluator::new(
            spec,
            prior,
            vec![0.1],
            EstimatorKind::ImportanceSampling,
            0
        )
        .is_err());
    }

    #[test]
    #[should_panic(expected = "potential expects")]
    fn wrong_shape_panics() {
        let ev = iid(PriorSpec::flat(1));
        let u = sample_prior(2, 10, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        ev.potential(&[0.5], &u);
    }
}
