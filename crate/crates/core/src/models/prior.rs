//! Independent per-parameter priors.

use serde::{Deserialize, Serialize};

use crate::auxiliary::normal_cdf;
use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// One component of a product prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PriorComponent {
    /// Improper constant density; log density 0 everywhere.
    Flat,
    Normal {
        mean: f64,
        sd: f64,
    },
    /// Normal restricted to the open interval `(lower, upper)` and
    /// renormalized by the mass it retains.
    TruncatedNormal {
        mean: f64,
        sd: f64,
        lower: f64,
        upper: f64,
    },
    /// Shape/rate parametrization, mean `shape / rate`.
    Gamma {
        shape: f64,
        rate: f64,
    },
}

impl PriorComponent {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            PriorComponent::Flat => true,
            PriorComponent::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            PriorComponent::TruncatedNormal {
                mean,
                sd,
                lower,
                upper,
            } => mean.is_finite() && sd > 0.0 && sd.is_finite() && lower < upper,
            PriorComponent::Gamma { shape, rate } => {
                shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPrior(format!("{self:?}")))
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match *self {
            PriorComponent::Flat | PriorComponent::Normal { .. } => true,
            PriorComponent::TruncatedNormal { lower, upper, .. } => lower < x && x < upper,
            PriorComponent::Gamma { .. } => x > 0.0,
        }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return f64::NEG_INFINITY;
        }
        match *self {
            PriorComponent::Flat => 0.0,
            PriorComponent::Normal { mean, sd } => normal_log_density(x, mean, sd),
            PriorComponent::TruncatedNormal {
                mean,
                sd,
                lower,
                upper,
            } => {
                let mass = normal_cdf((upper - mean) / sd) - normal_cdf((lower - mean) / sd);
                normal_log_density(x, mean, sd) - mass.ln()
            }
            PriorComponent::Gamma { shape, rate } => {
                shape * rate.ln() - libm::lgamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
        }
    }
}

pub(crate) fn normal_log_density(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

/// Product prior over a parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    components: Vec<PriorComponent>,
}

impl PriorSpec {
    pub fn new(components: Vec<PriorComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidPrior("no components".into()));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(Self { components })
    }

    /// `TN_(lower, upper)(mu; 0, 1)` for the IID model with only the mean unknown.
    pub fn iid_mean(lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![PriorComponent::TruncatedNormal {
            mean: 0.0,
            sd: 1.0,
            lower,
            upper,
        }])
    }

    /// Priors on `(mu, phi, sigma_v, rho)` for the leveraged SV model.
    pub fn sv_leverage() -> Self {
        Self {
            components: vec![
                PriorComponent::Normal { mean: 0.0, sd: 2.0 },
                PriorComponent::TruncatedNormal {
                    mean: 0.9,
                    sd: 0.05,
                    lower: -1.0,
                    upper: 1.0,
                },
                PriorComponent::Gamma {
                    shape: 2.0,
                    rate: 0.05,
                },
                PriorComponent::Normal {
                    mean: -0.5,
                    sd: 0.2,
                },
            ],
        }
    }

    pub fn flat(dim: usize) -> Self {
        Self {
            components: vec![PriorComponent::Flat; dim.max(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[PriorComponent] {
        &self.components
    }

    pub fn in_support(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && self
                .components
                .iter()
                .zip(theta)
                .all(|(c, &x)| c.in_support(x))
    }
}

/// Sum of component log densities; `-inf` outside the support.
///
/// # Panics
///
/// If `theta` does not have one entry per component.
pub fn log_prior(spec: &PriorSpec, theta: &[f64]) -> f64 {
    assert_eq!(
        theta.len(),
        spec.dim(),
        "parameter vector does not match prior dimension"
    );
    let mut total = 0.0;
    for (c, &x) in spec.components.iter().zip(theta) {
        let lp = c.log_density(x);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        total += lp;
    }
    total
}
