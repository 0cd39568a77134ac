use rand::Rng;
use rand_distr::StandardNormal;

use super::normal_log_density;
use crate::error::{Error, Result};

/// `x_t ~ N(mu, sigma_v^2)`, `y_t | x_t ~ N(x_t, sigma_e^2)`, independent over `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianIIDModel {
    pub mu: f64,
    pub sigma_v: f64,
    pub sigma_e: f64,
}

impl GaussianIIDModel {
    pub fn new(mu: f64, sigma_v: f64, sigma_e: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma_v > 0.0) || !(sigma_e > 0.0) {
            return Err(Error::InvalidModel(format!(
                "IID model needs finite mu and positive scales, got ({mu}, {sigma_v}, {sigma_e})"
            )));
        }
        if !sigma_v.is_finite() || !sigma_e.is_finite() {
            return Err(Error::InvalidModel("scales must be finite".into()));
        }
        Ok(Self {
            mu,
            sigma_v,
            sigma_e,
        })
    }

    /// Variance of the marginal `y_t ~ N(mu, sigma_v^2 + sigma_e^2)`.
    pub fn marginal_variance(&self) -> f64 {
        self.sigma_v * self.sigma_v + self.sigma_e * self.sigma_e
    }
}

pub fn simulate_iid<R: Rng + ?Sized>(model: &GaussianIIDModel, t: usize, rng: &mut R) -> Vec<f64> {
    (0..t)
        .map(|_| {
            let v: f64 = rng.sample(StandardNormal);
            let e: f64 = rng.sample(StandardNormal);
            model.mu + model.sigma_v * v + model.sigma_e * e
        })
        .collect()
}

/// Exact log-likelihood `sum_t log N(y_t; mu, sigma_v^2 + sigma_e^2)`.
pub fn exact_iid_loglik(model: &GaussianIIDModel, y: &[f64]) -> f64 {
    let sd = model.marginal_variance().sqrt();
    y.iter()
        .map(|&yt| normal_log_density(yt, model.mu, sd))
        .sum()
}
