use rand::Rng;
use rand_distr::StandardNormal;

use super::{normal_log_density, StateSpaceModel};
use crate::error::{Error, Result};

/// Scalar AR(1) state observed in Gaussian noise:
/// `x_t = mu + phi (x_{t-1} - mu) + sigma_v v_t`, `y_t = x_t + sigma_e e_t`,
/// with `x_0` drawn from the stationary law.
///
/// Its likelihood is available from a Kalman filter, which makes it the
/// reference model for checking the particle filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearGaussianModel {
    pub mu: f64,
    pub phi: f64,
    pub sigma_v: f64,
    pub sigma_e: f64,
}

impl LinearGaussianModel {
    pub fn new(mu: f64, phi: f64, sigma_v: f64, sigma_e: f64) -> Result<Self> {
        let ok = mu.is_finite()
            && phi.abs() < 1.0
            && sigma_v > 0.0
            && sigma_e > 0.0
            && sigma_v.is_finite()
            && sigma_e.is_finite();
        if !ok {
            return Err(Error::InvalidModel(format!(
                "linear Gaussian model needs |phi| < 1 and positive scales, got ({mu}, {phi}, {sigma_v}, {sigma_e})"
            )));
        }
        Ok(Self {
            mu,
            phi,
            sigma_v,
            sigma_e,
        })
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma_v * self.sigma_v / (1.0 - self.phi * self.phi)
    }

    /// Returns `(x_0..=x_T, y_1..=y_T)`.
    pub fn simulate<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let mut states = Vec::with_capacity(t + 1);
        let mut obs = Vec::with_capacity(t);
        let mut x = self.initial_state(rng.sample(StandardNormal));
        states.push(x);
        for _ in 0..t {
            x = self.transition(x, None, rng.sample(StandardNormal));
            let e: f64 = rng.sample(StandardNormal);
            states.push(x);
            obs.push(x + self.sigma_e * e);
        }
        (states, obs)
    }
}

impl StateSpaceModel for LinearGaussianModel {
    fn initial_state(&self, xi: f64) -> f64 {
        self.mu + self.stationary_variance().sqrt() * xi
    }

    fn transition(&self, prev: f64, _prev_obs: Option<f64>, xi: f64) -> f64 {
        self.mu + self.phi * (prev - self.mu) + self.sigma_v * xi
    }

    fn log_observation_density(&self, y: f64, x: f64) -> f64 {
        normal_log_density(y, x, self.sigma_e)
    }
}
