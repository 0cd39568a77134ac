//! Stochastic volatility with leverage.
//!
//! Given the log-volatility `x_t`, the next state and the current return are
//! jointly Gaussian:
//!
//! ```text
//! [x_{t+1}]         ( [mu + phi (x_t - mu)]   [ sigma_v^2   c_t      ] )
//! [y_t    ] | x_t ~ N( [0                  ] , [ c_t        exp(x_t) ] )
//! ```
//!
//! where the cross term `c_t` is `rho * sigma_v * exp(x_t / 2)` when `rho`
//! is read as a correlation ([`LeverageForm::Correlation`]) or `rho` itself
//! when read as a raw covariance ([`LeverageForm::CovarianceAsPrinted`]).
//!
//! The filter uses the factorization
//! `p(x_{t+1}, y_t | x_t) = g(y_t | x_t) f(x_{t+1} | x_t, y_t)` with
//! `g(y_t | x_t) = N(0, exp(x_t))` and
//! `f(x_{t+1} | x_t, y_t) = N(m_t + c_t exp(-x_t) y_t, sigma_v^2 - c_t^2 exp(-x_t))`.
//! The first transition `x_0 -> x_1` has no paired observation and uses the
//! marginal `N(mu + phi (x_0 - mu), sigma_v^2)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{normal_log_density, StateSpaceModel};
use crate::error::{Error, Result};

/// Variance of the initial state `x_0 ~ N(mu, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitVariance {
    /// `sigma_v^2 / (1 - phi^2)^2`.
    #[default]
    AsPrinted,
    /// The AR(1) stationary variance `sigma_v^2 / (1 - phi^2)`.
    Stationary,
}

/// How the leverage parameter enters the joint covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeverageForm {
    /// Cross term `rho * sigma_v * exp(x_t / 2)`; positive definite for all
    /// `|rho| < 1`.
    #[default]
    Correlation,
    /// Cross term `rho`; positive definite only while
    /// `rho^2 < sigma_v^2 exp(x_t)`.
    CovarianceAsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SVLeverageModel {
    pub mu: f64,
    pub phi: f64,
    pub sigma_v: f64,
    pub rho: f64,
    pub init: InitVariance,
    pub leverage: LeverageForm,
}

/// A simulated path: `states` holds `x_0..=x_T`, `observations` holds `y_1..=y_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvPath {
    pub states: Vec<f64>,
    pub observations: Vec<f64>,
}

impl SVLeverageModel {
    pub fn new(mu: f64, phi: f64, sigma_v: f64, rho: f64) -> Result<Self> {
        Self::with_options(
            mu,
            phi,
            sigma_v,
            rho,
            InitVariance::default(),
            LeverageForm::default(),
        )
    }

    pub fn with_options(
        mu: f64,
        phi: f64,
        sigma_v: f64,
        rho: f64,
        init: InitVariance,
        leverage: LeverageForm,
    ) -> Result<Self> {
        let ok = mu.is_finite()
            && phi.abs() < 1.0
            && sigma_v > 0.0
            && sigma_v.is_finite()
            && rho.abs() < 1.0;
        if !ok {
            return Err(Error::InvalidModel(format!(
                "SV model needs |phi| < 1, sigma_v > 0 and |rho| < 1, got ({mu}, {phi}, {sigma_v}, {rho})"
            )));
        }
        Ok(Self {
            mu,
            phi,
            sigma_v,
            rho,
            init,
            leverage,
        })
    }

    pub fn initial_variance(&self) -> f64 {
        let d = 1.0 - self.phi * self.phi;
        match self.init {
            InitVariance::AsPrinted => self.sigma_v * self.sigma_v / (d * d),
            InitVariance::Stationary => self.sigma_v * self.sigma_v / d,
        }
    }

    /// Cross covariance of `(x_{t+1}, y_t)` given `x_t`.
    pub fn cross_covariance(&self, x: f64) -> f64 {
        match self.leverage {
            LeverageForm::Correlation => self.rho * self.sigma_v * (0.5 * x).exp(),
            LeverageForm::CovarianceAsPrinted => self.rho,
        }
    }

    fn state_mean(&self, x: f64) -> f64 {
        self.mu + self.phi * (x - self.mu)
    }

    /// Mean shift and variance of `x_{t+1} | x_t, y_t`, as `(gain, variance)`
    /// with conditional mean `state_mean + gain * y_t`.
    fn conditional(&self, x: f64) -> (f64, f64) {
        let inv_obs_var = (-x).exp();
        let c = self.cross_covariance(x);
        (
            c * inv_obs_var,
            self.sigma_v * self.sigma_v - c * c * inv_obs_var,
        )
    }

    /// One draw of `(x_{t+1}, y_t)` given `x_t` from two standard normals.
    /// Returns `None` when the joint covariance is not positive definite.
    pub fn joint_step(&self, x: f64, eps: f64, eta: f64) -> Option<(f64, f64)> {
        let (gain, var) = self.conditional(x);
        if !(var > 0.0) {
            return None;
        }
        let y = (0.5 * x).exp() * eps;
        Some((self.state_mean(x) + gain * y + var.sqrt() * eta, y))
    }
}

impl StateSpaceModel for SVLeverageModel {
    fn initial_state(&self, xi: f64) -> f64 {
        self.mu + self.initial_variance().sqrt() * xi
    }

    fn transition(&self, prev: f64, prev_obs: Option<f64>, xi: f64) -> f64 {
        match prev_obs {
            None => self.state_mean(prev) + self.sigma_v * xi,
            Some(y) => {
                let (gain, var) = self.conditional(prev);
                if !(var > 0.0) {
                    return f64::NAN;
                }
                self.state_mean(prev) + gain * y + var.sqrt() * xi
            }
        }
    }

    fn log_observation_density(&self, y: f64, x: f64) -> f64 {
        normal_log_density(y, 0.0, (0.5 * x).exp())
    }
}

/// Simulates `T` returns. Fails if the joint covariance stops being positive
/// definite along the path.
pub fn simulate_sv<R: Rng + ?Sized>(
    model: &SVLeverageModel,
    t: usize,
    rng: &mut R,
) -> Result<SvPath> {
    let mut states = Vec::with_capacity(t + 1);
    let mut observations = Vec::with_capacity(t);
    let mut x = model.initial_state(rng.sample(StandardNormal));
    states.push(x);
    if t == 0 {
        return Ok(SvPath {
            states,
            observations,
        });
    }
    x = model.transition(x, None, rng.sample(StandardNormal));
    states.push(x);
    for step in 1..=t {
        let eps: f64 = rng.sample(StandardNormal);
        let eta: f64 = rng.sample(StandardNormal);
        let (next, y) = model.joint_step(x, eps, eta).ok_or_else(|| {
            Error::InvalidModel(format!(
                "joint covariance not positive definite at t = {step} (x = {x})"
            ))
        })?;
        observations.push(y);
        if step < t {
            states.push(next);
        }
        x = next;
    }
    Ok(SvPath {
        states,
        observations,
    })
}
