//! Concrete models, their priors and data simulators.

mod iid;
mod linear_gaussian;
mod prior;
mod sv;

pub use iid::{exact_iid_loglik, simulate_iid, GaussianIIDModel};
pub use linear_gaussian::LinearGaussianModel;
pub use prior::{log_prior, PriorComponent, PriorSpec};
pub use sv::{simulate_sv, InitVariance, LeverageForm, SVLeverageModel, SvPath};

pub(crate) use prior::normal_log_density;

/// A scalar-state model the bootstrap particle filter can run on.
///
/// States are simulated from supplied standard-normal variates so that the
/// filter output is a deterministic function of the auxiliary block.
pub trait StateSpaceModel {
    /// Draws `x_0` from one standard-normal variate.
    fn initial_state(&self, xi: f64) -> f64;

    /// Draws `x_t` given `x_{t-1}`, the previous observation `y_{t-1}` (absent
    /// at the first step) and one standard-normal variate. A non-finite
    /// return marks an undefined conditional.
    fn transition(&self, prev: f64, prev_obs: Option<f64>, xi: f64) -> f64;

    /// `log g(y_t | x_t)`.
    fn log_observation_density(&self, y: f64, x: f64) -> f64;
}
