//! Sorted bootstrap particle filter with fixed random numbers.
//!
//! Layout of the auxiliary block, shape `(T + 1) x (N + 1)`:
//!
//! * row 0, columns `1..=N`: initial states `x_0`;
//! * row `t >= 1`, column 0: the resampling variate for step `t`, mapped to a
//!   uniform through the normal CDF;
//! * row `t >= 1`, columns `1..=N`: propagation variates for `x_t`.
//!
//! Row 0, column 0 is never read.
//!
//! Each step resamples (systematically, one uniform), propagates, sorts the
//! particles by their new state and only then weights them. Sorting makes the
//! map from `(theta, u)` to the estimate piecewise continuous, so nearby
//! parameters with the same `u` give nearby estimates.

use super::{EstimatorError, LogLikelihoodEstimate};
use crate::auxiliary::{gaussian_to_uniform, AuxiliaryBlock};
use crate::error::{Error, Result};
use crate::models::StateSpaceModel;

/// Ancestor indices from normalized `weights` and a single uniform.
///
/// The `i`-th point `(uniform + i) / N` selects the particle whose cumulative
/// weight interval `(C_{j-1}, C_j]` contains it.
pub fn systematic_resample(weights: &[f64], uniform: f64) -> Result<Vec<usize>> {
    if weights.is_empty() {
        return Err(Error::InvalidWeights("no weights".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidWeights(format!(
            "weight {w} is not a probability"
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidWeights(format!(
            "weights sum to {total}, not 1"
        )));
    }
    if !(uniform > 0.0 && uniform < 1.0) {
        return Err(Error::InvalidWeights(format!(
            "uniform {uniform} outside (0, 1)"
        )));
    }
    let mut out = vec![0; weights.len()];
    resample_into(weights, uniform, &mut out);
    Ok(out)
}

fn resample_into(weights: &[f64], uniform: f64, out: &mut [usize]) {
    let n = weights.len();
    let last = n - 1;
    let mut j = 0;
    let mut cumulative = weights[0];
    for (i, a) in out.iter_mut().enumerate() {
        let point = (uniform + i as f64) / n as f64;
        while point > cumulative && j < last {
            j += 1;
            cumulative += weights[j];
        }
        *a = j;
    }
}

/// Per-time particle clouds kept for path reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticlePaths {
    /// `states[t][i]`; sorted ascending within each `t >= 1`.
    pub states: Vec<Vec<f64>>,
    /// `parents[t - 1][i]` indexes `states[t - 1]`; one entry per `t >= 1`.
    pub parents: Vec<Vec<usize>>,
    /// Normalized weights at the final time.
    pub final_weights: Vec<f64>,
}

impl ParticlePaths {
    /// Full ancestral trajectory `x_{0:T}` of every final particle.
    pub fn trajectories(&self) -> Vec<Vec<f64>> {
        let horizon = self.states.len();
        let n = self.final_weights.len();
        (0..n)
            .map(|i| {
                let mut path = vec![0.0; horizon];
                let mut idx = i;
                for t in (0..horizon).rev() {
                    path[t] = self.states[t][idx];
                    if t > 0 {
                        idx = self.parents[t - 1][idx];
                    }
                }
                path
            })
            .collect()
    }

    /// Final-weight average of the trajectories.
    pub fn smoothed_mean(&self) -> Vec<f64> {
        let paths = self.trajectories();
        let mut mean = vec![0.0; self.states.len()];
        for (path, w) in paths.iter().zip(&self.final_weights) {
            for (m, x) in mean.iter_mut().zip(path) {
                *m += w * x;
            }
        }
        mean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpfOutput {
    pub estimate: LogLikelihoodEstimate,
    pub paths: Option<ParticlePaths>,
}

/// Log-likelihood estimate from the sorted bootstrap filter.
pub fn bpf_loglik<M: StateSpaceModel + ?Sized>(
    model: &M,
    y: &[f64],
    u: &AuxiliaryBlock,
) -> Result<LogLikelihoodEstimate, EstimatorError> {
    bpf_run(model, y, u, false).map(|out| out.estimate)
}

/// Runs the filter, optionally keeping every particle cloud and ancestry.
pub fn bpf_run<M: StateSpaceModel + ?Sized>(
    model: &M,
    y: &[f64],
    u: &AuxiliaryBlock,
    keep_paths: bool,
) -> Result<BpfOutput, EstimatorError> {
    let horizon = y.len();
    if u.rows() != horizon + 1 || u.cols() < 2 {
        return Err(EstimatorError::ShapeMismatch {
            expected: (horizon + 1, u.cols().max(2)),
            found: u.shape(),
        });
    }
    let n = u.cols() - 1;
    let ln_n = (n as f64).ln();

    let mut particles: Vec<f64> = u.row(0)[1..]
        .iter()
        .map(|&xi| model.initial_state(xi))
        .collect();
    if particles.iter().any(|x| !x.is_finite()) {
        return Err(EstimatorError::Degenerate { time: 0 });
    }
    let mut weights = vec![1.0 / n as f64; n];
    let mut ancestors = vec![0usize; n];
    let mut proposed = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut log_w = vec![0.0; n];
    let mut terms = Vec::with_capacity(horizon);

    let mut paths = keep_paths.then(|| ParticlePaths {
        states: vec![particles.clone()],
        parents: Vec::with_capacity(horizon),
        final_weights: Vec::new(),
    });

    for t in 1..=horizon {
        let row = u.row(t);
        // Cannot fail: aux entries are finite by construction.
        let uniform = gaussian_to_uniform(row[0]).unwrap_or(0.5);
        resample_into(&weights, uniform, &mut ancestors);

        let prev_obs = if t >= 2 { Some(y[t - 2]) } else { None };
        for ((p, &a), &xi) in proposed.iter_mut().zip(&ancestors).zip(&row[1..]) {
            *p = model.transition(particles[a], prev_obs, xi);
        }
        if proposed.iter().any(|x| !x.is_finite()) {
            return Err(EstimatorError::Degenerate { time: t });
        }

        for (k, o) in order.iter_mut().enumerate() {
            *o = k;
        }
        order.sort_by(|&a, &b| proposed[a].total_cmp(&proposed[b]));
        for (x, &k) in particles.iter_mut().zip(&order) {
            *x = proposed[k];
        }

        let yt = y[t - 1];
        let mut max = f64::NEG_INFINITY;
        for (lw, &x) in log_w.iter_mut().zip(&particles) {
            *lw = model.log_observation_density(yt, x);
            if lw.is_nan() {
                return Err(EstimatorError::Degenerate { time: t });
            }
            max = max.max(*lw);
        }
        if !max.is_finite() {
            return Err(EstimatorError::Degenerate { time: t });
        }
        let mut total = 0.0;
        for (w, lw) in weights.iter_mut().zip(&log_w) {
            *w = (lw - max).exp();
            total += *w;
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
        terms.push(max + total.ln() - ln_n);

        if let Some(p) = paths.as_mut() {
            p.parents
                .push(order.iter().map(|&k| ancestors[k]).collect());
            p.states.push(particles.clone());
        }
    }

    if let Some(p) = paths.as_mut() {
        p.final_weights = weights;
    }
    Ok(BpfOutput {
        estimate: LogLikelihoodEstimate::from_terms(terms),
        paths,
    })
}
