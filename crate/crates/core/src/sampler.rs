//! Pseudo-marginal Metropolis-Hastings over `(theta, u)`.
//!
//! Each iteration proposes `theta' ~ N(theta, Sigma)` and `u'` from the
//! CN/global mixture, evaluates `Phi_theta'(u')` and accepts with
//! probability `1 ∧ exp(Phi_old - Phi_new) q(theta | theta') / q(theta' | theta)`.
//! The CN kernel is reversible with respect to `N(0, I)`, so its ratio
//! cancels against the Gaussian factor of the extended target and never
//! appears in the acceptance probability.
//!
//! Random-stream order per iteration: `p` Gaussians for `theta'`, the
//! move-kind coin, `rows * cols` Gaussians for `u'`, then the acceptance
//! uniform. Everything is drawn every iteration.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::auxiliary::{
    propose_mixture, sample_prior, AuxProposalConfig, AuxiliaryBlock, MoveKind,
};
use crate::error::{Error, Result};
use crate::estimators::Potential;

/// The random stream driving one chain.
pub type ChainRng = ChaCha8Rng;

/// Stream `replicate` of the generator seeded by `master_seed`. Distinct
/// replicates use disjoint ChaCha streams.
pub fn replicate_rng(master_seed: u64, replicate: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate);
    rng
}

/// Gaussian random walk for `theta` with a fixed covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaProposal {
    covariance: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_det: f64,
}

impl ThetaProposal {
    /// Fails unless `covariance` is square, symmetric and positive definite.
    pub fn new(covariance: &[Vec<f64>]) -> Result<Self> {
        let p = covariance.len();
        if p == 0 || covariance.iter().any(|row| row.len() != p) {
            return Err(Error::InvalidSampler(
                "proposal covariance must be a non-empty square matrix".into(),
            ));
        }
        let m = DMatrix::from_fn(p, p, |i, j| covariance[i][j]);
        let asym = (0..p)
            .flat_map(|i| (0..p).map(move |j| (i, j)))
            .any(|(i, j)| (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * (1.0 + m[(i, j)].abs()));
        if asym || m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        let l = chol.l();
        let log_det = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Self {
            covariance: m,
            chol: l,
            log_det,
        })
    }

    /// One-dimensional walk with standard deviation `sd`.
    pub fn scalar(sd: f64) -> Result<Self> {
        Self::new(&[vec![sd * sd]])
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.covariance.row(i).iter().copied().collect())
            .collect()
    }

    pub fn propose<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Vec<f64> {
        let xi = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let step = &self.chol * xi;
        theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect()
    }

    /// `log q(to | from)`.
    pub fn log_density(&self, to: &[f64], from: &[f64]) -> f64 {
        let diff = DVector::from_fn(self.dim(), |i, _| to[i] - from[i]);
        let z = self
            .chol
            .solve_lower_triangular(&diff)
            .expect("Cholesky factor has a positive diagonal");
        let p = self.dim() as f64;
        -0.5 * (z.norm_squared() + self.log_det + p * (2.0 * std::f64::consts::PI).ln())
    }

    /// The random walk's mean function is the identity.
    pub fn is_symmetric(&self) -> bool {
        true
    }

    /// `log q(current | proposed) - log q(proposed | current)`.
    pub fn log_q_ratio(&self, current: &[f64], proposed: &[f64]) -> f64 {
        if self.is_symmetric() {
            return 0.0;
        }
        self.log_density(current, proposed) - self.log_density(proposed, current)
    }
}

/// `min(1, exp(phi_old - phi_new + log_q_ratio))`; zero for an infinite or
/// undefined `phi_new`.
pub fn acceptance_probability(phi_old: f64, phi_new: f64, log_q_ratio: f64) -> f64 {
    if phi_new == f64::INFINITY || phi_new.is_nan() {
        return 0.0;
    }
    let log_a = phi_old - phi_new + log_q_ratio;
    if log_a.is_nan() {
        0.0
    } else if log_a >= 0.0 {
        1.0
    } else {
        log_a.exp()
    }
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub theta0: Vec<f64>,
    pub proposal: ThetaProposal,
    pub aux: AuxProposalConfig,
    /// Fresh `u_0` draws tried before giving up on an infinite initial potential.
    pub init_retries: usize,
    /// Keep the auxiliary block of every iteration in the trace.
    pub store_aux: bool,
}

impl SamplerConfig {
    pub fn new(
        iterations: usize,
        theta0: Vec<f64>,
        proposal: ThetaProposal,
        aux: AuxProposalConfig,
    ) -> Self {
        Self {
            iterations,
            theta0,
            proposal,
            aux,
            init_retries: 100,
            store_aux: false,
        }
    }
}

/// Current point of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub theta: Vec<f64>,
    pub u: AuxiliaryBlock,
    pub phi_value: f64,
    pub log_prior: f64,
    pub iteration: usize,
}

/// Per-iteration record of a run. Burn-in is not removed here.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    dim: usize,
    theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub accepted: Vec<bool>,
    pub move_kind: Vec<MoveKind>,
    pub accept_prob: Vec<f64>,
    /// `u_k` for every iteration when [`SamplerConfig::store_aux`] is set.
    pub aux: Option<Vec<AuxiliaryBlock>>,
    /// Number of `u_0` draws used at initialization.
    pub init_attempts: usize,
    pub final_state: ChainState,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `theta_k` for iteration `k` (0-based).
    pub fn theta(&self, k: usize) -> &[f64] {
        &self.theta[k * self.dim..(k + 1) * self.dim]
    }

    /// Series of parameter `j` over all iterations.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.theta
            .iter()
            .skip(j)
            .step_by(self.dim)
            .copied()
            .collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.accepted.iter().filter(|a| **a).count() as f64 / self.len() as f64
    }

    /// CSV with header `iter,theta_1..theta_p,phi,accepted,move_kind,alpha_prob`,
    /// one row per iteration starting at `iter = 1`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["iter".to_string()];
        header.extend((1..=self.dim).map(|j| format!("theta_{j}")));
        header.extend(["phi", "accepted", "move_kind", "alpha_prob"].map(String::from));
        w.write_record(&header)?;
        for k in 0..self.len() {
            let mut rec = vec![(k + 1).to_string()];
            rec.extend(self.theta(k).iter().map(|v| v.to_string()));
            rec.push(self.phi[k].to_string());
            rec.push(u8::from(self.accepted[k]).to_string());
            rec.push(self.move_kind[k].as_str().to_string());
            rec.push(self.accept_prob[k].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn validate<P: Potential + ?Sized>(cfg: &SamplerConfig, potential: &P) -> Result<()> {
    if cfg.iterations == 0 {
        return Err(Error::InvalidSampler("need at least one iteration".into()));
    }
    if cfg.theta0.len() != cfg.proposal.dim() {
        return Err(Error::InvalidSampler(format!(
            "theta0 has {} entries, proposal covariance is {}x{}",
            cfg.theta0.len(),
            cfg.proposal.dim(),
            cfg.proposal.dim()
        )));
    }
    let (rows, cols) = potential.aux_shape();
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyShape { rows, cols });
    }
    Ok(())
}

/// Runs one chain of `cfg.iterations` steps.
pub fn run_pmmh<P, R>(cfg: &SamplerConfig, potential: &P, rng: &mut R) -> Result<ChainTrace>
where
    P: Potential + ?Sized,
    R: Rng + ?Sized,
{
    validate(cfg, potential)?;
    let (rows, cols) = potential.aux_shape();

    let mut attempts = 0;
    let (mut u, mut phi) = loop {
        attempts += 1;
        let u0 = sample_prior(rows, cols, rng)?;
        let phi0 = potential.potential(&cfg.theta0, &u0);
        if phi0.is_finite() {
            break (u0, phi0);
        }
        if attempts > cfg.init_retries {
            return Err(Error::InitializationFailed { attempts });
        }
    };
    let mut theta = cfg.theta0.clone();

    let k = cfg.iterations;
    let p = theta.len();
    let mut trace_theta = Vec::with_capacity(k * p);
    let mut trace_phi = Vec::with_capacity(k);
    let mut accepted = Vec::with_capacity(k);
    let mut kinds = Vec::with_capacity(k);
    let mut probs = Vec::with_capacity(k);
    let mut aux_trace = cfg.store_aux.then(|| Vec::with_capacity(k));

    for _ in 0..k {
        let theta_prop = cfg.proposal.propose(&theta, rng);
        let (u_prop, kind) = propose_mixture(&u, &cfg.aux, rng);
        let phi_prop = potential.potential(&theta_prop, &u_prop);
        let a =
            acceptance_probability(phi, phi_prop, cfg.proposal.log_q_ratio(&theta, &theta_prop));
        let omega: f64 = rng.random();
        let accept = omega < a;
        if accept {
            theta = theta_prop;
            u = u_prop;
            phi = phi_prop;
        }
        trace_theta.extend_from_slice(&theta);
        trace_phi.push(phi);
        accepted.push(accept);
        kinds.push(kind);
        probs.push(a);
        if let Some(t) = aux_trace.as_mut() {
            t.push(u.clone());
        }
    }

    let log_prior = potential.log_prior(&theta);
    Ok(ChainTrace {
        dim: p,
        theta: trace_theta,
        phi: trace_phi,
        accepted,
        move_kind: kinds,
        accept_prob: probs,
        aux: aux_trace,
        init_attempts: attempts,
        final_state: ChainState {
            theta,
            u,
            phi_value: phi,
            log_prior,
            iteration: k,
        },
    })
}

/// Runs `n_replicates` independent chains, replicate `r` on
/// [`replicate_rng`]`(master_seed, r)`. Chains run on the current rayon pool;
/// the result is ordered by replicate index.
pub fn run_replicates<P>(
    cfg: &SamplerConfig,
    potential: &P,
    master_seed: u64,
    n_replicates: usize,
) -> Result<Vec<ChainTrace>>
where
    P: Potential + ?Sized,
{
    if n_replicates == 0 {
        return Err(Error::InvalidSampler("need at least one replicate".into()));
    }
    (0..n_replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(master_seed, r as u64);
            run_pmmh(cfg, potential, &mut rng).map_err(|e| e.context(format!("replicate {r}")))
        })
        .collect()
}
