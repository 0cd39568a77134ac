//! Mixing and estimator diagnostics.

use rand::Rng;
use serde::Serialize;

use crate::auxiliary::{propose_cn, sample_prior};
use crate::error::{Error, Result};
use crate::estimators::LikelihoodEstimator;
use crate::sampler::ChainTrace;

/// Truncation lag used for every IACT in the experiments.
pub const DEFAULT_MAX_LAG: usize = 100;

/// Sample autocorrelations `rho_0..=rho_max_lag`. Every lag is normalized
/// by the lag-0 autocovariance and uses the denominator `n`.
pub fn autocorrelations(samples: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = samples.len();
    if n <= max_lag {
        return Err(Error::SeriesTooShort { len: n, max_lag });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = samples.iter().map(|x| x - mean).collect();
    let c0 = centered.iter().map(|x| x * x).sum::<f64>();
    if c0 == 0.0 || !c0.is_finite() {
        return Err(Error::ConstantSeries);
    }
    Ok((0..=max_lag)
        .map(|tau| {
            if tau == 0 {
                return 1.0;
            }
            let c: f64 = centered[..n - tau]
                .iter()
                .zip(&centered[tau..])
                .map(|(a, b)| a * b)
                .sum();
            c / c0
        })
        .collect())
}

/// `1 + 2 sum_{tau=1}^{max_lag} rho_tau`, not floored at one.
pub fn iact(samples: &[f64], max_lag: usize) -> Result<f64> {
    let rho = autocorrelations(samples, max_lag)?;
    Ok(1.0 + 2.0 * rho[1..].iter().sum::<f64>())
}

/// IACTs and autocorrelations of every parameter after burn-in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IactReport {
    /// `None` where the series is constant.
    pub iact: Vec<Option<f64>>,
    /// Lags `0..=max_lag` per parameter; empty for a constant series.
    pub autocorrelations: Vec<Vec<f64>>,
    pub acceptance_rate: f64,
    /// Set when some IACT came out below one.
    pub below_one: bool,
}

pub fn iact_report(trace: &ChainTrace, burn_in: usize, max_lag: usize) -> Result<IactReport> {
    check_burn_in(trace, burn_in)?;
    let mut iacts = Vec::with_capacity(trace.dim());
    let mut acfs = Vec::with_capacity(trace.dim());
    for j in 0..trace.dim() {
        let col = trace.column(j);
        match autocorrelations(&col[burn_in..], max_lag) {
            Ok(rho) => {
                iacts.push(Some(1.0 + 2.0 * rho[1..].iter().sum::<f64>()));
                acfs.push(rho);
            }
            Err(Error::ConstantSeries) => {
                iacts.push(None);
                acfs.push(Vec::new());
            }
            Err(e) => return Err(e),
        }
    }
    let below_one = iacts.iter().flatten().any(|v| *v < 1.0);
    Ok(IactReport {
        iact: iacts,
        autocorrelations: acfs,
        acceptance_rate: post_burn_in_acceptance(trace, burn_in),
        below_one,
    })
}

fn check_burn_in(trace: &ChainTrace, burn_in: usize) -> Result<()> {
    if burn_in >= trace.len() {
        return Err(Error::InvalidSampler(format!(
            "burn-in {burn_in} leaves no samples from a trace of {}",
            trace.len()
        )));
    }
    Ok(())
}

fn post_burn_in_acceptance(trace: &ChainTrace, burn_in: usize) -> f64 {
    let kept = &trace.accepted[burn_in..];
    kept.iter().filter(|a| **a).count() as f64 / kept.len() as f64
}

/// Pearson correlation; NaN when either series is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa * sbb).sqrt()
}

/// Least-squares `(slope, intercept)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Median by total order; NaN for an empty slice. Infinite values sort last.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Linear-interpolation quantile of already sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationPoint {
    pub sigma_u: f64,
    pub correlation: f64,
    /// Pairs where both estimates were finite.
    pub n_pairs: usize,
}

/// Correlation of `log p_hat(y; u)` and `log p_hat(y; u')` with `u` a prior
/// draw and `u'` one CN step from it, for each step length in `sigma_u_grid`.
/// `sigma_u = 0` pairs each block with itself. Pairs where either estimate
/// is degenerate are dropped.
pub fn loglik_correlation_scan<E, R>(
    estimator: &E,
    theta: &[f64],
    sigma_u_grid: &[f64],
    n_pairs: usize,
    rng: &mut R,
) -> Result<Vec<CorrelationPoint>>
where
    E: LikelihoodEstimator + ?Sized,
    R: Rng + ?Sized,
{
    if let Some(bad) = sigma_u_grid.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::InvalidStepLength(*bad));
    }
    let (rows, cols) = estimator.aux_shape();
    let mut out = Vec::with_capacity(sigma_u_grid.len());
    for &sigma_u in sigma_u_grid {
        let mut a = Vec::with_capacity(n_pairs);
        let mut b = Vec::with_capacity(n_pairs);
        for _ in 0..n_pairs {
            let u = sample_prior(rows, cols, rng)?;
            let v = if sigma_u == 0.0 {
                u.clone()
            } else {
                propose_cn(&u, sigma_u, rng)?
            };
            let la = finite_loglik(estimator, theta, &u);
            let lb = finite_loglik(estimator, theta, &v);
            if let (Some(x), Some(y)) = (la, lb) {
                a.push(x);
                b.push(y);
            }
        }
        out.push(CorrelationPoint {
            sigma_u,
            correlation: if a.len() >= 2 {
                pearson(&a, &b)
            } else {
                f64::NAN
            },
            n_pairs: a.len(),
        });
    }
    Ok(out)
}

fn finite_loglik<E: LikelihoodEstimator + ?Sized>(
    estimator: &E,
    theta: &[f64],
    u: &crate::auxiliary::AuxiliaryBlock,
) -> Option<f64> {
    estimator
        .log_likelihood(theta, u)
        .ok()
        .map(|e| e.log_likelihood)
        .filter(|v| v.is_finite())
}

/// Sample standard deviation of `log p_hat` over independent auxiliary blocks.
pub fn loglik_stddev<E, R>(estimator: &E, theta: &[f64], n_draws: usize, rng: &mut R) -> Result<f64>
where
    E: LikelihoodEstimator + ?Sized,
    R: Rng + ?Sized,
{
    if n_draws < 2 {
        return Err(Error::InvalidSampler("need at least two draws".into()));
    }
    let (rows, cols) = estimator.aux_shape();
    let mut values = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let u = sample_prior(rows, cols, rng)?;
        if let Some(v) = finite_loglik(estimator, theta, &u) {
            values.push(v);
        }
    }
    if values.len() < 2 {
        return Ok(f64::NAN);
    }
    Ok(sample_std(&values))
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Quantile levels reported by [`posterior_summary`].
pub const SUMMARY_QUANTILES: [f64; 3] = [0.025, 0.5, 0.975];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub n_samples: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// One row per parameter at [`SUMMARY_QUANTILES`].
    pub quantiles: Vec<Vec<f64>>,
    pub acceptance_rate: f64,
    /// `None` where the post-burn-in series is constant.
    pub iact: Vec<Option<f64>>,
}

/// Statistics of the samples after the first `burn_in` iterations. Standard
/// deviations use the denominator `n - 1` (zero for a single sample).
pub fn posterior_summary(trace: &ChainTrace, burn_in: usize) -> Result<PosteriorSummary> {
    check_burn_in(trace, burn_in)?;
    let n = trace.len() - burn_in;
    let mut mean = Vec::new();
    let mut std = Vec::new();
    let mut quantiles = Vec::new();
    let mut iacts = Vec::new();
    for j in 0..trace.dim() {
        let col = trace.column(j);
        let kept = &col[burn_in..];
        mean.push(kept.iter().sum::<f64>() / n as f64);
        std.push(if n > 1 { sample_std(kept) } else { 0.0 });
        let mut sorted = kept.to_vec();
        sorted.sort_by(f64::total_cmp);
        quantiles.push(
            SUMMARY_QUANTILES
                .iter()
                .map(|p| quantile_sorted(&sorted, *p))
                .collect(),
        );
        iacts.push(iact(kept, DEFAULT_MAX_LAG.min(n.saturating_sub(1))).ok());
    }
    Ok(PosteriorSummary {
        n_samples: n,
        mean,
        std,
        quantiles,
        acceptance_rate: post_burn_in_acceptance(trace, burn_in),
        iact: iacts,
    })
}
