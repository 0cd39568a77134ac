//! Tuning analysis in the one-dimensional `z`-space.
//!
//! Under the CLT approximation the log-likelihood error reduces to a scalar
//! `z` with target `N(sigma_phi, 1)`, proposal `z' ~ N(sqrt(1 - sigma_z^2) z, sigma_z^2)`
//! and acceptance `1 ∧ exp(sigma_phi (z' - z))`. Discretizing `z` on a grid
//! turns the chain into a finite Markov chain whose jump probability and
//! asymptotic variance can be computed exactly.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::normal_log_density;

/// Condition estimates above this are flagged in scan output.
pub const CONDITION_WARNING: f64 = 1e10;

/// Diagonal remainders below `-NEGATIVE_TOLERANCE` are an error; smaller
/// negative values are rounding and are clamped to zero.
const NEGATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZSpaceModel {
    sigma_phi: f64,
    sigma_z: f64,
}

impl ZSpaceModel {
    pub fn new(sigma_phi: f64, sigma_z: f64) -> Result<Self> {
        if !(sigma_phi >= 0.0 && sigma_phi.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "sigma_phi must be finite and non-negative, got {sigma_phi}"
            )));
        }
        if !(sigma_z > 0.0 && sigma_z <= 1.0) {
            return Err(Error::InvalidStepLength(sigma_z));
        }
        Ok(Self { sigma_phi, sigma_z })
    }

    pub fn sigma_phi(&self) -> f64 {
        self.sigma_phi
    }

    pub fn sigma_z(&self) -> f64 {
        self.sigma_z
    }

    /// `log q(z' | z)` for the one-dimensional CN proposal.
    pub fn log_proposal_density(&self, z_prime: f64, z: f64) -> f64 {
        let rho = (1.0 - self.sigma_z * self.sigma_z).sqrt();
        normal_log_density(z_prime, rho * z, self.sigma_z)
    }
}

/// `min(1, exp(sigma_phi (z' - z)))`.
pub fn z_acceptance(z: f64, z_prime: f64, sigma_phi: f64) -> f64 {
    let log_a = sigma_phi * (z_prime - z);
    if log_a >= 0.0 {
        1.0
    } else {
        log_a.exp()
    }
}

/// `l` equal bins on `(z_min, z_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    z_min: f64,
    z_max: f64,
    l: usize,
}

impl GridSpec {
    pub fn new(z_min: f64, z_max: f64, l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 bins, got {l}")));
        }
        if !(z_min < z_max) || !z_min.is_finite() || !z_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "need finite z_min < z_max, got ({z_min}, {z_max})"
            )));
        }
        Ok(Self { z_min, z_max, l })
    }

    /// `(-4, sigma_phi + 4)` with `l` bins.
    pub fn around(sigma_phi: f64, l: usize) -> Result<Self> {
        Self::new(-4.0, sigma_phi + 4.0, l)
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn bins(&self) -> usize {
        self.l
    }

    pub fn delta(&self) -> f64 {
        (self.z_max - self.z_min) / self.l as f64
    }

    /// Bin centres `z_min + (l - 1/2) delta`.
    pub fn centers(&self) -> Vec<f64> {
        let d = self.delta();
        (0..self.l)
            .map(|i| self.z_min + (i as f64 + 0.5) * d)
            .collect()
    }
}

/// A finite Markov chain with its stationary distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedChain {
    grid: Vec<f64>,
    p: DMatrix<f64>,
    pi: Vec<f64>,
}

impl DiscretizedChain {
    /// Wraps an arbitrary stochastic matrix (rows as given) and stationary
    /// vector. `pi` is normalized; `grid` labels the states.
    pub fn from_parts(grid: Vec<f64>, rows: &[Vec<f64>], pi: &[f64]) -> Result<Self> {
        let l = rows.len();
        if l == 0 || grid.len() != l || pi.len() != l || rows.iter().any(|r| r.len() != l) {
            return Err(Error::InvalidGrid("inconsistent chain dimensions".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.iter().any(|v| !(*v >= 0.0)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidGrid(format!(
                    "row {i} is not a probability vector"
                )));
            }
        }
        let total: f64 = pi.iter().sum();
        if pi.iter().any(|v| !(*v >= 0.0)) || !(total > 0.0) {
            return Err(Error::InvalidGrid(
                "stationary weights must be non-negative".into(),
            ));
        }
        Ok(Self {
            grid,
            p: DMatrix::from_fn(l, l, |i, j| rows[i][j]),
            pi: pi.iter().map(|v| v / total).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// `p[(l, m)]` is the probability of moving from state `l` to `m`.
    pub fn transition(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// Samples a path of `steps` states after `start` (not included).
    pub fn simulate<R: Rng + ?Sized>(&self, start: usize, steps: usize, rng: &mut R) -> Vec<usize> {
        let l = self.len();
        let cumulative: Vec<Vec<f64>> = (0..l)
            .map(|i| {
                let mut acc = 0.0;
                (0..l)
                    .map(|j| {
                        acc += self.p[(i, j)];
                        acc
                    })
                    .collect()
            })
            .collect();
        let mut state = start;
        let mut path = Vec::with_capacity(steps);
        for _ in 0..steps {
            let row = &cumulative[state];
            let r: f64 = rng.random::<f64>() * row[l - 1];
            state = row.partition_point(|c| *c <= r).min(l - 1);
            path.push(state);
        }
        path
    }
}

/// Discretizes the `z`-space chain: `p_lm = q(z_m | z_l) a(z_l, z_m) delta`
/// off the diagonal, with the remaining mass (including proposals leaving
/// the grid) kept on the diagonal.
pub fn build_transition(model: &ZSpaceModel, grid: &GridSpec) -> Result<DiscretizedChain> {
    let z = grid.centers();
    let l = z.len();
    let delta = grid.delta();
    let mut p = DMatrix::<f64>::zeros(l, l);
    for i in 0..l {
        let mut off = 0.0;
        for j in 0..l {
            if i == j {
                continue;
            }
            let v = model.log_proposal_density(z[j], z[i]).exp()
                * z_acceptance(z[i], z[j], model.sigma_phi)
                * delta;
            p[(i, j)] = v;
            off += v;
        }
        let stay = 1.0 - off;
        if stay < -NEGATIVE_TOLERANCE {
            return Err(Error::NegativeDiagonal {
                row: i,
                value: stay,
            });
        }
        p[(i, i)] = stay.max(0.0);
    }
    let weights: Vec<f64> = z
        .iter()
        .map(|zi| normal_log_density(*zi, model.sigma_phi, 1.0).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(DiscretizedChain {
        grid: z,
        p,
        pi: weights.iter().map(|w| w / total).collect(),
    })
}

/// `sum_l pi_l (1 - p_ll)`.
pub fn jump_probability(chain: &DiscretizedChain) -> f64 {
    chain
        .pi
        .iter()
        .enumerate()
        .map(|(i, w)| w * (1.0 - chain.p[(i, i)]))
        .sum()
}

/// Asymptotic variance and the LU pivot-ratio condition estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceSolve {
    pub nu: f64,
    pub condition: f64,
}

/// `phi^T (2 B Z - B - B A) phi` with `B = diag(pi)`, `A = 1 pi^T` and
/// `Z = (I - P + A)^{-1}`. `Z phi` comes from an LU solve.
pub fn asymptotic_variance(chain: &DiscretizedChain, phi: &[f64]) -> Result<f64> {
    asymptotic_variance_with_condition(chain, phi).map(|s| s.nu)
}

pub fn asymptotic_variance_with_condition(
    chain: &DiscretizedChain,
    phi: &[f64],
) -> Result<VarianceSolve> {
    let l = chain.len();
    if phi.len() != l {
        return Err(Error::InvalidGrid(format!(
            "functional has {} values for {l} states",
            phi.len()
        )));
    }
    let pi = &chain.pi;
    let m = DMatrix::from_fn(l, l, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - chain.p[(i, j)] + pi[j]
    });
    let lu = m.lu();
    let diag = lu.u().diagonal();
    let max = diag.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = diag.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    let condition = max / min;
    let rhs = DVector::from_column_slice(phi);
    let x = match lu.solve(&rhs) {
        Some(x) if condition.is_finite() => x,
        _ => return Err(Error::SingularSystem { condition }),
    };
    let mean: f64 = pi.iter().zip(phi).map(|(w, f)| w * f).sum();
    let second: f64 = pi.iter().zip(phi).map(|(w, f)| w * f * f).sum();
    let cross: f64 = (0..l).map(|i| pi[i] * phi[i] * x[i]).sum();
    Ok(VarianceSolve {
        nu: 2.0 * cross - second - mean * mean,
        condition,
    })
}

/// Variance of the mean of `series` times its length, from non-overlapping
/// batches of `batch_size` (trailing remainder dropped).
pub fn batch_means_variance(series: &[f64], batch_size: usize) -> f64 {
    let n_batches = series.len() / batch_size;
    assert!(n_batches >= 2, "need at least two batches");
    let means: Vec<f64> = series
        .chunks_exact(batch_size)
        .map(|c| c.iter().sum::<f64>() / batch_size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / n_batches as f64;
    let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (n_batches - 1) as f64;
    var * batch_size as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub sigma_phi: f64,
    pub sigma_z: f64,
    pub p_jump: f64,
    pub nu: f64,
    #[serde(skip)]
    pub condition: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalPoint {
    pub sigma_phi: f64,
    pub opt_sigma_z: f64,
    pub opt_p_jump: f64,
    #[serde(skip)]
    pub opt_nu: f64,
}

/// `{0, 0.25, ..., 3.5}`.
pub fn default_sigma_phi_grid() -> Vec<f64> {
    (0..=14).map(|i| i as f64 / 4.0).collect()
}

/// `{0.05, 0.075, ..., 1}`.
pub fn default_sigma_z_grid() -> Vec<f64> {
    (0..=38).map(|i| (50 + 25 * i) as f64 / 1000.0).collect()
}

/// Evaluates `nu` for `phi(z) = z` and the jump probability at every grid
/// pair, on the grid `GridSpec::around(sigma_phi, bins)`. Points run on the
/// current rayon pool; results are ordered by `sigma_phi`, then `sigma_z`.
pub fn scan(sigma_phi_grid: &[f64], sigma_z_grid: &[f64], bins: usize) -> Result<Vec<ScanPoint>> {
    if sigma_phi_grid.is_empty() || sigma_z_grid.is_empty() {
        return Err(Error::InvalidGrid("scan grids must be non-empty".into()));
    }
    let pairs: Vec<(f64, f64)> = sigma_phi_grid
        .iter()
        .flat_map(|sp| sigma_z_grid.iter().map(move |sz| (*sp, *sz)))
        .collect();
    pairs
        .into_par_iter()
        .map(|(sigma_phi, sigma_z)| {
            let model = ZSpaceModel::new(sigma_phi, sigma_z)?;
            let grid = GridSpec::around(sigma_phi, bins)?;
            let chain = build_transition(&model, &grid)?;
            let solve = asymptotic_variance_with_condition(&chain, chain.grid())?;
            Ok(ScanPoint {
                sigma_phi,
                sigma_z,
                p_jump: jump_probability(&chain),
                nu: solve.nu,
                condition: solve.condition,
            })
        })
        .collect::<Result<Vec<_>>>()
}

/// The `nu`-minimizing `sigma_z` per `sigma_phi`, ties going to the larger
/// `sigma_z`. Keeps the order in which `sigma_phi` values first appear.
pub fn optimal_points(points: &[ScanPoint]) -> Vec<OptimalPoint> {
    let mut out: Vec<OptimalPoint> = Vec::new();
    for p in points {
        match out.iter_mut().find(|o| o.sigma_phi == p.sigma_phi) {
            None => out.push(OptimalPoint {
                sigma_phi: p.sigma_phi,
                opt_sigma_z: p.sigma_z,
                opt_p_jump: p.p_jump,
                opt_nu: p.nu,
            }),
            Some(o) => {
                if p.nu < o.opt_nu || (p.nu == o.opt_nu && p.sigma_z > o.opt_sigma_z) {
                    o.opt_sigma_z = p.sigma_z;
                    o.opt_p_jump = p.p_jump;
                    o.opt_nu = p.nu;
                }
            }
        }
    }
    out
}

/// [`scan`] followed by [`optimal_points`].
pub fn scan_optimal_sigma_z(
    sigma_phi_grid: &[f64],
    sigma_z_grid: &[f64],
    bins: usize,
) -> Result<(Vec<ScanPoint>, Vec<OptimalPoint>)> {
    let points = scan(sigma_phi_grid, sigma_z_grid, bins)?;
    let best = optimal_points(&points);
    Ok((points, best))
}
