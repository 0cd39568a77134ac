//! Auxiliary Gaussian variables and their proposals.
//!
//! Every likelihood estimate in this crate is a deterministic function of an
//! [`AuxiliaryBlock`] of standard-normal variates. Correlating successive
//! blocks through the Crank-Nicolson (CN) update
//!
//! ```text
//! u' = sqrt(1 - sigma_u^2) * u + sigma_u * xi,    xi ~ N(0, I)
//! ```
//!
//! correlates successive likelihood estimates while leaving `N(0, I)`
//! invariant. The mixture proposal additionally redraws the whole block from
//! the prior with probability `alpha` (a "global" move).
//!
//! Random-stream order for one proposal: the move-kind coin (mixture only),
//! then `rows * cols` fresh Gaussians in row-major order. Both are always
//! drawn, so chains that differ only in `alpha` or `sigma_u` stay aligned.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower/upper clamp applied to [`gaussian_to_uniform`].
pub const UNIFORM_CLAMP: f64 = 1e-12;

/// A fixed-shape, row-major block of standard-normal variates.
///
/// Rows are time indices, columns are per-time slots, so a filter step reads
/// one contiguous row.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryBlock {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl AuxiliaryBlock {
    /// Wraps row-major `values`. Fails if the shape is empty, the length does
    /// not match, or any entry is non-finite.
    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyShape { rows, cols });
        }
        if values.len() != rows * cols {
            return Err(Error::InvalidAuxProposal(format!(
                "expected {} values for a {rows}x{cols} block, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(*bad));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_vec(rows, cols, vec![0.0; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.cols..(t + 1) * self.cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    fn autoregress<R: Rng + ?Sized>(&self, sigma_u: f64, rng: &mut R) -> Self {
        let keep = (1.0 - sigma_u * sigma_u).sqrt();
        let values = self
            .values
            .iter()
            .map(|&u| {
                let xi: f64 = rng.sample(StandardNormal);
                keep * u + sigma_u * xi
            })
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            values,
        }
    }
}

/// Whether a mixture proposal redrew the block or took a CN step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Local,
    Global,
}

impl MoveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MoveKind::Local => "local",
            MoveKind::Global => "global",
        }
    }
}

/// Step length and global-move probability of the mixture proposal.
///
/// `sigma_u = 1` or `alpha = 1` gives the standard independent pseudo-marginal
/// proposal. `sigma_u = 0` is only admitted together with `alpha > 0`, where
/// local moves keep `u` unchanged and all refreshment comes from global moves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxProposalConfig {
    sigma_u: f64,
    alpha: f64,
}

impl AuxProposalConfig {
    pub fn new(sigma_u: f64, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&sigma_u) {
            return Err(Error::InvalidAuxProposal(format!(
                "sigma_u must lie in [0, 1], got {sigma_u}"
            )));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidAuxProposal(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        if sigma_u == 0.0 && alpha == 0.0 {
            return Err(Error::InvalidAuxProposal(
                "sigma_u = 0 with alpha = 0 never moves the auxiliary variables".into(),
            ));
        }
        Ok(Self { sigma_u, alpha })
    }

    /// Pure CN proposal (`alpha = 0`).
    pub fn crank_nicolson(sigma_u: f64) -> Result<Self> {
        if sigma_u == 0.0 {
            return Err(Error::InvalidStepLength(sigma_u));
        }
        Self::new(sigma_u, 0.0)
    }

    pub fn sigma_u(&self) -> f64 {
        self.sigma_u
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Draws a block of independent standard normals.
pub fn sample_prior<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> Result<AuxiliaryBlock> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyShape { rows, cols });
    }
    let values = (0..rows * cols)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(AuxiliaryBlock { rows, cols, values })
}

/// One Crank-Nicolson step. `sigma_u` must lie in `(0, 1]`.
pub fn propose_cn<R: Rng + ?Sized>(
    u: &AuxiliaryBlock,
    sigma_u: f64,
    rng: &mut R,
) -> Result<AuxiliaryBlock> {
    if !(sigma_u > 0.0 && sigma_u <= 1.0) {
        return Err(Error::InvalidStepLength(sigma_u));
    }
    Ok(u.autoregress(sigma_u, rng))
}

/// Global redraw with probability `alpha`, otherwise a CN step.
pub fn propose_mixture<R: Rng + ?Sized>(
    u: &AuxiliaryBlock,
    cfg: &AuxProposalConfig,
    rng: &mut R,
) -> (AuxiliaryBlock, MoveKind) {
    let coin: f64 = rng.random();
    if coin < cfg.alpha {
        let fresh = u.autoregress(1.0, rng);
        (fresh, MoveKind::Global)
    } else {
        (u.autoregress(cfg.sigma_u, rng), MoveKind::Local)
    }
}

/// Standard-normal CDF, clamped to `[1e-12, 1 - 1e-12]`.
pub fn gaussian_to_uniform(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    Ok(normal_cdf(x).clamp(UNIFORM_CLAMP, 1.0 - UNIFORM_CLAMP))
}

/// Unclamped standard-normal CDF.
pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn prior_draws_have_unit_moments() {
        let mut r = rng(1);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let x = sample_prior(1, 1, &mut r).unwrap().get(0, 0);
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 4e-3, "mean {mean}");
        assert!((0.994..=1.006).contains(&var), "var {var}");
    }

    #[test]
    fn prior_block_shape() {
        let u = sample_prior(11, 51, &mut rng(2)).unwrap();
        assert_eq!(u.shape(), (11, 51));
        assert_eq!(u.len(), 561);
        assert!(u.as_slice().iter().all(|v| v.is_finite()));
        assert!(matches!(
            sample_prior(0, 3, &mut rng(2)),
            Err(Error::EmptyShape { .. })
        ));
    }

    #[test]
    fn cn_with_unit_step_ignores_current_block() {
        let u = sample_prior(3, 4, &mut rng(3)).unwrap();
        let v = AuxiliaryBlock::zeros(3, 4).unwrap();
        let a = propose_cn(&u, 1.0, &mut rng(9)).unwrap();
        let b = propose_cn(&v, 1.0, &mut rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cn_from_zero_scales_noise() {
        let zero = AuxiliaryBlock::zeros(100, 100).unwrap();
        let mut r = rng(4);
        let mut sumsq = 0.0;
        let reps = 20;
        for _ in 0..reps {
            let next = propose_cn(&zero, 0.5, &mut r).unwrap();
            sumsq += next.as_slice().iter().map(|x| x * x).sum::<f64>();
        }
        let var = sumsq / (reps * 10_000) as f64;
        assert!((var - 0.25).abs() < 0.005, "var {var}");
    }

    #[test]
    fn cn_lag_one_correlation() {
        let mut r = rng(5);
        let mut u = sample_prior(1, 1, &mut r).unwrap();
        let n = 100_000;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let next = propose_cn(&u, 0.6, &mut r).unwrap();
            let (x, y) = (u.get(0, 0), next.get(0, 0));
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
            u = next;
        }
        let corr = sxy / (sxx * syy).sqrt();
        assert!((corr - 0.8).abs() < 0.01, "corr {corr}");
    }

    #[test]
    fn cn_rejects_degenerate_steps() {
        let u = AuxiliaryBlock::zeros(1, 1).unwrap();
        for bad in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                propose_cn(&u, bad, &mut rng(0)),
                Err(Error::InvalidStepLength(_))
            ));
        }
    }

    #[test]
    fn mixture_endpoints() {
        let u = sample_prior(2, 5, &mut rng(6)).unwrap();
        let local = AuxProposalConfig::new(0.3, 0.0).unwrap();
        let (a, kind) = propose_mixture(&u, &local, &mut rng(7));
        assert_eq!(kind, MoveKind::Local);
        // Same law as a plain CN step once the coin has been consumed.
        let mut r = rng(7);
        let _: f64 = r.random();
        assert_eq!(a, propose_cn(&u, 0.3, &mut r).unwrap());

        let global = AuxProposalConfig::new(0.3, 1.0).unwrap();
        let (_, kind) = propose_mixture(&u, &global, &mut rng(7));
        assert_eq!(kind, MoveKind::Global);
    }

    #[test]
    fn global_move_is_uncorrelated() {
        let cfg = AuxProposalConfig::new(0.2, 1.0).unwrap();
        let mut r = rng(8);
        let u = sample_prior(100, 100, &mut r).unwrap();
        let (v, _) = propose_mixture(&u, &cfg, &mut r);
        let corr: f64 = u
            .as_slice()
            .iter()
            .zip(v.as_slice())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / 10_000.0;
        assert!(corr.abs() < 0.04, "corr {corr}");
    }

    #[test]
    fn global_fraction_matches_alpha() {
        let cfg = AuxProposalConfig::new(0.5, 0.3).unwrap();
        let mut r = rng(10);
        let u = AuxiliaryBlock::zeros(1, 1).unwrap();
        let n = 100_000;
        let global = (0..n)
            .filter(|_| propose_mixture(&u, &cfg, &mut r).1 == MoveKind::Global)
            .count();
        let frac = global as f64 / n as f64;
        assert!((frac - 0.3).abs() < 0.006, "frac {frac}");
    }

    #[test]
    fn lee_holmes_configuration_keeps_local_moves_fixed() {
        let cfg = AuxProposalConfig::new(0.0, 0.5).unwrap();
        let u = sample_prior(4, 4, &mut rng(11)).unwrap();
        let mut r = rng(12);
        for _ in 0..50 {
            let (v, kind) = propose_mixture(&u, &cfg, &mut r);
            if kind == MoveKind::Local {
                assert_eq!(v, u);
            }
        }
        assert!(AuxProposalConfig::new(0.0, 0.0).is_err());
        assert!(AuxProposalConfig::crank_nicolson(0.0).is_err());
        assert!(AuxProposalConfig::new(1.1, 0.0).is_err());
        assert!(AuxProposalConfig::new(0.5, -0.1).is_err());
    }

    #[test]
    fn cdf_values() {
        assert_eq!(gaussian_to_uniform(0.0).unwrap(), 0.5);
        for x in [0.1, 1.0, 2.5, 7.0, 40.0] {
            let s = gaussian_to_uniform(x).unwrap() + gaussian_to_uniform(-x).unwrap();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(gaussian_to_uniform(-40.0).unwrap(), UNIFORM_CLAMP);
        assert_eq!(gaussian_to_uniform(40.0).unwrap(), 1.0 - UNIFORM_CLAMP);
        assert!(gaussian_to_uniform(f64::INFINITY).is_err());
        assert!(gaussian_to_uniform(f64::NAN).is_err());
    }

    #[test]
    fn block_validation() {
        assert!(AuxiliaryBlock::from_vec(2, 2, vec![0.0; 3]).is_err());
        assert!(AuxiliaryBlock::from_vec(1, 2, vec![0.0, f64::NAN]).is_err());
        let b = AuxiliaryBlock::from_vec(2, 3, (0..6).map(f64::from).collect()).unwrap();
        assert_eq!(b.row(1), &[3.0, 4.0, 5.0]);
    }
}
