use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::auxiliary::AuxProposalConfig;
use crate::error::{Error, Result};
use crate::estimators::IsScale;
use crate::models::{InitVariance, LeverageForm};
use crate::peskun::{default_sigma_phi_grid, default_sigma_z_grid};
use crate::sampler::ThetaProposal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PeskunScan,
    IidCorrScan,
    IidHeatmap,
    SvPosterior,
    SynthData,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::PeskunScan => "peskun_scan",
            ExperimentKind::IidCorrScan => "iid_corr_scan",
            ExperimentKind::IidHeatmap => "iid_heatmap",
            ExperimentKind::SvPosterior => "sv_posterior",
            ExperimentKind::SynthData => "synth_data",
        }
    }
}

/// `n` points `0, step, 2 step, ...` with `step = 1 / per_unit`, computed
/// as ratios so that decimal grid values print exactly.
fn grid(per_unit: u32, n: u32) -> Vec<f64> {
    (0..n).map(|i| f64::from(i) / f64::from(per_unit)).collect()
}

/// The random-walk covariance used for the SV model: `2.562^2 / 4 * 1e-4 * M`.
pub fn sv_proposal_covariance() -> Vec<Vec<f64>> {
    let m = [
        [384.0, 3.0, -5.0, -16.0],
        [3.0, 1.0, -3.0, -2.0],
        [-5.0, -3.0, 12.0, 3.0],
        [-16.0, -2.0, 3.0, 65.0],
    ];
    let scale = 2.562f64.powi(2) / 4.0 * 1e-4;
    m.iter()
        .map(|r| r.iter().map(|v| v * scale).collect())
        .collect()
}

/// Flat key-value experiment description. Keys that do not apply to the
/// chosen `kind` are ignored; keys left out take the per-kind defaults
/// returned by the accessor methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default = "defaults::replicates")]
    pub replicates: usize,
    #[serde(default = "defaults::out_dir")]
    pub out_dir: PathBuf,
    /// Returns CSV for `sv_posterior`; synthetic data is generated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_path: Option<PathBuf>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_phi_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_z_grid: Option<Vec<f64>>,
    #[serde(default = "defaults::bins")]
    pub bins: usize,

    #[serde(default = "defaults::mu")]
    pub mu: f64,
    #[serde(default = "defaults::sigma_v")]
    pub sigma_v: f64,
    #[serde(default = "defaults::sigma_e")]
    pub sigma_e: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default = "defaults::is_scale")]
    pub is_scale: IsScale,
    #[serde(default = "defaults::prior_lower")]
    pub prior_lower: f64,
    #[serde(default = "defaults::prior_upper")]
    pub prior_upper: f64,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(default = "defaults::n_pairs")]
    pub n_pairs: usize,
    #[serde(default = "defaults::stddev_draws")]
    pub stddev_draws: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_u_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,

    #[serde(default = "defaults::iterations")]
    pub iterations: usize,
    #[serde(default = "defaults::burn_in")]
    pub burn_in: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposal_cov: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_u: Option<f64>,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "defaults::init_retries")]
    pub init_retries: usize,

    #[serde(default)]
    pub init_variance: InitVariance,
    #[serde(default)]
    pub leverage: LeverageForm,
    /// Generating parameters `[mu, phi, sigma_v, rho]` for synthetic SV data.
    #[serde(default = "defaults::true_theta")]
    pub true_theta: Vec<f64>,
}

mod defaults {
    use super::*;

    pub fn seed() -> u64 {
        1
    }
    pub fn replicates() -> usize {
        32
    }
    pub fn out_dir() -> PathBuf {
        PathBuf::from("out")
    }
    pub fn bins() -> usize {
        1000
    }
    pub fn mu() -> f64 {
        0.5
    }
    pub fn sigma_v() -> f64 {
        0.3
    }
    pub fn sigma_e() -> f64 {
        0.1
    }
    pub fn is_scale() -> IsScale {
        IsScale::Stddev
    }
    pub fn prior_lower() -> f64 {
        -1.0
    }
    pub fn prior_upper() -> f64 {
        1.0
    }
    pub fn n_pairs() -> usize {
        1000
    }
    pub fn stddev_draws() -> usize {
        1000
    }
    pub fn iterations() -> usize {
        10_000
    }
    pub fn burn_in() -> usize {
        1000
    }
    pub fn init_retries() -> usize {
        100
    }
    pub fn true_theta() -> Vec<f64> {
        vec![0.19, 0.98, 0.18, -0.70]
    }
}

impl ExperimentConfig {
    /// All defaults for `kind`.
    pub fn new(kind: ExperimentKind) -> Self {
        toml::from_str(&format!("kind = \"{}\"", kind.as_str())).expect("defaults deserialize")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Data {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn sigma_phi_grid(&self) -> Vec<f64> {
        self.sigma_phi_grid
            .clone()
            .unwrap_or_else(default_sigma_phi_grid)
    }

    pub fn sigma_z_grid(&self) -> Vec<f64> {
        self.sigma_z_grid
            .clone()
            .unwrap_or_else(default_sigma_z_grid)
    }

    /// Series length: 10 for the IID studies, 747 for synthetic SV data.
    pub fn t(&self) -> usize {
        self.t.unwrap_or(match self.kind {
            ExperimentKind::SvPosterior | ExperimentKind::SynthData => 747,
            _ => 10,
        })
    }

    /// Importance samples (IID) or particles (SV).
    pub fn n_samples(&self) -> usize {
        self.n_samples.unwrap_or(match self.kind {
            ExperimentKind::SvPosterior => 50,
            _ => 10,
        })
    }

    /// `{0, 0.05, ..., 1}` for the correlation scan, `{0, 0.025, ..., 1}` for
    /// the heatmap. `sv_posterior` runs only [`Self::sigma_u`] unless a grid
    /// is given.
    pub fn sigma_u_grid(&self) -> Vec<f64> {
        if let Some(g) = &self.sigma_u_grid {
            return g.clone();
        }
        match self.kind {
            ExperimentKind::IidCorrScan => grid(20, 21),
            ExperimentKind::IidHeatmap => grid(40, 41),
            _ => vec![self.sigma_u()],
        }
    }

    pub fn alpha_grid(&self) -> Vec<f64> {
        self.alpha_grid.clone().unwrap_or_else(|| grid(40, 41))
    }

    pub fn theta0(&self) -> Vec<f64> {
        self.theta0.clone().unwrap_or_else(|| match self.kind {
            ExperimentKind::SvPosterior => vec![0.23, 0.98, 0.18, -0.72],
            _ => vec![self.mu],
        })
    }

    pub fn proposal_cov(&self) -> Vec<Vec<f64>> {
        self.proposal_cov
            .clone()
            .unwrap_or_else(|| match self.kind {
                ExperimentKind::SvPosterior => sv_proposal_covariance(),
                _ => vec![vec![0.01]],
            })
    }

    pub fn sigma_u(&self) -> f64 {
        self.sigma_u.unwrap_or(match self.kind {
            ExperimentKind::SvPosterior => 0.55,
            _ => 0.5,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.data_path.is_some() && self.kind != ExperimentKind::SvPosterior {
            return bad("data_path only applies to sv_posterior".into());
        }
        match self.kind {
            ExperimentKind::PeskunScan => {
                if self.bins < 2 {
                    return bad("bins must be at least 2".into());
                }
                if self.sigma_phi_grid().is_empty() || self.sigma_z_grid().is_empty() {
                    return bad("scan grids must be non-empty".into());
                }
            }
            ExperimentKind::IidCorrScan | ExperimentKind::IidHeatmap => {
                if !(self.sigma_v > 0.0 && self.sigma_e > 0.0) {
                    return bad("sigma_v and sigma_e must be positive".into());
                }
                if !(self.prior_lower < self.prior_upper) {
                    return bad("prior_lower must be below prior_upper".into());
                }
                if self.t() == 0 || self.n_samples() == 0 {
                    return bad("t and n_samples must be positive".into());
                }
                let in_unit = |g: &[f64]| g.iter().all(|v| (0.0..=1.0).contains(v));
                if self.sigma_u_grid().is_empty() || !in_unit(&self.sigma_u_grid()) {
                    return bad("sigma_u_grid must be non-empty and within [0, 1]".into());
                }
                if self.kind == ExperimentKind::IidCorrScan && self.stddev_draws < 2 {
                    return bad("stddev_draws must be at least 2".into());
                }
                if self.kind == ExperimentKind::IidHeatmap {
                    if self.alpha_grid().is_empty() || !in_unit(&self.alpha_grid()) {
                        return bad("alpha_grid must be non-empty and within [0, 1]".into());
                    }
                    self.check_sampler(1)?;
                }
            }
            ExperimentKind::SvPosterior => {
                if self.n_samples() == 0 {
                    return bad("n_samples must be positive".into());
                }
                if self.data_path.is_none() {
                    self.check_true_theta()?;
                }
                for s in self.sigma_u_grid() {
                    AuxProposalConfig::new(s, self.alpha)
                        .map_err(|e| Error::Config(e.to_string()))?;
                }
                self.check_sampler(4)?;
            }
            ExperimentKind::SynthData => self.check_true_theta()?,
        }
        Ok(())
    }

    fn check_true_theta(&self) -> Result<()> {
        if self.true_theta.len() != 4 {
            return Err(Error::Config(
                "true_theta needs [mu, phi, sigma_v, rho]".into(),
            ));
        }
        if self.t() == 0 {
            return Err(Error::Config("t must be positive".into()));
        }
        Ok(())
    }

    fn check_sampler(&self, dim: usize) -> Result<()> {
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn_in ({}) must be below iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.theta0().len() != dim {
            return Err(Error::Config(format!("theta0 needs {dim} entries")));
        }
        let q = ThetaProposal::new(&self.proposal_cov())
            .map_err(|e| Error::Config(format!("proposal_cov: {e}")))?;
        if q.dim() != dim {
            return Err(Error::Config(format!("proposal_cov must be {dim}x{dim}")));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config("alpha must lie in [0, 1]".into()));
        }
        Ok(())
    }
}
