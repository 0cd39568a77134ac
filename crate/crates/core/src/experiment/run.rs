use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind};
use super::data::load_returns;
use crate::auxiliary::AuxProposalConfig;
use crate::diagnostics::{
    iact, linear_fit, loglik_correlation_scan, loglik_stddev, median, posterior_summary,
    PosteriorSummary, DEFAULT_MAX_LAG,
};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, ModelSpec, PotentialEvaluator};
use crate::models::{simulate_iid, simulate_sv, GaussianIIDModel, PriorSpec, SVLeverageModel};
use crate::peskun::{scan_optimal_sigma_z, CONDITION_WARNING};
use crate::sampler::{replicate_rng, run_replicates, ChainTrace, SamplerConfig, ThetaProposal};

/// Streams reserved for data simulation and the scans; chains use streams
/// `0..replicates` of the same seed.
const DATA_STREAM: u64 = u64::MAX;
const SCAN_STREAM: u64 = u64::MAX - 1;
const STDDEV_STREAM: u64 = u64::MAX - 2;

/// Files written (relative to the output directory) and one summary line per
/// replicate or scan point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

struct Staging<'a> {
    dir: &'a Path,
    report: ExperimentReport,
}

impl Staging<'_> {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.report.files.push(PathBuf::from(name));
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(self.create(name)?);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        std::io::Write::write_all(&mut w, b"\n")?;
        std::io::Write::flush(&mut w)?;
        Ok(())
    }

    fn say(&mut self, line: String) {
        self.report.lines.push(line);
    }
}

/// Runs the experiment and moves its outputs into `cfg.out_dir`. Outputs are
/// assembled in a staging directory that is deleted if anything fails, so a
/// failed run leaves no partial files behind.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let context = cfg.kind.as_str();
    cfg.validate().map_err(|e| e.context(context))?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::from(e).context(context))?;
    let staging = tempfile::Builder::new()
        .prefix(".staging-")
        .tempdir_in(&cfg.out_dir)
        .map_err(|e| Error::from(e).context(context))?;
    let mut st = Staging {
        dir: staging.path(),
        report: ExperimentReport::default(),
    };
    let outcome = match cfg.kind {
        ExperimentKind::PeskunScan => peskun(cfg, &mut st),
        ExperimentKind::IidCorrScan => iid_corr_scan(cfg, &mut st),
        ExperimentKind::IidHeatmap => iid_heatmap(cfg, &mut st),
        ExperimentKind::SvPosterior => sv_posterior(cfg, &mut st),
        ExperimentKind::SynthData => synth_data(cfg, &mut st),
    };
    outcome.map_err(|e| e.context(context))?;
    for f in &st.report.files {
        std::fs::rename(staging.path().join(f), cfg.out_dir.join(f))
            .map_err(|e| Error::from(e).context(context))?;
    }
    Ok(st.report)
}

fn num(v: f64) -> String {
    v.to_string()
}

fn peskun(cfg: &ExperimentConfig, st: &mut Staging) -> Result<()> {
    let (points, best) =
        scan_optimal_sigma_z(&cfg.sigma_phi_grid(), &cfg.sigma_z_grid(), cfg.bins)?;
    for p in points.iter().filter(|p| p.condition > CONDITION_WARNING) {
        st.say(format!(
            "warning: sigma_phi={} sigma_z={} condition estimate {:e}",
            p.sigma_phi, p.sigma_z, p.condition
        ));
    }
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| vec![num(p.sigma_phi), num(p.sigma_z), num(p.p_jump), num(p.nu)])
        .collect();
    st.csv(
        "peskun_scan.csv",
        &["sigma_phi", "sigma_z", "p_jump", "nu"],
        &rows,
    )?;
    let rows: Vec<Vec<String>> = best
        .iter()
        .map(|b| vec![num(b.sigma_phi), num(b.opt_sigma_z), num(b.opt_p_jump)])
        .collect();
    st.csv(
        "peskun_optimal.csv",
        &["sigma_phi", "opt_sigma_z", "opt_p_jump"],
        &rows,
    )?;
    for b in &best {
        st.say(format!(
            "sigma_phi={:.2} opt_sigma_z={:.3} opt_p_jump={:.3}",
            b.sigma_phi, b.opt_sigma_z, b.opt_p_jump
        ));
    }
    Ok(())
}

/// Simulated IID data and the importance-sampling potential for `mu`.
fn iid_setup(cfg: &ExperimentConfig, st: &mut Staging) -> Result<PotentialEvaluator> {
    let model = GaussianIIDModel::new(cfg.mu, cfg.sigma_v, cfg.sigma_e)?;
    let y = simulate_iid(&model, cfg.t(), &mut replicate_rng(cfg.seed, DATA_STREAM));
    let rows: Vec<Vec<String>> = y.iter().map(|v| vec![num(*v)]).collect();
    st.csv("iid_data.csv", &["y"], &rows)?;
    PotentialEvaluator::new(
        ModelSpec::IidMean {
            sigma_v: cfg.sigma_v,
            sigma_e: cfg.sigma_e,
            scale: cfg.is_scale,
        },
        PriorSpec::iid_mean(cfg.prior_lower, cfg.prior_upper)?,
        y,
        EstimatorKind::ImportanceSampling,
        cfg.n_samples(),
    )
}

#[derive(Serialize)]
struct CorrSummary {
    theta: Vec<f64>,
    loglik_std: f64,
    /// Least-squares fit of correlation on `sigma_u` over `sigma_u > 0.2`.
    fit_slope: f64,
    fit_intercept: f64,
    n_pairs: usize,
    stddev_draws: usize,
}

fn iid_corr_scan(cfg: &ExperimentConfig, st: &mut Staging) -> Result<()> {
    let ev = iid_setup(cfg, st)?;
    let theta = vec![cfg.mu];
    let points = loglik_correlation_scan(
        &ev,
        &theta,
        &cfg.sigma_u_grid(),
        cfg.n_pairs,
        &mut replicate_rng(cfg.seed, SCAN_STREAM),
    )?;
    let sd = loglik_stddev(
        &ev,
        &theta,
        cfg.stddev_draws,
        &mut replicate_rng(cfg.seed, STDDEV_STREAM),
    )?;
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.sigma_u > 0.2 && p.correlation.is_finite())
        .map(|p| (p.sigma_u, p.correlation))
        .unzip();
    let (slope, intercept) = if x.len() >= 2 {
        linear_fit(&x, &y)
    } else {
        (f64::NAN, f64::NAN)
    };
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| vec![num(p.sigma_u), num(p.correlation)])
        .collect();
    st.csv("corr_scan.csv", &["sigma_u", "correlation"], &rows)?;
    for p in &points {
        st.say(format!(
            "sigma_u={:.3} correlation={:.4}",
            p.sigma_u, p.correlation
        ));
    }
    st.say(format!(
        "loglik_std={sd:.3} fit: correlation = {intercept:.3} + {slope:.3} sigma_u"
    ));
    st.json(
        "summary.json",
        &CorrSummary {
            theta,
            loglik_std: sd,
            fit_slope: slope,
            fit_intercept: intercept,
            n_pairs: cfg.n_pairs,
            stddev_draws: cfg.stddev_draws,
        },
    )
}

fn sampler_config(cfg: &ExperimentConfig, aux: AuxProposalConfig) -> Result<SamplerConfig> {
    let mut s = SamplerConfig::new(
        cfg.iterations,
        cfg.theta0(),
        ThetaProposal::new(&cfg.proposal_cov())?,
        aux,
    );
    s.init_retries = cfg.init_retries;
    Ok(s)
}

/// IACT of parameter `j` after burn-in; a chain that never moved counts as
/// infinitely inefficient.
fn chain_iact(trace: &ChainTrace, j: usize, burn_in: usize) -> Result<f64> {
    match iact(&trace.column(j)[burn_in..], DEFAULT_MAX_LAG) {
        Ok(v) => Ok(v),
        Err(Error::ConstantSeries) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn iid_heatmap(cfg: &ExperimentConfig, st: &mut Staging) -> Result<()> {
    let ev = iid_setup(cfg, st)?;
    let mut rows = Vec::new();
    // Every cell reuses replicate streams 0..replicates, so cells differ only
    // through the proposal settings.
    for &sigma_u in &cfg.sigma_u_grid() {
        for &alpha in &cfg.alpha_grid() {
            let Ok(aux) = AuxProposalConfig::new(sigma_u, alpha) else {
                // sigma_u = 0 without global moves never updates u.
                rows.push(vec![num(sigma_u), num(alpha), num(f64::NAN)]);
                st.say(format!("sigma_u={sigma_u:.3} alpha={alpha:.3} skipped"));
                continue;
            };
            let traces = run_replicates(&sampler_config(cfg, aux)?, &ev, cfg.seed, cfg.replicates)
                .map_err(|e| e.context(format!("sigma_u={sigma_u} alpha={alpha}")))?;
            let iacts = traces
                .iter()
                .map(|t| chain_iact(t, 0, cfg.burn_in))
                .collect::<Result<Vec<_>>>()?;
            let m = median(&iacts);
            rows.push(vec![num(sigma_u), num(alpha), num(m)]);
            st.say(format!(
                "sigma_u={sigma_u:.3} alpha={alpha:.3} median_iact={m:.3}"
            ));
        }
    }
    st.csv(
        "iid_heatmap.csv",
        &["sigma_u", "alpha", "median_iact"],
        &rows,
    )
}

#[derive(Serialize)]
struct PooledSummary {
    n_samples: usize,
    mean: Vec<f64>,
    std: Vec<f64>,
}

#[derive(Serialize)]
struct SvRunSummary {
    sigma_u: f64,
    alpha: f64,
    pooled: PooledSummary,
    median_iact: Vec<f64>,
    median_acceptance_rate: f64,
    replicates: Vec<PosteriorSummary>,
}

#[derive(Serialize)]
struct SvSummary {
    data: String,
    t: usize,
    n_particles: usize,
    true_theta: Option<Vec<f64>>,
    runs: Vec<SvRunSummary>,
}

/// Post-burn-in samples of every replicate pooled together.
fn pooled(traces: &[ChainTrace], burn_in: usize) -> PooledSummary {
    let dim = traces[0].dim();
    let mut mean = Vec::with_capacity(dim);
    let mut std = Vec::with_capacity(dim);
    let mut n = 0;
    for j in 0..dim {
        let all: Vec<f64> = traces
            .iter()
            .flat_map(|t| t.column(j)[burn_in..].to_vec())
            .collect();
        n = all.len();
        let m = all.iter().sum::<f64>() / n as f64;
        let v = all.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
        mean.push(m);
        std.push(v.sqrt());
    }
    PooledSummary {
        n_samples: n,
        mean,
        std,
    }
}

fn sv_model(cfg: &ExperimentConfig) -> Result<SVLeverageModel> {
    let th = &cfg.true_theta;
    SVLeverageModel::with_options(th[0], th[1], th[2], th[3], cfg.init_variance, cfg.leverage)
}

fn sv_posterior(cfg: &ExperimentConfig, st: &mut Staging) -> Result<()> {
    let (y, source, truth) = match &cfg.data_path {
        Some(p) => (load_returns(p)?.log_returns, p.display().to_string(), None),
        None => {
            let path = simulate_sv(
                &sv_model(cfg)?,
                cfg.t(),
                &mut replicate_rng(cfg.seed, DATA_STREAM),
            )?;
            let rows: Vec<Vec<String>> = path
                .observations
                .iter()
                .zip(&path.states[1..])
                .map(|(y, x)| vec![num(*y), num(*x)])
                .collect();
            st.csv("sv_data.csv", &["log_return", "state"], &rows)?;
            (
                path.observations,
                "synthetic".to_string(),
                Some(cfg.true_theta.clone()),
            )
        }
    };
    let t = y.len();
    let ev = PotentialEvaluator::new(
        ModelSpec::SvLeverage {
            init: cfg.init_variance,
            leverage: cfg.leverage,
        },
        PriorSpec::sv_leverage(),
        y,
        EstimatorKind::BootstrapPf,
        cfg.n_samples(),
    )?;

    let names = ["mu", "phi", "sigma_v", "rho"];
    let mut runs = Vec::new();
    let mut iact_rows = Vec::new();
    for &sigma_u in &cfg.sigma_u_grid() {
        let aux = AuxProposalConfig::new(sigma_u, cfg.alpha)?;
        let traces = run_replicates(&sampler_config(cfg, aux)?, &ev, cfg.seed, cfg.replicates)
            .map_err(|e| e.context(format!("sigma_u={sigma_u}")))?;
        let mut summaries = Vec::with_capacity(traces.len());
        for (r, trace) in traces.iter().enumerate() {
            let name = format!("trace_sigma_u_{sigma_u:.3}_rep_{r:03}.csv");
            trace.write_csv(st.create(&name)?)?;
            let s = posterior_summary(trace, cfg.burn_in)?;
            st.say(format!(
                "sigma_u={sigma_u:.3} replicate={r} acceptance={:.3} mean=[{}]",
                s.acceptance_rate,
                s.mean
                    .iter()
                    .map(|m| format!("{m:.3}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
            summaries.push(s);
        }
        let mut median_iact = Vec::new();
        for (j, name) in names.iter().enumerate() {
            let v = traces
                .iter()
                .map(|tr| chain_iact(tr, j, cfg.burn_in))
                .collect::<Result<Vec<_>>>()?;
            let m = median(&v);
            iact_rows.push(vec![num(sigma_u), name.to_string(), num(m)]);
            median_iact.push(m);
        }
        let acc: Vec<f64> = summaries.iter().map(|s| s.acceptance_rate).collect();
        runs.push(SvRunSummary {
            sigma_u,
            alpha: cfg.alpha,
            pooled: pooled(&traces, cfg.burn_in),
            median_iact,
            median_acceptance_rate: median(&acc),
            replicates: summaries,
        });
    }
    st.csv(
        "sv_iact.csv",
        &["sigma_u", "param", "median_iact"],
        &iact_rows,
    )?;
    st.json(
        "summary.json",
        &SvSummary {
            data: source,
            t,
            n_particles: cfg.n_samples(),
            true_theta: truth,
            runs,
        },
    )
}

fn synth_data(cfg: &ExperimentConfig, st: &mut Staging) -> Result<()> {
    let path = simulate_sv(
        &sv_model(cfg)?,
        cfg.t(),
        &mut replicate_rng(cfg.seed, DATA_STREAM),
    )?;
    let rows: Vec<Vec<String>> = path
        .observations
        .iter()
        .zip(&path.states[1..])
        .map(|(y, x)| vec![num(*y), num(*x)])
        .collect();
    st.csv("synth.csv", &["log_return", "state"], &rows)?;
    st.say(format!("wrote {} synthetic returns", rows.len()));
    Ok(())
}
