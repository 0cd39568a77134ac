use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use cpmmh::experiment::{run_experiment, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(
    name = "cpmmh",
    version,
    about = "Correlated pseudo-marginal MH experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal CN step length per log-likelihood noise level in z-space.
    PeskunScan(Common),
    /// Correlation of consecutive log-likelihood estimates for the IID model.
    IidCorrScan(Common),
    /// Median IACT over a (sigma_u, alpha) grid for the IID model.
    IidHeatmap(Common),
    /// Posterior of the leveraged SV model.
    SvPosterior(Common),
    /// Simulate returns from the leveraged SV model.
    SynthData(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; defaults apply to every key it leaves out.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads for replicates and scan points (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn build_config(kind: ExperimentKind, args: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(kind),
    };
    if cfg.kind != kind {
        bail!(
            "config describes `{}` but the subcommand runs `{}`",
            cfg.kind.as_str(),
            kind.as_str()
        );
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(d) = &args.out_dir {
        cfg.out_dir = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (kind, args) = match &cli.command {
        Command::PeskunScan(a) => (ExperimentKind::PeskunScan, a),
        Command::IidCorrScan(a) => (ExperimentKind::IidCorrScan, a),
        Command::IidHeatmap(a) => (ExperimentKind::IidHeatmap, a),
        Command::SvPosterior(a) => (ExperimentKind::SvPosterior, a),
        Command::SynthData(a) => (ExperimentKind::SynthData, a),
    };
    let cfg = build_config(kind, args)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = args.workers {
        if w == 0 {
            bail!("--workers must be at least 1");
        }
        pool = pool.num_threads(w);
    }
    let pool = pool.build().context("building worker pool")?;
    let report = pool.install(|| run_experiment(&cfg))?;
    for line in &report.lines {
        println!("{line}");
    }
    for f in &report.files {
        eprintln!("wrote {}", cfg.out_dir.join(f).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
