//! Declarative experiment runner: config parsing, data loading and the
//! pipelines that write CSV/JSON artifacts.

mod config;
mod data;
mod run;

pub use config::{sv_proposal_covariance, ExperimentConfig, ExperimentKind};
pub use data::{load_returns, ReturnsSeries};
pub use run::{run_experiment, ExperimentReport};
