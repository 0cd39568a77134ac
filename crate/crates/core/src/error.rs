use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("CN step length must lie in (0, 1], got {0}")]
    InvalidStepLength(f64),

    #[error("invalid auxiliary proposal: {0}")]
    InvalidAuxProposal(String),

    #[error("auxiliary block shape must be at least 1x1, got {rows}x{cols}")]
    EmptyShape { rows: usize, cols: usize },

    #[error("non-finite input to the normal CDF: {0}")]
    NonFinite(f64),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("proposal covariance is not positive definite")]
    NotPositiveDefinite,

    #[error("potential was infinite for {attempts} initial auxiliary draws")]
    InitializationFailed { attempts: usize },

    #[error("invalid sampler configuration: {0}")]
    InvalidSampler(String),

    #[error("series has constant value; autocorrelation is undefined")]
    ConstantSeries,

    #[error("series of length {len} is too short for {max_lag} lags")]
    SeriesTooShort { len: usize, max_lag: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("negative stay probability {value:e} in row {row}; use a finer grid")]
    NegativeDiagonal { row: usize, value: f64 },

    #[error(
        "fundamental-matrix system is singular (pivot-ratio condition estimate {condition:e})"
    )]
    SingularSystem { condition: f64 },

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Experiment {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn context(self, context: impl Into<String>) -> Self {
        Error::Experiment {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
