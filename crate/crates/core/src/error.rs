use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by the scanpath likelihood library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("coordinate ({x}, {y}) lies outside the image extent [0, {extent}]")]
    OutOfBounds { x: f64, y: f64, extent: f64 },

    #[error("fixation {fix_index} of trial {subject}/{image}/{trial} lies outside the grid: ({x}, {y})")]
    FixationOutOfBounds { subject: String, image: String, trial: u32, fix_index: usize, x: f64, y: f64 },

    #[error("non-finite value while computing {what} with parameters {params}")]
    NumericDomain { what: &'static str, params: String },

    #[error("model `{model}` assigns zero probability to cell ({i}, {j})")]
    ZeroProbability { model: String, i: usize, j: usize },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("cannot compare traces: {0}")]
    Comparison(String),

    #[error("data integrity error: {0}")]
    Integrity(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("optimization failed: {0}")]
    OptimizationFailed(String),

    #[error("statistic undefined: {0}")]
    UndefinedStatistic(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
