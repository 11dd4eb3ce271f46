use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A linear system could not be solved; for LLE weights the caller should
    /// raise the regularization.
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("schema error in {path} (record {record}): {message}")]
    Schema {
        path: PathBuf,
        record: String,
        message: String,
    },

    #[error("missing topic: {0:?}")]
    MissingTopic(String),

    #[error("capacity error: need {needed} {pool}, only {available} available")]
    Capacity {
        pool: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("degenerate detector: score standard deviation is zero")]
    DegenerateDetector,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable identifier for the error category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::InvalidData(_) => "invalid-data",
            Error::NumericFailure(_) => "numeric-failure",
            Error::Schema { .. } => "schema-error",
            Error::MissingTopic(_) => "missing-topic",
            Error::Capacity { .. } => "capacity-error",
            Error::UndefinedMetric(_) => "undefined-metric",
            Error::DegenerateDetector => "degenerate-detector",
            Error::Io { .. } => "io-error",
            Error::Json(_) => "json-error",
            Error::Csv(_) => "csv-error",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
