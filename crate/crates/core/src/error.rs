use std::path::PathBuf;

use thiserror::Error;

use crate::month::Month;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{0}: no data rows")]
    NoDataRows(PathBuf),

    #[error("unknown series code `{0}`")]
    UnknownSeries(String),

    #[error("invalid month stamp `{0}` (expected YYYY-MM)")]
    InvalidMonth(String),

    #[error("invalid transform code {0}")]
    InvalidTransformCode(u8),

    #[error("transform {code} requires strictly positive values, found {value} at {month}")]
    NonPositive { code: u8, value: f64, month: Month },

    #[error("series too short for transform {code}: {len} observations")]
    SeriesTooShort { code: u8, len: usize },

    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("column `{code}` has {observed} observed entries, need at least 2")]
    TooFewObservations { code: String, observed: usize },

    #[error("empty intersection of date ranges: {0}")]
    EmptyRange(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("non-finite state at sweep {sweep}: {what}")]
    NonFinite { sweep: usize, what: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unstable VAR specification: spectral radius {0:.4} >= 1")]
    Unstable(f64),

    #[error("missing vintage for {0}")]
    MissingVintage(Month),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
