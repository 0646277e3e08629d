use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("ragged row {row}: expected {expected} columns, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-numeric cell ({row},{col}): {text:?}")]
    NonNumeric { row: usize, col: usize, text: String },

    #[error("{0}")]
    Domain(String),

    #[error("insufficient sample in region {region:?}: {available} points for {bins} bins")]
    Capacity {
        region: Vec<usize>,
        available: usize,
        bins: usize,
    },

    #[error("covariance matrix is not symmetric positive-definite")]
    Factorization,

    #[error("root not bracketed on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
