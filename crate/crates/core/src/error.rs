use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("kernel singularity: coincident points in a singular kernel")]
    Singularity,

    #[error("kernel singularity at target row {row}, source column {col}")]
    SingularEntry { row: usize, col: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: line {line}: expected {expected} columns, found {found}")]
    InconsistentWidth {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: no points found")]
    EmptyInput { path: PathBuf },

    #[error("no targets at distance >= {threshold} from the center (lower xi)")]
    NoTargets { threshold: f64 },

    #[error("index {index} out of range for length {len}")]
    OutOfRange { index: usize, len: usize },

    #[error("ill-conditioned skeleton: |R[r,r]|/|R[1,1]| = {ratio:e} at rank {rank}")]
    IllConditionedSkeleton { rank: usize, ratio: f64 },

    #[error("sampling scheme `{scheme}` requires {what}")]
    MissingContext {
        scheme: &'static str,
        what: &'static str,
    },

    #[error("sampling weights have zero total mass")]
    ZeroWeight,

    #[error("row sample is empty")]
    EmptySample,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("bandwidth search failed: {message}")]
    SearchFailed {
        message: String,
        /// `(h, rank)` pairs evaluated before giving up.
        profile: Vec<(f64, usize)>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
