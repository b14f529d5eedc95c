use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network config: {0}")]
    InvalidConfig(String),

    #[error("reservation space has {size} elements, above the ceiling of {ceiling}")]
    SpaceTooLarge { size: u128, ceiling: usize },

    #[error("invalid reservation {values:?}: {reason}")]
    InvalidReservation { values: Vec<u32>, reason: String },

    #[error("flat index {index} out of range for a space of {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("brute-force transfer search needs {candidates} candidates, above the ceiling of {ceiling}")]
    SearchTooLarge { candidates: u128, ceiling: u128 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("hindsight benchmark infeasible for K={k}")]
    Infeasible { k: usize },

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no Slater point: best margin is {eta}")]
    NoSlaterPoint { eta: f64 },

    #[error("trace {path}: line {line}: {reason}")]
    Trace {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable tag, used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid_config",
            Error::SpaceTooLarge { .. } => "space_too_large",
            Error::InvalidReservation { .. } => "invalid_reservation",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::SearchTooLarge { .. } => "search_too_large",
            Error::InvalidDistribution(_) => "invalid_distribution",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::Infeasible { .. } => "benchmark_infeasible",
            Error::Unbounded => "unbounded",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NoSlaterPoint { .. } => "no_slater_point",
            Error::Trace { .. } => "trace",
            Error::MissingInput(_) => "missing_input",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
