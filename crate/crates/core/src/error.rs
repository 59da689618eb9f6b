use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{function}: argument {value} outside the domain (must be finite and > 0)")]
    Domain { function: &'static str, value: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite density: {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("label {label} out of range for {n_clusters} clusters")]
    LabelOutOfRange { label: usize, n_clusters: usize },

    #[error("need at least as many points as clusters ({n_points} < {n_clusters})")]
    TooFewPoints { n_points: usize, n_clusters: usize },

    #[error("non-finite log-likelihood after initialization (seed {seed})")]
    InitFailed { seed: u64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("feature {0} is constant and cannot be scaled")]
    ConstantFeature(String),

    #[error("{path}: {message}")]
    Csv { path: String, message: String },

    #[error("non-numeric value {value:?} at row {row}, column {column}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("unknown column {0:?}")]
    UnknownColumn(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
