use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum RbError {
    /// The metric lost positive definiteness at a grid point.
    #[error("{context}: metric is not positive definite at grid index {index:?}")]
    DegenerateMetric { context: &'static str, index: Vec<usize> },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown variant `{0}`")]
    UnknownVariant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RbError>;
