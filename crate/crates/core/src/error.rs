use thiserror::Error;

/// Errors produced by the clustering pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum KsccError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not enough points: {n} points cannot support flats of dimension {ell}")]
    TooFewPoints { n: usize, ell: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl KsccError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        KsccError::InvalidInput(msg.into())
    }

    /// True for failures caused by floating-point breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, KsccError::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, KsccError>;
