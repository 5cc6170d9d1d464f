use thiserror::Error;

/// Errors produced by kernel construction, learning and evaluation.
#[derive(Debug, Error)]
pub enum MklError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("degenerate kernel: {0}")]
    Degenerate(String),

    #[error("labels must contain both classes (n_pos = {n_pos}, n_neg = {n_neg})")]
    SingleClass { n_pos: usize, n_neg: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MklError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(MklError::InvalidInput(msg.into()))
}

pub(crate) fn shape_mismatch<T>(expected: impl ToString, actual: impl ToString) -> Result<T> {
    Err(MklError::ShapeMismatch {
        expected: expected.to_string(),
        actual: actual.to_string(),
    })
}
