use thiserror::Error;

/// Errors produced by encoders, learners, environments and the planning loop.
#[derive(Debug, Error)]
pub enum LosseError {
    /// Invalid configuration (zero dims, lambda < 2, bad ranges, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Dimension mismatch between an input and the expected shape.
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    /// Non-finite or otherwise out-of-domain values.
    #[error("invalid value: {0}")]
    Value(String),

    /// A linear solve failed (matrix not positive definite without ridge).
    #[error("solver failure: {0}")]
    Solver(String),

    /// Malformed binary input; `offset` is the byte position of the problem.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LosseError>;

impl LosseError {
    pub fn shape(expected: impl Into<String>, got: impl Into<String>) -> Self {
        LosseError::Shape {
            expected: expected.into(),
            got: got.into(),
        }
    }
}
