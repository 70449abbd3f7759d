use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("transform produces a constant component (index {0})")]
    ConstantComponent(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("value outside the supported range: {0}")]
    Overflow(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
