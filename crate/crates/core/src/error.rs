use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("payoff matrix is empty")]
    EmptyMatrix,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("mixed strategy has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid mixed strategy: {0}")]
    InvalidMix(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("strategy index {index} out of bounds for {len} strategies")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("accumulator overflow at step {step}")]
    Overflow { step: u64 },
    #[error("snapshot error: {0}")]
    Snapshot(String),
    #[error("trace error: {0}")]
    Trace(String),
    #[error("analysis precondition failed: {0}")]
    Analysis(String),
    #[error("{n} does not divide t={t}; nearest valid t is {nearest}")]
    NotDivisible { n: u64, t: u64, nearest: u64 },
    #[error("search limits exceeded: {0}")]
    LimitExceeded(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
