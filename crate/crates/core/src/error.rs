use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid dimension {0}: must be at least 1")]
    InvalidDimension(i64),
    #[error("invalid constant {0}: must exceed 1")]
    InvalidConstant(f64),
    #[error("incompatible windows: {0}")]
    IncompatibleWindows(String),
    #[error("invalid marginal family: {0}")]
    InvalidFamily(String),
    #[error("middle marginals of the two couplings differ")]
    IncompatibleMiddle,
    #[error("stage {requested} requested but only {available} stages are configured")]
    StageExhausted { requested: usize, available: usize },
    #[error("unknown example name `{0}`")]
    UnknownExample(String),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
