use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("not enough data: {got} points, need at least {need}")]
    InsufficientData { got: usize, need: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(&'static str),

    #[error("objective became non-finite during {0}")]
    NonFinite(&'static str),

    #[error("Bayes factor must be positive, got {0}")]
    NonPositive(f64),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("malformed CSV: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;
