use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric parameter is outside its valid range (non-finite input,
    /// non-positive sigma, and so on).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An input vector or request does not satisfy an operation's contract.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A measurement value violates its contract (negative aggregate,
    /// non-increasing timestamps, zero interval).
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    /// A rule file, policy file, or state map failed to parse.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A configuration is structurally invalid (empty rule base, zero share,
    /// missing rule file, zero ifSpeed, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A flow id was not found among the active flows.
    #[error("not found: {0}")]
    NotFound(String),

    /// A metric is undefined for the given data (e.g. zero generated requests).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// The oracle's state space exceeds the configured enumeration bound.
    #[error("state space too large: {0}")]
    Oversize(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }
}
