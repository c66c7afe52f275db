use thiserror::Error;

/// Errors raised by space construction and the analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("metric error: {0}")]
    Metric(String),
    #[error("weight error: {0}")]
    Weight(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("generator spec error: {0}")]
    Spec(String),
    #[error("ambient error: {0}")]
    Ambient(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// A guaranteed conclusion did not hold. Seeing this means a bug or a
    /// floating point tolerance problem, never bad input.
    #[error("postcondition violated: {0}")]
    Postcondition(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
