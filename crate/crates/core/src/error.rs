use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Physical failure modes of a solve (mass run-off, an unbounded multiplier
/// bracket, an exhausted iteration budget) are verdicts, not errors; see
/// [`crate::solver::Verdict`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    /// No multiplier in the expanded bracket reaches the target mass.
    #[error("multiplier bracket failure: {0}")]
    LambdaBracket(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
