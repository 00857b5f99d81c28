use thiserror::Error;

/// Errors raised by the library.
///
/// The variants are grouped so that a front end can map them onto exit
/// codes without string matching (see [`Error::kind`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("resolution violation: {0}")]
    Resolution(String),

    #[error("rule not applicable: {0}")]
    RuleNotApplicable(String),

    #[error("degenerate Gaussian state: {0}")]
    Degenerate(String),

    #[error("unsupported propagator: {0}")]
    UnsupportedPropagator(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification of [`Error`] used for exit-code mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Resolution,
    Unsupported,
    Numerical,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidDimension(_)
            | Error::InvalidInput(_)
            | Error::Parse(_)
            | Error::RuleNotApplicable(_) => ErrorKind::Input,
            Error::OutOfRange(_) | Error::Resolution(_) => ErrorKind::Resolution,
            Error::UnsupportedPropagator(_) => ErrorKind::Unsupported,
            Error::Degenerate(_) => ErrorKind::Numerical,
            Error::Io(_) => ErrorKind::Io,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(format!("line {}, column {}: {}", e.line(), e.column(), e))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
