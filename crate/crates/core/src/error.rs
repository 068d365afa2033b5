use thiserror::Error;

/// Errors raised by the numerical toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point lies outside the domain: {0}")]
    OutsideDomain(String),

    #[error("point is boundary-adjacent: {0}")]
    BoundaryAdjacent(String),

    #[error("unbounded domain requires a truncation box")]
    Unbounded,

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("singular or unsolvable linear system: {0}")]
    SingularSystem(String),

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("search failed: {0}")]
    SearchFailed(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
