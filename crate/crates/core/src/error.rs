use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("singular curve: 4a^3 + 27b^2 = 0")]
    InvalidCurve,
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("forms share a common zero (resultant vanishes)")]
    NotAMorphism,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("tolerance must be positive")]
    InvalidTolerance,
    #[error("no positive-height point within search bound {0}")]
    BoundTooSmall(u64),
    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),
    #[error("sigma oracle has no witness for {0}")]
    IncompleteOracle(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("prime selection not reached below prime ceiling {ceiling}")]
    PrimeBudgetExceeded { ceiling: u64 },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
