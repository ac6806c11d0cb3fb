use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported dimension {0} (supported: 2..=6)")]
    UnsupportedDimension(usize),

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("multiplier pole: {0}")]
    Pole(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}
