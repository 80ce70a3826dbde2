use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter mismatch: {0}")]
    ParamMismatch(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("modulus mismatch: {0}")]
    ModulusMismatch(String),
    #[error("missing key: {0}")]
    MissingKey(String),
    #[error("53-bit exactness bound violated: {0}")]
    FpBound(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("encoding overflow: {0}")]
    Overflow(String),
    #[error("malformed data: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
