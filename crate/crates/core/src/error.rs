use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("{what} of size {size} exceeds the bound {bound}")]
    BoundExceeded { what: String, size: u128, bound: u128 },
    #[error("not a unit: {0}")]
    NonUnit(String),
    #[error("precision: {0}")]
    Precision(String),
    #[error("inconsistent computation: {0}")]
    Inconsistent(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
