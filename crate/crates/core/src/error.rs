use thiserror::Error;

use crate::params::Regime;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("regime mismatch: expected {expected:?}, got {actual:?}")]
    RegimeMismatch { expected: Regime, actual: Regime },
    #[error("horizon {requested} exceeds cap {cap}")]
    HorizonExceeded { requested: u64, cap: u64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
