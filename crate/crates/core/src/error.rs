use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A table size or threshold was zero or above the configured ceiling.
    #[error("capacity error: requested {requested}, allowed 1..={ceiling}")]
    Capacity { requested: u64, ceiling: u64 },

    /// An argument fell outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} outside table range 1..={limit}")]
    OutOfRange { index: u64, limit: u64 },

    #[error("corrupt cache: {0}")]
    CorruptCache(String),

    /// Two computation routes disagreed, or a stored value contradicts a recomputed one.
    #[error("inconsistent result: {0}")]
    Inconsistent(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
