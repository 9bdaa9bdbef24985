use std::io;

use thiserror::Error;

/// Errors produced by the estimators, simulators and IO front end.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A block geometry or experiment setting that cannot be used.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("index {index} out of range 1..={max}")]
    Index { index: usize, max: usize },

    /// A studentized statistic that cannot be formed (zero variance,
    /// nonpositive estimate under the log transform).
    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    /// Tick or config file problems; `line` is 1-based and counts the header.
    #[error("load error at line {line}: {message}")]
    Load { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
