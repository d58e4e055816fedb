use std::io;

use thiserror::Error;

/// Everything that can go wrong between reading a trace and emitting a report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("trace contains no parseable records")]
    EmptyTrace,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("self-pair: user {0} compared with itself")]
    SelfPair(String),

    #[error("cold start: user {0} has no training activity")]
    ColdStart(String),

    #[error("no user is active in both the training and the test period")]
    EmptyEvaluation,

    #[error("pair store exceeded its cap of {cap} entries")]
    PairCapExceeded { cap: usize },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Short stable identifier, used for machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::EmptyTrace => "empty-trace",
            Error::Config(_) => "config",
            Error::EmptyInput(_) => "empty-input",
            Error::SelfPair(_) => "self-pair",
            Error::ColdStart(_) => "cold-start",
            Error::EmptyEvaluation => "empty-evaluation",
            Error::PairCapExceeded { .. } => "pair-cap-exceeded",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
