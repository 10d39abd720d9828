// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("document {0:?} has empty text")]
    EmptyText(String),
    #[error("document {0:?} has an empty department label")]
    EmptyDepartment(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("segments do not belong to the corpus: {0}")]
    CorpusMismatch(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
