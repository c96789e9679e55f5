use thiserror::Error;

use crate::engram::EngramId;

pub type Result<T, E = EngineError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An operation was called out of its required order, e.g. retrieving
    /// with an empty working memory.
    #[error("sequencing error: {0}")]
    Sequencing(String),

    #[error("shape error: expected dimension {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("unknown engram {0}")]
    Lookup(EngramId),

    #[error("contract violation: {0}")]
    Contract(String),
}

/// Failure while reading a trace, snapshot or manifest file.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Engine(#[from] EngineError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FormatError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        FormatError::Parse {
            line,
            msg: msg.into(),
        }
    }
}
