use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the bridging pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch at node {node} ({op}): {detail}")]
    Shape {
        node: usize,
        op: &'static str,
        detail: String,
    },
    #[error("non-finite value produced at node {node} ({op})")]
    NonFinite { node: usize, op: &'static str },
    #[error("backward called before forward")]
    NotForwarded,
    #[error("loss node {node} is not a scalar ({rows}x{cols})")]
    NotScalar {
        node: usize,
        rows: usize,
        cols: usize,
    },
    #[error("non-finite gradient for parameter `{param}`")]
    NonFiniteGradient { param: String },
    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("sentence `{sentence}`: {message}")]
    Sentence { sentence: String, message: String },

    #[error("task {task}: {message}")]
    Task { task: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn sentence(sentence: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Sentence {
            sentence: sentence.into(),
            message: message.into(),
        }
    }

    pub(crate) fn task(task: impl std::fmt::Display, message: impl Into<String>) -> Self {
        Error::Task {
            task: task.to_string(),
            message: message.into(),
        }
    }

    /// True for errors caused by user input rather than an internal fault.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Sentence { .. }
                | Error::Task { .. }
                | Error::Invalid(_)
                | Error::Io { .. }
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
