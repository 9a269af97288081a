use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A record could not be parsed. `context` is usually `path:line`.
    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown state label {label:?} for vocabulary {vocabulary}")]
    UnknownLabel { label: String, vocabulary: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("no label sequence of length {steps} has a finite score")]
    NoValidPath { steps: usize },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("procedure {procedure}, entity {entity}: {source}")]
    Entity {
        procedure: String,
        entity: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn for_entity(self, procedure: &str, entity: &str) -> Self {
        Error::Entity {
            procedure: procedure.to_string(),
            entity: entity.to_string(),
            source: Box::new(self),
        }
    }

    pub(crate) fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code for the CLI: 2 validation, 3 decode, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::UnknownLabel { .. }
            | Error::Config(_) => 2,
            Error::Dimension(_) | Error::NoValidPath { .. } => 3,
            Error::Io { .. } => 4,
            Error::Entity { source, .. } | Error::Context { source, .. } => source.exit_code(),
        }
    }
}
