//! Crate-wide error type.
//!
//! Errors split into two broad families, which the CLI maps onto exit codes:
//! user-correctable problems (bad config, malformed input data, out-of-range
//! arguments) and environment failures (I/O, network). [`Error::is_user_error`]
//! encodes that split so callers don't have to match every variant.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Attribute config failed validation; the message lists every finding.
    #[error("invalid attribute config:\n{0}")]
    InvalidConfig(String),

    /// A prompt template referenced classes that the config does not define.
    #[error("unknown placeholder(s) in prompt template: {0}")]
    UnknownPlaceholder(String),

    /// A prompt template is syntactically broken (unclosed group, bad escape…).
    #[error("malformed prompt template: {0}")]
    BadTemplate(String),

    /// Malformed or internally inconsistent input data (embedding files,
    /// score CSVs, manifests, transcripts…).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// An argument was outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A name lookup (strategy, expander, role…) found nothing.
    #[error("unknown {kind} {name:?} (known: {known})")]
    UnknownName {
        kind: &'static str,
        name: String,
        known: String,
    },

    /// Chat-completion service failed after the configured retries.
    #[error("llm transport failed: {0}")]
    Transport(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error in {context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// Attach a path to a raw I/O error.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    pub fn csv(context: impl Into<String>, source: csv::Error) -> Self {
        Error::Csv {
            context: context.into(),
            source,
        }
    }

    /// True for errors the user can fix by changing inputs or arguments;
    /// false for environment failures (I/O, network, serialization bugs).
    pub fn is_user_error(&self) -> bool {
        match self {
            Error::InvalidConfig(_)
            | Error::UnknownPlaceholder(_)
            | Error::BadTemplate(_)
            | Error::InvalidData(_)
            | Error::InvalidArgument(_)
            | Error::UnknownName { .. } => true,
            Error::Transport(_) | Error::Io { .. } | Error::Json { .. } | Error::Csv { .. } => {
                false
            }
        }
    }
}
