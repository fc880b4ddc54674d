use std::path::PathBuf;

/// Errors surfaced by the toolkit.
///
/// Data problems (`Parse`, `Format`, `Invalid`) are distinct from I/O so
/// callers can map them to stable exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Line-oriented parse failure in an input file or stream.
    #[error("{message} at line {line}")]
    Parse { line: usize, message: String },

    /// Structural problem with a self-describing file (version, sections).
    #[error("{0}")]
    Format(String),

    /// Violated precondition, invariant, or configuration constraint.
    #[error("{0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }

    pub fn format(message: impl Into<String>) -> Self {
        Error::Format(message.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
