use std::path::{Path, PathBuf};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Structural problem in an input file. `location` names the byte or line.
    #[error("format error at {location}: {message}")]
    Format { location: String, message: String },

    /// Well-formed input carrying unusable values (NaN samples and the like).
    #[error("data error: {0}")]
    Data(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Bin-width calibration or a statistic that cannot be formed.
    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Argument,
    Data,
    Statistics,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Argument(_) => ErrorKind::Argument,
            Error::Format { .. } | Error::Data(_) | Error::Io { .. } => ErrorKind::Data,
            Error::Statistics(_) => ErrorKind::Statistics,
        }
    }

    /// Attaches a file path to I/O and format errors raised on a stream.
    pub fn with_path(self, path: impl AsRef<Path>) -> Self {
        let path = path.as_ref();
        match self {
            Error::Io { source, .. } => Error::io(path, source),
            Error::Format { location, message } => Error::Format {
                location: format!("{}, {location}", path.display()),
                message,
            },
            other => other,
        }
    }

    pub(crate) fn format_at_line(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            location: format!("line {line}"),
            message: message.into(),
        }
    }

    pub(crate) fn format_at_byte(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            location: format!("byte {offset}"),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
