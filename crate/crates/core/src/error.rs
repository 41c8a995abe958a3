use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report.
///
/// Each variant maps to one process exit code (see [`Error::exit_code`]); the
/// table is part of the CLI contract and is mirrored by the C status codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("wav error: {0}")]
    Wav(String),
    #[error("invalid signal: {0}")]
    Signal(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("weight container error: {0}")]
    Container(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("missing asset: {0}")]
    MissingAsset(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// Process exit code for this error class.
    ///
    /// | code | class            |
    /// |------|------------------|
    /// | 3    | config           |
    /// | 4    | i/o              |
    /// | 5    | wav format       |
    /// | 6    | weight container |
    /// | 7    | shape mismatch   |
    /// | 8    | invalid argument / signal |
    /// | 9    | evaluation       |
    /// | 10   | missing asset    |
    ///
    /// Code 2 is reserved for command-line usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 3,
            Error::Io { .. } => 4,
            Error::Wav(_) => 5,
            Error::Container(_) => 6,
            Error::Shape(_) => 7,
            Error::InvalidArgument(_) | Error::Signal(_) => 8,
            Error::Evaluation(_) => 9,
            Error::MissingAsset(_) => 10,
        }
    }
}
