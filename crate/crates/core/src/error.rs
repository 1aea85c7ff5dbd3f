use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported or corrupt image format: {0}")]
    Format(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("feature unavailable: {0}")]
    UnavailableFeature(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("degenerate canonical axis: {0}")]
    DegenerateAxis(String),

    #[error("parse error in {origin} line {line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
