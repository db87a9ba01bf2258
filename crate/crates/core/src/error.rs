use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or skeleton topology do not line up.
    #[error("structural error: {0}")]
    Structural(String),

    /// Values are present but unusable (non-finite coordinates, bad angles).
    #[error("data error: {0}")]
    Data(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("degenerate pose: {0}")]
    DegeneratePose(String),

    #[error("{file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("non-finite value at frame {frame}: {context}")]
    Numeric { frame: usize, context: String },

    /// A training loss or gradient became non-finite.
    #[error("training diverged at epoch {epoch}, batch {batch}: {term} is not finite")]
    Diverged {
        epoch: usize,
        batch: usize,
        term: String,
    },

    #[error("load error: {0}")]
    Load(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
