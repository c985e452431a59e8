use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("suite `{suite}` has {remaining} complete instance(s) left, at least 2 are required")]
    SuiteTooSmall { suite: String, remaining: usize },

    #[error("algorithm `{algorithm}` is not covered in suite `{suite}`: {detail}")]
    Coverage {
        algorithm: String,
        suite: String,
        detail: String,
    },

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
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
