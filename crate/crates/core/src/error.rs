use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("resource error: {0}")]
    Resource(String),

    #[error("feature error: {0}")]
    Feature(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("eval error: {0}")]
    Eval(String),

    #[error("bad format in {path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
