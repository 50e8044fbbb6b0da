use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("path does not exist: {0}")]
    MissingPath(PathBuf),

    #[error("{file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}: grid geometry differs from the first ensemble member")]
    DimensionMismatch(PathBuf),

    #[error("{file}: value #{index} is not finite")]
    NonFiniteValue { file: PathBuf, index: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid scalar field: {0}")]
    InvalidField(String),

    #[error("diagram families differ ({0} vs {1})")]
    FamilyMismatch(crate::Family, crate::Family),

    #[error("empty input")]
    EmptyInput,

    #[error("k = {k} is outside 1..={n}")]
    InvalidK { k: usize, n: usize },

    #[error("in-cluster variance is zero; the information criteria are undefined")]
    DegenerateVariance,

    #[error("k equals the number of diagrams ({0}); the variance estimate has no degrees of freedom")]
    KEqualsN(usize),

    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}
