use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("finite class has no tables")]
    EmptyClass,

    #[error("trivial distribution: E[X^2] must be positive")]
    TrivialDistribution,

    #[error("zero vector: the Khintchine ratio is undefined")]
    ZeroVector,

    #[error("infeasible point: {0}")]
    Infeasible(String),

    #[error("exact enumeration over {cells} signs exceeds the limit of {limit}")]
    EnumerationTooLarge { cells: usize, limit: usize },

    #[error("exact enumeration requires Rademacher noise, got {0}")]
    ExactRequiresRademacher(String),

    #[error("no finite Lipschitz constant: elements {0} and {1} share phi but differ in psi")]
    NoFiniteLipschitz(usize, usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn mismatch(
        context: &'static str,
        expected: impl ToString,
        actual: impl ToString,
    ) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
