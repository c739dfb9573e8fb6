use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("point {point:?} lies within {margin} of the box edge (half-width {half_width})")]
    NearBoundary {
        point: (f64, f64),
        margin: f64,
        half_width: f64,
    },

    #[error("positivity violated at t = {time}: min eigenvalue {min_eigenvalue:e}")]
    PositivityViolation { time: f64, min_eigenvalue: f64 },

    #[error("mass drift {drift:e} at t = {time} exceeds tolerance")]
    MassDrift { time: f64, drift: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Aborts caused by a violated invariant rather than bad input.
    pub fn is_check_failure(&self) -> bool {
        matches!(self, Error::PositivityViolation { .. } | Error::MassDrift { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
