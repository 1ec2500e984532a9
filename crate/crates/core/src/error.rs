use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("target probability {p} is not bracketed: cdf({lo}) = {cdf_lo}, cdf({hi}) = {cdf_hi}")]
    Bracket {
        p: f64,
        lo: f64,
        hi: f64,
        cdf_lo: f64,
        cdf_hi: f64,
    },

    #[error("sample too small: {0}")]
    Size(String),

    /// A chain produced a non-finite iterate. `last_finite` is the state
    /// before the failing update.
    #[error("non-finite iterate at step {step} (last finite state {last_finite:?})")]
    NonFinite { step: usize, last_finite: Vec<f64> },

    #[error("invalid experiment spec: {0}")]
    Spec(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("infeasible parameter selection, binding constraint: {0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the error came from a numerically diverging run.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite { .. })
    }

    /// True for spec validation and parsing failures.
    pub fn is_spec(&self) -> bool {
        matches!(self, Error::Spec(_) | Error::Parse { .. })
    }
}
