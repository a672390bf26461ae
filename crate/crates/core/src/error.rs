use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("spectral centroid undefined for an all-zero signal")]
    UndefinedCentroid,
    #[error("SNR undefined for an all-zero signal")]
    UndefinedSnr,
    #[error("resource limit exceeded: {dimension} = {value} exceeds cap {cap}")]
    ResourceLimit {
        dimension: &'static str,
        value: usize,
        cap: usize,
    },
    #[error("inputs are not a uniform 1D grid; Fourier bins are undefined")]
    UnsupportedGrid,
    #[error("frequency {0} exceeds the Nyquist limit 0.5 cycles/sample")]
    Aliasing(f64),
    #[error("training diverged at epoch {epoch} (last finite epoch: {last_finite_epoch:?})")]
    Diverged {
        epoch: usize,
        last_finite_epoch: Option<usize>,
    },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON error on {path}: {source}")]
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

    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
