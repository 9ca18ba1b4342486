use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not unitary enough for this operation (defect {defect:.3e} > {threshold:.1e})")]
    NotUnitary { defect: f64, threshold: f64 },

    #[error("eigenvalue iteration did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("training diverged at epoch {epoch}, sample {sample}: loss = {loss}")]
    Diverged { epoch: usize, sample: usize, loss: f64 },

    #[error("period estimation failed: {0}")]
    Estimation(String),

    #[error("malformed {kind} file at byte offset {offset}: {message}")]
    Format {
        kind: &'static str,
        offset: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("corpus: {0}")]
    Corpus(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
