use std::path::PathBuf;

use crate::ensemble::EnsembleResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tridiagonal QL did not converge for block of size {size} after {iterations} iterations")]
    IterationFailure { size: usize, iterations: usize },

    #[error("eigenvector {index} is neither even nor odd under mode swap")]
    UnlabeledState { index: usize },

    #[error("no divergence point exists for mu = {mu} (requires mu < -1)")]
    NoDivergencePoint { mu: f64 },

    #[error("divergent regime: lambda = {lambda} >= lambda_D = {lambda_d} at mu = {mu}")]
    DivergentRegime { lambda: f64, lambda_d: f64, mu: f64 },

    #[error("grand partition sum not converged after {} sectors", .partial.m_max_used + 1)]
    NotConverged { partial: Box<EnsembleResult> },

    #[error("corrupt cache entry {path}: {reason}")]
    CacheCorrupt { path: PathBuf, reason: String },

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("integrand is singular inside the integration domain (csch argument minimum {min_argument})")]
    SingularIntegrand { min_argument: f64 },

    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("data point {index} is not strictly positive")]
    NonPositiveData { index: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
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
