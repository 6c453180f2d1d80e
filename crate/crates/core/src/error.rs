use thiserror::Error;

/// Errors produced by construction, solving, and I/O.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {actual})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("scenario ratio alpha = {alpha} must exceed 1 (need more scenarios than assets)")]
    AlphaOutOfRange { alpha: f64 },

    #[error("covariance matrix is singular or ill-conditioned (condition estimate {cond:.3e})")]
    SingularCovariance { cond: f64 },

    #[error(
        "iteration diverged after {iterations} steps (L1 norm {norm:.3e}); try a smaller eta_w"
    )]
    Diverged { iterations: usize, norm: f64 },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("all {samples} samples failed at alpha = {alpha}: {diagnostics}")]
    SweepExhausted {
        alpha: f64,
        samples: usize,
        diagnostics: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}, line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("malformed result file {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
