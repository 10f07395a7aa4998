use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical instability at t = {t}: {detail}")]
    NumericalInstability { t: f64, detail: String },

    #[error("singular diagonal normalizer at harmonic n = {n}")]
    SingularAssembly { n: i64 },

    #[error("truncated system is singular at pivot {row}")]
    SingularSystem { row: usize },

    #[error("harmonic-balance solve did not converge up to K = {k_max} (residual history {history:?})")]
    ConvergenceFailure { k_max: usize, history: Vec<f64> },

    #[error("internal consistency violated: {0}")]
    InternalConsistency(String),

    #[error("continued fraction did not converge within {depth} terms (last {last}, previous {previous})")]
    ContinuedFraction {
        depth: usize,
        last: Complex64,
        previous: Complex64,
    },

    #[error("forward recurrence unstable at k = {k} (|r| = {magnitude:e}); use the matrix solver")]
    RecurrenceInstability { k: usize, magnitude: f64 },

    #[error("harmonic {requested} lies outside the solved window |n| <= {window}")]
    OutOfWindow { requested: i64, window: i64 },

    #[error("frequency lattice too large: {0}")]
    LatticeOverflow(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
