//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by construction, solving, and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The Krylov iteration did not reach the requested tolerance.
    #[error("solver failed to converge: residual {residual:.3e} after {iterations} iterations")]
    SolverFailure { residual: f64, iterations: usize },

    /// A material model failed its well-posedness audit and the caller did
    /// not force the solve.
    #[error("material model violates the well-posedness conditions: {0}")]
    NonCompliantMaterial(String),

    /// A text file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A file parsed but its contents are structurally inconsistent.
    #[error("structural error: {0}")]
    Structural(String),

    /// All eigenvalues fell below the truncation cutoff.
    #[error("degenerate spectrum: all eigenvalues discarded by the cutoff rule")]
    DegenerateSpectrum,

    /// Data and configuration disagree on the wavenumber.
    #[error("wavenumber mismatch: data has k={data_k}, expected k={expected_k}")]
    WavenumberMismatch { data_k: f64, expected_k: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
