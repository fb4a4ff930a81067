//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix expected to be symmetric positive definite failed to
    /// factorize, even after diagonal jitter.
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    /// A covariance matrix with a negative eigenvalue beyond tolerance.
    #[error("covariance matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    /// A matrix failed the symmetry check.
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    /// Constellation order outside the supported set {4, 16, 64, 256}.
    #[error("unsupported constellation order {0}")]
    UnsupportedOrder(usize),

    /// Pilot rate or code rate outside its valid range.
    #[error("invalid rate {0}")]
    InvalidRate(f64),

    /// Symbol PMF does not sum to one.
    #[error("PMF at channel {channel}, time {time} sums to {sum}")]
    UnnormalizedPmf {
        channel: usize,
        time: usize,
        sum: f64,
    },

    /// Phase of a zero symbol is undefined.
    #[error("zero symbol has no defined phase")]
    ZeroSymbol,

    /// Mismatched grid or vector dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Wrong sequence length.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// Grid-based oracle only handles a single channel.
    #[error("operation supports D=1 only, got D={0}")]
    UnsupportedDimension(usize),

    /// Malformed alist file.
    #[error("alist parse error: {0}")]
    AlistParse(String),

    /// Invalid simulation configuration.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
