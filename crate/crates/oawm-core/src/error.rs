//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A frequency falls outside the representable complex-baseband range.
    #[error("aliasing: frequency {freq_hz} Hz outside ±{nyquist_hz} Hz")]
    Aliasing { freq_hz: f64, nyquist_hz: f64 },

    /// Argument validation failed.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// PAPR or a power-normalized quantity was requested on a zero-power record.
    #[error("zero-power record: {0}")]
    ZeroPower(&'static str),

    /// QAM constellation order not supported.
    #[error("unsupported QAM order {0} (supported: 4, 16, 64)")]
    UnsupportedOrder(u32),

    /// A physical configuration violates a hard system constraint.
    #[error("configuration rejected: {0}")]
    ConfigRejected(String),

    /// Two records/grids that must be congruent are not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Drift estimation requires redundant energy in at least one overlap region.
    #[error("no overlap-region energy: {0}")]
    NoOverlapEnergy(String),

    /// An iterative estimator did not converge.
    #[error("did not converge: {0}")]
    NonConvergence(String),

    /// A requested value cannot be produced (e.g. calibration grid point missing).
    #[error("missing data: {0}")]
    MissingData(String),

    /// Interpolation was requested outside the calibrated frequency span.
    #[error("extrapolation beyond calibration grid: {0}")]
    Extrapolation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A serialized container is malformed.
    #[error("bad file format: {0}")]
    Format(String),
}
