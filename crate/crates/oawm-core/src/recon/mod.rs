//! Matrix-based signal reconstruction: per-bin inversion of the forward
//! model, drift estimation from overlap-region redundancy, and spectral
//! stitching.

mod drift;
mod interp;
mod matrix;
mod reconstruct;
mod stitch;
mod types;

pub use drift::{estimate_drift, estimate_drift_averaged, DriftEstimateOptions};
pub use matrix::{build_matrix, invert_matrix_set};
pub use reconstruct::{
    reconstruct, Diagnostics, DriftSpec, ReconstructOptions, ReconstructionResult,
};
pub use stitch::{stitch, WeightsMode};
pub use types::{InverseMatrixSet, TransferMatrixSet};

pub(crate) use interp::interp_complex_extend as interp_complex_channels;
