//! Per-frequency-bin transfer-matrix containers shared by the front-end
//! physics, the calibration pipeline, and the reconstruction solver.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Per-bin 2N x 2M system matrix relating the stacked measured spectra
/// `[I_1..I_N, Q_1..Q_N](f)` to the stacked signal vector
/// `[a(f+f_1)..a(f+f_M), a*(-f+f_1)..a*(-f+f_M)]`.
///
/// Block layout: `[[H_I(f), conj(H_I(-f))], [H_Q(f), conj(H_Q(-f))]]`.
#[derive(Debug, Clone)]
pub struct TransferMatrixSet {
    pub f_grid: Vec<f64>,
    pub matrices: Vec<DMatrix<Complex64>>,
    pub n: usize,
    pub m: usize,
}

impl TransferMatrixSet {
    pub fn validate(&self) -> Result<()> {
        if self.f_grid.len() != self.matrices.len() {
            return Err(Error::GridMismatch(format!(
                "{} grid points vs {} matrices",
                self.f_grid.len(),
                self.matrices.len()
            )));
        }
        for (i, m) in self.matrices.iter().enumerate() {
            if m.nrows() != 2 * self.n || m.ncols() != 2 * self.m {
                return Err(Error::GridMismatch(format!(
                    "matrix {} is {}x{}, expected {}x{}",
                    i,
                    m.nrows(),
                    m.ncols(),
                    2 * self.n,
                    2 * self.m
                )));
            }
            if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite entry in matrix {i}")));
            }
        }
        Ok(())
    }
}

/// Pseudo-inverses of a [`TransferMatrixSet`] with per-bin conditioning info.
#[derive(Debug, Clone)]
pub struct InverseMatrixSet {
    pub f_grid: Vec<f64>,
    pub inverses: Vec<DMatrix<Complex64>>,
    /// 2-norm condition number per bin.
    pub cond: Vec<f64>,
    /// Bins whose reciprocal condition number fell below the threshold.
    pub flagged: Vec<usize>,
    pub n: usize,
    pub m: usize,
}
