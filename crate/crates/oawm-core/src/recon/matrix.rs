//! Assembly and inversion of the per-bin system matrices.

use super::interp::interp_complex;
use super::types::{InverseMatrixSet, TransferMatrixSet};
use crate::calib::CalibrationRecord;
use crate::error::{Error, Result};
use crate::frontend::DriftParams;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// Interpolate the calibration onto `f_grid` and apply the drift factors
/// exp(j(phi_F_nu + phi_LO_mu)), producing the per-bin 2N x 2M matrices.
pub fn build_matrix(
    cal: &CalibrationRecord,
    drift: &DriftParams,
    f_grid: &[f64],
) -> Result<TransferMatrixSet> {
    cal.validate()?;
    if drift.phi_f.len() != cal.n {
        return Err(Error::GridMismatch(format!(
            "drift carries {} phases for {} channels",
            drift.phi_f.len(),
            cal.n
        )));
    }
    let (n, m) = (cal.n, cal.m);
    let g = f_grid.len();

    // Interpolate each (channel, tone, I/Q, sign) series onto the new grid.
    let mut interp: Vec<Vec<Complex64>> = Vec::with_capacity(4 * n * m);
    for arr_idx in 0..4 {
        let arr = match arr_idx {
            0 => &cal.h_i_pos,
            1 => &cal.h_q_pos,
            2 => &cal.h_i_neg,
            _ => &cal.h_q_neg,
        };
        for nu in 0..n {
            for mu in 0..m {
                let series: Vec<Complex64> = arr.iter().map(|mat| mat[(nu, mu)]).collect();
                interp.push(interp_complex(&cal.f_grid, &series, f_grid)?);
            }
        }
    }
    let at = |arr_idx: usize, nu: usize, mu: usize, gi: usize| -> Complex64 {
        interp[arr_idx * n * m + nu * m + mu][gi]
    };

    let row_phase: Vec<Complex64> =
        drift.phi_f.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
    let col_phase: Vec<Complex64> = (1..=m)
        .map(|mu| Complex64::from_polar(1.0, drift.phi_lo(cal.f_fsr, mu)))
        .collect();

    let matrices = (0..g)
        .map(|gi| {
            let mut h = DMatrix::<Complex64>::zeros(2 * n, 2 * m);
            for nu in 0..n {
                for mu in 0..m {
                    let d = row_phase[nu] * col_phase[mu];
                    h[(nu, mu)] = d * at(0, nu, mu, gi);
                    h[(n + nu, mu)] = d * at(1, nu, mu, gi);
                    // Conjugate block: conj of the drifted value at -f.
                    h[(nu, m + mu)] = (d * at(2, nu, mu, gi)).conj();
                    h[(n + nu, m + mu)] = (d * at(3, nu, mu, gi)).conj();
                }
            }
            h
        })
        .collect();
    Ok(TransferMatrixSet { f_grid: f_grid.to_vec(), matrices, n, m })
}

/// Invert every per-bin matrix: regular inverse for N = M, least-squares
/// pseudo-inverse for N > M. Bins whose reciprocal condition number falls
/// below `rcond_threshold` are flagged (and later down-weighted in stitching).
pub fn invert_matrix_set(h: &TransferMatrixSet, rcond_threshold: f64) -> Result<InverseMatrixSet> {
    h.validate()?;
    if h.n < h.m {
        return Err(Error::ConfigRejected(format!(
            "underdetermined system: N = {} < M = {}",
            h.n, h.m
        )));
    }
    let results: Vec<(DMatrix<Complex64>, f64)> = h
        .matrices
        .par_iter()
        .map(|mat| {
            let svd = mat.clone().svd(true, true);
            let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
            let smin = svd.singular_values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
            let inv = svd
                .pseudo_inverse(smax * 1e-14)
                .unwrap_or_else(|_| DMatrix::zeros(mat.ncols(), mat.nrows()));
            (inv, cond)
        })
        .collect();
    let mut inverses = Vec::with_capacity(results.len());
    let mut cond = Vec::with_capacity(results.len());
    let mut flagged = Vec::new();
    for (i, (inv, c)) in results.into_iter().enumerate() {
        if 1.0 / c < rcond_threshold {
            flagged.push(i);
        }
        inverses.push(inv);
        cond.push(c);
    }
    Ok(InverseMatrixSet { f_grid: h.f_grid.clone(), inverses, cond, flagged, n: h.n, m: h.m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{forward_transfer, AdcConfig, CombLo, FrontEndConfig};

    fn system(n: usize) -> (CombLo, FrontEndConfig, AdcConfig) {
        let f_fsr = 8e9;
        let comb = CombLo::flat(5e9, f_fsr, n, 10e-3);
        let fe = FrontEndConfig::ideal(n, f_fsr, 193e12);
        let adc = AdcConfig::new(5e9, 64e9);
        (comb, fe, adc)
    }

    #[test]
    fn zero_drift_build_matches_interpolated_calibration() {
        let (comb, fe, adc) = system(2);
        let grid: Vec<f64> = (0..=50).map(|k| k as f64 * 1e8).collect();
        let cal = CalibrationRecord::from_forward_model(&comb, &fe, &adc, &grid).unwrap();
        let tms = build_matrix(&cal, &DriftParams::zero(2), &[0.0, 1.5e9, 5e9]).unwrap();
        let reference = forward_transfer(&comb, &fe, &adc, &DriftParams::zero(2), &[0.0, 1.5e9, 5e9]).unwrap();
        for (a, b) in tms.matrices.iter().zip(&reference.matrices) {
            let diff: f64 = (a - b).iter().map(|v| v.norm_sqr()).sum();
            let norm: f64 = b.iter().map(|v| v.norm_sqr()).sum();
            assert!(diff / norm < 1e-20);
        }
    }

    #[test]
    fn tau_lo_rotates_tone_columns() {
        let (comb, fe, adc) = system(4);
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 5e8).collect();
        let cal = CalibrationRecord::from_forward_model(&comb, &fe, &adc, &grid).unwrap();
        let m = 4usize;
        let tau_lo = 1.0 / (comb.f_fsr * m as f64);
        let drift = DriftParams { phi_f: vec![0.0; 4], tau_lo };
        let base = build_matrix(&cal, &DriftParams::zero(4), &grid).unwrap();
        let shifted = build_matrix(&cal, &drift, &grid).unwrap();
        for gi in 0..grid.len() {
            for mu in 0..m {
                let rot = Complex64::from_polar(1.0, std::f64::consts::TAU * (mu as f64 + 1.0) / m as f64);
                for nu in 0..4 {
                    let want = base.matrices[gi][(nu, mu)] * rot;
                    let got = shifted.matrices[gi][(nu, mu)];
                    assert!((want - got).norm() < 1e-12 * want.norm().max(1e-30));
                }
            }
        }
    }

    #[test]
    fn phi_f_scales_row_blocks_by_unit_phasor() {
        let (comb, fe, adc) = system(2);
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 5e8).collect();
        let cal = CalibrationRecord::from_forward_model(&comb, &fe, &adc, &grid).unwrap();
        let drift = DriftParams { phi_f: vec![0.0, 0.8], tau_lo: 0.0 };
        let base = build_matrix(&cal, &DriftParams::zero(2), &grid).unwrap();
        let rot = build_matrix(&cal, &drift, &grid).unwrap();
        let phasor = Complex64::from_polar(1.0, 0.8);
        for gi in 0..grid.len() {
            for mu in 0..2 {
                assert!((rot.matrices[gi][(1, mu)] - base.matrices[gi][(1, mu)] * phasor).norm() < 1e-15);
                // Conjugate column block rotates the other way.
                assert!(
                    (rot.matrices[gi][(1, 2 + mu)] - base.matrices[gi][(1, 2 + mu)] * phasor.conj())
                        .norm()
                        < 1e-15
                );
                assert!((rot.matrices[gi][(0, mu)] - base.matrices[gi][(0, mu)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn unitary_inverse_is_scaled_adjoint() {
        let (comb, fe, adc) = system(4);
        let tms = forward_transfer(&comb, &fe, &adc, &DriftParams::zero(4), &[1e9]).unwrap();
        let inv = invert_matrix_set(&tms, 1e-6).unwrap();
        assert!(inv.flagged.is_empty());
        assert!(inv.cond[0] < 1.0 + 1e-9);
        let h = &tms.matrices[0];
        let c = (h.adjoint() * h)[(0, 0)].re;
        let want = h.adjoint() / Complex64::new(c, 0.0);
        let diff: f64 = (&inv.inverses[0] - &want).iter().map(|v| v.norm_sqr()).sum();
        assert!(diff < 1e-18);
    }

    #[test]
    fn degenerate_delays_flag_singular_bins() {
        let f_fsr = 8e9;
        let comb = CombLo::flat(5e9, f_fsr, 2, 10e-3);
        let mut fe = FrontEndConfig::ideal(2, f_fsr, 193e12);
        fe.delays[1] = fe.delays[0]; // identical rows
        let adc = AdcConfig::new(5e9, 64e9);
        let tms = forward_transfer(&comb, &fe, &adc, &DriftParams::zero(2), &[1e9]).unwrap();
        let inv = invert_matrix_set(&tms, 1e-6).unwrap();
        assert_eq!(inv.flagged, vec![0]);
    }

    #[test]
    fn extrapolation_is_refused() {
        let (comb, fe, adc) = system(2);
        let cal = CalibrationRecord::from_forward_model(&comb, &fe, &adc, &[0.0, 1e9, 2e9]).unwrap();
        assert!(matches!(
            build_matrix(&cal, &DriftParams::zero(2), &[5e9]),
            Err(Error::Extrapolation(_))
        ));
    }
}
