//! Three-fiber extraction of the system phase.
//!
//! Calibrating through a dispersive fiber leaves the fiber's phase profile in
//! the measured transfer functions. Measuring with fiber 1 only, fiber 2
//! only, and both concatenated gives
//! `(phi + phi1) + (phi + phi2) - (phi + phi1 + phi2) = phi` bin-wise, an
//! exact identity for arbitrary fiber phases.

use super::record::CalibrationRecord;
use crate::error::{Error, Result};
use num_complex::Complex64;

fn combine_entry(a: Complex64, b: Complex64, ab: Complex64) -> Complex64 {
    // Phase from the identity, magnitude from the concatenated-fiber
    // measurement (longest fiber: lowest PAPR, cleanest amplitude).
    let phase = a.arg() + b.arg() - ab.arg();
    Complex64::from_polar(ab.norm(), phase)
}

/// Combine three calibration records (fiber 1, fiber 2, fibers 1+2) into one
/// record carrying the fiber-free system phase.
pub fn remove_fiber_phase(
    cal_1: &CalibrationRecord,
    cal_2: &CalibrationRecord,
    cal_12: &CalibrationRecord,
) -> Result<CalibrationRecord> {
    for c in [cal_1, cal_2, cal_12] {
        c.validate()?;
    }
    let g = cal_1.f_grid.len();
    if cal_2.f_grid.len() != g || cal_12.f_grid.len() != g {
        return Err(Error::GridMismatch("the three records must share one grid".into()));
    }
    for i in 0..g {
        let f = cal_1.f_grid[i];
        if (cal_2.f_grid[i] - f).abs() > 1.0 || (cal_12.f_grid[i] - f).abs() > 1.0 {
            return Err(Error::GridMismatch(format!("grid point {i} differs between records")));
        }
    }
    if cal_1.n != cal_2.n || cal_1.n != cal_12.n || cal_1.m != cal_2.m || cal_1.m != cal_12.m {
        return Err(Error::GridMismatch("records disagree on system shape".into()));
    }
    let mut out = cal_12.clone();
    for gi in 0..g {
        for nu in 0..out.n {
            for mu in 0..out.m {
                out.h_i_pos[gi][(nu, mu)] = combine_entry(
                    cal_1.h_i_pos[gi][(nu, mu)],
                    cal_2.h_i_pos[gi][(nu, mu)],
                    cal_12.h_i_pos[gi][(nu, mu)],
                );
                out.h_q_pos[gi][(nu, mu)] = combine_entry(
                    cal_1.h_q_pos[gi][(nu, mu)],
                    cal_2.h_q_pos[gi][(nu, mu)],
                    cal_12.h_q_pos[gi][(nu, mu)],
                );
                out.h_i_neg[gi][(nu, mu)] = combine_entry(
                    cal_1.h_i_neg[gi][(nu, mu)],
                    cal_2.h_i_neg[gi][(nu, mu)],
                    cal_12.h_i_neg[gi][(nu, mu)],
                );
                out.h_q_neg[gi][(nu, mu)] = combine_entry(
                    cal_1.h_q_neg[gi][(nu, mu)],
                    cal_2.h_q_neg[gi][(nu, mu)],
                    cal_12.h_q_neg[gi][(nu, mu)],
                );
            }
        }
    }
    Ok(out)
}
