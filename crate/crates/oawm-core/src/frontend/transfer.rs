//! Analytic transfer matrices of the front end, consistent with
//! [`simulate_frontend`](super::simulate_frontend) by construction.

use super::config::{AdcConfig, CombLo, DriftParams, FrontEndConfig};
use crate::error::{Error, Result};
use crate::recon::TransferMatrixSet;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// The in-phase transfer coefficient H_I for channel `nu` (0-based), tone `mu`
/// (1-based) at signed baseband frequency `f`.
pub(crate) fn h_i_entry(
    comb: &CombLo,
    fe: &FrontEndConfig,
    adc: &AdcConfig,
    drift: &DriftParams,
    f: f64,
    nu: usize,
    mu: usize,
) -> Complex64 {
    if f.abs() > adc.bandwidth * (1.0 + 1e-12) {
        return Complex64::new(0.0, 0.0);
    }
    let g_loss = 10f64.powf(-fe.path_loss_db[nu] / 20.0);
    let volts = (fe.rf_gain() * fe.impedance).sqrt();
    let f_mu = comb.tone_freq(mu);
    let phase = drift.phi_lo(comb.f_fsr, mu)
        + TAU * (fe.f_ref + f_mu) * fe.delays[nu]
        + drift.phi_f[nu];
    let mut h = comb.tone_amplitudes[mu - 1].conj()
        * Complex64::from_polar(
            volts * fe.responsivity * g_loss * g_loss / (2.0 * fe.n as f64),
            phase,
        );
    if let Some(resp) = &fe.response {
        h *= resp[nu].eval(f);
    }
    h
}

/// Evaluate the per-bin 2N x 2M matrices of the forward model on `f_grid`
/// (grid points must lie in `[0, B]`).
pub fn forward_transfer(
    comb: &CombLo,
    fe: &FrontEndConfig,
    adc: &AdcConfig,
    drift: &DriftParams,
    f_grid: &[f64],
) -> Result<TransferMatrixSet> {
    comb.validate()?;
    fe.validate()?;
    adc.validate()?;
    if drift.phi_f.len() != fe.n {
        return Err(Error::ConfigRejected("drift length != N".into()));
    }
    if f_grid.iter().any(|&f| f < 0.0 || f > adc.bandwidth * (1.0 + 1e-12)) {
        return Err(Error::InvalidInput("f_grid must lie in [0, B]".into()));
    }
    let (n, m) = (fe.n, comb.m());
    let matrices = f_grid
        .iter()
        .map(|&f| {
            let mut h = DMatrix::<Complex64>::zeros(2 * n, 2 * m);
            for nu in 0..n {
                let rot = Complex64::from_polar(1.0, -fe.iq_phase_deg[nu].to_radians());
                for mu in 1..=m {
                    let hi_pos = h_i_entry(comb, fe, adc, drift, f, nu, mu);
                    let hi_neg = h_i_entry(comb, fe, adc, drift, -f, nu, mu);
                    h[(nu, mu - 1)] = hi_pos;
                    h[(nu, m + mu - 1)] = hi_neg.conj();
                    h[(n + nu, mu - 1)] = hi_pos * rot;
                    h[(n + nu, m + mu - 1)] = (hi_neg * rot).conj();
                }
            }
            h
        })
        .collect();
    Ok(TransferMatrixSet { f_grid: f_grid.to_vec(), matrices, n, m })
}
