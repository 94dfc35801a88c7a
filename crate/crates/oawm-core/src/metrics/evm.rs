//! Data-aided EVM and constellation SNR.

use super::sinad::CAP_DB;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EvmReport {
    /// RMS error vector magnitude, normalized to the average constellation
    /// power (linear, not percent).
    pub evm: f64,
    /// CSNR = 10 log10(1 / EVM^2), capped for noiseless input.
    pub csnr_db: f64,
    /// Fitted complex gain between received and reference symbols.
    pub gain: Complex64,
}

/// Data-aided EVM/CSNR: a single complex gain is fitted to the known
/// transmitted sequence, then the error vector is normalized to the average
/// constellation power.
pub fn evm_csnr(received: &[Complex64], reference: &[Complex64]) -> Result<EvmReport> {
    if received.is_empty() || reference.is_empty() {
        return Err(Error::InvalidInput("empty symbol sequence".into()));
    }
    if received.len() != reference.len() {
        return Err(Error::GridMismatch(format!(
            "{} received vs {} reference symbols",
            received.len(),
            reference.len()
        )));
    }
    if received.len() < 100 {
        return Err(Error::InvalidInput(format!(
            "need >= 100 symbols for a stable estimate, got {}",
            received.len()
        )));
    }
    let p_ref: f64 = reference.iter().map(|s| s.norm_sqr()).sum();
    if p_ref <= 0.0 {
        return Err(Error::ZeroPower("evm reference"));
    }
    let gain: Complex64 =
        received.iter().zip(reference).map(|(r, s)| r * s.conj()).sum::<Complex64>() / p_ref;
    if gain.norm_sqr() <= 0.0 {
        return Err(Error::ZeroPower("evm received"));
    }
    let err: f64 = received
        .iter()
        .zip(reference)
        .map(|(r, s)| (r / gain - s).norm_sqr())
        .sum();
    let evm = (err / p_ref).sqrt();
    let csnr_db = if evm > 0.0 { (10.0 * (1.0 / (evm * evm)).log10()).min(CAP_DB) } else { CAP_DB };
    Ok(EvmReport { evm, csnr_db, gain })
}
