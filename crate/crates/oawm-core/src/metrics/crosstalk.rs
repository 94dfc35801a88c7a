//! Crosstalk probing of a reconstruction against known ground truth.

use super::sinad::{predicted_crosstalk_freqs, CAP_DB};
use crate::error::{Error, Result};
use crate::recon::ReconstructionResult;
use crate::signalkit::Spectrum;
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CrosstalkReport {
    /// Wrong-slice leakage power relative to the signal, dB.
    pub slice_crosstalk_db: f64,
    /// Conjugate-image leakage relative to the signal, dB.
    pub image_crosstalk_db: f64,
    /// Residual error outside the predicted windows, dB.
    pub residual_db: f64,
}

/// Project the reconstruction error of a synthetic run onto the predicted
/// crosstalk frequencies (wrong-slice shifts by multiples of the FSR and
/// conjugate reflections about tone pairs).
///
/// Intended for sparse/tone-like ground truths where the predicted windows
/// are discriminative; broadband studies separate error mechanisms by
/// experiment design instead.
pub fn crosstalk_probe(
    result: &ReconstructionResult,
    ground_truth: &Spectrum,
    tone_freqs: &[f64],
    window_hz: f64,
) -> Result<CrosstalkReport> {
    let est = &result.stitched;
    if (est.df() - ground_truth.df()).abs() > 1e-6 * est.df() {
        return Err(Error::GridMismatch("truth and estimate bin spacings differ".into()));
    }
    let df = est.df();

    // Dominant truth components define the "signal frequencies".
    let p_max = ground_truth.bins().iter().map(|b| b.norm_sqr()).fold(0.0, f64::max);
    if p_max <= 0.0 {
        return Err(Error::ZeroPower("crosstalk_probe ground truth"));
    }
    let signal_freqs: Vec<f64> = ground_truth
        .bins()
        .iter()
        .enumerate()
        .filter(|(_, b)| b.norm_sqr() > 1e-6 * p_max)
        .map(|(k, _)| ground_truth.bin_freq(k))
        .collect();
    if signal_freqs.len() > est.len() / 8 {
        return Err(Error::InvalidInput(
            "ground truth is broadband; crosstalk windows would not discriminate".into(),
        ));
    }
    let f_lo = est.f_start();
    let f_hi = est.bin_freq(est.len() - 1);
    let (slice_freqs, image_freqs) =
        predicted_crosstalk_freqs(&signal_freqs, tone_freqs, f_lo, f_hi);

    // Error spectrum on the common grid, with the unobservable global phase
    // removed by a least-squares fit on the signal bins.
    let mut num = Complex64::default();
    let mut den = 0.0;
    for (k, t) in ground_truth.bins().iter().enumerate() {
        if let Some(i) = est.index_of(ground_truth.bin_freq(k)) {
            num += est.bins()[i] * t.conj();
            den += t.norm_sqr();
        }
    }
    let gain = if den > 0.0 && num.norm() > 0.0 { num / den } else { Complex64::new(1.0, 0.0) };

    let p_sig: f64 = ground_truth.bins().iter().map(|b| b.norm_sqr()).sum::<f64>() * df;
    let in_window = |f: f64, set: &[f64]| set.iter().any(|&c| (f - c).abs() <= window_hz);
    let mut p_slice = 0.0;
    let mut p_image = 0.0;
    let mut p_rest = 0.0;
    for (k, v) in est.bins().iter().enumerate() {
        let f = est.bin_freq(k);
        let truth = ground_truth
            .index_of(f)
            .map(|i| ground_truth.bins()[i])
            .unwrap_or_default();
        let e = (v / gain - truth).norm_sqr() * df;
        if in_window(f, &signal_freqs) {
            // Error on the signal bins themselves is residual, not crosstalk.
            p_rest += e;
        } else if in_window(f, &slice_freqs) {
            p_slice += e;
        } else if in_window(f, &image_freqs) {
            p_image += e;
        } else {
            p_rest += e;
        }
    }
    let rel = |p: f64| if p > 0.0 { 10.0 * (p / p_sig).log10() } else { -CAP_DB };
    Ok(CrosstalkReport {
        slice_crosstalk_db: rel(p_slice),
        image_crosstalk_db: rel(p_image),
        residual_db: rel(p_rest),
    })
}
