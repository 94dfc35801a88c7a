//! Welch-periodogram power-spectral-density estimation.

use super::wave::{fft_forward, SampledWaveform};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Default resolution bandwidth for PSD reports, Hz.
pub const DEFAULT_RBW_HZ: f64 = 100e6;

/// PSD estimate on an fftshifted frequency grid.
#[derive(Debug, Clone)]
pub struct PsdEstimate {
    /// Bin centers, ascending, Hz relative to the baseband reference.
    pub freqs: Vec<f64>,
    /// Double-sided PSD, W/Hz.
    pub psd: Vec<f64>,
    /// Effective resolution bandwidth, Hz.
    pub rbw: f64,
    pub segments: usize,
}

/// Hann-windowed Welch estimate with 50% overlap. The segment length is chosen
/// so the bin spacing matches the requested resolution bandwidth.
pub fn psd_periodogram(w: &SampledWaveform, rbw_hz: f64) -> Result<PsdEstimate> {
    if !(rbw_hz > 0.0) {
        return Err(Error::InvalidInput(format!("rbw must be positive, got {rbw_hz}")));
    }
    let n_seg = ((w.sample_rate() / rbw_hz).round() as usize).clamp(8, w.len());
    let hop = (n_seg / 2).max(1);
    let window: Vec<f64> = (0..n_seg)
        .map(|n| 0.5 * (1.0 - (TAU * n as f64 / n_seg as f64).cos()))
        .collect();
    let wpow: f64 = window.iter().map(|v| v * v).sum::<f64>() / n_seg as f64;

    let mut acc = vec![0.0f64; n_seg];
    let mut segments = 0usize;
    let mut start = 0usize;
    while start + n_seg <= w.len() {
        let mut buf: Vec<Complex64> = w.samples()[start..start + n_seg]
            .iter()
            .zip(&window)
            .map(|(s, h)| s * h)
            .collect();
        fft_forward(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    if segments == 0 {
        return Err(Error::InvalidInput("record shorter than one PSD segment".into()));
    }
    // |X_k|^2 / (fs * n_seg * wpow) is the per-segment double-sided PSD.
    let scale = 1.0 / (segments as f64 * w.sample_rate() * n_seg as f64 * wpow);
    let df = w.sample_rate() / n_seg as f64;
    let half = n_seg / 2;
    let mut psd: Vec<f64> = acc.iter().map(|a| a * scale).collect();
    psd.rotate_left(n_seg - half);
    let freqs = (0..n_seg).map(|k| (k as f64 - half as f64) * df).collect();
    Ok(PsdEstimate { freqs, psd, rbw: df, segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signalkit::gen::{gen_random_test_signal, RandomSignalSpec};

    #[test]
    fn white_band_psd_integrates_to_power() {
        let spec = RandomSignalSpec { p_s: 2.0, b_opt: 4e8, f_ctr: 0.0, seed: 1 };
        let w = gen_random_test_signal(&spec, 2e-5, 1e9).unwrap();
        let est = psd_periodogram(&w, 1e6).unwrap();
        let df = est.freqs[1] - est.freqs[0];
        let total: f64 = est.psd.iter().sum::<f64>() * df;
        assert!((total - w.mean_power()).abs() / w.mean_power() < 0.02, "total {total}");
        // In-band level.
        let inband: Vec<f64> = est
            .freqs
            .iter()
            .zip(&est.psd)
            .filter(|(f, _)| f.abs() < 1.5e8)
            .map(|(_, p)| *p)
            .collect();
        let mean = inband.iter().sum::<f64>() / inband.len() as f64;
        let expect = 2.0 / 4e8;
        assert!((mean - expect).abs() / expect < 0.05, "psd level {mean} vs {expect}");
    }
}
