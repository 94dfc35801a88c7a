//! Square-QAM symbol generation with root-raised-cosine pulse shaping, plus
//! the matched-filter demodulator used for data-aided EVM measurements.
//!
//! Waveforms are synthesized with circular (periodic) filtering, so a
//! noiseless loopback through [`matched_filter_demod`] recovers the transmitted
//! symbols exactly: RRC * RRC = raised cosine, which is Nyquist at the symbol
//! spacing.

use super::wave::{SampledWaveform, Spectrum};
use crate::error::{Error, Result};
use crate::rng;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

/// Unit-average-power square constellation (Gray-coded per axis).
pub fn constellation(order: u32) -> Result<Vec<Complex64>> {
    let side = match order {
        4 => 2,
        16 => 4,
        64 => 8,
        _ => return Err(Error::UnsupportedOrder(order)),
    };
    let norm = (2.0 * (side as f64 * side as f64 - 1.0) / 3.0).sqrt();
    let level = |i: usize| (2.0 * i as f64 - (side as f64 - 1.0)) / norm;
    let mut points = Vec::with_capacity(order as usize);
    for i in 0..side {
        for q in 0..side {
            points.push(Complex64::new(level(i), level(q)));
        }
    }
    Ok(points)
}

fn rrc_response(f: f64, symbol_rate: f64, rolloff: f64) -> f64 {
    let half = symbol_rate / 2.0;
    let a = f.abs();
    if rolloff == 0.0 {
        return if a <= half { 1.0 } else { 0.0 };
    }
    let f1 = (1.0 - rolloff) * half;
    let f2 = (1.0 + rolloff) * half;
    if a <= f1 {
        1.0
    } else if a < f2 {
        (0.5 * (1.0 + (PI / (rolloff * symbol_rate) * (a - f1)).cos())).sqrt()
    } else {
        0.0
    }
}

/// Generate an RRC-shaped QAM waveform at unit average power.
///
/// Returns the waveform together with the transmitted symbol sequence
/// (unit-average-power constellation points) for later EVM reference.
/// `sample_rate` must be an integer multiple of `symbol_rate`; use
/// [`SampledWaveform::resample`] afterwards for other rates.
pub fn gen_qam_signal(
    symbol_rate: f64,
    order: u32,
    rrc_rolloff: f64,
    n_symbols: usize,
    seed: u64,
    sample_rate: f64,
) -> Result<(SampledWaveform, Vec<Complex64>)> {
    if !(0.0..1.0).contains(&rrc_rolloff) {
        return Err(Error::InvalidInput(format!("rolloff {rrc_rolloff} outside [0,1)")));
    }
    if symbol_rate * (1.0 + rrc_rolloff) >= sample_rate {
        return Err(Error::Aliasing {
            freq_hz: symbol_rate * (1.0 + rrc_rolloff) / 2.0,
            nyquist_hz: sample_rate / 2.0,
        });
    }
    if n_symbols < 2 {
        return Err(Error::InvalidInput("need at least two symbols".into()));
    }
    let osf = sample_rate / symbol_rate;
    if (osf - osf.round()).abs() > 1e-9 * osf {
        return Err(Error::InvalidInput(format!(
            "sample rate must be an integer multiple of the symbol rate (ratio {osf})"
        )));
    }
    let osf = osf.round() as usize;
    let points = constellation(order)?;
    let mut rng = rng::derive(seed, &[rng::stream::SIGNAL_GEN, order as u64]);
    let symbols: Vec<Complex64> =
        (0..n_symbols).map(|_| points[rng.gen_range(0..points.len())]).collect();

    // Impulse train at the symbol instants, shaped spectrally.
    let l = n_symbols * osf;
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    for (i, s) in symbols.iter().enumerate() {
        buf[i * osf] = *s;
    }
    super::wave::fft_forward(&mut buf);
    let df = sample_rate / l as f64;
    for (k, v) in buf.iter_mut().enumerate() {
        // Unshifted DFT layout: bin k is frequency k*df for k < L/2, else (k-L)*df.
        let f = if k <= l / 2 { k as f64 * df } else { (k as f64 - l as f64) * df };
        *v *= rrc_response(f, symbol_rate, rrc_rolloff);
    }
    super::wave::fft_inverse(&mut buf);
    for v in buf.iter_mut() {
        *v /= l as f64;
    }
    let mut w = SampledWaveform::from_parts(buf, sample_rate, 0.0);
    // Normalize to unit mean power so LOSPR bookkeeping stays simple.
    let p = w.mean_power();
    let g = 1.0 / p.sqrt();
    let samples = w.samples().iter().map(|s| s * g).collect();
    w = SampledWaveform::from_parts(samples, sample_rate, 0.0);
    Ok((w, symbols))
}

/// RRC matched filter followed by symbol-spaced decimation and a data-free
/// complex gain normalization (unit average power out).
pub fn matched_filter_demod(
    w: &SampledWaveform,
    symbol_rate: f64,
    rrc_rolloff: f64,
    n_symbols: usize,
) -> Result<Vec<Complex64>> {
    let osf = w.sample_rate() / symbol_rate;
    if (osf - osf.round()).abs() > 1e-9 * osf {
        return Err(Error::InvalidInput("sample rate not an integer multiple of symbol rate".into()));
    }
    let osf = osf.round() as usize;
    if n_symbols * osf != w.len() {
        return Err(Error::GridMismatch(format!(
            "record length {} != n_symbols {} * oversampling {}",
            w.len(),
            n_symbols,
            osf
        )));
    }
    let mut spec: Spectrum = w.dft();
    for k in 0..spec.len() {
        let f = spec.bin_freq(k);
        let h = rrc_response(f, symbol_rate, rrc_rolloff);
        spec.bins_mut()[k] *= h;
    }
    let y = spec.idft();
    let mut sym: Vec<Complex64> = (0..n_symbols).map(|i| y.samples()[i * osf]).collect();
    let p = sym.iter().map(|s| s.norm_sqr()).sum::<f64>() / n_symbols as f64;
    if p <= 0.0 {
        return Err(Error::ZeroPower("matched_filter_demod"));
    }
    let g = 1.0 / p.sqrt();
    for s in sym.iter_mut() {
        *s *= g;
    }
    Ok(sym)
}

/// Nearest-neighbor decisions against the unit-power constellation.
pub fn decide_symbols(received: &[Complex64], order: u32) -> Result<Vec<Complex64>> {
    let points = constellation(order)?;
    Ok(received
        .iter()
        .map(|r| {
            *points
                .iter()
                .min_by(|a, b| {
                    (r - *a).norm_sqr().partial_cmp(&(r - *b).norm_sqr()).unwrap()
                })
                .unwrap()
        })
        .collect())
}
