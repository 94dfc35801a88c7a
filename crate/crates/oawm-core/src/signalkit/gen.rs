//! Test-signal generators: CW tones, band-limited Gaussian noise, pilot tones.

use super::wave::{SampledWaveform, Spectrum};
use crate::error::{Error, Result};
use crate::rng;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Band-limited Gaussian random test signal: flat double-sided PSD `P_S/B_opt`
/// inside `[f_ctr - B_opt/2, f_ctr + B_opt/2]`, zero outside.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RandomSignalSpec {
    /// Average power in watts.
    pub p_s: f64,
    /// Occupied optical bandwidth in Hz.
    pub b_opt: f64,
    /// Band center relative to the baseband reference, Hz.
    pub f_ctr: f64,
    pub seed: u64,
}

fn check_in_band(freq: f64, sample_rate: f64) -> Result<()> {
    if freq.abs() >= sample_rate / 2.0 {
        return Err(Error::Aliasing { freq_hz: freq, nyquist_hz: sample_rate / 2.0 });
    }
    Ok(())
}

fn record_len(duration: f64, sample_rate: f64) -> Result<usize> {
    if !(duration > 0.0) || !(sample_rate > 0.0) {
        return Err(Error::InvalidInput(format!(
            "duration {duration} s and sample rate {sample_rate} Hz must be positive"
        )));
    }
    let l = (duration * sample_rate).round() as usize;
    if l == 0 {
        return Err(Error::InvalidInput("record shorter than one sample".into()));
    }
    Ok(l)
}

/// Monochromatic complex tone of the given average power.
pub fn gen_cw_tone(
    freq: f64,
    power: f64,
    phase: f64,
    duration: f64,
    sample_rate: f64,
) -> Result<SampledWaveform> {
    check_in_band(freq, sample_rate)?;
    if !(power >= 0.0) {
        return Err(Error::InvalidInput(format!("negative power {power}")));
    }
    let l = record_len(duration, sample_rate)?;
    let amp = power.sqrt();
    let w = TAU * freq / sample_rate;
    let samples = (0..l)
        .map(|n| Complex64::from_polar(amp, w * n as f64 + phase))
        .collect();
    Ok(SampledWaveform::from_parts(samples, sample_rate, 0.0))
}

/// Mean-free circular-Gaussian noise signal with a brick-wall spectrum.
///
/// Synthesized in the frequency domain: every bin inside the band is an
/// independent complex Gaussian sized so the expected total power is `p_s`.
/// Deterministic given the seed.
pub fn gen_random_test_signal(
    spec: &RandomSignalSpec,
    duration: f64,
    sample_rate: f64,
) -> Result<SampledWaveform> {
    if !(spec.p_s > 0.0) || !(spec.b_opt > 0.0) {
        return Err(Error::InvalidInput("P_S and B_opt must be positive".into()));
    }
    if spec.b_opt >= sample_rate {
        return Err(Error::ConfigRejected(format!(
            "B_opt = {} Hz does not fit below sample rate {} Hz",
            spec.b_opt, sample_rate
        )));
    }
    check_in_band(spec.f_ctr - spec.b_opt / 2.0, sample_rate)?;
    check_in_band(spec.f_ctr + spec.b_opt / 2.0, sample_rate)?;
    let l = record_len(duration, sample_rate)?;
    let df = sample_rate / l as f64;
    let f_start = -((l / 2) as f64) * df;

    // Count in-band bins first so the per-bin variance normalizes exactly.
    let lo = spec.f_ctr - spec.b_opt / 2.0;
    let hi = spec.f_ctr + spec.b_opt / 2.0;
    let in_band = |f: f64| f >= lo && f < hi;
    let n_band = (0..l).filter(|&k| in_band(f_start + k as f64 * df)).count();
    if n_band == 0 {
        return Err(Error::InvalidInput("band contains no spectral bins".into()));
    }

    let mut rng = rng::derive(spec.seed, &[rng::stream::SIGNAL_GEN]);
    // Spectrum bins carry sqrt(W)/Hz; per-bin |X|^2 * df must average P_S / n_band.
    let sigma = (spec.p_s / (2.0 * n_band as f64)).sqrt() / df;
    let bins = (0..l)
        .map(|k| {
            if in_band(f_start + k as f64 * df) {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * sigma, im * sigma)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(Spectrum::new(bins, f_start, df)?.idft())
}

/// Add equal-power pilot tones (phase 0) at the given frequencies,
/// `rel_power_db` decibels below the record's current mean power each.
/// `-inf` leaves the record unchanged.
pub fn add_pilot_tones(
    w: &SampledWaveform,
    freqs: &[f64],
    rel_power_db: f64,
) -> Result<SampledWaveform> {
    if rel_power_db == f64::NEG_INFINITY || freqs.is_empty() {
        return Ok(w.clone());
    }
    for &f in freqs {
        check_in_band(f, w.sample_rate())?;
    }
    let amp = (w.mean_power() * 10f64.powf(rel_power_db / 10.0)).sqrt();
    let dt = 1.0 / w.sample_rate();
    let mut samples = w.samples().to_vec();
    for &f in freqs {
        let wstep = TAU * f * dt;
        for (n, s) in samples.iter_mut().enumerate() {
            *s += Complex64::from_polar(amp, wstep * n as f64);
        }
    }
    Ok(SampledWaveform::from_parts(samples, w.sample_rate(), w.start_time()))
}
