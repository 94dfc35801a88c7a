//! Optical reference waveform (periodic pulse-train comb) and the dispersive
//! calibration fibers.

use crate::error::{Error, Result};
use crate::signalkit::{SampledWaveform, Spectrum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Known reference comb: `n_lines` tones spaced by the repetition rate
/// `f_orw`, centered at `f_center` (relative to the baseband reference), with
/// a known spectral phase per line and total power `power`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrwConfig {
    pub f_orw: f64,
    pub n_lines: usize,
    /// Spectral phase per line, radians; length must equal `n_lines`.
    pub line_phases: Vec<f64>,
    pub power: f64,
    pub f_center: f64,
}

impl OrwConfig {
    /// Transform-limited train (flat spectral phase).
    pub fn flat(f_orw: f64, n_lines: usize, power: f64, f_center: f64) -> Self {
        Self { f_orw, n_lines, line_phases: vec![0.0; n_lines], power, f_center }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_orw > 0.0) || self.n_lines == 0 || !(self.power > 0.0) {
            return Err(Error::InvalidInput("ORW needs positive rate, power, line count".into()));
        }
        if self.line_phases.len() != self.n_lines {
            return Err(Error::InvalidInput("one spectral phase per line required".into()));
        }
        if self.line_phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite line phase".into()));
        }
        Ok(())
    }

    /// Optical frequency of line `k` (0-based), shifted by `offset`.
    pub fn line_freq(&self, k: usize, offset: f64) -> f64 {
        self.f_center + (k as f64 - (self.n_lines as f64 - 1.0) / 2.0) * self.f_orw + offset
    }
}

/// The known line amplitudes of an ORW realization (before any fiber).
#[derive(Debug, Clone)]
pub struct OrwLines {
    pub freqs: Vec<f64>,
    pub values: Vec<Complex64>,
}

/// Analytic line set for a given shot offset.
pub fn orw_lines(cfg: &OrwConfig, offset: f64) -> Result<OrwLines> {
    cfg.validate()?;
    let amp = (cfg.power / cfg.n_lines as f64).sqrt();
    Ok(OrwLines {
        freqs: (0..cfg.n_lines).map(|k| cfg.line_freq(k, offset)).collect(),
        values: cfg
            .line_phases
            .iter()
            .map(|&p| Complex64::from_polar(amp, p))
            .collect(),
    })
}

/// Synthesize the reference waveform with a frequency offset. All lines must
/// land on the record's frequency grid (coherent sampling), which also makes
/// the record exactly periodic with period 1/f_orw.
pub fn gen_orw(
    cfg: &OrwConfig,
    offset: f64,
    duration: f64,
    sample_rate: f64,
) -> Result<SampledWaveform> {
    cfg.validate()?;
    let l = (duration * sample_rate).round() as usize;
    if l == 0 {
        return Err(Error::InvalidInput("record shorter than one sample".into()));
    }
    let df = sample_rate / l as f64;
    let half = l / 2;
    let f_start = -(half as f64) * df;
    let mut bins = vec![Complex64::default(); l];
    let lines = orw_lines(cfg, offset)?;
    for (&g, &v) in lines.freqs.iter().zip(&lines.values) {
        if g.abs() >= sample_rate / 2.0 {
            return Err(Error::Aliasing { freq_hz: g, nyquist_hz: sample_rate / 2.0 });
        }
        let x = (g - f_start) / df;
        let k = x.round();
        if (x - k).abs() > 1e-6 {
            return Err(Error::GridMismatch(format!(
                "ORW line at {g} Hz is {} bins off the record grid",
                x - k
            )));
        }
        // A tone of amplitude a occupies one bin of value a * duration.
        bins[k as usize] += v * (l as f64 / sample_rate);
    }
    Ok(Spectrum::new(bins, f_start, df)?.idft())
}

/// Group-velocity-dispersion-only fiber model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FiberConfig {
    /// Length, m.
    pub length: f64,
    /// GVD parameter beta_2, s^2/m (about -2.1e-26 for standard SMF at
    /// 1550 nm).
    pub beta2: f64,
}

impl FiberConfig {
    pub fn phase(&self, f: f64) -> f64 {
        -self.beta2 / 2.0 * (TAU * f).powi(2) * self.length
    }
}

/// Apply the quadratic dispersion phase of the fiber; energy is preserved.
pub fn apply_fiber(w: &SampledWaveform, fiber: &FiberConfig) -> Result<SampledWaveform> {
    if fiber.length < 0.0 {
        return Err(Error::InvalidInput("negative fiber length".into()));
    }
    if fiber.length == 0.0 {
        return Ok(w.clone());
    }
    let mut s = w.dft();
    for k in 0..s.len() {
        let f = s.bin_freq(k);
        let rot = Complex64::from_polar(1.0, fiber.phase(f));
        s.bins_mut()[k] *= rot;
    }
    Ok(s.idft())
}
