//! Time-domain records, spectra, and the DFT/IDFT pair connecting them.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place forward DFT (unnormalized, rustfft convention).
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(buf));
}

/// In-place inverse DFT (unnormalized; caller divides by length or scales by df).
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()).process(buf));
}

/// Uniformly sampled complex envelope. `|samples[k]|^2` is instantaneous power
/// in watts; time of sample `k` is `start_time + k / sample_rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWaveform {
    samples: Vec<Complex64>,
    sample_rate: f64,
    start_time: f64,
}

impl SampledWaveform {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, start_time: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("waveform needs at least one sample".into()));
        }
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::InvalidInput(format!("bad sample rate {sample_rate}")));
        }
        if !start_time.is_finite() {
            return Err(Error::InvalidInput("non-finite start time".into()));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        Ok(Self { samples, sample_rate, start_time })
    }

    /// Construct from values known to be finite (generator internals).
    pub(crate) fn from_parts(samples: Vec<Complex64>, sample_rate: f64, start_time: f64) -> Self {
        debug_assert!(!samples.is_empty() && sample_rate > 0.0);
        Self { samples, sample_rate, start_time }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Energy in joules: `sum |x|^2 * dt`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.sample_rate
    }

    /// Forward DFT. Bins are scaled by the sample interval so that
    /// `sum |X|^2 * df == sum |x|^2 * dt` (Parseval); output is arranged in
    /// ascending frequency with `f_start = -floor(L/2) * df`. The record's
    /// `start_time` is not encoded in the spectrum.
    pub fn dft(&self) -> Spectrum {
        let l = self.samples.len();
        let dt = 1.0 / self.sample_rate;
        let df = self.sample_rate / l as f64;
        let mut buf = self.samples.clone();
        fft_forward(&mut buf);
        for v in buf.iter_mut() {
            *v *= dt;
        }
        let half = l / 2;
        buf.rotate_left(l - half); // fftshift: negative frequencies first
        Spectrum { bins: buf, f_start: -(half as f64) * df, df }
    }

    /// Zero every spectral bin with `|f| > cutoff`. The cutoff itself is kept.
    pub fn lowpass(&self, cutoff_hz: f64) -> SampledWaveform {
        let mut s = self.dft();
        for (k, v) in s.bins.iter_mut().enumerate() {
            let f = s.f_start + k as f64 * s.df;
            if f.abs() > cutoff_hz {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        let mut out = s.idft();
        out.start_time = self.start_time;
        out
    }

    /// FFT-based resampling onto `new_len` samples over the same duration.
    /// Shrinking drops the outermost frequency bins, so callers must band-limit
    /// first for an alias-free result.
    pub fn resample(&self, new_len: usize) -> Result<SampledWaveform> {
        if new_len == 0 {
            return Err(Error::InvalidInput("resample to zero length".into()));
        }
        if new_len == self.len() {
            return Ok(self.clone());
        }
        let spec = self.dft();
        let df = spec.df;
        let half_new = new_len / 2;
        let f_start_new = -(half_new as f64) * df;
        let mut bins = vec![Complex64::new(0.0, 0.0); new_len];
        for (k, v) in bins.iter_mut().enumerate() {
            let f = f_start_new + k as f64 * df;
            if let Some(i) = spec.index_of(f) {
                *v = spec.bins[i];
            }
        }
        let out = Spectrum { bins, f_start: f_start_new, df }.idft();
        Ok(SampledWaveform { samples: out.samples, sample_rate: new_len as f64 * df, start_time: self.start_time })
    }
}

/// Discrete spectrum on a uniform grid: bin `k` sits at `f_start + k * df`.
/// Values carry the `dt`-scaled DFT convention of [`SampledWaveform::dft`],
/// i.e. units of sqrt(W)/Hz so that `|X|^2 * df` integrates to power.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub(crate) bins: Vec<Complex64>,
    pub(crate) f_start: f64,
    pub(crate) df: f64,
}

impl Spectrum {
    pub fn new(bins: Vec<Complex64>, f_start: f64, df: f64) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidInput("spectrum needs at least one bin".into()));
        }
        if !(df > 0.0) || !df.is_finite() || !f_start.is_finite() {
            return Err(Error::InvalidInput(format!("bad grid f_start={f_start} df={df}")));
        }
        if bins.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite bin".into()));
        }
        Ok(Self { bins, f_start, df })
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn bins_mut(&mut self) -> &mut [Complex64] {
        &mut self.bins
    }

    pub fn f_start(&self) -> f64 {
        self.f_start
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bin_freq(&self, k: usize) -> f64 {
        self.f_start + k as f64 * self.df
    }

    /// Index of the bin at frequency `f`, if `f` lies on the grid
    /// (within 1e-6 of a bin spacing).
    pub fn index_of(&self, f: f64) -> Option<usize> {
        let x = (f - self.f_start) / self.df;
        let k = x.round();
        if (x - k).abs() > 1e-6 || k < 0.0 || k >= self.bins.len() as f64 {
            None
        } else {
            Some(k as usize)
        }
    }

    /// Energy `sum |X|^2 * df`, matching the time-domain energy.
    pub fn energy(&self) -> f64 {
        self.bins.iter().map(|b| b.norm_sqr()).sum::<f64>() * self.df
    }

    /// Inverse DFT back to a time-domain record with `sample_rate = L * df`
    /// and `start_time = 0`.
    pub fn idft(&self) -> SampledWaveform {
        let l = self.bins.len();
        let half = l / 2;
        let mut buf = self.bins.clone();
        buf.rotate_left(half); // undo fftshift
        fft_inverse(&mut buf);
        for v in buf.iter_mut() {
            *v *= self.df;
        }
        SampledWaveform { samples: buf, sample_rate: l as f64 * self.df, start_time: 0.0 }
    }
}

/// Peak-to-average power ratio `max |x|^2 / mean |x|^2`.
pub fn papr(w: &SampledWaveform) -> Result<f64> {
    let mean = w.mean_power();
    if mean <= 0.0 {
        return Err(Error::ZeroPower("papr"));
    }
    let peak = w.samples.iter().map(|s| s.norm_sqr()).fold(0.0, f64::max);
    Ok(peak / mean)
}

/// Clip real and imaginary parts independently at `±k_sigma` times the rms of
/// the respective part (rms about zero, matching the Gaussian-per-quadrature
/// signal model).
pub fn clip(w: &SampledWaveform, k_sigma: f64) -> Result<SampledWaveform> {
    clip_with_stats(w, k_sigma).map(|(w, _)| w)
}

/// Like [`clip`], additionally returning the fraction of clipped real-valued
/// component samples (each quadrature counted separately).
pub fn clip_with_stats(w: &SampledWaveform, k_sigma: f64) -> Result<(SampledWaveform, f64)> {
    if !(k_sigma > 0.0) {
        return Err(Error::InvalidInput(format!("k_sigma must be > 0, got {k_sigma}")));
    }
    let n = w.samples.len() as f64;
    let sig_re = (w.samples.iter().map(|s| s.re * s.re).sum::<f64>() / n).sqrt();
    let sig_im = (w.samples.iter().map(|s| s.im * s.im).sum::<f64>() / n).sqrt();
    if sig_re == 0.0 && sig_im == 0.0 {
        return Err(Error::ZeroPower("clip"));
    }
    let (bre, bim) = (k_sigma * sig_re, k_sigma * sig_im);
    let mut clipped = 0usize;
    let samples = w
        .samples
        .iter()
        .map(|s| {
            let re = if s.re.abs() > bre {
                clipped += 1;
                bre.copysign(s.re)
            } else {
                s.re
            };
            let im = if s.im.abs() > bim {
                clipped += 1;
                bim.copysign(s.im)
            } else {
                s.im
            };
            Complex64::new(re, im)
        })
        .collect();
    let frac = clipped as f64 / (2.0 * n);
    Ok((SampledWaveform { samples, ..*w }, frac))
}
