//! SINAD with the distortion taxonomy of a reconstructed single-tone
//! measurement: pilots, slice crosstalk, image crosstalk, clock spurs, noise.

use crate::error::{Error, Result};
use crate::signalkit::{SampledWaveform, Spectrum};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::TAU;

/// ENOB from SINAD: (SINAD_dB - 1.76) / 6.02. Exactly invertible.
pub fn enob_from_sinad(sinad_db: f64) -> f64 {
    (sinad_db - 1.76) / 6.02
}

pub fn sinad_from_enob(enob_bits: f64) -> f64 {
    enob_bits * 6.02 + 1.76
}

/// Numeric cap used when a ratio is unbounded.
pub const CAP_DB: f64 = 200.0;

/// Labeled frequencies steering the taxonomy.
#[derive(Debug, Clone, Default)]
pub struct SinadContext {
    /// Signal tone frequencies.
    pub signal_freqs: Vec<f64>,
    /// Pilot tone frequencies.
    pub pilot_freqs: Vec<f64>,
    /// Comb tone frequencies (drive the crosstalk predictions).
    pub tone_freqs: Vec<f64>,
    /// Known ADC clock lines and their mixing products.
    pub known_spur_freqs: Vec<f64>,
    /// Resolution bandwidth; integration windows span +-3 rbw.
    pub rbw: f64,
}

/// Power bookkeeping relative to the signal, dB.
#[derive(Debug, Clone, Serialize)]
pub struct DistortionReport {
    /// Integrated signal-window power in the spectrum's own scale, dB
    /// (absolute calibration depends on the caller's normalization; all
    /// category fields are relative to this).
    pub signal_power_db: f64,
    pub pilots_db: f64,
    pub slice_crosstalk_db: f64,
    pub image_crosstalk_db: f64,
    pub clock_spurs_db: f64,
    pub noise_db: f64,
    pub sinad_db: f64,
    pub enob_bits: f64,
    /// Labeled windows that overlapped a higher-precedence category.
    pub overlap_conflicts: usize,
}

impl DistortionReport {
    /// Recompute SINAD from the category powers (consistency check).
    pub fn sinad_from_categories(&self) -> f64 {
        let lin = |db: f64| 10f64.powf(db / 10.0);
        let denom = lin(self.pilots_db)
            + lin(self.slice_crosstalk_db)
            + lin(self.image_crosstalk_db)
            + lin(self.clock_spurs_db)
            + lin(self.noise_db);
        if denom > 0.0 {
            -10.0 * denom.log10()
        } else {
            CAP_DB
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Category {
    Signal,
    Pilot,
    SliceXt,
    ImageXt,
    Spur,
    Noise,
}

/// Categorize the spectrum into signal, labeled distortions, and noise, and
/// compute SINAD per the power-ratio definition. Integration windows span
/// +-3 rbw around each labeled frequency; overlapping labels resolve by the
/// precedence signal > pilots > crosstalk > spurs (conflicts are counted).
pub fn sinad_report(spec: &Spectrum, ctx: &SinadContext) -> Result<DistortionReport> {
    if ctx.signal_freqs.is_empty() {
        return Err(Error::InvalidInput("need at least one signal frequency".into()));
    }
    if !(ctx.rbw > 0.0) {
        return Err(Error::InvalidInput("rbw must be positive".into()));
    }
    let df = spec.df();
    let half_win = 3.0 * ctx.rbw;
    let len = spec.len();
    let mut label = vec![Category::Noise; len];
    let mut conflicts = 0usize;

    let mark = |freqs: &[f64], cat: Category, label: &mut [Category], conflicts: &mut usize| {
        for &f0 in freqs {
            let lo = ((f0 - half_win - spec.f_start()) / df).ceil().max(0.0) as usize;
            let hi = (((f0 + half_win - spec.f_start()) / df).floor()).min(len as f64 - 1.0);
            if hi < 0.0 {
                continue;
            }
            for k in lo..=hi as usize {
                if label[k] == Category::Noise {
                    label[k] = cat;
                } else if label[k] != cat {
                    *conflicts += 1;
                }
            }
        }
    };

    // Precedence: signal first, then pilots, crosstalk, spurs.
    mark(&ctx.signal_freqs, Category::Signal, &mut label, &mut conflicts);
    mark(&ctx.pilot_freqs, Category::Pilot, &mut label, &mut conflicts);
    let (slice_freqs, image_freqs) = predicted_crosstalk_freqs(
        &ctx.signal_freqs,
        &ctx.tone_freqs,
        spec.f_start(),
        spec.f_start() + (len - 1) as f64 * df,
    );
    mark(&slice_freqs, Category::SliceXt, &mut label, &mut conflicts);
    mark(&image_freqs, Category::ImageXt, &mut label, &mut conflicts);
    mark(&ctx.known_spur_freqs, Category::Spur, &mut label, &mut conflicts);

    let mut power = [0.0f64; 6];
    for (k, b) in spec.bins().iter().enumerate() {
        let idx = match label[k] {
            Category::Signal => 0,
            Category::Pilot => 1,
            Category::SliceXt => 2,
            Category::ImageXt => 3,
            Category::Spur => 4,
            Category::Noise => 5,
        };
        power[idx] += b.norm_sqr() * df;
    }
    let p_sig = power[0];
    if p_sig <= 0.0 {
        return Err(Error::ZeroPower("sinad_report signal window"));
    }
    let rel = |p: f64| {
        if p > 0.0 {
            10.0 * (p / p_sig).log10()
        } else {
            -CAP_DB
        }
    };
    let p_nd: f64 = power[1..].iter().sum();
    let sinad_db = if p_nd > 0.0 { 10.0 * (p_sig / p_nd).log10() } else { CAP_DB };
    Ok(DistortionReport {
        signal_power_db: 10.0 * p_sig.log10(),
        pilots_db: rel(power[1]),
        slice_crosstalk_db: rel(power[2]),
        image_crosstalk_db: rel(power[3]),
        clock_spurs_db: rel(power[4]),
        noise_db: rel(power[5]),
        sinad_db,
        enob_bits: enob_from_sinad(sinad_db),
        overlap_conflicts: conflicts,
    })
}

/// Crosstalk frequencies implied by the comb arithmetic: wrong-slice leakage
/// at g + k f_FSR and conjugate-image leakage at f_mu + f_mu' - g.
pub fn predicted_crosstalk_freqs(
    signal_freqs: &[f64],
    tone_freqs: &[f64],
    f_lo: f64,
    f_hi: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut slice = Vec::new();
    let mut image = Vec::new();
    for &g in signal_freqs {
        for &fa in tone_freqs {
            for &fb in tone_freqs {
                let s = g + (fa - fb);
                if (fa - fb).abs() > 1.0 && s >= f_lo && s <= f_hi {
                    slice.push(s);
                }
                let i = fa + fb - g;
                if i >= f_lo && i <= f_hi {
                    image.push(i);
                }
            }
        }
    }
    slice.sort_by(|a, b| a.partial_cmp(b).unwrap());
    slice.dedup_by(|a, b| (*a - *b).abs() < 1.0);
    image.sort_by(|a, b| a.partial_cmp(b).unwrap());
    image.dedup_by(|a, b| (*a - *b).abs() < 1.0);
    (slice, image)
}

/// Flat-top-windowed full-record spectrum, energy-normalized so that category
/// power integrals remain calibrated.
pub fn windowed_spectrum(w: &SampledWaveform) -> Spectrum {
    // 5-term flat-top window (amplitude-accurate for off-grid tones).
    const A: [f64; 5] = [0.21557895, 0.41663158, 0.277263158, 0.083578947, 0.006947368];
    let l = w.len();
    let win: Vec<f64> = (0..l)
        .map(|n| {
            let x = TAU * n as f64 / l as f64;
            A[0] - A[1] * x.cos() + A[2] * (2.0 * x).cos() - A[3] * (3.0 * x).cos()
                + A[4] * (4.0 * x).cos()
        })
        .collect();
    let u = (win.iter().map(|v| v * v).sum::<f64>() / l as f64).sqrt();
    let samples: Vec<Complex64> =
        w.samples().iter().zip(&win).map(|(s, h)| s * (h / u)).collect();
    SampledWaveform::from_parts(samples, w.sample_rate(), w.start_time()).dft()
}
