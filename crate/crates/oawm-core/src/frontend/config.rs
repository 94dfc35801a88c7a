//! Physical configuration of the comb LO, receiver array, and ADCs.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Multi-tone phase-locked local oscillator comb.
///
/// Tone `mu` (1-based) sits at `f_1 + (mu-1) * f_fsr` relative to the baseband
/// reference; `tone_amplitudes` are complex field amplitudes in sqrt(W), so the
/// total LO power is the sum of their squared magnitudes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CombLo {
    pub f_1: f64,
    pub f_fsr: f64,
    pub tone_amplitudes: Vec<Complex64>,
    /// RMS timing jitter of the comb pulse train, seconds.
    pub tau_j_lo: f64,
    /// OSNR of the LO path in the 12.5 GHz reference bandwidth (both
    /// polarizations), dB. `+inf` disables LO ASE.
    pub osnr_lo_db: f64,
}

impl CombLo {
    /// Flat comb of `m` equal-amplitude tones carrying total power `p_lo`.
    pub fn flat(f_1: f64, f_fsr: f64, m: usize, p_lo: f64) -> Self {
        let amp = (p_lo / m as f64).sqrt();
        Self {
            f_1,
            f_fsr,
            tone_amplitudes: vec![Complex64::new(amp, 0.0); m],
            tau_j_lo: 0.0,
            osnr_lo_db: f64::INFINITY,
        }
    }

    pub fn m(&self) -> usize {
        self.tone_amplitudes.len()
    }

    /// Frequency of tone `mu` (1-based).
    pub fn tone_freq(&self, mu: usize) -> f64 {
        self.f_1 + (mu as f64 - 1.0) * self.f_fsr
    }

    pub fn p_lo(&self) -> f64 {
        self.tone_amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Center of the comb, used as the jitter-free carrier reference.
    pub fn center_freq(&self) -> f64 {
        (self.tone_freq(1) + self.tone_freq(self.m())) / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.tone_amplitudes.is_empty() {
            return Err(Error::ConfigRejected("comb needs at least one tone".into()));
        }
        if self.m() > 1 && !(self.f_fsr > 0.0) {
            return Err(Error::ConfigRejected(format!("FSR must be positive, got {}", self.f_fsr)));
        }
        if !(self.tau_j_lo >= 0.0) {
            return Err(Error::ConfigRejected("negative LO jitter".into()));
        }
        Ok(())
    }
}

/// Optional measured electrical response of one receiver channel, `(f >= 0,
/// complex value)` pairs; negative frequencies follow by conjugate symmetry
/// (real impulse response). Values are linearly interpolated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResponseCurve {
    pub freqs: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl ResponseCurve {
    /// Evaluate at a signed frequency.
    pub fn eval(&self, f: f64) -> Complex64 {
        let a = f.abs();
        let v = if a <= self.freqs[0] {
            self.values[0]
        } else if a >= *self.freqs.last().unwrap() {
            *self.values.last().unwrap()
        } else {
            let i = self.freqs.partition_point(|&x| x < a).max(1);
            let (f0, f1) = (self.freqs[i - 1], self.freqs[i]);
            let t = (a - f0) / (f1 - f0);
            self.values[i - 1] * (1.0 - t) + self.values[i] * t
        };
        if f < 0.0 {
            v.conj()
        } else {
            v
        }
    }
}

/// Receiver-array parameters (everything between the optical inputs and the
/// ADC inputs).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontEndConfig {
    /// Number of IQ receiver channels.
    pub n: usize,
    /// Per-channel LO delays, seconds.
    pub delays: Vec<f64>,
    /// Responsivity of a single photodetector within a balanced pair, A/W.
    pub responsivity: f64,
    /// Common-mode rejection ratio, 20*log10; `-inf` = perfectly balanced.
    pub cmrr_db: f64,
    /// LO-to-signal power ratio, 10*log10(P_LO/P_S).
    pub lospr_db: f64,
    /// RF amplifier power gain, dB.
    pub rf_gain_db: f64,
    /// RF amplifier noise figure, dB.
    pub nf_db: f64,
    /// Input impedance of RF amplifier and ADC, ohms.
    pub impedance: f64,
    /// Total optical power per photodetector, watts.
    pub p_pd: f64,
    /// Hybrid IQ phase per receiver, degrees (ideal: 90).
    pub iq_phase_deg: Vec<f64>,
    /// Ambient temperature, kelvin.
    pub temperature_k: f64,
    /// Absolute optical reference frequency (lower band edge), Hz. Enters only
    /// through the delay phase factors exp(-j 2 pi (f_ref + f_mu) tau_nu).
    pub f_ref: f64,
    /// Excess scalar loss per optical path, dB (applied to the signal and LO
    /// field copies of that channel).
    pub path_loss_db: Vec<f64>,
    /// OSNR of the signal path in the 12.5 GHz reference bandwidth, dB;
    /// `+inf` disables signal ASE.
    pub osnr_sig_db: f64,
    /// Optional measured per-channel electrical response (flat if absent).
    pub response: Option<Vec<ResponseCurve>>,
}

/// OSNR reference bandwidth (0.1 nm at 1550 nm).
pub const B_REF_HZ: f64 = 12.5e9;

impl FrontEndConfig {
    /// Ideal N-channel receiver with evenly distributed delays over one LO
    /// period and Table-like defaults.
    pub fn ideal(n: usize, f_fsr: f64, f_ref: f64) -> Self {
        let delays = (0..n).map(|v| v as f64 / (n as f64 * f_fsr)).collect();
        Self {
            n,
            delays,
            responsivity: 0.8,
            cmrr_db: f64::NEG_INFINITY,
            lospr_db: 10.0,
            rf_gain_db: 6.0,
            nf_db: 10.0,
            impedance: 50.0,
            p_pd: 1e-3,
            iq_phase_deg: vec![90.0; n],
            temperature_k: 300.0,
            f_ref,
            path_loss_db: vec![0.0; n],
            osnr_sig_db: f64::INFINITY,
            response: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::ConfigRejected("need at least one channel".into()));
        }
        if self.delays.len() != self.n
            || self.iq_phase_deg.len() != self.n
            || self.path_loss_db.len() != self.n
        {
            return Err(Error::ConfigRejected(format!(
                "per-channel vectors must have length N = {}",
                self.n
            )));
        }
        if let Some(resp) = &self.response {
            if resp.len() != self.n {
                return Err(Error::ConfigRejected("response table must have one curve per channel".into()));
            }
        }
        if !(self.responsivity > 0.0) || !(self.impedance > 0.0) {
            return Err(Error::ConfigRejected("S and R must be positive".into()));
        }
        if self.iq_phase_deg.iter().any(|&p| !(0.0 < p && p < 180.0)) {
            return Err(Error::ConfigRejected("IQ phases must lie in (0, 180) degrees".into()));
        }
        Ok(())
    }

    /// Linear-scale derived quantities.
    pub fn rf_gain(&self) -> f64 {
        10f64.powf(self.rf_gain_db / 10.0)
    }

    pub fn noise_factor(&self) -> f64 {
        10f64.powf(self.nf_db / 10.0)
    }

    pub fn cmrr(&self) -> f64 {
        if self.cmrr_db == f64::NEG_INFINITY {
            0.0
        } else {
            10f64.powf(self.cmrr_db / 20.0)
        }
    }

    pub fn lospr(&self) -> f64 {
        10f64.powf(self.lospr_db / 10.0)
    }

    /// Signal and LO input powers consistent with `p_pd` and `lospr`:
    /// P_PD = (P_S + P_LO) / (4N).
    pub fn input_powers(&self) -> (f64, f64) {
        let total = 4.0 * self.n as f64 * self.p_pd;
        let lospr = self.lospr();
        let p_s = total / (1.0 + lospr);
        (p_s, total - p_s)
    }
}

/// Full-scale handling of the digitizer.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FullScale {
    /// Fixed full-scale range `u_fs` (record clips at +-u_fs/2).
    Fixed { u_fs: f64 },
    /// Per-record automatic range: `u_fs = 2 * max|sample| / fill`.
    Auto { fill: f64 },
    /// Range tied to the record statistics: `u_fs = 2 * k_sigma * rms`,
    /// clipping a Gaussian record at +-k_sigma standard deviations.
    AutoSigma { k_sigma: f64 },
}

/// Digitizer parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdcConfig {
    /// Analog acquisition bandwidth B, Hz (brick-wall anti-alias filter).
    pub bandwidth: f64,
    /// Output sample rate, Hz; must divide the simulation rate.
    pub sample_rate: f64,
    pub full_scale: FullScale,
    /// Quantizer depth (mid-tread).
    pub n_bits: u32,
    /// Thermal-noise SINAD constant: a full-scale sinusoid digitized at
    /// bandwidth B measures SINAD = c1 / B.
    pub c1: f64,
    /// RMS sampling jitter, seconds.
    pub tau_j_adc: f64,
    /// Clock spur level relative to the record's signal power, dBc;
    /// `-inf` disables the spur. The spur is placed at 0.8 * B.
    pub clock_spur_dbc: f64,
    /// AC-coupled input: the record's DC bin is blocked, as in a real
    /// oscilloscope front end (also removes the LO-LO beat offset that
    /// imperfect balancing leaves at zero frequency).
    pub ac_coupled: bool,
}

impl AdcConfig {
    pub fn new(bandwidth: f64, sample_rate: f64) -> Self {
        Self {
            bandwidth,
            sample_rate,
            full_scale: FullScale::Auto { fill: 1.0 },
            n_bits: 10,
            c1: 150e12,
            tau_j_adc: 25e-15,
            clock_spur_dbc: f64::NEG_INFINITY,
            ac_coupled: true,
        }
    }

    pub fn spur_freq(&self) -> f64 {
        0.8 * self.bandwidth
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0) || self.bandwidth > self.sample_rate / 2.0 {
            return Err(Error::ConfigRejected(format!(
                "ADC bandwidth {} Hz must satisfy 0 < B <= f_s/2 = {} Hz",
                self.bandwidth,
                self.sample_rate / 2.0
            )));
        }
        if !(self.c1 > 0.0) {
            return Err(Error::ConfigRejected("C1 must be positive".into()));
        }
        if let FullScale::Fixed { u_fs } = self.full_scale {
            if !(u_fs > 0.0) {
                return Err(Error::ConfigRejected("U_FS must be positive".into()));
            }
        }
        if let FullScale::Auto { fill } = self.full_scale {
            if !(0.0 < fill && fill <= 1.0) {
                return Err(Error::ConfigRejected("fill factor must lie in (0, 1]".into()));
            }
        }
        if let FullScale::AutoSigma { k_sigma } = self.full_scale {
            if !(k_sigma > 0.0) {
                return Err(Error::ConfigRejected("k_sigma must be positive".into()));
            }
        }
        if !(self.tau_j_adc >= 0.0) {
            return Err(Error::ConfigRejected("negative ADC jitter".into()));
        }
        Ok(())
    }
}

/// Slowly varying drift state: per-channel path phases and the temporal
/// position of the LO pulse train within the recording. Tone `mu` acquires
/// the phase `phi_lo = 2 pi f_fsr tau_lo mu`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftParams {
    pub phi_f: Vec<f64>,
    pub tau_lo: f64,
}

impl DriftParams {
    pub fn zero(n: usize) -> Self {
        Self { phi_f: vec![0.0; n], tau_lo: 0.0 }
    }

    pub fn phi_lo(&self, f_fsr: f64, mu: usize) -> f64 {
        std::f64::consts::TAU * f_fsr * self.tau_lo * mu as f64
    }
}

/// Noise/distortion source selection for the front-end simulation.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct NoiseToggles {
    pub shot: bool,
    pub rf_amp: bool,
    pub adc_noise: bool,
    pub adc_jitter: bool,
    pub lo_jitter: bool,
    pub ssbi: bool,
    pub ase: bool,
}

impl NoiseToggles {
    pub fn all_off() -> Self {
        Self::default()
    }

    pub fn all_on() -> Self {
        Self { shot: true, rf_amp: true, adc_noise: true, adc_jitter: true, lo_jitter: true, ssbi: true, ase: true }
    }

    pub fn only(source: &str) -> Self {
        let mut t = Self::default();
        match source {
            "shot" => t.shot = true,
            "rf_amp" => t.rf_amp = true,
            "adc_noise" => t.adc_noise = true,
            "adc_jitter" => t.adc_jitter = true,
            "lo_jitter" => t.lo_jitter = true,
            "ssbi" => t.ssbi = true,
            "ase" => t.ase = true,
            _ => {}
        }
        t
    }
}

/// Digitized output of the front end: N in-phase and N quadrature records.
#[derive(Debug, Clone)]
pub struct ChannelRecords {
    pub i: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub sample_rate: f64,
    pub meta: RecordMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordMeta {
    pub seed: u64,
    pub toggles: NoiseToggles,
    /// Fraction of pre-quantizer samples beyond +-U_FS/2, per record
    /// (I_1..I_N then Q_1..Q_N). Empty when quantization was off.
    pub clipped_fraction: Vec<f64>,
    /// Applied full-scale range per record, same order. Empty when off.
    pub u_fs: Vec<f64>,
    /// Frequencies of injected ADC clock spurs, Hz.
    pub spur_freqs: Vec<f64>,
}

impl ChannelRecords {
    pub fn record_len(&self) -> usize {
        self.i.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn n(&self) -> usize {
        self.i.len()
    }
}
