//! Shared Monte-Carlo helpers: record-level SNDR measurements through the
//! simulated front end, and independent jittered-sampling oracles evaluated
//! by direct Fourier summation (no shared code with the closed forms or the
//! front-end's spectral resampling).

#![allow(dead_code)]

use num_complex::Complex64;
use oawm_core::frontend::{
    simulate_frontend, AdcConfig, CombLo, DriftParams, FrontEndConfig, FullScale, NoiseToggles,
};
use oawm_core::rng;
use oawm_core::signalkit::{gen_random_test_signal, RandomSignalSpec};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;

pub const F_SIM: f64 = 256e9;
pub const REC_LEN: usize = 8192;

/// Comb-centered-at-zero system for a given (N, B_opt) with B = B_opt/(2N).
pub fn mc_system(n: usize, b_opt: f64) -> (CombLo, FrontEndConfig, AdcConfig) {
    let f_fsr = b_opt / n as f64;
    let b = b_opt / (2.0 * n as f64);
    let fe = FrontEndConfig::ideal(n, f_fsr, 192e12);
    let (_, p_lo) = fe.input_powers();
    let f_1 = -(n as f64 - 1.0) / 2.0 * f_fsr;
    let comb = CombLo::flat(f_1, f_fsr, n, p_lo);
    let adc = AdcConfig::new(b, F_SIM);
    (comb, fe, adc)
}

/// Record-level SNDR of one noise source: reference records with everything
/// off, impaired records with one source on, same seed; the difference is the
/// noise realization. The mean of the difference is removed so DC terms
/// (LO-LO and signal-signal beats) stay out of the noise power, matching the
/// closed forms.
pub fn mc_record_sndr(source: &str, n: usize, b_opt: f64, seeds: u64) -> f64 {
    let (mut comb, mut fe, mut adc) = mc_system(n, b_opt);
    let toggles = NoiseToggles::only(source);
    match source {
        "ssbi" => fe.cmrr_db = -30.0,
        "adc_noise" => adc.full_scale = FullScale::AutoSigma { k_sigma: 4.0 },
        "ase_sig" => fe.osnr_sig_db = 40.0,
        "ase_lo" => comb.osnr_lo_db = 48.0,
        "adc_jitter" => adc.tau_j_adc = 25e-15,
        "lo_jitter" => comb.tau_j_lo = 25e-15,
        "jitter" => {
            adc.tau_j_adc = 25e-15;
            comb.tau_j_lo = 25e-15;
        }
        _ => {}
    }
    let toggles = match source {
        "ase_sig" | "ase_lo" => NoiseToggles::only("ase"),
        "jitter" => NoiseToggles { adc_jitter: true, lo_jitter: true, ..NoiseToggles::all_off() },
        _ => toggles,
    };
    let (p_s, _) = fe.input_powers();
    let drift = DriftParams::zero(n);
    let mut p_sig = 0.0;
    let mut p_noise = 0.0;
    for seed in 0..seeds {
        let signal = gen_random_test_signal(
            &RandomSignalSpec { p_s, b_opt, f_ctr: 0.0, seed: 1000 + seed },
            REC_LEN as f64 / F_SIM,
            F_SIM,
        )
        .unwrap();
        let clean =
            simulate_frontend(&signal, &comb, &fe, &adc, &drift, NoiseToggles::all_off(), seed)
                .unwrap();
        let noisy = simulate_frontend(&signal, &comb, &fe, &adc, &drift, toggles, seed).unwrap();
        for (c, x) in clean.i.iter().chain(clean.q.iter()).zip(noisy.i.iter().chain(noisy.q.iter()))
        {
            let l = c.len() as f64;
            let mean_d: f64 = x.iter().zip(c).map(|(a, b)| a - b).sum::<f64>() / l;
            p_noise +=
                x.iter().zip(c).map(|(a, b)| (a - b - mean_d) * (a - b - mean_d)).sum::<f64>() / l;
            p_sig += c.iter().map(|v| v * v).sum::<f64>() / l;
        }
    }
    10.0 * (p_sig / p_noise).log10()
}

/// Random band-limited real signal as an explicit tone sum, exactly evaluable
/// at arbitrary times.
pub struct ToneSum {
    freqs: Vec<f64>,
    amps: Vec<Complex64>,
}

impl ToneSum {
    pub fn band_limited(bandwidth: f64, n_tones: usize, rng: &mut impl Rng) -> Self {
        let freqs = (1..=n_tones).map(|k| k as f64 / n_tones as f64 * bandwidth).collect();
        let amps = (0..n_tones)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
            .collect();
        Self { freqs, amps }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.freqs
            .iter()
            .zip(&self.amps)
            .map(|(&f, a)| (a * Complex64::from_polar(1.0, TAU * f * t)).re)
            .sum()
    }
}

/// ADC-jitter NSR oracle: sample a band-limited signal at jittered instants by
/// direct evaluation and compare with the nominal samples.
pub fn nsr_adc_jitter_oracle(bandwidth: f64, tau_j: f64, trials: u64) -> f64 {
    let n_tones = 192;
    let l = 1024usize;
    let dt = 1.0 / (2.56 * bandwidth);
    let mut num = 0.0;
    let mut den = 0.0;
    for trial in 0..trials {
        let mut rng = rng::derive(77, &[trial]);
        let sig = ToneSum::band_limited(bandwidth, n_tones, &mut rng);
        for k in 0..l {
            let t = k as f64 * dt;
            let d: f64 = rng.sample(StandardNormal);
            let x0 = sig.eval(t);
            let xj = sig.eval(t + d * tau_j);
            num += (xj - x0) * (xj - x0);
            den += x0 * x0;
        }
    }
    num / den
}

/// LO-comb-jitter NSR oracle: every tone of the comb acquires the phase
/// 2 pi (f_mu - f_cntr) delta_tau(t); the per-slice signals are independent.
pub fn nsr_lo_jitter_oracle(n: usize, f_fsr: f64, tau_j: f64, trials: u64) -> f64 {
    let l = 4096usize;
    let mut num = 0.0;
    let mut den = 0.0;
    for trial in 0..trials {
        let mut rng = rng::derive(78, &[trial]);
        for k in 0..l {
            let d: f64 = rng.sample(StandardNormal);
            let dtau = d * tau_j;
            for mu in 1..=n {
                let off = (mu as f64 - (n as f64 + 1.0) / 2.0) * f_fsr;
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let s = Complex64::new(re, im);
                let e = s * (Complex64::from_polar(1.0, TAU * off * dtau) - 1.0);
                num += e.norm_sqr();
                den += s.norm_sqr();
            }
            let _ = k;
        }
    }
    num / den
}

/// Combined oracle: slices as tone sums, LO jitter as per-slice phase noise,
/// ADC jitter as a timing offset of the exactly evaluated waveform.
pub fn nsr_combined_jitter_oracle(
    n: usize,
    f_fsr: f64,
    tau_adc: f64,
    tau_lo: f64,
    trials: u64,
) -> f64 {
    let b = f_fsr / 2.0;
    let n_tones = 96;
    let l = 768usize;
    let dt = 1.0 / (2.56 * b);
    let mut num = 0.0;
    let mut den = 0.0;
    for trial in 0..trials {
        let mut rng = rng::derive(79, &[trial]);
        // Complex slice envelopes; the recorded baseband is their sum after
        // per-slice jitter phases (down-conversion maps each slice into the
        // same band, so the envelope sum models one I record).
        let slices: Vec<(f64, ToneSum, ToneSum)> = (1..=n)
            .map(|mu| {
                let off = (mu as f64 - (n as f64 + 1.0) / 2.0) * f_fsr;
                let re = ToneSum::band_limited(b, n_tones, &mut rng);
                let im = ToneSum::band_limited(b, n_tones, &mut rng);
                (off, re, im)
            })
            .collect();
        let eval = |t: f64, dtau: f64| -> f64 {
            slices
                .iter()
                .map(|(off, re, im)| {
                    let s = Complex64::new(re.eval(t), im.eval(t));
                    (s * Complex64::from_polar(1.0, TAU * off * dtau)).re
                })
                .sum()
        };
        for k in 0..l {
            let t = k as f64 * dt;
            let da: f64 = rng.sample(StandardNormal);
            let dl: f64 = rng.sample(StandardNormal);
            let x0 = eval(t, 0.0);
            let xj = eval(t + da * tau_adc, dl * tau_lo);
            num += (xj - x0) * (xj - x0);
            den += x0 * x0;
        }
    }
    num / den
}

pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}
