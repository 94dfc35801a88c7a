//! Monte-Carlo study of calibration-induced crosstalk.
//!
//! Two error mechanisms are separated by experiment design: (a) white
//! perturbations of the frequency-dependent transfer functions applied to an
//! otherwise noiseless reconstruction with known drift, and (b) estimation
//! errors of the slowly varying drift factors, isolated by reconstructing the
//! same noisy records with the estimated and the true drift and differencing.

use super::formulas::CAP_DB;
use crate::calib::CalibrationRecord;
use crate::error::Result;
use crate::frontend::{
    simulate_frontend, AdcConfig, CombLo, DriftParams, FrontEndConfig, NoiseToggles,
};
use crate::recon::{reconstruct, DriftSpec, ReconstructOptions};
use crate::rng::{self, stream};
use crate::signalkit::{gen_random_test_signal, RandomSignalSpec, SampledWaveform};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy)]
pub struct McCrosstalkOptions {
    /// Relative white perturbation of the transfer functions, dB.
    pub perturbation_db: f64,
    pub trials: usize,
    pub seed: u64,
    /// Comb FSR, Hz.
    pub f_fsr: f64,
    /// Receiver/ADC bandwidth, Hz (slightly above f_FSR/2 so drifts stay
    /// estimable).
    pub bandwidth: f64,
    /// Simulation rate, Hz.
    pub sim_rate: f64,
    /// Samples per simulated record.
    pub record_len: usize,
    /// OSNR of the signal path for the drift arm, dB.
    pub osnr_sig_db: f64,
}

impl Default for McCrosstalkOptions {
    fn default() -> Self {
        Self {
            perturbation_db: -40.0,
            trials: 12,
            seed: 1,
            f_fsr: 40e9,
            bandwidth: 21e9,
            sim_rate: 1e12,
            record_len: 125_000,
            osnr_sig_db: 41.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct McCrosstalkRow {
    pub n: usize,
    /// Mean SNDR limited by the perturbed frequency-dependent transfer
    /// functions, dB.
    pub sndr_freq_dep_db: f64,
    /// Mean SNDR limited by drift-estimation errors, dB.
    pub sndr_drift_db: f64,
    pub trials: usize,
    pub failures: usize,
}

fn signal_power_ratio_db(err: f64, sig: f64) -> f64 {
    if err > 0.0 {
        (10.0 * (sig / err).log10()).min(CAP_DB)
    } else {
        CAP_DB
    }
}

fn waveform_err(est: &SampledWaveform, truth: &SampledWaveform, fit_gain: bool) -> (f64, f64) {
    let mut gain = Complex64::new(1.0, 0.0);
    if fit_gain {
        let num: Complex64 =
            est.samples().iter().zip(truth.samples()).map(|(a, b)| a * b.conj()).sum();
        let den: f64 = truth.samples().iter().map(|b| b.norm_sqr()).sum();
        if den > 0.0 && num.norm() > 0.0 {
            gain = num / den;
        }
    }
    let err: f64 = est
        .samples()
        .iter()
        .zip(truth.samples())
        .map(|(a, b)| (a / gain - b).norm_sqr())
        .sum();
    let sig: f64 = truth.samples().iter().map(|b| b.norm_sqr()).sum();
    (err, sig)
}

/// Run the crosstalk study for each channel count.
pub fn mc_calibration_crosstalk(
    n_values: &[usize],
    opts: &McCrosstalkOptions,
) -> Result<Vec<McCrosstalkRow>> {
    n_values.iter().map(|&n| run_for_n(n, opts)).collect()
}

fn run_for_n(n: usize, opts: &McCrosstalkOptions) -> Result<McCrosstalkRow> {
    let f_fsr = opts.f_fsr;
    let f_1 = 21e9;
    let fe = FrontEndConfig::ideal(n, f_fsr, 192.38e12);
    let (p_s, p_lo) = fe.input_powers();
    let comb = CombLo::flat(f_1, f_fsr, n, p_lo);
    let adc = AdcConfig::new(opts.bandwidth, opts.sim_rate);
    let df = opts.sim_rate / opts.record_len as f64;
    let n_pos = (opts.bandwidth / df).floor() as usize;
    let grid: Vec<f64> = (0..=n_pos).map(|k| k as f64 * df).collect();
    let cal = CalibrationRecord::from_forward_model(&comb, &fe, &adc, &grid)?;
    let b_opt = n as f64 * f_fsr;
    let f_ctr = comb.center_freq();
    let noisy_toggles = NoiseToggles {
        shot: true,
        rf_amp: true,
        adc_noise: true,
        ase: true,
        ..NoiseToggles::all_off()
    };
    let mut fe_noisy = fe.clone();
    fe_noisy.osnr_sig_db = opts.osnr_sig_db;

    let results: Vec<std::result::Result<(f64, f64), String>> = (0..opts.trials)
        .into_par_iter()
        .map(|trial| {
            let run = || -> Result<(f64, f64)> {
                let mut trng = rng::derive(opts.seed, &[stream::TRIAL, n as u64, trial as u64]);
                let sig_seed: u64 = trng.gen();
                let pert_seed: u64 = trng.gen();
                let noise_seed: u64 = trng.gen();
                let drift = DriftParams {
                    phi_f: (0..n).map(|_| trng.gen_range(0.0..std::f64::consts::TAU)).collect(),
                    tau_lo: trng.gen_range(0.0..1.0 / f_fsr),
                };
                let signal = gen_random_test_signal(
                    &RandomSignalSpec { p_s, b_opt, f_ctr, seed: sig_seed },
                    opts.record_len as f64 / opts.sim_rate,
                    opts.sim_rate,
                )?;

                // Arm (a): perturbed calibration, known drift, noiseless.
                let clean = simulate_frontend(
                    &signal,
                    &comb,
                    &fe,
                    &adc,
                    &drift,
                    NoiseToggles::all_off(),
                    noise_seed,
                );
                let clean = match clean {
                    Ok(c) => c,
                    Err(e) => return Err(e),
                };
                let perturbed = cal.perturb(opts.perturbation_db, pert_seed);
                let recon_opts = ReconstructOptions {
                    drift: DriftSpec::Known(drift.clone()),
                    output_rate: Some(opts.sim_rate),
                    ..Default::default()
                };
                let est = reconstruct(&clean, &perturbed, &recon_opts)?;
                let (err_a, sig_a) = waveform_err(&est.waveform, &signal, false);
                let sndr_a = signal_power_ratio_db(err_a, sig_a);

                // Arm (b): exact calibration, estimated vs true drift on
                // noisy records.
                let noisy = simulate_frontend(
                    &signal,
                    &comb,
                    &fe_noisy,
                    &adc,
                    &drift,
                    noisy_toggles,
                    noise_seed,
                )?;
                let sndr_b = if n >= 2 {
                    let with_est = reconstruct(
                        &noisy,
                        &cal,
                        &ReconstructOptions {
                            drift: DriftSpec::Estimate(Default::default()),
                            output_rate: Some(opts.sim_rate),
                            ..Default::default()
                        },
                    )?;
                    let with_truth = reconstruct(&noisy, &cal, &recon_opts)?;
                    let (err_b, _) = waveform_err(&with_est.waveform, &with_truth.waveform, true);
                    signal_power_ratio_db(err_b, sig_a)
                } else {
                    CAP_DB
                };
                Ok((sndr_a, sndr_b))
            };
            run().map_err(|e| e.to_string())
        })
        .collect();

    let mut freq_dep = Vec::new();
    let mut drift_arm = Vec::new();
    let mut failures = 0usize;
    for r in results {
        match r {
            Ok((a, b)) => {
                freq_dep.push(a);
                drift_arm.push(b);
            }
            Err(_) => failures += 1,
        }
    }
    // Mean in the linear crosstalk-power domain.
    let mean_db = |v: &[f64]| {
        if v.is_empty() {
            return f64::NAN;
        }
        let lin: f64 = v.iter().map(|&d| 10f64.powf(-d / 10.0)).sum::<f64>() / v.len() as f64;
        if lin > 0.0 {
            (-10.0 * lin.log10()).min(CAP_DB)
        } else {
            CAP_DB
        }
    };
    Ok(McCrosstalkRow {
        n,
        sndr_freq_dep_db: mean_db(&freq_dep),
        sndr_drift_db: mean_db(&drift_arm),
        trials: opts.trials,
        failures,
    })
}
