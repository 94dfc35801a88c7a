//! End-to-end loopback through the simulated front end and the
//! reconstruction pipeline.

use num_complex::Complex64;
use oawm_core::frontend::{
    simulate_frontend, AdcConfig, CombLo, DriftParams, FrontEndConfig, NoiseToggles,
};
use oawm_core::recon::{reconstruct, DriftSpec, ReconstructOptions, WeightsMode};
use oawm_core::signalkit::{add_pilot_tones, gen_random_test_signal, RandomSignalSpec, SampledWaveform};

fn rel_rms(est: &SampledWaveform, truth: &SampledWaveform) -> f64 {
    assert_eq!(est.len(), truth.len());
    let num: f64 = est
        .samples()
        .iter()
        .zip(truth.samples())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let den: f64 = truth.samples().iter().map(|b| b.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Paper-scale system: N = M = 4, f_FSR = 40 GHz, B = 21 GHz, 1 THz grid.
fn paper_scale() -> (CombLo, FrontEndConfig, AdcConfig) {
    let f_fsr = 40e9;
    let comb = CombLo::flat(21e9, f_fsr, 4, 10e-3);
    let fe = FrontEndConfig::ideal(4, f_fsr, 192.38e12);
    let adc = AdcConfig::new(21e9, 1e12);
    (comb, fe, adc)
}

#[test]
fn noiseless_loopback_of_160ghz_gaussian_signal() {
    let (comb, fe, adc) = paper_scale();
    let f_sim = 1e12;
    let l = 250_000usize;
    let df = f_sim / l as f64;
    let signal = gen_random_test_signal(
        &RandomSignalSpec { p_s: 1e-3, b_opt: 160e9, f_ctr: 81e9, seed: 42 },
        l as f64 / f_sim,
        f_sim,
    )
    .unwrap();
    let drift = DriftParams { phi_f: vec![0.0, 0.4, -0.8, 1.2], tau_lo: 3.7e-12 };
    let records =
        simulate_frontend(&signal, &comb, &fe, &adc, &drift, NoiseToggles::all_off(), 7).unwrap();

    let n_pos = (adc.bandwidth / df).floor() as usize;
    let grid: Vec<f64> = (0..=n_pos).map(|k| k as f64 * df).collect();
    let cal =
        oawm_core::calib::CalibrationRecord::from_forward_model(&comb, &fe, &adc, &grid).unwrap();

    let opts = ReconstructOptions {
        drift: DriftSpec::Known(drift),
        output_rate: Some(f_sim),
        ..Default::default()
    };
    let result = reconstruct(&records, &cal, &opts).unwrap();
    let err = rel_rms(&result.waveform, &signal);
    assert!(err < 1e-3, "relative RMS {err:.3e} ({:.1} dB)", 20.0 * err.log10());
    for r in &result.diagnostics.or_residual_db {
        assert!(*r < -80.0, "overlap residual {r} dB");
    }
}

/// Smaller 64 GS/s system for estimator-focused tests.
fn small_scale() -> (CombLo, FrontEndConfig, AdcConfig) {
    let f_fsr = 7e9;
    let comb = CombLo::flat(2e9, f_fsr, 4, 10e-3);
    let fe = FrontEndConfig::ideal(4, f_fsr, 193e12);
    let adc = AdcConfig::new(5e9, 64e9);
    (comb, fe, adc)
}

fn small_cal(comb: &CombLo, fe: &FrontEndConfig, adc: &AdcConfig, l: usize) -> oawm_core::calib::CalibrationRecord {
    let df = 64e9 / l as f64;
    let n_pos = (adc.bandwidth / df).floor() as usize;
    let grid: Vec<f64> = (0..=n_pos).map(|k| k as f64 * df).collect();
    oawm_core::calib::CalibrationRecord::from_forward_model(comb, fe, adc, &grid).unwrap()
}

#[test]
fn injected_drift_is_recovered_from_broadband_or_energy() {
    let (comb, fe, adc) = small_scale();
    let l = 8192usize;
    let signal = gen_random_test_signal(
        &RandomSignalSpec { p_s: 1e-3, b_opt: 31e9, f_ctr: 12.5e9, seed: 3 },
        l as f64 / 64e9,
        64e9,
    )
    .unwrap();
    let truth = DriftParams { phi_f: vec![0.0, 0.7, -1.1, 0.3], tau_lo: 37e-12 };
    let records =
        simulate_frontend(&signal, &comb, &fe, &adc, &truth, NoiseToggles::all_off(), 1).unwrap();
    let cal = small_cal(&comb, &fe, &adc, l);
    let est = oawm_core::recon::estimate_drift(&records, &cal, &Default::default()).unwrap();
    for nu in 1..4 {
        let want = (truth.phi_f[nu] - truth.phi_f[0]).rem_euclid(std::f64::consts::TAU);
        let got = est.phi_f[nu].rem_euclid(std::f64::consts::TAU);
        let mut d = (want - got).abs();
        if d > std::f64::consts::PI {
            d = std::f64::consts::TAU - d;
        }
        assert!(d < 1e-3, "phi_F[{nu}]: want {want}, got {got}");
    }
    let dt = (est.tau_lo - truth.tau_lo).abs() * comb.f_fsr; // fraction of period
    assert!(dt < 1e-4, "tau_LO error {dt:.2e} periods");
}

#[test]
fn cw_signal_with_pilots_supports_drift_estimation() {
    let (comb, fe, adc) = small_scale();
    let l = 8192usize;
    let dur = l as f64 / 64e9;
    let cw = oawm_core::signalkit::gen_cw_tone(10.0e9, 1e-3, 0.2, dur, 64e9).unwrap();
    // One pilot per overlap region plus one near the upper band edge.
    let pilots = [5.5e9, 12.5e9, 19.5e9, 26.5e9];
    let signal = add_pilot_tones(&cw, &pilots, -43.0).unwrap();
    let truth = DriftParams { phi_f: vec![0.0, -0.4, 0.9, 2.2], tau_lo: 81e-12 };
    let records =
        simulate_frontend(&signal, &comb, &fe, &adc, &truth, NoiseToggles::all_off(), 5).unwrap();
    let cal = small_cal(&comb, &fe, &adc, l);
    let opts = ReconstructOptions {
        drift: DriftSpec::Estimate(Default::default()),
        output_rate: Some(64e9),
        ..Default::default()
    };
    let result = reconstruct(&records, &cal, &opts).unwrap();
    let err = rel_rms(&result.waveform, &signal);
    assert!(err < 1e-3, "relative RMS {err:.3e} with estimated drift");

    // Without any overlap-region energy the estimator must refuse.
    let bare = simulate_frontend(&cw, &comb, &fe, &adc, &truth, NoiseToggles::all_off(), 5).unwrap();
    let out = oawm_core::recon::estimate_drift(&bare, &cal, &Default::default());
    assert!(matches!(out, Err(oawm_core::Error::NoOverlapEnergy(_))), "{out:?}");
}

#[test]
fn gauge_shift_leaves_stitched_magnitudes_unchanged() {
    let (comb, fe, adc) = small_scale();
    let l = 4096usize;
    let signal = gen_random_test_signal(
        &RandomSignalSpec { p_s: 1e-3, b_opt: 24e9, f_ctr: 12.5e9, seed: 9 },
        l as f64 / 64e9,
        64e9,
    )
    .unwrap();
    let drift = DriftParams { phi_f: vec![0.0, 0.7, -1.1, 0.3], tau_lo: 12e-12 };
    let records =
        simulate_frontend(&signal, &comb, &fe, &adc, &drift, NoiseToggles::all_off(), 2).unwrap();
    let cal = small_cal(&comb, &fe, &adc, l);
    let shifted = DriftParams {
        phi_f: drift.phi_f.iter().map(|p| p + 0.77).collect(),
        tau_lo: drift.tau_lo,
    };
    let mk = |d: &DriftParams| {
        let opts = ReconstructOptions {
            drift: DriftSpec::Known(d.clone()),
            output_rate: Some(64e9),
            ..Default::default()
        };
        reconstruct(&records, &cal, &opts).unwrap()
    };
    let a = mk(&drift);
    let b = mk(&shifted);
    for (x, y) in a.stitched.bins().iter().zip(b.stitched.bins()) {
        let scale = x.norm().max(1e-12);
        assert!((x.norm() - y.norm()).abs() / scale < 1e-9);
    }
}

#[test]
fn single_channel_reduces_to_iq_receiver() {
    let comb = CombLo::flat(4e9, 1.0, 1, 8e-3);
    let fe = FrontEndConfig::ideal(1, 1.0, 193e12);
    let adc = AdcConfig::new(5e9, 64e9);
    let l = 4096usize;
    let signal = gen_random_test_signal(
        &RandomSignalSpec { p_s: 1e-3, b_opt: 8e9, f_ctr: 4e9, seed: 4 },
        l as f64 / 64e9,
        64e9,
    )
    .unwrap();
    let drift = DriftParams::zero(1);
    let records =
        simulate_frontend(&signal, &comb, &fe, &adc, &drift, NoiseToggles::all_off(), 1).unwrap();
    let cal = small_cal(&comb, &fe, &adc, l);
    let opts = ReconstructOptions {
        drift: DriftSpec::Known(drift),
        output_rate: Some(64e9),
        ..Default::default()
    };
    let result = reconstruct(&records, &cal, &opts).unwrap();
    // The band-limited part of the input must come back exactly.
    let filtered = signal.lowpass(0.0).resample(l).unwrap(); // placeholder, replaced below
    let _ = filtered;
    let truth_band = {
        let mut spec = signal.dft();
        for k in 0..spec.len() {
            let f = spec.bin_freq(k) - 4e9; // offset from the LO tone
            if f.abs() > adc.bandwidth {
                spec.bins_mut()[k] = Complex64::default();
            }
        }
        spec.idft()
    };
    let err = rel_rms(&result.waveform, &truth_band);
    assert!(err < 1e-6, "IQ-receiver loopback error {err:.3e}");
}
