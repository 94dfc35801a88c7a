//! Closed-form SNDR contributions against front-end Monte-Carlo oracles:
//! each noise source simulated alone must land within 0.5 dB of its formula
//! at Table-like parameters for N in {1, 2, 4} and B_opt in {80, 200} GHz.

mod common;

use common::mc_record_sndr;
use oawm_core::budget::{
    sndr_adc, sndr_ase_path, sndr_jitter, sndr_rf_amp, sndr_shot, sndr_ssbi, BudgetParams,
};

fn grid() -> Vec<(usize, f64)> {
    let mut v = Vec::new();
    for &n in &[1usize, 2, 4] {
        for &b_opt in &[80e9, 200e9] {
            v.push((n, b_opt));
        }
    }
    v
}

fn check(source: &str, expect: impl Fn(&BudgetParams) -> f64, seeds: u64, tol_db: f64) {
    for (n, b_opt) in grid() {
        let p = BudgetParams { n, b_opt, ..Default::default() };
        let want = expect(&p);
        let got = mc_record_sndr(source, n, b_opt, seeds);
        assert!(
            (got - want).abs() < tol_db,
            "{source} at N={n}, B_opt={:.0} GHz: MC {got:.2} dB vs closed form {want:.2} dB",
            b_opt / 1e9
        );
    }
}

#[test]
fn shot_noise_matches_closed_form() {
    check("shot", |p| sndr_shot(p), 20, 0.5);
}

#[test]
fn rf_amplifier_noise_matches_closed_form() {
    check("rf_amp", |p| sndr_rf_amp(p), 20, 0.5);
}

#[test]
fn adc_noise_matches_closed_form() {
    check("adc_noise", |p| sndr_adc(p), 20, 0.5);
}

#[test]
fn signal_path_ase_matches_closed_form() {
    check("ase_sig", |p| sndr_ase_path(40.0, p.b_ref, p.b_opt), 20, 0.5);
}

#[test]
fn lo_path_ase_matches_closed_form() {
    check("ase_lo", |p| sndr_ase_path(48.0, p.b_ref, p.b_opt), 20, 0.5);
}

#[test]
fn combined_jitter_matches_closed_form() {
    check("jitter", |p| sndr_jitter(p), 20, 0.5);
}

#[test]
fn ssbi_matches_closed_form_over_100_seeds() {
    // Table-like parameters: N = 4, B_opt = 200 GHz, CMRR = -30 dB.
    let p = BudgetParams { n: 4, b_opt: 200e9, ..Default::default() };
    let want = sndr_ssbi(&p);
    let got = mc_record_sndr("ssbi", 4, 200e9, 100);
    assert!(
        (got - want).abs() < 0.5,
        "SSBI MC {got:.2} dB vs closed form {want:.2} dB"
    );
}

#[test]
fn ssbi_spectrum_is_triangular() {
    // The SSBI PSD of a white Gaussian signal has a triangular shape peaking
    // at DC with single-sided width B_opt; fit R^2 over many seeds.
    use num_complex::Complex64;
    use oawm_core::frontend::{simulate_frontend, DriftParams, NoiseToggles};
    use oawm_core::signalkit::{gen_random_test_signal, RandomSignalSpec, SampledWaveform};

    let n = 1usize;
    let b_opt = 100e9;
    let (comb, mut fe, adc) = common::mc_system(n, b_opt);
    fe.cmrr_db = -30.0;
    let (p_s, _) = fe.input_powers();
    let drift = DriftParams::zero(n);
    let l = common::REC_LEN;
    let mut acc = vec![0.0f64; l];
    let seeds = 120u64;
    for seed in 0..seeds {
        let signal = gen_random_test_signal(
            &RandomSignalSpec { p_s, b_opt, f_ctr: 0.0, seed: 500 + seed },
            l as f64 / common::F_SIM,
            common::F_SIM,
        )
        .unwrap();
        let clean =
            simulate_frontend(&signal, &comb, &fe, &adc, &drift, NoiseToggles::all_off(), seed)
                .unwrap();
        let ssbi =
            simulate_frontend(&signal, &comb, &fe, &adc, &drift, NoiseToggles::only("ssbi"), seed)
                .unwrap();
        let diff: Vec<Complex64> = ssbi.i[0]
            .iter()
            .zip(&clean.i[0])
            .map(|(a, b)| Complex64::new(a - b, 0.0))
            .collect();
        let spec = SampledWaveform::new(diff, adc.sample_rate, 0.0).unwrap().dft();
        for (k, b) in spec.bins().iter().enumerate() {
            acc[k] += b.norm_sqr();
        }
    }
    // Fit the positive-frequency part (excluding DC) against (B_opt - f).
    // Average into coarse buckets to tame the per-bin estimator noise
    // before fitting the shape.
    let spec_df = common::F_SIM / l as f64;
    let half = l / 2;
    let n_bins = (adc.bandwidth / spec_df) as usize;
    let bucket = (n_bins / 32).max(1);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut k = 1usize;
    while k + bucket <= n_bins {
        let f_mid = (k as f64 + bucket as f64 / 2.0) * spec_df;
        let y: f64 = (k..k + bucket).map(|i| acc[half + i]).sum::<f64>()
            / (bucket as f64 * seeds as f64);
        xs.push(b_opt - f_mid);
        ys.push(y);
        k += bucket;
    }
    // Least-squares line through the origin-shifted model y = a * x.
    let a = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>()
        / xs.iter().map(|x| x * x).sum::<f64>();
    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - a * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    assert!(r2 > 0.95, "triangular fit R^2 = {r2:.3}");
}
