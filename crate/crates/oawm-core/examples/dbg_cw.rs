use oawm_core::calib::CalibrationRecord;
use oawm_core::frontend::*;
use oawm_core::metrics::{sinad_report, SinadContext};
use oawm_core::recon::{reconstruct, DriftSpec, ReconstructOptions};
use oawm_core::signalkit::*;

fn main() {
    let f_sim = 1e12;
    let l = 250_000usize;
    let df = f_sim / l as f64;
    let f_fsr = 40e9;
    let comb0 = CombLo::flat(21e9, f_fsr, 4, 0.0);
    let mut fe = FrontEndConfig::ideal(4, f_fsr, 192.38e12);
    fe.cmrr_db = -30.0;
    fe.osnr_sig_db = f64::INFINITY; // high-OCNR source, receiver noise only
    let (p_s, p_lo) = fe.input_powers();
    let mut comb = CombLo::flat(21e9, f_fsr, 4, p_lo);
    comb.tau_j_lo = 25e-15;
    comb.osnr_lo_db = 48.0;
    let mut adc = AdcConfig::new(21e9, f_sim);
    adc.tau_j_adc = 25e-15;
    let _ = comb0;

    let n_pos = (adc.bandwidth / df).floor() as usize;
    let grid: Vec<f64> = (0..=n_pos).map(|k| k as f64 * df).collect();
    let cal = CalibrationRecord::from_forward_model(&comb, &fe, &adc, &grid).unwrap();

    // Pilots: one per OR plus one near the upper band edge.
    let pilots = [41e9, 81e9, 121e9, 161e9];
    let drift = DriftParams { phi_f: vec![0.0, 0.8, -0.5, 1.9], tau_lo: 7.3e-12 };
    let dur = l as f64 / f_sim;
    for (label, toggles, known) in [
        ("all-on/est", NoiseToggles::all_on(), false),
    ] {
    for tone_ghz in [10.0f64, 35.0, 55.0, 83.0, 101.5, 118.0, 140.0, 152.0] {
        let f_tone = (tone_ghz * 1e9 / df).round() * df;
        let cw = gen_cw_tone(f_tone, p_s, 0.2, dur, f_sim).unwrap();
        let sig = add_pilot_tones(&cw, &pilots, -43.0).unwrap();
        let recs: Vec<_> = (0..4)
            .map(|r| simulate_frontend(&sig, &comb, &fe, &adc, &drift, toggles, 11 + 100 * r).unwrap())
            .collect();
        let rec = recs[0].clone();
        let est = oawm_core::recon::estimate_drift_averaged(
            &recs.iter().collect::<Vec<_>>(), &cal, &Default::default()).unwrap();
        let opts = ReconstructOptions {
            drift: if known { DriftSpec::Known(drift.clone()) } else { DriftSpec::Known(est) },
            output_rate: Some(f_sim),
            ..Default::default()
        };
        let out = match reconstruct(&rec, &cal, &opts) {
            Ok(o) => o,
            Err(e) => { println!("tone {tone_ghz} GHz: reconstruct failed: {e}"); continue; }
        };
        let ctx = SinadContext {
            signal_freqs: vec![f_tone],
            pilot_freqs: pilots.to_vec(),
            tone_freqs: (1..=4).map(|m| comb.tone_freq(m)).collect(),
            known_spur_freqs: vec![],
            rbw: df,
        };
        let rep = sinad_report(&out.stitched, &ctx).unwrap();
        let dphi: Vec<String> = (0..4).map(|nu| {
            let mut d = (out.drift.phi_f[nu] - out.drift.phi_f[0]) - (drift.phi_f[nu] - drift.phi_f[0]);
            d = d.rem_euclid(std::f64::consts::TAU);
            if d > std::f64::consts::PI { d -= std::f64::consts::TAU; }
            format!("{d:.4}")
        }).collect();
        let dtau = (out.drift.tau_lo - drift.tau_lo) * f_fsr;
        println!(
            "{label:>12} tone {tone_ghz:>6.1} GHz: SINAD {:>6.2} dB (noise {:>6.1}, slice-xt {:>6.1}) dphi={dphi:?} dtau={dtau:.5}",
            rep.sinad_db, rep.noise_db, rep.slice_crosstalk_db,
        );
    }
    }
}
