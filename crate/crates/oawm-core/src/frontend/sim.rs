//! Time-domain physics of the N-channel front end.
//!
//! Records are kept in power-normalized voltage units: the digitized value is
//! `sqrt(G R) * i(t)` with `i` the balanced photocurrent, so the mean square of
//! a record is the RF power at the ADC input in watts. Full-scale settings use
//! the same unit.

use super::config::{
    AdcConfig, ChannelRecords, CombLo, DriftParams, FrontEndConfig, FullScale, NoiseToggles,
    RecordMeta, B_REF_HZ,
};
use crate::error::{Error, Result};
use crate::rng::{self, stream};
use crate::signalkit::SampledWaveform;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::TAU;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Draw the white pulse-train timing offsets of the LO comb for one recording.
/// Every comb tone `mu` then acquires the phase `2 pi (f_mu - f_cntr) *
/// delta_tau[k]`; the band-center reference is unaffected.
pub fn apply_lo_jitter(tau_j_lo: f64, record_length: usize, seed: u64) -> Result<Vec<f64>> {
    if !(tau_j_lo >= 0.0) {
        return Err(Error::InvalidInput("negative LO jitter".into()));
    }
    let mut rng = rng::derive(seed, &[stream::LO_JITTER]);
    Ok((0..record_length)
        .map(|_| {
            let g: f64 = rng.sample(StandardNormal);
            g * tau_j_lo
        })
        .collect())
}

/// Brick-wall lowpass of a real sequence with rms renormalization.
fn lowpass_renormalize(x: &mut [f64], rate: f64, cutoff: f64, target_rms: f64) {
    let l = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    crate::signalkit::fft_in_place_forward(&mut buf);
    let df = rate / l as f64;
    for (k, v) in buf.iter_mut().enumerate() {
        let f = if k <= l / 2 { k as f64 * df } else { (k as f64 - l as f64) * df };
        if f.abs() > cutoff {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    crate::signalkit::fft_in_place_inverse(&mut buf);
    let inv_l = 1.0 / l as f64;
    for (o, v) in x.iter_mut().zip(&buf) {
        *o = v.re * inv_l;
    }
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / l as f64).sqrt();
    if rms > 0.0 {
        let g = target_rms / rms;
        for v in x.iter_mut() {
            *v *= g;
        }
    }
}

fn white_complex(rng: &mut impl Rng, len: usize, var_per_sample: f64) -> Vec<Complex64> {
    let sigma = (var_per_sample / 2.0).sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * sigma, im * sigma)
        })
        .collect()
}

/// One LO tone rotating frame: amplitude times exp(j(psi + w k)), generated by
/// complex recurrence with periodic renormalization.
struct ToneGen {
    z: Complex64,
    step: Complex64,
    amp: f64,
    k: usize,
}

impl ToneGen {
    fn new(amp: f64, psi: f64, w: f64) -> Self {
        Self { z: Complex64::from_polar(amp, psi), step: Complex64::from_polar(1.0, w), amp, k: 0 }
    }

    #[inline]
    fn next(&mut self) -> Complex64 {
        let v = self.z;
        self.z *= self.step;
        self.k += 1;
        if self.k % 1024 == 0 {
            let n = self.z.norm();
            if n > 0.0 {
                self.z *= self.amp / n;
            }
        }
        v
    }
}

/// Simulate the full front end: optical splitting, 90-degree hybrids, balanced
/// photodetection, RF amplification, and digitization.
///
/// The map from the optical signal to the records is linear whenever SSBI,
/// jitter, and quantization are disabled. Deterministic given `seed`.
pub fn simulate_frontend(
    signal: &SampledWaveform,
    comb: &CombLo,
    fe: &FrontEndConfig,
    adc: &AdcConfig,
    drift: &DriftParams,
    toggles: NoiseToggles,
    seed: u64,
) -> Result<ChannelRecords> {
    comb.validate()?;
    fe.validate()?;
    adc.validate()?;
    if drift.phi_f.len() != fe.n {
        return Err(Error::ConfigRejected(format!(
            "drift has {} phases for {} channels",
            drift.phi_f.len(),
            fe.n
        )));
    }
    if comb.m() >= 2 && adc.bandwidth < comb.f_fsr / 2.0 {
        return Err(Error::ConfigRejected(format!(
            "ADC bandwidth {} Hz below f_FSR/2 = {} Hz: overlap regions vanish",
            adc.bandwidth,
            comb.f_fsr / 2.0
        )));
    }
    let f_sim = signal.sample_rate();
    if adc.sample_rate > f_sim {
        return Err(Error::ConfigRejected("ADC rate above simulation rate".into()));
    }
    let decim_f = f_sim / adc.sample_rate;
    if (decim_f - decim_f.round()).abs() > 1e-9 {
        return Err(Error::ConfigRejected(format!(
            "simulation rate must be an integer multiple of the ADC rate (ratio {decim_f})"
        )));
    }
    let decim = decim_f.round() as usize;
    let l = signal.len();
    if l % decim != 0 {
        return Err(Error::ConfigRejected(format!(
            "record length {l} not divisible by decimation factor {decim}"
        )));
    }
    let max_tone = comb.tone_freq(comb.m()).abs().max(comb.tone_freq(1).abs());
    if max_tone + adc.bandwidth >= f_sim / 2.0 {
        return Err(Error::Aliasing { freq_hz: max_tone + adc.bandwidth, nyquist_hz: f_sim / 2.0 });
    }

    let n = fe.n;
    let m = comb.m();
    let dt = 1.0 / f_sim;

    // Shared optical impairments (identical in every split copy).
    // The white timing draw is confined to a fraction of the receiver band
    // (comb timing noise is slow on the scale of B); its total variance is
    // preserved so the in-band NSR matches the closed-form budget.
    let delta_tau = if toggles.lo_jitter && comb.tau_j_lo > 0.0 {
        let mut d = apply_lo_jitter(comb.tau_j_lo, l, seed)?;
        lowpass_renormalize(&mut d, f_sim, 0.2 * adc.bandwidth, comb.tau_j_lo);
        Some(d)
    } else {
        None
    };
    let sig_with_ase: Vec<Complex64> = {
        let mut s = signal.samples().to_vec();
        if toggles.ase && fe.osnr_sig_db.is_finite() {
            let p_s = signal.mean_power();
            let osnr = 10f64.powf(fe.osnr_sig_db / 10.0);
            // Single-polarization double-sided ASE PSD P_S / (2 OSNR B_ref),
            // flat over the simulated band.
            let var = p_s / (2.0 * osnr * B_REF_HZ) * f_sim;
            let mut r = rng::derive(seed, &[stream::ASE_SIGNAL]);
            for (x, v) in s.iter_mut().zip(white_complex(&mut r, l, var)) {
                *x += v;
            }
        }
        s
    };
    // LO ASE is delayed per channel; keep its spectrum for the delay phase.
    let lo_ase_spec: Option<Vec<Complex64>> = if toggles.ase && comb.osnr_lo_db.is_finite() {
        let osnr = 10f64.powf(comb.osnr_lo_db / 10.0);
        let var = comb.p_lo() / (2.0 * osnr * B_REF_HZ) * f_sim;
        let mut r = rng::derive(seed, &[stream::ASE_LO]);
        let mut buf = white_complex(&mut r, l, var);
        crate::signalkit::fft_in_place_forward(&mut buf);
        Some(buf)
    } else {
        None
    };

    let f_c = comb.center_freq();
    let gain = fe.rf_gain();
    let volts = (gain * fe.impedance).sqrt();
    let s_bar = fe.responsivity;
    let cmrr = if toggles.ssbi { fe.cmrr() } else { 0.0 };
    let (s1, s2) = (s_bar * (1.0 + cmrr), s_bar * (1.0 - cmrr));
    let sqrt_n = (n as f64).sqrt();

    let channels: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|nu| {
            let g_loss = 10f64.powf(-fe.path_loss_db[nu] / 20.0);
            let phi_f = drift.phi_f[nu];
            // Signal copy at the hybrid input.
            let cs = Complex64::from_polar(g_loss / sqrt_n, phi_f);
            let s_nu: Vec<Complex64> = sig_with_ase.iter().map(|x| x * cs).collect();

            // LO copy: delayed tones plus (optionally) delayed LO ASE.
            let tau = fe.delays[nu];
            let mut l_nu = vec![Complex64::new(0.0, 0.0); l];
            for mu in 1..=m {
                let f_mu = comb.tone_freq(mu);
                let c = comb.tone_amplitudes[mu - 1];
                let phi_lo = drift.phi_lo(comb.f_fsr, mu);
                let psi = c.arg() - phi_lo - TAU * (fe.f_ref + f_mu) * tau;
                let amp = c.norm() * g_loss / sqrt_n;
                let mut tone = ToneGen::new(amp, psi, TAU * f_mu * dt);
                match &delta_tau {
                    Some(dtau) => {
                        let w_jit = TAU * (f_mu - f_c);
                        for (x, &d) in l_nu.iter_mut().zip(dtau.iter()) {
                            *x += tone.next() * Complex64::from_polar(1.0, w_jit * d);
                        }
                    }
                    None => {
                        for x in l_nu.iter_mut() {
                            *x += tone.next();
                        }
                    }
                }
            }
            if let Some(ase) = &lo_ase_spec {
                let mut buf = ase.clone();
                let df = f_sim / l as f64;
                for (k, v) in buf.iter_mut().enumerate() {
                    let f = if k <= l / 2 { k as f64 * df } else { (k as f64 - l as f64) * df };
                    *v *= Complex64::from_polar(1.0, -TAU * (fe.f_ref + f) * tau);
                }
                crate::signalkit::fft_in_place_inverse(&mut buf);
                let cl = Complex64::new(g_loss / (sqrt_n * l as f64), 0.0);
                for (x, v) in l_nu.iter_mut().zip(buf) {
                    *x += v * cl;
                }
            }

            // Hybrid outputs and balanced detection.
            let theta = fe.iq_phase_deg[nu].to_radians();
            let rot = Complex64::from_polar(1.0, theta);
            let mut i_i = vec![0.0f64; l];
            let mut i_q = vec![0.0f64; l];
            let mut mean_d = [0.0f64; 4];
            for k in 0..l {
                let (s, lo) = (s_nu[k], l_nu[k]);
                let d1 = s1 * 0.25 * (s + lo).norm_sqr();
                let d2 = s2 * 0.25 * (s - lo).norm_sqr();
                let loq = lo * rot;
                let d3 = s1 * 0.25 * (s + loq).norm_sqr();
                let d4 = s2 * 0.25 * (s - loq).norm_sqr();
                i_i[k] = d1 - d2;
                i_q[k] = d3 - d4;
                mean_d[0] += d1;
                mean_d[1] += d2;
                mean_d[2] += d3;
                mean_d[3] += d4;
            }
            for v in mean_d.iter_mut() {
                *v /= l as f64;
            }

            if toggles.shot {
                // Gaussian shot model: per-diode variance 2 e i_mean B over the
                // full simulated band (white until the anti-alias filter).
                let var_i = ELEMENTARY_CHARGE * (mean_d[0] + mean_d[1]).max(0.0) * f_sim;
                let var_q = ELEMENTARY_CHARGE * (mean_d[2] + mean_d[3]).max(0.0) * f_sim;
                let mut ri = rng::derive(seed, &[stream::SHOT, nu as u64, 0]);
                let mut rq = rng::derive(seed, &[stream::SHOT, nu as u64, 1]);
                let (si, sq) = (var_i.sqrt(), var_q.sqrt());
                for v in i_i.iter_mut() {
                    let g: f64 = ri.sample(StandardNormal);
                    *v += g * si;
                }
                for v in i_q.iter_mut() {
                    let g: f64 = rq.sample(StandardNormal);
                    *v += g * sq;
                }
            }

            // Current to power-normalized voltage, plus amplifier thermal noise.
            let mut r_i: Vec<f64> = i_i.iter().map(|v| v * volts).collect();
            let mut r_q: Vec<f64> = i_q.iter().map(|v| v * volts).collect();
            if toggles.rf_amp {
                // Double-sided PSD G F k T: in-band power 2 G F k T B, which
                // makes the record SNDR land on the budget's closed form.
                let var = gain * fe.noise_factor() * BOLTZMANN * fe.temperature_k * f_sim;
                let sigma = var.sqrt();
                let mut ri = rng::derive(seed, &[stream::RF_AMP, nu as u64, 0]);
                let mut rq = rng::derive(seed, &[stream::RF_AMP, nu as u64, 1]);
                for v in r_i.iter_mut() {
                    let g: f64 = ri.sample(StandardNormal);
                    *v += g * sigma;
                }
                for v in r_q.iter_mut() {
                    let g: f64 = rq.sample(StandardNormal);
                    *v += g * sigma;
                }
            }

            let resp = fe.response.as_ref().map(|r| &r[nu]);
            let jit = if toggles.adc_jitter && adc.tau_j_adc > 0.0 { Some(adc.tau_j_adc) } else { None };
            condition_record(&mut r_i, f_sim, adc.bandwidth, adc.ac_coupled, resp, jit, seed, (nu, 0));
            condition_record(&mut r_q, f_sim, adc.bandwidth, adc.ac_coupled, resp, jit, seed, (nu, 1));

            // Decimate to the ADC rate (alias-free after the brick-wall filter).
            let r_i: Vec<f64> = r_i.into_iter().step_by(decim).collect();
            let r_q: Vec<f64> = r_q.into_iter().step_by(decim).collect();
            (r_i, r_q)
        })
        .collect();

    // Digitize. Sequential over records; each record derives its own streams.
    let mut i_out = Vec::with_capacity(n);
    let mut q_out = Vec::with_capacity(n);
    let mut clipped = Vec::new();
    let mut u_fs_applied = Vec::new();
    let mut spur_freqs = Vec::new();
    let mut digitize = |rec: Vec<f64>, idx: u64| -> Vec<f64> {
        let mut rec = rec;
        if toggles.adc_noise {
            let (out, u_fs, frac) = digitize_record(&mut rec, adc, seed, idx, &mut spur_freqs);
            clipped.push(frac);
            u_fs_applied.push(u_fs);
            out
        } else {
            rec
        }
    };
    for (nu, (ri, _)) in channels.iter().enumerate() {
        i_out.push(digitize(ri.clone(), nu as u64));
    }
    for (nu, (_, rq)) in channels.iter().enumerate() {
        q_out.push(digitize(rq.clone(), (n + nu) as u64));
    }
    spur_freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    spur_freqs.dedup();

    Ok(ChannelRecords {
        i: i_out,
        q: q_out,
        sample_rate: adc.sample_rate,
        meta: RecordMeta {
            seed,
            toggles,
            clipped_fraction: clipped,
            u_fs: u_fs_applied,
            spur_freqs,
        },
    })
}

/// Apply electrical response, brick-wall anti-alias filter, and sampling
/// jitter (second-order Taylor resampling) to one real record, in place.
fn condition_record(
    rec: &mut [f64],
    f_sim: f64,
    bandwidth: f64,
    ac_coupled: bool,
    resp: Option<&super::config::ResponseCurve>,
    jitter: Option<f64>,
    seed: u64,
    id: (usize, usize),
) {
    let l = rec.len();
    let df = f_sim / l as f64;
    let mut spec: Vec<Complex64> = rec.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    crate::signalkit::fft_in_place_forward(&mut spec);
    let freq = |k: usize| if k <= l / 2 { k as f64 * df } else { (k as f64 - l as f64) * df };
    for k in 0..l {
        let f = freq(k);
        if f.abs() > bandwidth * (1.0 + 1e-12) {
            spec[k] = Complex64::new(0.0, 0.0);
        } else if let Some(r) = resp {
            spec[k] *= r.eval(f);
        }
    }
    if ac_coupled {
        spec[0] = Complex64::new(0.0, 0.0);
    }
    let inv_l = 1.0 / l as f64;
    let mut base = spec.clone();
    crate::signalkit::fft_in_place_inverse(&mut base);
    match jitter {
        None => {
            for (o, v) in rec.iter_mut().zip(base) {
                *o = v.re * inv_l;
            }
        }
        Some(tau) => {
            let mut d1 = spec.clone();
            let mut d2 = spec;
            for k in 0..l {
                let jw = Complex64::new(0.0, TAU * freq(k));
                d1[k] *= jw;
                d2[k] *= jw * jw;
            }
            crate::signalkit::fft_in_place_inverse(&mut d1);
            crate::signalkit::fft_in_place_inverse(&mut d2);
            let mut r = rng::derive(seed, &[stream::ADC_JITTER, id.0 as u64, id.1 as u64]);
            for k in 0..l {
                let g: f64 = r.sample(StandardNormal);
                let d = g * tau;
                rec[k] = (base[k].re + d * d1[k].re + 0.5 * d * d * d2[k].re) * inv_l;
            }
        }
    }
}

/// Acquisition noise, clock spur, and mid-tread quantization for one record
/// at the ADC rate. Returns (digitized record, applied U_FS, clipped fraction).
fn digitize_record(
    rec: &mut Vec<f64>,
    adc: &AdcConfig,
    seed: u64,
    record_idx: u64,
    spur_freqs: &mut Vec<f64>,
) -> (Vec<f64>, f64, f64) {
    let l = rec.len();
    let u_fs = match adc.full_scale {
        FullScale::Fixed { u_fs } => u_fs,
        FullScale::Auto { fill } => {
            let peak = rec.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            if peak > 0.0 {
                2.0 * peak / fill
            } else {
                1.0
            }
        }
        FullScale::AutoSigma { k_sigma } => {
            let rms = (rec.iter().map(|v| v * v).sum::<f64>() / rec.len() as f64).sqrt();
            if rms > 0.0 {
                2.0 * k_sigma * rms
            } else {
                1.0
            }
        }
    };

    if adc.clock_spur_dbc.is_finite() {
        let p_sig = rec.iter().map(|v| v * v).sum::<f64>() / l as f64;
        let amp = (2.0 * p_sig * 10f64.powf(adc.clock_spur_dbc / 10.0)).sqrt();
        let f_spur = adc.spur_freq();
        let w = TAU * f_spur / adc.sample_rate;
        let phase = record_idx as f64 * 2.399_963; // decorrelate records
        for (k, v) in rec.iter_mut().enumerate() {
            *v += amp * (w * k as f64 + phase).cos();
        }
        spur_freqs.push(f_spur);
    }

    // Additive acquisition noise confined to [0, B], sized together with the
    // quantization noise so a full-scale sinusoid measures SINAD = C1/B.
    let delta = u_fs / 2f64.powi(adc.n_bits as i32);
    let target = u_fs * u_fs / 8.0 * adc.bandwidth / adc.c1;
    let var_add = (target - delta * delta / 12.0).max(0.0);
    if var_add > 0.0 {
        let mut r = rng::derive(seed, &[stream::ADC_NOISE, record_idx]);
        let nyq = adc.sample_rate / 2.0;
        if adc.bandwidth >= nyq * (1.0 - 1e-12) {
            let sigma = var_add.sqrt();
            for v in rec.iter_mut() {
                let g: f64 = r.sample(StandardNormal);
                *v += g * sigma;
            }
        } else {
            let sigma = (var_add * nyq / adc.bandwidth).sqrt();
            let mut noise: Vec<Complex64> = (0..l)
                .map(|_| {
                    let g: f64 = r.sample(StandardNormal);
                    Complex64::new(g * sigma, 0.0)
                })
                .collect();
            crate::signalkit::fft_in_place_forward(&mut noise);
            let df = adc.sample_rate / l as f64;
            for (k, v) in noise.iter_mut().enumerate() {
                let f = if k <= l / 2 { k as f64 * df } else { (k as f64 - l as f64) * df };
                if f.abs() > adc.bandwidth * (1.0 + 1e-12) {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
            crate::signalkit::fft_in_place_inverse(&mut noise);
            let inv_l = 1.0 / l as f64;
            for (v, nz) in rec.iter_mut().zip(noise) {
                *v += nz.re * inv_l;
            }
        }
    }

    // Mid-tread quantizer with 2^n codes on [-2^(n-1), 2^(n-1)-1] * delta.
    let code_min = -(2f64.powi(adc.n_bits as i32 - 1));
    let code_max = 2f64.powi(adc.n_bits as i32 - 1) - 1.0;
    let mut clipped = 0usize;
    let out: Vec<f64> = rec
        .iter()
        .map(|&v| {
            let code = (v / delta).round();
            if code < code_min || code > code_max {
                clipped += 1;
            }
            code.clamp(code_min, code_max) * delta
        })
        .collect();
    (out, u_fs, clipped as f64 / l as f64)
}
