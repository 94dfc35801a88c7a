//! Closed-form SNDR contributions of every noise and distortion source, and
//! their reciprocal-sum combination.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// SI constants entering the budget.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Elementary charge, C.
    pub q: f64,
    /// Boltzmann constant, J/K.
    pub k: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { q: 1.602_176_634e-19, k: 1.380_649e-23 }
    }
}

/// Numeric cap for unbounded contributions, dB.
pub const CAP_DB: f64 = 200.0;

fn db(lin: f64) -> f64 {
    if lin.is_finite() {
        (10.0 * lin.log10()).min(CAP_DB)
    } else {
        CAP_DB
    }
}

/// All inputs of the scalability model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BudgetParams {
    /// Channel count (= comb line count).
    pub n: usize,
    /// Optical acquisition bandwidth, Hz; the per-channel ADC bandwidth
    /// follows as B = B_opt / (2N).
    pub b_opt: f64,
    /// Responsivity of a single photodetector, A/W.
    pub responsivity: f64,
    /// Common-mode rejection ratio, 20*log10.
    pub cmrr_db: f64,
    /// LO-to-signal power ratio, 10*log10.
    pub lospr_db: f64,
    /// RF amplifier noise figure, dB.
    pub nf_db: f64,
    /// Input impedance, ohm.
    pub impedance: f64,
    /// Total optical power per photodetector, W.
    pub p_pd: f64,
    /// Ambient temperature, K.
    pub temperature_k: f64,
    /// ADC thermal-noise SINAD constant, Hz.
    pub c1: f64,
    /// Peak-to-average power ratio of the (clipped) test signal.
    pub papr: f64,
    /// RMS jitter of the ADC array, s.
    pub tau_j_adc: f64,
    /// RMS jitter of the LO comb, s.
    pub tau_j_lo: f64,
    /// OSNR of the signal path in B_ref (both polarizations), dB.
    pub osnr_sig_db: f64,
    /// OSNR of the LO path in B_ref, dB.
    pub osnr_lo_db: f64,
    /// OSNR reference bandwidth, Hz.
    pub b_ref: f64,
    /// Calibration-crosstalk SNDR contribution, dB.
    pub sndr_cal_db: f64,
    /// Largest available per-channel ADC bandwidth, Hz.
    pub adc_max_bandwidth: f64,
    pub constants: PhysicalConstants,
}

impl Default for BudgetParams {
    /// Table-like defaults: R = 50 ohm, NF = 10 dB, S = 0.8 A/W, P_PD =
    /// 0 dBm, CMRR = -30 dB, LOSPR = 10 dB, 25 fs jitters, C1 = 150 THz,
    /// PAPR = 16, OSNR 40/48 dB, calibration floor 40 dB, 100 GHz ADCs.
    fn default() -> Self {
        Self {
            n: 4,
            b_opt: 200e9,
            responsivity: 0.8,
            cmrr_db: -30.0,
            lospr_db: 10.0,
            nf_db: 10.0,
            impedance: 50.0,
            p_pd: 1e-3,
            temperature_k: 300.0,
            c1: 150e12,
            papr: 16.0,
            tau_j_adc: 25e-15,
            tau_j_lo: 25e-15,
            osnr_sig_db: 40.0,
            osnr_lo_db: 48.0,
            b_ref: 12.5e9,
            sndr_cal_db: 40.0,
            adc_max_bandwidth: 100e9,
            constants: PhysicalConstants::default(),
        }
    }
}

impl BudgetParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || !(self.b_opt > 0.0) {
            return Err(Error::InvalidInput("need N >= 1 and B_opt > 0".into()));
        }
        if !(self.papr > 0.0) || !(self.c1 > 0.0) {
            return Err(Error::InvalidInput("PAPR and C1 must be positive".into()));
        }
        if self.tau_j_adc < 0.0 || self.tau_j_lo < 0.0 {
            return Err(Error::InvalidInput("negative jitter".into()));
        }
        Ok(())
    }

    /// Per-channel receiver bandwidth B = B_opt / (2N).
    pub fn channel_bandwidth(&self) -> f64 {
        self.b_opt / (2.0 * self.n as f64)
    }

    pub fn exceeds_adc_cap(&self) -> bool {
        self.channel_bandwidth() > self.adc_max_bandwidth * (1.0 + 1e-12)
    }

    fn lospr(&self) -> f64 {
        10f64.powf(self.lospr_db / 10.0)
    }

    fn lospr_factor(&self) -> f64 {
        let l = self.lospr();
        l / ((1.0 + l) * (1.0 + l))
    }
}

/// Thermal-noise-limited SINAD of an ADC: C1 / B (full-scale sinusoid).
pub fn adc_sinad_thermal(bandwidth: f64, c1: f64) -> f64 {
    db(c1 / bandwidth)
}

/// Jitter-limited SINAD of a sinusoid at `f_sig`: 1 / (2 pi f_sig tau_j)^2.
pub fn adc_sinad_jitter(f_sig: f64, tau_j: f64) -> f64 {
    let x = TAU * f_sig * tau_j;
    if x > 0.0 {
        db(1.0 / (x * x))
    } else {
        CAP_DB
    }
}

/// Shot-noise contribution: [LOSPR/(1+LOSPR)^2] * 4 S P_PD / (q B_opt).
/// Independent of the channel count.
pub fn sndr_shot(p: &BudgetParams) -> f64 {
    db(p.lospr_factor() * 4.0 * p.responsivity * p.p_pd / (p.constants.q * p.b_opt))
}

/// RF-amplifier thermal-noise contribution:
/// [LOSPR/(1+LOSPR)^2] * 8 R S^2 P_PD^2 / (F k T B_opt).
pub fn sndr_rf_amp(p: &BudgetParams) -> f64 {
    let f = 10f64.powf(p.nf_db / 10.0);
    db(p.lospr_factor() * 8.0 * p.impedance * p.responsivity * p.responsivity * p.p_pd * p.p_pd
        / (f * p.constants.k * p.temperature_k * p.b_opt))
}

/// ADC acquisition-noise contribution for a clipped Gaussian test signal:
/// C2 / B with C2 = 2 C1 / PAPR and B = B_opt / (2N).
pub fn sndr_adc(p: &BudgetParams) -> f64 {
    let c2 = 2.0 * p.c1 / p.papr;
    db(c2 / p.channel_bandwidth())
}

/// Combined ADC + LO-comb jitter contribution for a spectrally white test
/// signal: 12 N^2 / ((2 pi B_opt)^2 [tau_ADC^2 + tau_LO^2 (N^2 - 1)]).
pub fn sndr_jitter(p: &BudgetParams) -> f64 {
    let n2 = (p.n * p.n) as f64;
    let denom = (TAU * p.b_opt).powi(2)
        * (p.tau_j_adc * p.tau_j_adc + p.tau_j_lo * p.tau_j_lo * (n2 - 1.0));
    if denom > 0.0 {
        db(12.0 * n2 / denom)
    } else {
        CAP_DB
    }
}

/// Single-path ASE contribution: 2 * OSNR * B_ref / B_opt.
pub fn sndr_ase_path(osnr_db: f64, b_ref: f64, b_opt: f64) -> f64 {
    if !osnr_db.is_finite() {
        return CAP_DB;
    }
    db(2.0 * 10f64.powf(osnr_db / 10.0) * b_ref / b_opt)
}

/// Total ASE contribution: reciprocal sum of the signal- and LO-path parts.
pub fn sndr_ase(p: &BudgetParams) -> f64 {
    combine_db(&[
        sndr_ase_path(p.osnr_sig_db, p.b_ref, p.b_opt),
        sndr_ase_path(p.osnr_lo_db, p.b_ref, p.b_opt),
    ])
}

/// SSBI contribution: LOSPR * (1/CMRR)^2 * 8N / (4N - 1).
pub fn sndr_ssbi(p: &BudgetParams) -> f64 {
    if p.cmrr_db == f64::NEG_INFINITY {
        return CAP_DB;
    }
    let cmrr = 10f64.powf(p.cmrr_db / 20.0);
    let n = p.n as f64;
    db(10f64.powf(p.lospr_db / 10.0) / (cmrr * cmrr) * 8.0 * n / (4.0 * n - 1.0))
}

/// Calibration-crosstalk contribution (flat, see the Monte-Carlo study).
pub fn sndr_calibration(p: &BudgetParams) -> f64 {
    p.sndr_cal_db.min(CAP_DB)
}

/// Reciprocal-sum combination in the linear domain; capped entries drop out.
pub fn combine_db(contributions_db: &[f64]) -> f64 {
    let sum: f64 = contributions_db
        .iter()
        .filter(|&&c| c < CAP_DB)
        .map(|&c| 10f64.powf(-c / 10.0))
        .sum();
    if sum > 0.0 {
        (-10.0 * sum.log10()).min(CAP_DB)
    } else {
        CAP_DB
    }
}

/// Per-source breakdown for one operating point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseBudget {
    pub shot_db: f64,
    pub rf_amp_db: f64,
    pub adc_db: f64,
    pub jitter_db: f64,
    pub ase_db: f64,
    pub ssbi_db: f64,
    pub calibration_db: f64,
    pub total_sndr_db: f64,
}

impl NoiseBudget {
    pub fn contributions(&self) -> [(&'static str, f64); 7] {
        [
            ("shot", self.shot_db),
            ("rf_amp", self.rf_amp_db),
            ("adc", self.adc_db),
            ("jitter", self.jitter_db),
            ("ase", self.ase_db),
            ("ssbi", self.ssbi_db),
            ("calibration", self.calibration_db),
        ]
    }
}

/// Evaluate the full budget at one operating point.
pub fn noise_budget(p: &BudgetParams) -> Result<NoiseBudget> {
    p.validate()?;
    let shot_db = sndr_shot(p);
    let rf_amp_db = sndr_rf_amp(p);
    let adc_db = sndr_adc(p);
    let jitter_db = sndr_jitter(p);
    let ase_db = sndr_ase(p);
    let ssbi_db = sndr_ssbi(p);
    let calibration_db = sndr_calibration(p);
    let total_sndr_db = combine_db(&[
        shot_db,
        rf_amp_db,
        adc_db,
        jitter_db,
        ase_db,
        ssbi_db,
        calibration_db,
    ]);
    Ok(NoiseBudget {
        shot_db,
        rf_amp_db,
        adc_db,
        jitter_db,
        ase_db,
        ssbi_db,
        calibration_db,
        total_sndr_db,
    })
}
