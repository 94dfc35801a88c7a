//! Calibration record: the time-invariant transfer functions on a frequency
//! grid, self-describing enough to drive reconstruction.

use crate::error::{Error, Result};
use crate::frontend::{AdcConfig, CombLo, DriftParams, FrontEndConfig};
use crate::rng::{self, stream};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Calibrated transfer functions H_I, H_Q for every (channel, tone) pair,
/// sampled on `f_grid` in `[0, B]`; the `*_neg` matrices hold the values at
/// the mirrored frequency `-f` (not the conjugate).
#[derive(Debug, Clone)]
pub struct CalibrationRecord {
    pub f_grid: Vec<f64>,
    pub h_i_pos: Vec<DMatrix<Complex64>>,
    pub h_q_pos: Vec<DMatrix<Complex64>>,
    pub h_i_neg: Vec<DMatrix<Complex64>>,
    pub h_q_neg: Vec<DMatrix<Complex64>>,
    /// Estimated relative error of the entries, dB (10 log10 power ratio).
    pub uncertainty_db: f64,
    pub n: usize,
    pub m: usize,
    /// Comb geometry the calibration belongs to.
    pub f_1: f64,
    pub f_fsr: f64,
    /// Receiver bandwidth the grid spans.
    pub bandwidth: f64,
}

impl CalibrationRecord {
    /// Ground-truth calibration sampled from the analytic forward model
    /// (zero drift).
    pub fn from_forward_model(
        comb: &CombLo,
        fe: &FrontEndConfig,
        adc: &AdcConfig,
        f_grid: &[f64],
    ) -> Result<Self> {
        let zero = DriftParams::zero(fe.n);
        let (n, m) = (fe.n, comb.m());
        let mut rec = Self {
            f_grid: f_grid.to_vec(),
            h_i_pos: Vec::with_capacity(f_grid.len()),
            h_q_pos: Vec::with_capacity(f_grid.len()),
            h_i_neg: Vec::with_capacity(f_grid.len()),
            h_q_neg: Vec::with_capacity(f_grid.len()),
            uncertainty_db: f64::NEG_INFINITY,
            n,
            m,
            f_1: comb.tone_freq(1),
            f_fsr: comb.f_fsr,
            bandwidth: adc.bandwidth,
        };
        for &f in f_grid {
            if !(0.0..=adc.bandwidth * (1.0 + 1e-12)).contains(&f) {
                return Err(Error::InvalidInput(format!("grid point {f} outside [0, B]")));
            }
            let mut ip = DMatrix::zeros(n, m);
            let mut qp = DMatrix::zeros(n, m);
            let mut ineg = DMatrix::zeros(n, m);
            let mut qneg = DMatrix::zeros(n, m);
            for nu in 0..n {
                let rot = Complex64::from_polar(1.0, -fe.iq_phase_deg[nu].to_radians());
                for mu in 1..=m {
                    let hp = crate::frontend::h_i_entry_pub(comb, fe, adc, &zero, f, nu, mu);
                    let hn = crate::frontend::h_i_entry_pub(comb, fe, adc, &zero, -f, nu, mu);
                    ip[(nu, mu - 1)] = hp;
                    qp[(nu, mu - 1)] = hp * rot;
                    ineg[(nu, mu - 1)] = hn;
                    qneg[(nu, mu - 1)] = hn * rot;
                }
            }
            rec.h_i_pos.push(ip);
            rec.h_q_pos.push(qp);
            rec.h_i_neg.push(ineg);
            rec.h_q_neg.push(qneg);
        }
        Ok(rec)
    }

    /// Comb tone frequency, 1-based.
    pub fn tone_freq(&self, mu: usize) -> f64 {
        self.f_1 + (mu as f64 - 1.0) * self.f_fsr
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.f_grid.len();
        if g == 0 {
            return Err(Error::InvalidInput("empty calibration grid".into()));
        }
        if !self.f_grid.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::GridMismatch("calibration grid must strictly increase".into()));
        }
        for arr in [&self.h_i_pos, &self.h_q_pos, &self.h_i_neg, &self.h_q_neg] {
            if arr.len() != g {
                return Err(Error::GridMismatch("matrix count != grid length".into()));
            }
            for mat in arr.iter() {
                if mat.nrows() != self.n || mat.ncols() != self.m {
                    return Err(Error::GridMismatch("calibration matrix shape".into()));
                }
                if mat.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return Err(Error::InvalidInput("non-finite calibration entry".into()));
                }
            }
        }
        Ok(())
    }

    /// Add white complex Gaussian perturbations of the given relative power
    /// (dB) to every entry, modeling residual calibration uncertainty.
    pub fn perturb(&self, rel_db: f64, seed: u64) -> CalibrationRecord {
        let eps = 10f64.powf(rel_db / 20.0);
        let mut rng = rng::derive(seed, &[stream::CAL_PERTURB]);
        let mut out = self.clone();
        for arr in [&mut out.h_i_pos, &mut out.h_q_pos, &mut out.h_i_neg, &mut out.h_q_neg] {
            for mat in arr.iter_mut() {
                for v in mat.iter_mut() {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *v += Complex64::new(re, im) * (v.norm() * eps / 2f64.sqrt());
                }
            }
        }
        out.uncertainty_db = rel_db;
        out
    }
}

#[derive(Serialize, Deserialize)]
struct CalHeader {
    version: u32,
    n: usize,
    m: usize,
    f_1: f64,
    f_fsr: f64,
    bandwidth: f64,
    /// None encodes "exact" (negative infinity can't be represented in JSON).
    uncertainty_db: Option<f64>,
    grid_len: usize,
}

/// Persist as a JSON header line followed by the raw little-endian `f64`
/// payload: grid, then per grid point the four N x M matrices (row-major,
/// re/im interleaved) in the order I+, Q+, I-, Q-.
pub fn write_calibration(w: &mut impl Write, cal: &CalibrationRecord) -> Result<()> {
    cal.validate()?;
    let header = CalHeader {
        version: 1,
        n: cal.n,
        m: cal.m,
        f_1: cal.f_1,
        f_fsr: cal.f_fsr,
        bandwidth: cal.bandwidth,
        uncertainty_db: cal.uncertainty_db.is_finite().then_some(cal.uncertainty_db),
        grid_len: cal.f_grid.len(),
    };
    let mut hdr = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    hdr.push(b'\n');
    w.write_all(&(hdr.len() as u64).to_le_bytes())?;
    w.write_all(&hdr)?;
    let mut buf = Vec::new();
    for &f in &cal.f_grid {
        buf.extend_from_slice(&f.to_le_bytes());
    }
    for gi in 0..cal.f_grid.len() {
        for arr in [&cal.h_i_pos, &cal.h_q_pos, &cal.h_i_neg, &cal.h_q_neg] {
            for nu in 0..cal.n {
                for mu in 0..cal.m {
                    let v = arr[gi][(nu, mu)];
                    buf.extend_from_slice(&v.re.to_le_bytes());
                    buf.extend_from_slice(&v.im.to_le_bytes());
                }
            }
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_calibration(r: &mut impl Read) -> Result<CalibrationRecord> {
    let mut len8 = [0u8; 8];
    r.read_exact(&mut len8)?;
    let hlen = u64::from_le_bytes(len8) as usize;
    let mut hdr = vec![0u8; hlen];
    r.read_exact(&mut hdr)?;
    let h: CalHeader =
        serde_json::from_slice(&hdr).map_err(|e| Error::Format(format!("calibration header: {e}")))?;
    if h.version != 1 {
        return Err(Error::Format(format!("unsupported calibration version {}", h.version)));
    }
    let mut f64buf = [0u8; 8];
    let mut read_f64 = |r: &mut dyn Read| -> Result<f64> {
        r.read_exact(&mut f64buf)?;
        Ok(f64::from_le_bytes(f64buf))
    };
    let mut f_grid = Vec::with_capacity(h.grid_len);
    for _ in 0..h.grid_len {
        f_grid.push(read_f64(r)?);
    }
    let mut cal = CalibrationRecord {
        f_grid,
        h_i_pos: Vec::with_capacity(h.grid_len),
        h_q_pos: Vec::with_capacity(h.grid_len),
        h_i_neg: Vec::with_capacity(h.grid_len),
        h_q_neg: Vec::with_capacity(h.grid_len),
        uncertainty_db: h.uncertainty_db.unwrap_or(f64::NEG_INFINITY),
        n: h.n,
        m: h.m,
        f_1: h.f_1,
        f_fsr: h.f_fsr,
        bandwidth: h.bandwidth,
    };
    for _ in 0..h.grid_len {
        let mut mats = Vec::with_capacity(4);
        for _ in 0..4 {
            let mut mat = DMatrix::zeros(h.n, h.m);
            for nu in 0..h.n {
                for mu in 0..h.m {
                    let re = read_f64(r)?;
                    let im = read_f64(r)?;
                    mat[(nu, mu)] = Complex64::new(re, im);
                }
            }
            mats.push(mat);
        }
        cal.h_q_neg.push(mats.pop().unwrap());
        cal.h_i_neg.push(mats.pop().unwrap());
        cal.h_q_pos.push(mats.pop().unwrap());
        cal.h_i_pos.push(mats.pop().unwrap());
    }
    cal.validate()?;
    Ok(cal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::FrontEndConfig;

    #[test]
    fn calibration_file_roundtrip() {
        let comb = CombLo::flat(5e9, 8e9, 2, 10e-3);
        let fe = FrontEndConfig::ideal(2, 8e9, 193e12);
        let adc = AdcConfig::new(5e9, 64e9);
        let cal =
            CalibrationRecord::from_forward_model(&comb, &fe, &adc, &[0.0, 1e9, 2e9, 5e9]).unwrap();
        let mut buf = Vec::new();
        write_calibration(&mut buf, &cal).unwrap();
        let back = read_calibration(&mut buf.as_slice()).unwrap();
        assert_eq!(cal.f_grid, back.f_grid);
        for gi in 0..cal.f_grid.len() {
            assert_eq!(cal.h_i_pos[gi], back.h_i_pos[gi]);
            assert_eq!(cal.h_q_neg[gi], back.h_q_neg[gi]);
        }
    }

    #[test]
    fn perturbation_level_is_calibrated() {
        let comb = CombLo::flat(5e9, 8e9, 4, 10e-3);
        let fe = FrontEndConfig::ideal(4, 8e9, 193e12);
        let adc = AdcConfig::new(5e9, 64e9);
        let grid: Vec<f64> = (0..200).map(|k| k as f64 * 25e6).collect();
        let cal = CalibrationRecord::from_forward_model(&comb, &fe, &adc, &grid).unwrap();
        let pert = cal.perturb(-40.0, 3);
        let mut num = 0.0;
        let mut den = 0.0;
        for gi in 0..grid.len() {
            for (a, b) in cal.h_i_pos[gi].iter().zip(pert.h_i_pos[gi].iter()) {
                num += (a - b).norm_sqr();
                den += a.norm_sqr();
            }
        }
        let level_db = 10.0 * (num / den).log10();
        assert!((level_db - (-40.0)).abs() < 0.5, "perturbation level {level_db} dB");
    }
}
