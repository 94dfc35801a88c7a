//! Estimation of the slowly varying drift state from overlap-region
//! redundancy.
//!
//! Spectral components inside an overlap region (OR) are down-converted by two
//! adjacent comb tones, so after a tentative reconstruction the two copies
//! must agree. The estimator minimizes the squared disagreement over all OR
//! bins. The pulse-train position tau_LO enters every OR pair through the
//! single phasor exp(-j 2 pi f_FSR tau_LO) and is profiled out in closed form;
//! the path phases phi_F (gauge phi_F_1 = 0) are found by alternating 1-D
//! scans with golden-section refinement.

use super::matrix::build_matrix;
use super::reconstruct::record_spectra;
use crate::calib::CalibrationRecord;
use crate::error::{Error, Result};
use crate::frontend::{ChannelRecords, DriftParams};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy)]
pub struct DriftEstimateOptions {
    /// Coarse points for each 1-D phase scan.
    pub coarse_phase_points: usize,
    /// Maximum alternation sweeps.
    pub max_sweeps: usize,
    /// Convergence threshold on parameter movement, radians.
    pub tol: f64,
}

impl Default for DriftEstimateOptions {
    fn default() -> Self {
        Self { coarse_phase_points: 24, max_sweeps: 40, tol: 1e-10 }
    }
}

struct OrProblem {
    /// Zero-drift system matrices on the needed solve bins.
    mats: Vec<DMatrix<Complex64>>,
    /// Measured record vectors on the same bins.
    b: Vec<DVector<Complex64>>,
    /// OR pairs: (slice index mu0, bin index of copy A, bin index of copy B)
    /// into `mats`/`b`.
    pairs: Vec<(usize, usize, usize)>,
    /// Per-pair weights (energy-matched so sparse pilots dominate over empty
    /// noise-only bins).
    weights: Vec<f64>,
    n: usize,
    m: usize,
}

impl OrProblem {
    fn solve_all(&self, phi: &[f64]) -> Vec<DVector<Complex64>> {
        let (n, m) = (self.n, self.m);
        self.mats
            .iter()
            .zip(&self.b)
            .map(|(g0, b)| {
                let mut g = g0.clone();
                for nu in 0..n {
                    let rot = Complex64::from_polar(1.0, phi[nu]);
                    for col in 0..m {
                        g[(nu, col)] *= rot;
                        g[(n + nu, col)] *= rot;
                        g[(nu, m + col)] *= rot.conj();
                        g[(n + nu, m + col)] *= rot.conj();
                    }
                }
                g.lu().solve(b).unwrap_or_else(|| DVector::zeros(2 * m))
            })
            .collect()
    }

    /// Fix the pair weights to the redundant energy seen with the current
    /// phase guess, so noise-only overlap bins stop diluting the cost.
    fn reweight(&mut self, phi: &[f64]) {
        let m = self.m;
        let solved = self.solve_all(phi);
        let mut total = 0.0;
        for (w, &(mu0, ia, ib)) in self.weights.iter_mut().zip(&self.pairs) {
            let a = solved[ia][mu0];
            let bv = solved[ib][m + mu0 + 1].conj();
            *w = a.norm_sqr() + bv.norm_sqr();
            total += *w;
        }
        if total > 0.0 {
            for w in self.weights.iter_mut() {
                *w /= total;
            }
        }
    }

    /// Cost with tau_LO profiled out: J*(phi) = P - 2 |rho|, where rho is the
    /// weighted correlation of the two copies over all OR bins. Also returns
    /// the optimal inter-slice phase arg(rho) = 2 pi f_FSR tau_LO.
    fn eval(&self, phi: &[f64]) -> (f64, f64) {
        let m = self.m;
        let solved = self.solve_all(phi);
        let mut p = 0.0;
        let mut rho = Complex64::default();
        for (&w, &(mu0, ia, ib)) in self.weights.iter().zip(&self.pairs) {
            let a = solved[ia][mu0];
            let bv = solved[ib][m + mu0 + 1].conj();
            p += w * (a.norm_sqr() + bv.norm_sqr());
            rho += w * a.conj() * bv;
        }
        (p - 2.0 * rho.norm(), rho.arg())
    }

    fn energy(&self) -> f64 {
        self.b.iter().map(|b| b.iter().map(|v| v.norm_sqr()).sum::<f64>()).sum()
    }
}

fn golden_min(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    const PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - PHI * (hi - lo);
    let mut x2 = lo + PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..48 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + PHI * (hi - lo);
            f2 = f(x2);
        }
        if (hi - lo).abs() < 1e-13 {
            break;
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Estimate (phi_F_2..N, tau_LO) in the phi_F_1 = 0 gauge by minimizing the
/// overlap-region disagreement.
pub fn estimate_drift(
    records: &ChannelRecords,
    cal: &CalibrationRecord,
    opts: &DriftEstimateOptions,
) -> Result<DriftParams> {
    let (n, m) = (cal.n, cal.m);
    if records.n() != n {
        return Err(Error::GridMismatch("record channel count != calibration".into()));
    }
    if m < 2 {
        // Single slice: nothing to disentangle.
        return Ok(DriftParams::zero(n));
    }
    let b_rf = cal.bandwidth;
    if b_rf <= cal.f_fsr / 2.0 {
        return Err(Error::NoOverlapEnergy(format!(
            "B = {} Hz <= f_FSR/2 = {} Hz: no overlap regions exist",
            b_rf,
            cal.f_fsr / 2.0
        )));
    }
    let spectra = record_spectra(records, b_rf)?;
    let df = spectra.df;
    let fsr_bins_f = cal.f_fsr / df;
    if (fsr_bins_f - fsr_bins_f.round()).abs() > 1e-6 {
        return Err(Error::GridMismatch(format!(
            "f_FSR = {} Hz is not an integer multiple of the bin spacing {} Hz",
            cal.f_fsr, df
        )));
    }
    let fsr_bins = fsr_bins_f.round() as usize;

    // Solve bins k with f = k df in [f_FSR - B, B]; the partner copy of the
    // same optical component sits at bin fsr_bins - k of the adjacent slice.
    let k_lo = ((cal.f_fsr - b_rf) / df).ceil() as usize;
    let k_hi = spectra.n_pos;
    if k_lo > k_hi {
        return Err(Error::NoOverlapEnergy("overlap region narrower than one bin".into()));
    }
    let needed: Vec<usize> = (k_lo..=k_hi).collect();
    let f_needed: Vec<f64> = needed.iter().map(|&k| k as f64 * df).collect();
    let tms0 = build_matrix(cal, &DriftParams::zero(n), &f_needed)?;

    let pos_of = |k: usize| needed.binary_search(&k).ok();
    let mut pairs = Vec::new();
    for mu0 in 0..m - 1 {
        for (ia, &ka) in needed.iter().enumerate() {
            if let Some(kb) = fsr_bins.checked_sub(ka) {
                if let Some(ib) = pos_of(kb) {
                    pairs.push((mu0, ia, ib));
                }
            }
        }
    }
    let n_pairs = pairs.len();
    let mut problem = OrProblem {
        mats: tms0.matrices,
        b: needed.iter().map(|&k| spectra.b[k].clone()).collect(),
        pairs,
        weights: vec![1.0; n_pairs],
        n,
        m,
    };
    if problem.pairs.is_empty() {
        return Err(Error::NoOverlapEnergy("no usable overlap bins on the grid".into()));
    }

    // Redundancy requires energy in the ORs well above numerical zero.
    let total_power: f64 =
        spectra.b.iter().map(|b| b.iter().map(|v| v.norm_sqr()).sum::<f64>()).sum();
    let avg_bin = total_power / spectra.b.len().max(1) as f64;
    if !(problem.energy() > 1e-9 * avg_bin * problem.b.len() as f64) {
        return Err(Error::NoOverlapEnergy(
            "no redundant energy in the overlap regions; add pilot tones".into(),
        ));
    }

    // For near-circulant systems (flat responses, evenly distributed delays)
    // the cost has a family of M near-degenerate minima corresponding to a
    // cyclic relabeling of the slices, separated only by band-edge energy.
    // Start one descent from each family member and keep the best.
    let descend = |problem: &OrProblem, mut phi: Vec<f64>| -> (f64, Vec<f64>, f64) {
        let mut last_move = f64::INFINITY;
        for sweep in 0..opts.max_sweeps {
            last_move = 0.0;
            for nu in 1..n {
                let old = phi[nu];
                let mut probe = phi.clone();
                // Coarse scan (the 1-D cost can be multimodal), then refine.
                let pts = opts.coarse_phase_points;
                let mut best = (f64::INFINITY, old);
                for i in 0..pts {
                    let x = i as f64 / pts as f64 * TAU;
                    probe[nu] = x;
                    let (j, _) = problem.eval(&probe);
                    if j < best.0 {
                        best = (j, x);
                    }
                }
                let step = TAU / pts as f64;
                let (x, _) = golden_min(best.1 - step, best.1 + step, |x| {
                    probe[nu] = x;
                    problem.eval(&probe).0
                });
                phi[nu] = x.rem_euclid(TAU);
                let mut d = (phi[nu] - old).rem_euclid(TAU);
                if d > TAU / 2.0 {
                    d = TAU - d;
                }
                last_move = last_move.max(d);
            }
            if sweep > 0 && last_move < opts.tol {
                break;
            }
        }
        let (j, _) = problem.eval(&phi);
        (j, phi, last_move)
    };
    problem.reweight(&vec![0.0; n]);
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for c in 0..m {
        let start: Vec<f64> =
            (0..n).map(|nu| (TAU * c as f64 * nu as f64 / m as f64).rem_euclid(TAU)).collect();
        let cand = descend(&problem, start);
        if best.as_ref().map_or(true, |b| cand.0 < b.0) {
            best = Some(cand);
        }
    }
    // Refresh the weights at the winning solution and polish once more.
    let (_, phi0, _) = best.clone().unwrap();
    problem.reweight(&phi0);
    let (_, phi, last_move) = descend(&problem, phi0);
    if last_move > 1e-2 {
        return Err(Error::NonConvergence(format!(
            "drift estimate still moving {last_move:.2e} rad after {} sweeps",
            opts.max_sweeps
        )));
    }
    let (_, theta) = problem.eval(&phi);
    let period = 1.0 / cal.f_fsr;
    let tau_lo = (theta / (TAU * cal.f_fsr)).rem_euclid(period);
    Ok(DriftParams { phi_f: phi, tau_lo })
}


/// Average drift estimates over several recordings taken while the drift is
/// quasi-static: per-channel phases are phasor-averaged, the pulse-train
/// position circularly via its slice-to-slice phase.
pub fn estimate_drift_averaged(
    records: &[&ChannelRecords],
    cal: &CalibrationRecord,
    opts: &DriftEstimateOptions,
) -> Result<DriftParams> {
    if records.is_empty() {
        return Err(Error::InvalidInput("need at least one recording".into()));
    }
    let estimates: Vec<DriftParams> =
        records.iter().map(|r| estimate_drift(r, cal, opts)).collect::<Result<_>>()?;
    let n = estimates[0].phi_f.len();
    let mut phi = vec![0.0f64; n];
    for nu in 0..n {
        let acc: Complex64 = estimates
            .iter()
            .map(|e| Complex64::from_polar(1.0, e.phi_f[nu] - e.phi_f[0]))
            .sum();
        phi[nu] = acc.arg();
    }
    let period = 1.0 / cal.f_fsr;
    let acc: Complex64 = estimates
        .iter()
        .map(|e| Complex64::from_polar(1.0, TAU * cal.f_fsr * e.tau_lo))
        .sum();
    let tau_lo = (acc.arg() / (TAU * cal.f_fsr)).rem_euclid(period);
    Ok(DriftParams { phi_f: phi, tau_lo })
}
