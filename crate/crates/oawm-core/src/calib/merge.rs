//! Multi-shot merging with inter-shot drift alignment.

use super::record::CalibrationRecord;
use super::shot::CalSampleSet;
use crate::error::{Error, Result};
use crate::recon::interp_complex_channels;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Estimate the drift of `shot` relative to `anchor` as (delta_phi per
/// channel, delta_tau of the pulse train) and return the aligned copy.
///
/// Every shot sample is compared against the anchor's smooth phase profile
/// interpolated at the sample's own frequency, so offset shots do not alias
/// the profile slope (e.g. the steep chirp of a dispersive calibration
/// fiber) into apparent drift. The per-tone offsets phi(mu) = dphi_nu +
/// 2 pi f_FSR dtau mu are then separated with wrap-safe phasor averages: the
/// tone-to-tone slope gives dtau, the residual gives dphi_nu.
fn align_to_anchor(shot: &CalSampleSet, anchor: &CalSampleSet) -> Result<CalSampleSet> {
    let (n, m) = (shot.n, shot.m);

    // Anchor profile per (tone, sign, channel, I/Q), interpolated in
    // magnitude and unwrapped phase.
    let profile = |mu: usize, sign: f64| -> Option<(Vec<f64>, Vec<Vec<Complex64>>, Vec<Vec<Complex64>>)> {
        let mut xs = Vec::new();
        let mut hi: Vec<Vec<Complex64>> = vec![Vec::new(); n];
        let mut hq: Vec<Vec<Complex64>> = vec![Vec::new(); n];
        let mut samples: Vec<&super::shot::CalSample> = anchor
            .samples
            .iter()
            .filter(|a| a.mu == mu && a.f * sign >= -1.0)
            .collect();
        samples.sort_by(|a, b| a.f.abs().partial_cmp(&b.f.abs()).unwrap());
        if samples.is_empty() {
            return None;
        }
        for a in samples {
            xs.push(a.f.abs());
            for nu in 0..n {
                hi[nu].push(a.h_i[nu]);
                hq[nu].push(a.h_q[nu]);
            }
        }
        Some((xs, hi, hq))
    };
    let mut profiles = Vec::new();
    for mu in 1..=m {
        for sign in [1.0f64, -1.0] {
            profiles.push(((mu, sign > 0.0), profile(mu, sign)));
        }
    }
    let anchor_profile = |mu: usize, pos: bool| -> Option<&(Vec<f64>, Vec<Vec<Complex64>>, Vec<Vec<Complex64>>)> {
        profiles
            .iter()
            .find(|(k, _)| *k == (mu, pos))
            .and_then(|(_, v)| v.as_ref())
    };

    // Phase difference of each shot sample against the anchor profile at the
    // sample's own frequency, accumulated as phasors per (channel, tone).
    let mut z = vec![vec![Complex64::default(); m]; n];
    for s in &shot.samples {
        let Some((xs, hi, hq)) = anchor_profile(s.mu, s.f >= 0.0) else { continue };
        for nu in 0..n {
            let mi = crate::recon::interp_complex_channels(xs, &hi[nu], &[s.f.abs()]);
            let mq = crate::recon::interp_complex_channels(xs, &hq[nu], &[s.f.abs()]);
            if let (Ok(mi), Ok(mq)) = (mi, mq) {
                z[nu][s.mu - 1] += s.h_i[nu] * mi[0].conj() + s.h_q[nu] * mq[0].conj();
            }
        }
    }
    // Tone-to-tone slope: common to all channels.
    let mut slope = Complex64::default();
    for zn in &z {
        for mu in 0..m - 1 {
            slope += zn[mu].conj() * zn[mu + 1];
        }
    }
    let dtau_phase = if m > 1 && slope.norm() > 0.0 { slope.arg() } else { 0.0 };
    // Per-channel offset after removing the slope.
    let mut dphi = vec![0.0f64; n];
    let mut any = false;
    for (nu, zn) in z.iter().enumerate() {
        let mut acc = Complex64::default();
        for (mu0, v) in zn.iter().enumerate() {
            acc += v * Complex64::from_polar(1.0, -dtau_phase * (mu0 as f64 + 1.0));
        }
        if acc.norm() > 0.0 {
            any = true;
        }
        dphi[nu] = acc.arg();
    }
    if !any {
        return Err(Error::MissingData(
            "shots share no overlapping grid information for drift alignment".into(),
        ));
    }
    let mut aligned = shot.clone();
    for s in aligned.samples.iter_mut() {
        for nu in 0..n {
            let r = Complex64::from_polar(1.0, -(dphi[nu] + dtau_phase * s.mu as f64));
            s.h_i[nu] *= r;
            s.h_q[nu] *= r;
        }
    }
    Ok(aligned)
}

/// Merge aligned shots into a dense calibration record.
///
/// Shot drift is removed against the first shot (anchor convention); samples
/// that fall onto the same grid position are weight-averaged and their spread
/// yields the uncertainty estimate; the merged grid is the union.
pub fn merge_multishot(shots: &[CalSampleSet]) -> Result<CalibrationRecord> {
    let Some(anchor) = shots.first() else {
        return Err(Error::InvalidInput("need at least one shot".into()));
    };
    let (n, m) = (anchor.n, anchor.m);
    for s in shots {
        if s.n != n || s.m != m || (s.f_fsr - anchor.f_fsr).abs() > 1e-3 {
            return Err(Error::GridMismatch("shots disagree on system geometry".into()));
        }
    }
    let mut aligned = vec![shots[0].clone()];
    for s in &shots[1..] {
        aligned.push(align_to_anchor(s, anchor)?);
    }

    // Cluster all samples (both signs) by frequency.
    struct Cluster {
        f: f64,
        mu: usize,
        h_i: Vec<Complex64>,
        h_q: Vec<Complex64>,
        wsum: f64,
        spread_num: f64,
        spread_den: f64,
        count: usize,
    }
    let mut all: Vec<&super::shot::CalSample> = aligned.iter().flat_map(|s| &s.samples).collect();
    all.sort_by(|a, b| (a.mu, a.f).partial_cmp(&(b.mu, b.f)).unwrap());
    let cluster_tol = 1.0; // Hz; on-grid duplicates only
    let mut clusters: Vec<Cluster> = Vec::new();
    for s in all {
        let merged = match clusters.last_mut() {
            Some(c) if c.mu == s.mu && (s.f - c.f).abs() <= cluster_tol => {
                for nu in 0..n {
                    c.h_i[nu] += s.h_i[nu] * s.weight;
                    c.h_q[nu] += s.h_q[nu] * s.weight;
                }
                c.wsum += s.weight;
                c.count += 1;
                true
            }
            _ => false,
        };
        if !merged {
            clusters.push(Cluster {
                f: s.f,
                mu: s.mu,
                h_i: s.h_i.iter().map(|v| v * s.weight).collect(),
                h_q: s.h_q.iter().map(|v| v * s.weight).collect(),
                wsum: s.weight,
                spread_num: 0.0,
                spread_den: 0.0,
                count: 1,
            });
        }
    }
    for c in clusters.iter_mut() {
        for v in c.h_i.iter_mut().chain(c.h_q.iter_mut()) {
            *v /= c.wsum;
        }
    }
    // Second pass for the inter-shot spread at repeated positions.
    for shot in &aligned {
        for s in &shot.samples {
            if let Some(c) = clusters
                .iter_mut()
                .find(|c| c.mu == s.mu && (s.f - c.f).abs() <= cluster_tol && c.count > 1)
            {
                for nu in 0..n {
                    c.spread_num += (s.h_i[nu] - c.h_i[nu]).norm_sqr();
                    c.spread_den += c.h_i[nu].norm_sqr();
                }
            }
        }
    }
    // Relative variance of the cluster mean: sum |h_s - mean|^2 over shots,
    // divided by (count-1) * sum |mean|^2 (the spread_den already carries one
    // factor of count).
    let spread: Vec<f64> = clusters
        .iter()
        .filter(|c| c.count > 1 && c.spread_den > 0.0)
        .map(|c| c.spread_num / c.spread_den / (c.count - 1) as f64)
        .collect();
    let uncertainty_db = if spread.is_empty() {
        f64::NEG_INFINITY
    } else {
        let mean = spread.iter().sum::<f64>() / spread.len() as f64;
        10.0 * mean.log10()
    };

    // Union |f| grid; fill each (sign, channel, tone) series by interpolation
    // from its own-sign clusters.
    let mut grid: Vec<f64> = clusters.iter().map(|c| c.f.abs()).collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() <= cluster_tol);
    if grid.is_empty() {
        return Err(Error::MissingData("no merged grid points".into()));
    }

    let g = grid.len();
    let mut h_i_pos = vec![DMatrix::<Complex64>::zeros(n, m); g];
    let mut h_q_pos = vec![DMatrix::<Complex64>::zeros(n, m); g];
    let mut h_i_neg = vec![DMatrix::<Complex64>::zeros(n, m); g];
    let mut h_q_neg = vec![DMatrix::<Complex64>::zeros(n, m); g];
    for mu0 in 0..m {
        for sign in [1.0f64, -1.0] {
            let mut xs: Vec<f64> = Vec::new();
            let mut ys_i: Vec<Vec<Complex64>> = Vec::new();
            let mut ys_q: Vec<Vec<Complex64>> = Vec::new();
            for c in clusters.iter().filter(|c| c.mu == mu0 + 1 && c.f * sign >= -cluster_tol) {
                xs.push(c.f.abs());
                ys_i.push(c.h_i.clone());
                ys_q.push(c.h_q.clone());
            }
            if xs.is_empty() {
                return Err(Error::MissingData(format!(
                    "tone {} has no samples at {} frequencies",
                    mu0 + 1,
                    if sign > 0.0 { "positive" } else { "negative" }
                )));
            }
            // Sort by |f| (negative-side samples arrive descending).
            let mut order: Vec<usize> = (0..xs.len()).collect();
            order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
            let xs: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
            for nu in 0..n {
                let vi: Vec<Complex64> = order.iter().map(|&i| ys_i[i][nu]).collect();
                let vq: Vec<Complex64> = order.iter().map(|&i| ys_q[i][nu]).collect();
                let qi = interp_complex_channels(&xs, &vi, &grid)?;
                let qq = interp_complex_channels(&xs, &vq, &grid)?;
                for gi in 0..g {
                    if sign > 0.0 {
                        h_i_pos[gi][(nu, mu0)] = qi[gi];
                        h_q_pos[gi][(nu, mu0)] = qq[gi];
                    } else {
                        h_i_neg[gi][(nu, mu0)] = qi[gi];
                        h_q_neg[gi][(nu, mu0)] = qq[gi];
                    }
                }
            }
        }
    }

    // Guard against duplicate grid points after dedup (strictly increasing).
    for w in grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::GridMismatch("merged grid not strictly increasing".into()));
        }
    }
    let bandwidth = anchor.bandwidth;
    let rec = CalibrationRecord {
        f_grid: grid,
        h_i_pos,
        h_q_pos,
        h_i_neg,
        h_q_neg,
        uncertainty_db,
        n,
        m,
        f_1: anchor.f_1,
        f_fsr: anchor.f_fsr,
        bandwidth,
    };
    rec.validate()?;
    Ok(rec)
}
