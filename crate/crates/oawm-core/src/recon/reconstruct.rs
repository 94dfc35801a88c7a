//! End-to-end reconstruction: per-bin solve, slice assembly, stitching.

use super::drift::{estimate_drift, DriftEstimateOptions};
use super::matrix::{build_matrix, invert_matrix_set};
use super::stitch::{stitch, WeightsMode};
use super::types::InverseMatrixSet;
use crate::calib::CalibrationRecord;
use crate::error::{Error, Result};
use crate::frontend::{ChannelRecords, DriftParams};
use crate::signalkit::{SampledWaveform, Spectrum};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

/// Stacked record spectra evaluated on the solver bins `f = k * df`,
/// `k = 0..=n_pos` (the conjugate half is implied by realness).
pub(crate) struct RecordSpectra {
    pub df: f64,
    pub n_pos: usize,
    /// Per solve bin: `[I_1..I_N, Q_1..Q_N]`.
    pub b: Vec<DVector<Complex64>>,
}

pub(crate) fn record_spectra(records: &ChannelRecords, bandwidth: f64) -> Result<RecordSpectra> {
    let n = records.n();
    let len = records.record_len();
    if n == 0 || len == 0 {
        return Err(Error::InvalidInput("empty records".into()));
    }
    for r in records.i.iter().chain(records.q.iter()) {
        if r.len() != len {
            return Err(Error::GridMismatch("records have unequal lengths".into()));
        }
    }
    let df = records.sample_rate / len as f64;
    let n_pos = (bandwidth / df * (1.0 + 1e-12)).floor() as usize;
    if n_pos >= len / 2 {
        return Err(Error::ConfigRejected("receiver bandwidth exceeds record Nyquist".into()));
    }
    let specs: Vec<Vec<Complex64>> = records
        .i
        .iter()
        .chain(records.q.iter())
        .map(|r| {
            let w = SampledWaveform::from_parts(
                r.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
                records.sample_rate,
                0.0,
            );
            let s = w.dft();
            let half = len / 2;
            (0..=n_pos).map(|k| s.bins()[half + k]).collect()
        })
        .collect();
    let b = (0..=n_pos)
        .map(|k| DVector::from_iterator(2 * n, specs.iter().map(|s| s[k])))
        .collect();
    Ok(RecordSpectra { df, n_pos, b })
}

/// Drift handling during reconstruction.
#[derive(Debug, Clone)]
pub enum DriftSpec {
    Known(DriftParams),
    Estimate(DriftEstimateOptions),
}

#[derive(Debug, Clone)]
pub struct ReconstructOptions {
    pub weights: WeightsMode,
    pub rcond_threshold: f64,
    pub drift: DriftSpec,
    /// Optional Tikhonov factor (relative to the largest singular value);
    /// plain (pseudo-)inversion when absent.
    pub tikhonov: Option<f64>,
    /// Raised-cosine ramp fraction at the overlap-region edges.
    pub or_taper_frac: f64,
    /// Sample rate of the reconstructed time-domain waveform; defaults to a
    /// rate comfortably covering the acquisition band.
    pub output_rate: Option<f64>,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            weights: WeightsMode::Mrc,
            rcond_threshold: 1e-6,
            drift: DriftSpec::Estimate(DriftEstimateOptions::default()),
            tikhonov: None,
            or_taper_frac: 0.1,
            output_rate: None,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Diagnostics {
    /// Per-bin condition number of the system matrix on `f = k * df`.
    pub cond: Vec<f64>,
    pub flagged_bins: Vec<usize>,
    /// Per overlap region: relative RMS disagreement of the two redundant
    /// copies, dB.
    pub or_residual_db: Vec<f64>,
    /// Clipped-sample fraction per digitized record (from the front end).
    pub clipped_fraction: Vec<f64>,
    pub drift_estimated: bool,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    /// Broadband estimate over the acquisition range, baseband re f_ref.
    pub stitched: Spectrum,
    /// Time-domain estimate (complex envelope re f_ref).
    pub waveform: SampledWaveform,
    /// Frequency-shifted slices (optical frequency axis).
    pub slices: Vec<Spectrum>,
    /// Stitching weights per slice bin (inverse noise gain, before
    /// normalization).
    pub slice_weights: Vec<Vec<f64>>,
    pub drift: DriftParams,
    pub diagnostics: Diagnostics,
}

fn tikhonov_inverse(set: &mut InverseMatrixSet, matrices: &[DMatrix<Complex64>], lambda: f64) {
    let inverses: Vec<DMatrix<Complex64>> = matrices
        .par_iter()
        .map(|h| {
            let svd = h.clone().svd(true, true);
            let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
            let u = svd.u.as_ref().unwrap();
            let vt = svd.v_t.as_ref().unwrap();
            let reg = lambda * smax;
            let mut d = DMatrix::<Complex64>::zeros(vt.nrows(), u.ncols());
            for (i, &s) in svd.singular_values.iter().enumerate() {
                d[(i, i)] = Complex64::new(s / (s * s + reg * reg), 0.0);
            }
            vt.adjoint() * d * u.adjoint()
        })
        .collect();
    set.inverses = inverses;
}

/// Solve the per-bin system on `f ∈ [0, B]`, assemble the spectral slices,
/// and stitch them into the broadband estimate.
pub fn reconstruct(
    records: &ChannelRecords,
    cal: &CalibrationRecord,
    options: &ReconstructOptions,
) -> Result<ReconstructionResult> {
    cal.validate()?;
    let (n, m) = (cal.n, cal.m);
    if records.n() != n {
        return Err(Error::GridMismatch(format!(
            "{} record channels for a calibration with N = {}",
            records.n(),
            n
        )));
    }
    let spectra = record_spectra(records, cal.bandwidth)?;
    let df = spectra.df;
    let n_pos = spectra.n_pos;

    let (drift, drift_estimated) = match &options.drift {
        DriftSpec::Known(d) => (d.clone(), false),
        DriftSpec::Estimate(opts) => (estimate_drift(records, cal, opts)?, true),
    };

    let f_grid: Vec<f64> = (0..=n_pos).map(|k| k as f64 * df).collect();
    let tms = build_matrix(cal, &drift, &f_grid)?;
    let mut inv = invert_matrix_set(&tms, options.rcond_threshold)?;
    if let Some(lambda) = options.tikhonov {
        tikhonov_inverse(&mut inv, &tms.matrices, lambda);
    }
    let flagged: std::collections::HashSet<usize> = inv.flagged.iter().copied().collect();

    // Per-bin solve.
    let x: Vec<DVector<Complex64>> = (0..=n_pos)
        .into_par_iter()
        .map(|k| &inv.inverses[k] * &spectra.b[k])
        .collect();

    // Row noise gains for MRC weights.
    let row_gain = |k: usize, row: usize| -> f64 {
        let inv_k = &inv.inverses[k];
        let mut g = 0.0;
        for j in 0..2 * n {
            g += inv_k[(row, j)].norm_sqr();
        }
        g
    };

    let slice_len = 2 * n_pos + 1;
    let mut slices = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for mu in 0..m {
        let f_mu = cal.tone_freq(mu + 1);
        let mut bins = vec![Complex64::default(); slice_len];
        let mut w = vec![0.0f64; slice_len];
        for k in 0..=n_pos {
            let flag_scale = if flagged.contains(&k) { 1e-9 } else { 1.0 };
            let direct = x[k][mu];
            let conj = x[k][m + mu].conj();
            let wd = flag_scale / row_gain(k, mu).max(1e-300);
            let wc = flag_scale / row_gain(k, m + mu).max(1e-300);
            if k == 0 {
                bins[n_pos] = (direct + conj) * 0.5;
                w[n_pos] = wd + wc;
            } else {
                bins[n_pos + k] = direct;
                w[n_pos + k] = wd;
                bins[n_pos - k] = conj;
                w[n_pos - k] = wc;
            }
        }
        slices.push(Spectrum::new(bins, f_mu - n_pos as f64 * df, df)?);
        weights.push(w);
    }

    // Overlap-region residuals (copy disagreement before weighting).
    let mut or_residual_db = Vec::new();
    for mu in 0..m.saturating_sub(1) {
        let lo = cal.tone_freq(mu + 2) - cal.bandwidth;
        let hi = cal.tone_freq(mu + 1) + cal.bandwidth;
        let mut num = 0.0;
        let mut den = 0.0;
        let mut g = lo;
        while g <= hi + 1e-6 * df {
            if let (Some(ia), Some(ib)) = (slices[mu].index_of(g), slices[mu + 1].index_of(g)) {
                let a = slices[mu].bins()[ia];
                let b = slices[mu + 1].bins()[ib];
                num += (a - b).norm_sqr();
                den += 0.5 * (a.norm_sqr() + b.norm_sqr());
            }
            g += df;
        }
        or_residual_db.push(if den > 0.0 { 10.0 * (num / den).log10() } else { f64::NAN });
    }

    let tone_freqs: Vec<f64> = (1..=m).map(|mu| cal.tone_freq(mu)).collect();
    let weight_arg = match options.weights {
        WeightsMode::Equal => None,
        WeightsMode::Mrc => Some(weights.as_slice()),
    };
    let stitched = stitch(&slices, &tone_freqs, cal.bandwidth, weight_arg, options.or_taper_frac)?;

    // Time-domain estimate on a grid covering the acquisition band.
    let f_hi = tone_freqs[m - 1] + cal.bandwidth;
    let f_lo = tone_freqs[0] - cal.bandwidth;
    let rate = match options.output_rate {
        Some(r) => r,
        None => {
            let need = 2.2 * f_hi.abs().max(f_lo.abs());
            (need / df).ceil() * df
        }
    };
    let l_t = (rate / df).round() as usize;
    if ((rate / df) - l_t as f64).abs() > 1e-6 {
        return Err(Error::GridMismatch(format!(
            "output rate {rate} Hz is not an integer multiple of the bin spacing {df} Hz"
        )));
    }
    if f_hi >= rate / 2.0 || f_lo <= -rate / 2.0 {
        return Err(Error::Aliasing { freq_hz: f_hi, nyquist_hz: rate / 2.0 });
    }
    let half = l_t / 2;
    let mut full = vec![Complex64::default(); l_t];
    for (k, &v) in stitched.bins().iter().enumerate() {
        let g = stitched.f_start() + k as f64 * df;
        let idx = (g / df).round() as i64 + half as i64;
        if idx >= 0 && (idx as usize) < l_t {
            full[idx as usize] = v;
        }
    }
    let waveform = Spectrum::new(full, -(half as f64) * df, df)?.idft();

    Ok(ReconstructionResult {
        stitched,
        waveform,
        slices,
        slice_weights: weights,
        drift,
        diagnostics: Diagnostics {
            cond: inv.cond,
            flagged_bins: inv.flagged,
            or_residual_db,
            clipped_fraction: records.meta.clipped_fraction.clone(),
            drift_estimated,
        },
    })
}
