//! Single-shot transfer-function sampling from a known reference comb.

use super::orw::OrwLines;
use crate::error::{Error, Result};
use crate::frontend::{ChannelRecords, CombLo};
use crate::signalkit::SampledWaveform;
use num_complex::Complex64;
use serde::Serialize;

/// One sampled column of the transfer functions: all channels at a signed
/// baseband frequency `f` for comb tone `mu`.
#[derive(Debug, Clone)]
pub struct CalSample {
    /// Signed baseband frequency of the sample.
    pub f: f64,
    /// 1-based comb tone index the sample belongs to.
    pub mu: usize,
    pub h_i: Vec<Complex64>,
    pub h_q: Vec<Complex64>,
    /// Reference line power behind the sample (division SNR proxy).
    pub weight: f64,
}

/// Sparse transfer-function samples of one calibration shot.
#[derive(Debug, Clone)]
pub struct CalSampleSet {
    pub samples: Vec<CalSample>,
    pub n: usize,
    pub m: usize,
    pub f_1: f64,
    pub f_fsr: f64,
    pub bandwidth: f64,
    pub report: ShotReport,
}

/// Bookkeeping of discarded lines.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ShotReport {
    /// (line, tone) mappings dropped because another mapping landed within the
    /// guard band of the same |baseband| position.
    pub collisions: usize,
    /// Lines dropped for insufficient power.
    pub snr_starved: usize,
    /// Lines with (near-)zero reference power, flagged missing.
    pub missing: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ShotOptions {
    /// Half-width of the collision guard band, Hz.
    pub guard_hz: f64,
    /// Discard lines whose power falls below this fraction of the median
    /// line power.
    pub min_rel_line_power: f64,
}

impl Default for ShotOptions {
    fn default() -> Self {
        Self { guard_hz: 10e6, min_rel_line_power: 1e-6 }
    }
}

/// Estimate transfer-function samples by dividing the measured baseband lines
/// by the known reference line values.
///
/// Every reference line within `[-B, B]` of a comb tone produces one sample;
/// mappings whose |baseband| positions collide within the guard band are
/// discarded (the reference comb spacing must be incommensurate with the LO
/// FSR for unique line-to-tone assignment). Line frequencies must lie on the
/// record's DFT grid.
pub fn calibrate_single_shot(
    records: &ChannelRecords,
    orw: &OrwLines,
    comb: &CombLo,
    bandwidth: f64,
    opts: &ShotOptions,
) -> Result<CalSampleSet> {
    let n = records.n();
    let m = comb.m();
    let len = records.record_len();
    if n == 0 || len == 0 {
        return Err(Error::InvalidInput("empty records".into()));
    }
    if orw.freqs.len() != orw.values.len() || orw.freqs.is_empty() {
        return Err(Error::InvalidInput("reference line table is empty or ragged".into()));
    }
    // Enumerate candidate (line, tone) -> baseband mappings inside the band.
    struct Mapping {
        line: usize,
        mu: usize,
        f: f64,
    }
    let mut mappings = Vec::new();
    for (li, &g) in orw.freqs.iter().enumerate() {
        for mu in 1..=m {
            let f = g - comb.tone_freq(mu);
            if f.abs() <= bandwidth * (1.0 + 1e-12) {
                mappings.push(Mapping { line: li, mu, f });
            }
        }
    }
    if mappings.is_empty() {
        return Err(Error::MissingData("no reference lines fall into the receiver band".into()));
    }

    // Collision groups on |f| (real records fold +-f onto the same bin).
    let mut order: Vec<usize> = (0..mappings.len()).collect();
    order.sort_by(|&a, &b| mappings[a].f.abs().partial_cmp(&mappings[b].f.abs()).unwrap());
    let mut collided = vec![false; mappings.len()];
    let mut report = ShotReport::default();
    for w in order.windows(2) {
        if (mappings[w[1]].f.abs() - mappings[w[0]].f.abs()).abs() < opts.guard_hz {
            for &i in w {
                if !collided[i] {
                    collided[i] = true;
                    report.collisions += 1;
                }
            }
        }
    }

    let median_power = {
        let mut p: Vec<f64> = orw.values.iter().map(|v| v.norm_sqr()).collect();
        p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        p[p.len() / 2]
    };

    // Record spectra (complex, full grid).
    let spectra: Vec<crate::signalkit::Spectrum> = records
        .i
        .iter()
        .chain(records.q.iter())
        .map(|r| {
            SampledWaveform::from_parts(
                r.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
                records.sample_rate,
                0.0,
            )
            .dft()
        })
        .collect();
    let duration = len as f64 / records.sample_rate;

    let mut samples = Vec::new();
    for (mi, map) in mappings.iter().enumerate() {
        if collided[mi] {
            continue;
        }
        let line_val = orw.values[map.line];
        if line_val.norm_sqr() < 1e-30 {
            report.missing += 1;
            continue;
        }
        if line_val.norm_sqr() < opts.min_rel_line_power * median_power {
            report.snr_starved += 1;
            continue;
        }
        let Some(bin) = spectra[0].index_of(map.f) else {
            return Err(Error::GridMismatch(format!(
                "reference line baseband position {} Hz off the record grid",
                map.f
            )));
        };
        // Spectrum bins integrate to energy; a tone of amplitude a occupies
        // one bin of value a * duration.
        let denom = line_val * duration;
        let h_i: Vec<Complex64> = (0..n).map(|nu| spectra[nu].bins()[bin] / denom).collect();
        let h_q: Vec<Complex64> = (0..n).map(|nu| spectra[n + nu].bins()[bin] / denom).collect();
        samples.push(CalSample { f: map.f, mu: map.mu, h_i, h_q, weight: line_val.norm_sqr() });
    }
    if samples.is_empty() {
        return Err(Error::MissingData("all candidate lines were discarded".into()));
    }
    samples.sort_by(|a, b| a.f.partial_cmp(&b.f).unwrap());
    Ok(CalSampleSet {
        samples,
        n,
        m,
        f_1: comb.tone_freq(1),
        f_fsr: comb.f_fsr,
        bandwidth,
        report,
    })
}
