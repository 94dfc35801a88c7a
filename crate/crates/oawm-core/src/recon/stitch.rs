//! Spectral stitching of the reconstructed slices.

use crate::error::{Error, Result};
use crate::signalkit::Spectrum;
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsMode {
    Equal,
    /// Maximal-ratio combining: weights proportional to the inverse
    /// reconstruction noise gain of each copy.
    Mrc,
}

/// Stitch per-slice spectra into one broadband spectrum.
///
/// Outside the overlap regions the unique copy is passed through; inside, the
/// copies are averaged with normalized weights. `weights` carries one
/// non-negative weight per slice bin (MRC mode); `None` means equal weights.
/// A raised-cosine ramp over the outer `taper_frac` of each overlap region
/// keeps the transition continuous.
pub fn stitch(
    slices: &[Spectrum],
    tone_freqs: &[f64],
    bandwidth: f64,
    weights: Option<&[Vec<f64>]>,
    taper_frac: f64,
) -> Result<Spectrum> {
    let m = slices.len();
    if m == 0 || tone_freqs.len() != m {
        return Err(Error::InvalidInput("need one slice per comb tone".into()));
    }
    if let Some(w) = weights {
        if w.len() != m || w.iter().zip(slices).any(|(wi, s)| wi.len() != s.len()) {
            return Err(Error::GridMismatch("weights shape != slices shape".into()));
        }
    }
    let df = slices[0].df();
    for s in slices {
        if (s.df() - df).abs() > 1e-6 * df {
            return Err(Error::GridMismatch("slice bin spacings differ".into()));
        }
    }
    // Congruent grids: every slice start must sit on the common grid.
    for s in slices.iter().skip(1) {
        let offs = (s.f_start() - slices[0].f_start()) / df;
        if (offs - offs.round()).abs() > 1e-6 {
            return Err(Error::GridMismatch("slice grids are not congruent".into()));
        }
    }
    for mu in 0..m - 1 {
        if tone_freqs[mu + 1] - tone_freqs[mu] > 2.0 * bandwidth + 1e-6 * df {
            return Err(Error::ConfigRejected(format!(
                "gap between slices {} and {}: tone spacing {} Hz exceeds 2B = {} Hz",
                mu,
                mu + 1,
                tone_freqs[mu + 1] - tone_freqs[mu],
                2.0 * bandwidth
            )));
        }
    }

    let f_lo = tone_freqs[0] - bandwidth;
    let f_hi = tone_freqs[m - 1] + bandwidth;
    let len = ((f_hi - f_lo) / df).round() as usize + 1;
    let or_width = if m > 1 { 2.0 * bandwidth - (tone_freqs[1] - tone_freqs[0]) } else { 0.0 };
    let taper_len = taper_frac * or_width;

    let mut bins = vec![Complex64::default(); len];
    for (k, bin) in bins.iter_mut().enumerate() {
        let g = f_lo + k as f64 * df;
        let mut acc = Complex64::default();
        let mut wsum = 0.0;
        let mut fallback = Complex64::default();
        let mut count = 0.0;
        for mu in 0..m {
            let off = g - tone_freqs[mu];
            if off.abs() > bandwidth * (1.0 + 1e-12) {
                continue;
            }
            let idx = match slices[mu].index_of(g) {
                Some(i) => i,
                None => continue,
            };
            let v = slices[mu].bins()[idx];
            let mut w = weights.map(|w| w[mu][idx]).unwrap_or(1.0);
            // Ramp down toward this slice's own edge inside an interior OR.
            if taper_len > 0.0 {
                let d_up = bandwidth - off; // distance to upper edge
                let d_dn = bandwidth + off; // distance to lower edge
                if mu + 1 < m && d_up < taper_len {
                    w *= 0.5 * (1.0 - (PI * (1.0 - d_up / taper_len)).cos());
                }
                if mu > 0 && d_dn < taper_len {
                    w *= 0.5 * (1.0 - (PI * (1.0 - d_dn / taper_len)).cos());
                }
            }
            acc += v * w;
            wsum += w;
            fallback += v;
            count += 1.0;
        }
        *bin = if wsum > 0.0 {
            acc / wsum
        } else if count > 0.0 {
            fallback / count
        } else {
            Complex64::default()
        };
    }
    Spectrum::new(bins, f_lo, df)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(len: usize, f_start: f64, df: f64, at: f64, value: Complex64) -> Spectrum {
        let mut bins = vec![Complex64::default(); len];
        let k = ((at - f_start) / df).round() as usize;
        bins[k] = value;
        Spectrum::new(bins, f_start, df).unwrap()
    }

    #[test]
    fn identical_copies_pass_through_unchanged() {
        let df = 1e8;
        let b = 5e9;
        let tones = [5e9, 13e9];
        let v = Complex64::new(0.7, -0.2);
        let s1 = tone(101, 0.0, df, 9e9, v);
        let s2 = tone(101, 8e9, df, 9e9, v);
        for weights in [None, Some(vec![vec![3.0; 101], vec![0.5; 101]])] {
            let out = stitch(&[s1.clone(), s2.clone()], &tones, b, weights.as_deref(), 0.1).unwrap();
            let k = out.index_of(9e9).unwrap();
            assert!((out.bins()[k] - v).norm() < 1e-12);
        }
    }

    #[test]
    fn gap_between_slices_is_an_error() {
        let df = 1e8;
        let s1 = tone(101, 0.0, df, 3e9, Complex64::new(1.0, 0.0));
        let s2 = tone(101, 12e9, df, 15e9, Complex64::new(1.0, 0.0));
        let out = stitch(&[s1, s2], &[5e9, 17e9], 5e9, None, 0.1);
        assert!(matches!(out, Err(Error::ConfigRejected(_))));
    }

    #[test]
    fn weighting_favors_the_cleaner_copy() {
        let df = 1e8;
        let b = 5e9;
        let tones = [5e9, 13e9];
        let good = Complex64::new(1.0, 0.0);
        let bad = Complex64::new(1.3, 0.4); // corrupted copy
        let s1 = tone(101, 0.0, df, 9e9, good);
        let s2 = tone(101, 8e9, df, 9e9, bad);
        let w = Some(vec![vec![10.0; 101], vec![0.1; 101]]);
        let out = stitch(&[s1, s2], &tones, b, w.as_deref(), 0.0).unwrap();
        let k = out.index_of(9e9).unwrap();
        assert!((out.bins()[k] - good).norm() < 0.05);
    }
}
