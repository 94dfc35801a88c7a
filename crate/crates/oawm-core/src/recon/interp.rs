//! Interpolation of calibration samples onto a solver grid: cubic
//! (Catmull-Rom) in magnitude and unwrapped phase.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Unwrap a phase sequence in place (2 pi jump removal along the grid).
pub fn unwrap_phases(ph: &mut [f64]) {
    let mut offset = 0.0;
    for i in 1..ph.len() {
        let mut d = ph[i] + offset - ph[i - 1];
        while d > PI {
            offset -= 2.0 * PI;
            d -= 2.0 * PI;
        }
        while d < -PI {
            offset += 2.0 * PI;
            d += 2.0 * PI;
        }
        ph[i] += offset;
    }
}

/// Catmull-Rom interpolation on a non-uniform strictly increasing grid, with
/// linear fallback near the ends and for short grids. Queries must lie within
/// the grid span.
pub struct CubicSeries<'a> {
    xs: &'a [f64],
    ys: Vec<f64>,
}

impl<'a> CubicSeries<'a> {
    pub fn new(xs: &'a [f64], ys: Vec<f64>) -> Self {
        debug_assert_eq!(xs.len(), ys.len());
        Self { xs, ys }
    }

    /// Evaluate with a bounded margin: queries within `margin` local spacings
    /// beyond either end continue along the end tangent; farther out is an
    /// error.
    pub fn eval_margin(&self, x: f64, margin: f64) -> Result<f64> {
        let xs = self.xs;
        let n = xs.len();
        if n == 1 {
            return Ok(self.ys[0]);
        }
        let span = xs[n - 1] - xs[0];
        let tol = 1e-9 * span.max(xs[n - 1].abs()).max(1.0);
        let lo_gap = margin * (xs[1] - xs[0]);
        let hi_gap = margin * (xs[n - 1] - xs[n - 2]);
        if x < xs[0] - lo_gap - tol || x > xs[n - 1] + hi_gap + tol {
            return Err(Error::Extrapolation(format!(
                "query {x} outside calibration span [{}, {}]",
                xs[0],
                xs[n - 1]
            )));
        }
        if x < xs[0] {
            return Ok(self.ys[0] + self.tangent_checked(0) * (x - xs[0]));
        }
        if x > xs[n - 1] {
            return Ok(self.ys[n - 1] + self.tangent_checked(n - 1) * (x - xs[n - 1]));
        }
        // Exact-node shortcut keeps noiseless loopbacks exact.
        let i = xs.partition_point(|&v| v <= x);
        let i1 = i.saturating_sub(1).min(n - 2);
        if (x - xs[i1]).abs() <= tol {
            return Ok(self.ys[i1]);
        }
        if (x - xs[i1 + 1]).abs() <= tol {
            return Ok(self.ys[i1 + 1]);
        }
        let t = (x - xs[i1]) / (xs[i1 + 1] - xs[i1]);
        if n == 2 {
            return Ok(self.ys[i1] * (1.0 - t) + self.ys[i1 + 1] * t);
        }
        // Hermite cubic with weighted three-point tangents (one-sided at the
        // boundary nodes); exact for quadratics on non-uniform grids, which
        // matters for strongly chirped phase profiles.
        let h = xs[i1 + 1] - xs[i1];
        let m1 = h * self.tangent(i1);
        let m2 = h * self.tangent(i1 + 1);
        let (y1, y2) = (self.ys[i1], self.ys[i1 + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * y1
            + (t3 - 2.0 * t2 + t) * m1
            + (-2.0 * t3 + 3.0 * t2) * y2
            + (t3 - t2) * m2)
    }

    /// Strict evaluation: tangent extension only up to 1.2 local spacings
    /// past either end (bridges merged-grid edge gaps without permitting
    /// genuine extrapolation).
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.eval_margin(x, 1.2)
    }

    fn tangent_checked(&self, i: usize) -> f64 {
        if self.xs.len() < 3 {
            let h = self.xs[1] - self.xs[0];
            return (self.ys[1] - self.ys[0]) / h;
        }
        self.tangent(i)
    }

    /// Derivative estimate at node `i`: weighted central difference inside,
    /// parabolic one-sided at the ends. Both reproduce quadratics exactly.
    fn tangent(&self, i: usize) -> f64 {
        let xs = self.xs;
        let ys = &self.ys;
        let n = xs.len();
        if i > 0 && i + 1 < n {
            let ha = xs[i] - xs[i - 1];
            let hb = xs[i + 1] - xs[i];
            let da = (ys[i] - ys[i - 1]) / ha;
            let db = (ys[i + 1] - ys[i]) / hb;
            (hb * da + ha * db) / (ha + hb)
        } else if i == 0 {
            let h1 = xs[1] - xs[0];
            let h2 = xs[2] - xs[1];
            let d1 = (ys[1] - ys[0]) / h1;
            let d2 = (ys[2] - ys[1]) / h2;
            d1 - h1 * (d2 - d1) / (h1 + h2)
        } else {
            let h1 = xs[n - 1] - xs[n - 2];
            let h2 = xs[n - 2] - xs[n - 3];
            let d1 = (ys[n - 1] - ys[n - 2]) / h1;
            let d2 = (ys[n - 2] - ys[n - 3]) / h2;
            d1 + h1 * (d1 - d2) / (h1 + h2)
        }
    }
}

/// Interpolate one complex calibration channel sampled at `xs` onto `queries`,
/// cubic in magnitude and unwrapped phase.
pub fn interp_complex(xs: &[f64], values: &[Complex64], queries: &[f64]) -> Result<Vec<Complex64>> {
    let mags: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    let mut phases: Vec<f64> = values.iter().map(|v| v.arg()).collect();
    unwrap_phases(&mut phases);
    let ms = CubicSeries::new(xs, mags);
    let ps = CubicSeries::new(xs, phases);
    queries
        .iter()
        .map(|&q| Ok(Complex64::from_polar(ms.eval(q)?, ps.eval(q)?)))
        .collect()
}

/// Like [`interp_complex`] but continuing along the end tangents for queries
/// beyond the sample span (used when a merged union grid reaches past one
/// series' own samples; steep chirped phases make flat clamping lossy).
pub fn interp_complex_extend(
    xs: &[f64],
    values: &[Complex64],
    queries: &[f64],
) -> Result<Vec<Complex64>> {
    let mags: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    let mut phases: Vec<f64> = values.iter().map(|v| v.arg()).collect();
    unwrap_phases(&mut phases);
    let ms = CubicSeries::new(xs, mags);
    let ps = CubicSeries::new(xs, phases);
    queries
        .iter()
        .map(|&q| Ok(Complex64::from_polar(ms.eval_margin(q, f64::INFINITY)?, ps.eval_margin(q, f64::INFINITY)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unwrap_removes_jumps() {
        let mut ph = vec![3.0, -3.0, 3.0, -3.0];
        unwrap_phases(&mut ph);
        for w in ph.windows(2) {
            assert!((w[1] - w[0]).abs() < PI);
        }
    }

    #[test]
    fn cubic_reproduces_smooth_function() {
        let xs: Vec<f64> = (0..40).map(|k| k as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (0.3 * x).sin() + 0.1 * x).collect();
        let s = CubicSeries::new(&xs, ys);
        for q in [0.37f64, 3.1, 7.77, 9.5] {
            let expect = (0.3 * q).sin() + 0.1 * q;
            assert!((s.eval(q).unwrap() - expect).abs() < 1e-4);
        }
        // Exact at nodes.
        assert_eq!(s.eval(2.5).unwrap(), (0.3f64 * 2.5).sin() + 0.25);
        assert!(s.eval(11.5).is_err());
    }
}
