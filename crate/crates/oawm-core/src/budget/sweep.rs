//! Sweep engines over acquisition bandwidth and channel count.

use super::formulas::{noise_budget, BudgetParams, NoiseBudget};
use crate::error::Result;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub b_opt_hz: f64,
    /// Per-channel ADC bandwidth, Hz.
    pub b_hz: f64,
    #[serde(flatten)]
    pub budget: NoiseBudget,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Grid points skipped because B = B_opt/(2N) exceeded the ADC limit.
    pub omitted: Vec<(usize, f64)>,
}

fn eval_point(base: &BudgetParams, n: usize, b_opt: f64) -> Result<Option<SweepRow>> {
    let p = BudgetParams { n, b_opt, ..*base };
    if p.exceeds_adc_cap() {
        return Ok(None);
    }
    Ok(Some(SweepRow { n, b_opt_hz: b_opt, b_hz: p.channel_bandwidth(), budget: noise_budget(&p)? }))
}

/// SNDR contributions as a function of B_opt for each channel count.
pub fn sweep_bandwidth(
    n_list: &[usize],
    b_opt_grid: &[f64],
    base: &BudgetParams,
) -> Result<SweepTable> {
    let mut rows = Vec::new();
    let mut omitted = Vec::new();
    for &n in n_list {
        for &b_opt in b_opt_grid {
            match eval_point(base, n, b_opt)? {
                Some(r) => rows.push(r),
                None => omitted.push((n, b_opt)),
            }
        }
    }
    Ok(SweepTable { rows, omitted })
}

/// SNDR contributions as a function of N for each acquisition bandwidth.
pub fn sweep_channels(
    b_opt_list: &[f64],
    n_grid: &[usize],
    base: &BudgetParams,
) -> Result<SweepTable> {
    let mut rows = Vec::new();
    let mut omitted = Vec::new();
    for &b_opt in b_opt_list {
        for &n in n_grid {
            match eval_point(base, n, b_opt)? {
                Some(r) => rows.push(r),
                None => omitted.push((n, b_opt)),
            }
        }
    }
    Ok(SweepTable { rows, omitted })
}
