//! Analytic SNDR scalability model: closed-form per-source contributions,
//! sweep engines, and Monte-Carlo calibration-crosstalk studies.

mod formulas;
mod mc;
mod sweep;

pub use formulas::{
    adc_sinad_jitter, adc_sinad_thermal, combine_db, noise_budget, sndr_adc, sndr_ase,
    sndr_ase_path, sndr_calibration, sndr_jitter, sndr_rf_amp, sndr_shot, sndr_ssbi, BudgetParams,
    NoiseBudget, PhysicalConstants, CAP_DB,
};
pub use mc::{mc_calibration_crosstalk, McCrosstalkOptions, McCrosstalkRow};
pub use sweep::{sweep_bandwidth, sweep_channels, SweepRow, SweepTable};
