//! Convenience pipeline: synthesize a calibration shot end to end.

use super::orw::{apply_fiber, gen_orw, orw_lines, FiberConfig, OrwConfig, OrwLines};
use super::shot::{calibrate_single_shot, CalSampleSet, ShotOptions};
use crate::error::Result;
use crate::frontend::{
    simulate_frontend, AdcConfig, ChannelRecords, CombLo, DriftParams, FrontEndConfig,
    NoiseToggles,
};

/// Run one calibration shot: reference comb at the given frequency offset,
/// optional dispersive fiber, front end, and line extraction.
#[allow(clippy::too_many_arguments)]
pub fn simulate_calibration_shot(
    orw: &OrwConfig,
    offset: f64,
    fiber: Option<&FiberConfig>,
    comb: &CombLo,
    fe: &FrontEndConfig,
    adc: &AdcConfig,
    drift: &DriftParams,
    toggles: NoiseToggles,
    seed: u64,
    duration: f64,
    sim_rate: f64,
) -> Result<(CalSampleSet, ChannelRecords, OrwLines)> {
    let mut wave = gen_orw(orw, offset, duration, sim_rate)?;
    if let Some(f) = fiber {
        wave = apply_fiber(&wave, f)?;
    }
    let records = simulate_frontend(&wave, comb, fe, adc, drift, toggles, seed)?;
    let lines = orw_lines(orw, offset)?;
    let set = calibrate_single_shot(&records, &lines, comb, adc.bandwidth, &ShotOptions::default())?;
    Ok((set, records, lines))
}
