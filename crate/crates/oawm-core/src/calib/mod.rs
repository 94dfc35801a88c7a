//! Calibration pipeline: reference-waveform simulation, transfer-function
//! estimation, multi-shot merging, and three-fiber phase extraction.

mod merge;
mod orw;
mod pipeline;
mod record;
mod shot;
mod threefiber;

pub use merge::merge_multishot;
pub use orw::{apply_fiber, gen_orw, orw_lines, FiberConfig, OrwConfig, OrwLines};
pub use pipeline::simulate_calibration_shot;
pub use record::{read_calibration, write_calibration, CalibrationRecord};
pub use shot::{calibrate_single_shot, CalSample, CalSampleSet, ShotOptions, ShotReport};
pub use threefiber::remove_fiber_phase;
