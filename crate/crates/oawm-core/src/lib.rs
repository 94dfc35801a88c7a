//! Simulation and DSP toolkit for comb-based, non-sliced optical arbitrary
//! waveform measurement (OAWM) receivers.
//!
//! The crate models the full chain of an N-channel comb-LO coherent receiver:
//!
//! - [`signalkit`] — complex waveform/spectrum primitives and test-signal
//!   generators (CW tones, band-limited Gaussian noise, QAM, pilot tones),
//! - [`frontend`] — physics of the receiver front-end: comb LO with per-channel
//!   delays, 90° hybrids, balanced photodetection with finite CMRR, shot noise,
//!   RF-amplifier noise, and ADC digitization (band limit, jitter, quantization,
//!   acquisition noise),
//! - [`calib`] — transfer-function calibration from a known reference pulse
//!   train, multi-shot merging and three-fiber phase extraction,
//! - [`recon`] — per-frequency-bin matrix inversion, drift estimation from
//!   overlap-region redundancy, and spectral stitching,
//! - [`metrics`] — SINAD/ENOB with a distortion taxonomy, EVM/CSNR,
//! - [`budget`] — closed-form SNDR contributions of every noise source, sweep
//!   engines, and Monte-Carlo calibration-crosstalk studies.
//!
//! All operations are deterministic given their seed arguments; random streams
//! are derived per (seed, purpose) so results do not depend on evaluation
//! order.

pub mod budget;
pub mod calib;
pub mod error;
pub mod frontend;
pub mod metrics;
pub mod recon;
pub mod rng;
pub mod signalkit;

pub use error::{Error, Result};
