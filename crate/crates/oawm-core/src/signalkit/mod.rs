//! Complex waveform and spectrum primitives.
//!
//! All optical signals are stored as complex baseband envelopes relative to a
//! declared reference frequency `f_ref`; absolute optical frequencies appear
//! only in configuration structs. Sample values are normalized such that
//! `|x|^2` is an instantaneous power in watts.

mod container;
mod gen;
mod psd;
mod qam;
mod wave;

pub(crate) use wave::{fft_forward as fft_in_place_forward, fft_inverse as fft_in_place_inverse};

pub use container::{read_spectrum, read_waveform, write_spectrum, write_waveform};
pub use gen::{add_pilot_tones, gen_cw_tone, gen_random_test_signal, RandomSignalSpec};
pub use psd::{psd_periodogram, PsdEstimate, DEFAULT_RBW_HZ};
pub use qam::{constellation, decide_symbols, gen_qam_signal, matched_filter_demod};
pub use wave::{clip, clip_with_stats, papr, SampledWaveform, Spectrum};
