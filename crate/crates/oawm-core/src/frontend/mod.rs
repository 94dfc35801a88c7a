//! Physics simulation of the N-channel receiver front end.

mod config;
mod sim;
mod transfer;

pub use config::{
    AdcConfig, ChannelRecords, CombLo, DriftParams, FrontEndConfig, FullScale, NoiseToggles,
    RecordMeta, ResponseCurve, B_REF_HZ,
};
pub use sim::{apply_lo_jitter, simulate_frontend, BOLTZMANN, ELEMENTARY_CHARGE};
pub use transfer::forward_transfer;
pub(crate) use transfer::h_i_entry as h_i_entry_pub;
