//! Signal-quality metrology: SINAD with a distortion taxonomy, ENOB, data-
//! aided EVM/CSNR, and crosstalk probing.

mod crosstalk;
mod evm;
mod sinad;

pub use crosstalk::{crosstalk_probe, CrosstalkReport};
pub use evm::{evm_csnr, EvmReport};
pub use sinad::{
    enob_from_sinad, predicted_crosstalk_freqs, sinad_from_enob, sinad_report, windowed_spectrum,
    DistortionReport, SinadContext, CAP_DB,
};
