//! Receiver chain: timing, channel estimation, common phase error
//! correction from PT-RS, and MMSE equalization.

mod chest;
mod cpe;
mod mmse;
mod pdsch;
mod timing;

pub use chest::{estimate_channel, ChannelEstimate, NOISE_VAR_FLOOR};
pub use cpe::{compensate_cpe, estimate_cpe, rotate_symbols, CpeEstimate};
pub use mmse::{equalize_mmse, equalize_single_layer, MmseOutput};
pub use pdsch::{dmrs_reference, recover_pdsch, recover_slot, CpeMode, PdschRx, RxOptions, SlotRx, TIMING_BACKOFF};
pub use timing::{estimate_timing, estimate_timing_multi};
