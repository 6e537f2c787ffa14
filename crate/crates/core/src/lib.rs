//! Link-level simulator for an NR downlink shared channel under oscillator
//! phase noise.
//!
//! The chain is: random payload with CRC-24A, QAM mapping with DM-RS and
//! PT-RS pilots, CP-OFDM, phase noise synthesized from a parametric spectral
//! mask, tapped-delay-line fading and AWGN, then a receiver doing timing,
//! least-squares channel estimation, per-symbol common phase error
//! correction and MMSE equalization. [`campaign`] drives whole runs and
//! sweeps.

pub mod acceptance;
pub mod campaign;
pub mod carrier;
pub mod channel;
pub mod crc;
pub mod error;
mod fft;
pub mod grid;
pub mod metrics;
pub mod ofdm;
pub mod phase_noise;
pub mod qam;
pub mod refsig;
pub mod rx;
pub mod seed;

pub use error::{Error, Result};
