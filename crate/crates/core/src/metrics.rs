//! EVM, BER and BLER.
//!
//! A block is one slot's uncoded payload; it fails when its CRC-24A check
//! fails at the receiver. EVM is taken over data REs after equalization and
//! averaged over the whole run.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `20 log10(pct / 100)`, or negative infinity for a perfect match.
pub fn evm_pct_to_db(pct: f64) -> f64 {
    if pct > 0.0 {
        20.0 * (pct / 100.0).log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// RMS error vector magnitude in percent and dB.
pub fn evm(reference: &[Complex64], equalized: &[Complex64]) -> Result<(f64, f64)> {
    let mut acc = EvmAccumulator::default();
    acc.add(reference, equalized)?;
    acc.finish()
}

/// Running sums behind [`evm`], for averaging over many slots.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvmAccumulator {
    pub err_energy: f64,
    pub ref_energy: f64,
    pub n_symbols: usize,
}

impl EvmAccumulator {
    pub fn add(&mut self, reference: &[Complex64], equalized: &[Complex64]) -> Result<()> {
        if reference.len() != equalized.len() {
            return Err(Error::LengthMismatch(reference.len(), equalized.len()));
        }
        for (s, e) in reference.iter().zip(equalized) {
            self.err_energy += (e - s).norm_sqr();
            self.ref_energy += s.norm_sqr();
        }
        self.n_symbols += reference.len();
        Ok(())
    }

    pub fn finish(&self) -> Result<(f64, f64)> {
        if self.n_symbols == 0 {
            return Err(Error::Empty("EVM reference"));
        }
        if self.ref_energy <= 0.0 {
            return Err(Error::ZeroReference);
        }
        let pct = 100.0 * (self.err_energy / self.ref_energy).sqrt();
        Ok((pct, evm_pct_to_db(pct)))
    }
}

pub fn bit_errors(tx: &[u8], rx: &[u8]) -> Result<usize> {
    if tx.len() != rx.len() {
        return Err(Error::LengthMismatch(tx.len(), rx.len()));
    }
    Ok(tx.iter().zip(rx).filter(|(a, b)| a != b).count())
}

/// Hamming distance over length.
pub fn ber(tx: &[u8], rx: &[u8]) -> Result<f64> {
    if tx.is_empty() {
        return Err(Error::Empty("bit sequence"));
    }
    Ok(bit_errors(tx, rx)? as f64 / tx.len() as f64)
}

/// Fraction of blocks whose CRC failed; `crc_ok[i]` is block `i`'s verdict.
pub fn bler(crc_ok: &[bool]) -> Result<f64> {
    if crc_ok.is_empty() {
        return Err(Error::Empty("block results"));
    }
    Ok(crc_ok.iter().filter(|ok| !**ok).count() as f64 / crc_ok.len() as f64)
}

/// Scenario fields carried along with every result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDescriptor {
    pub pn_model: String,
    pub fc_ghz: f64,
    pub modulation: String,
    pub n_tx: usize,
    pub n_rx: usize,
    pub snr_db: String,
    pub cpe_comp: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub evm_pct: f64,
    pub evm_db: f64,
    pub ber: f64,
    pub bler: f64,
    pub n_bits: usize,
    pub n_blocks: usize,
    pub n_symbols: usize,
    pub scenario: ScenarioDescriptor,
}

impl LinkMetrics {
    /// `evm_db` agrees with `evm_pct`.
    pub fn is_consistent(&self) -> bool {
        if self.evm_pct > 0.0 {
            (self.evm_db - evm_pct_to_db(self.evm_pct)).abs() <= 1e-9
        } else {
            self.evm_db == f64::NEG_INFINITY
        }
    }
}

/// Everything a run accumulates before it becomes a [`LinkMetrics`].
#[derive(Debug, Clone, Default)]
pub struct LinkAccumulator {
    pub evm: EvmAccumulator,
    pub bit_errors: usize,
    pub n_bits: usize,
    pub crc_ok: Vec<bool>,
}

impl LinkAccumulator {
    pub fn add_block(
        &mut self,
        tx_symbols: &[Complex64],
        rx_symbols: &[Complex64],
        tx_bits: &[u8],
        rx_bits: &[u8],
        crc_ok: bool,
    ) -> Result<()> {
        self.evm.add(tx_symbols, rx_symbols)?;
        self.bit_errors += bit_errors(tx_bits, rx_bits)?;
        self.n_bits += tx_bits.len();
        self.crc_ok.push(crc_ok);
        Ok(())
    }

    pub fn finish(&self, scenario: ScenarioDescriptor) -> Result<LinkMetrics> {
        let (evm_pct, evm_db) = self.evm.finish()?;
        if self.n_bits == 0 {
            return Err(Error::Empty("bit sequence"));
        }
        Ok(LinkMetrics {
            evm_pct,
            evm_db,
            ber: self.bit_errors as f64 / self.n_bits as f64,
            bler: bler(&self.crc_ok)?,
            n_bits: self.n_bits,
            n_blocks: self.crc_ok.len(),
            n_symbols: self.evm.n_symbols,
            scenario,
        })
    }
}
