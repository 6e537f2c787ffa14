//! OFDM numerology and grid geometry.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const SUBCARRIERS_PER_RB: usize = 12;

/// Numerology of one carrier.
///
/// `cp_lengths` lists the cyclic prefix of every symbol over one CP period
/// (half a subframe, 0.5 ms): the first symbol of the period carries the
/// long prefix. For slot-relative access use [`CarrierConfig::cp_len`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarrierConfig {
    pub nfft: usize,
    pub scs_hz: f64,
    pub n_size_grid: usize,
    pub symbols_per_slot: usize,
    pub sample_rate_hz: f64,
    pub cp_lengths: Vec<usize>,
}

impl CarrierConfig {
    /// 60 kHz SCS, 1024-point FFT at 61.44 MHz, 66 RB, 14 symbols per slot.
    pub fn mmwave_default() -> Self {
        Self::normal_cp(1024, 60e3, 66).expect("built-in numerology is valid")
    }

    /// Normal-CP numerology for an SCS of `15 kHz * 2^mu`.
    ///
    /// CP lengths follow the NR rule scaled to the FFT size: `144/2048 * nfft`
    /// samples per symbol, plus `16/2048 * nfft * 2^mu` on the first symbol of
    /// every 0.5 ms.
    pub fn normal_cp(nfft: usize, scs_hz: f64, n_size_grid: usize) -> Result<Self> {
        let mu_f = (scs_hz / 15e3).log2();
        if mu_f < -1e-9 || (mu_f - mu_f.round()).abs() > 1e-9 {
            return Err(Error::InvalidCarrier(format!("SCS {scs_hz} Hz is not 15 kHz * 2^mu")));
        }
        let mu = mu_f.round() as u32;
        if !(nfft * 144).is_multiple_of(2048) || !((nfft * 16) << mu).is_multiple_of(2048) {
            return Err(Error::InvalidCarrier(format!("FFT size {nfft} gives a fractional CP")));
        }
        let cp = nfft * 144 / 2048;
        let extra = nfft * 16 * (1 << mu) / 2048;
        let symbols_per_slot = 14;
        let per_period = 7 * (1usize << mu);
        let mut cp_lengths = vec![cp; per_period];
        cp_lengths[0] += extra;
        let cfg = Self {
            nfft,
            scs_hz,
            n_size_grid,
            symbols_per_slot,
            sample_rate_hz: nfft as f64 * scs_hz,
            cp_lengths,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_size_grid == 0 {
            return Err(Error::DegenerateAllocation("zero resource blocks".into()));
        }
        if self.n_subcarriers() > self.nfft {
            return Err(Error::GridTooWide {
                subcarriers: self.n_subcarriers(),
                nfft: self.nfft,
            });
        }
        if (self.sample_rate_hz - self.nfft as f64 * self.scs_hz).abs() > 1e-6 {
            return Err(Error::InvalidCarrier("sample rate must equal nfft * scs".into()));
        }
        if self.symbols_per_slot == 0 || self.cp_lengths.is_empty() || self.cp_lengths.contains(&0) {
            return Err(Error::InvalidCarrier("bad cyclic prefix table".into()));
        }
        Ok(())
    }

    pub fn n_subcarriers(&self) -> usize {
        SUBCARRIERS_PER_RB * self.n_size_grid
    }

    pub fn slots_per_subframe(&self) -> usize {
        (self.scs_hz / 15e3).round() as usize
    }

    pub fn slots_per_frame(&self) -> usize {
        10 * self.slots_per_subframe()
    }

    /// Cyclic prefix of symbol `symbol` (slot-relative) in slot `slot`.
    pub fn cp_len(&self, slot: usize, symbol: usize) -> usize {
        let abs = slot * self.symbols_per_slot + symbol;
        self.cp_lengths[abs % self.cp_lengths.len()]
    }

    /// Samples in slot `slot`, prefixes included.
    pub fn slot_len(&self, slot: usize) -> usize {
        (0..self.symbols_per_slot)
            .map(|l| self.nfft + self.cp_len(slot, l))
            .sum()
    }

    /// Offset of symbol `symbol` (start of its prefix) inside slot `slot`.
    pub fn symbol_offset(&self, slot: usize, symbol: usize) -> usize {
        (0..symbol).map(|l| self.nfft + self.cp_len(slot, l)).sum()
    }

    /// Total samples of slots `first..first + n`.
    pub fn span_len(&self, first_slot: usize, n_slots: usize) -> usize {
        (first_slot..first_slot + n_slots).map(|s| self.slot_len(s)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_numerology() {
        let c = CarrierConfig::mmwave_default();
        assert_eq!(c.sample_rate_hz, 61.44e6);
        assert_eq!(c.n_subcarriers(), 792);
        assert_eq!(c.cp_len(0, 0), 104);
        assert_eq!(c.cp_len(0, 1), 72);
        assert_eq!(c.cp_len(1, 0), 72);
        assert_eq!(c.cp_len(2, 0), 104);
        assert_eq!(c.slots_per_frame(), 40);
    }

    #[test]
    fn millisecond_bookkeeping_closes() {
        let c = CarrierConfig::mmwave_default();
        assert_eq!(c.span_len(0, 4) as f64, c.sample_rate_hz / 1000.0);
        // each 0.5 ms closes on its own
        assert_eq!(c.span_len(0, 2), 30_720);
        assert_eq!(c.slot_len(0), 14 * 1024 + 104 + 13 * 72);
        assert_eq!(c.slot_len(1), 14 * 1024 + 14 * 72);
    }

    #[test]
    fn other_numerologies_close() {
        for (nfft, scs) in [(2048, 15e3), (1024, 30e3), (4096, 120e3)] {
            let c = CarrierConfig::normal_cp(nfft, scs, 10).unwrap();
            let per_ms = c.slots_per_subframe();
            assert_eq!(c.span_len(0, per_ms) as f64, c.sample_rate_hz / 1000.0, "{nfft} {scs}");
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(
            CarrierConfig::normal_cp(1024, 60e3, 0),
            Err(Error::DegenerateAllocation(_))
        ));
        assert!(matches!(
            CarrierConfig::normal_cp(1024, 60e3, 86),
            Err(Error::GridTooWide { .. })
        ));
        assert!(CarrierConfig::normal_cp(1024, 50e3, 10).is_err());
    }
}
