//! DM-RS and PT-RS placement and pilot values.
//!
//! Positions follow DM-RS configuration type 1 (single port, length 1, type A
//! position 2, no additional positions) and PT-RS with time density 1,
//! frequency density 2 and RE offset '00'. Values are QPSK drawn from a
//! ChaCha stream keyed by `seed_label.child(slot, kind)`, consumed in
//! ascending (symbol, subcarrier) order. Positions never depend on the RNG.

use crate::carrier::{CarrierConfig, SUBCARRIERS_PER_RB};
use crate::seed::SeedLabel;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

/// Slot-relative symbol carrying the front-loaded DM-RS.
pub const DMRS_TYPE_A_POSITION: usize = 2;
/// PT-RS in every `L` symbols.
pub const PTRS_TIME_DENSITY: usize = 1;
/// PT-RS on one subcarrier every `K` resource blocks.
pub const PTRS_FREQ_DENSITY: usize = 2;
/// Subcarrier within the selected RB.
pub const PTRS_RE_OFFSET: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PilotKind {
    Dmrs,
    Ptrs,
}

impl PilotKind {
    fn label(self) -> &'static str {
        match self {
            PilotKind::Dmrs => "dmrs",
            PilotKind::Ptrs => "ptrs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pilot {
    pub subcarrier: usize,
    /// Slot-relative symbol index.
    pub symbol: usize,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotSet {
    pub entries: Vec<Pilot>,
    pub kind: PilotKind,
    pub slot_index: usize,
    pub seed_label: SeedLabel,
}

impl PilotSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct symbols that carry at least one pilot, ascending.
    pub fn symbols(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.entries.iter().map(|p| p.symbol).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn in_symbol(&self, symbol: usize) -> impl Iterator<Item = &Pilot> {
        self.entries.iter().filter(move |p| p.symbol == symbol)
    }
}

fn qpsk<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let b: u8 = rng.random_range(0..4);
    let re = if b & 2 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    let im = if b & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    Complex64::new(re, im)
}

/// DM-RS subcarriers: every even subcarrier of the allocation.
pub fn dmrs_subcarriers(cfg: &CarrierConfig) -> impl Iterator<Item = usize> {
    (0..cfg.n_subcarriers()).step_by(2)
}

/// PT-RS subcarriers: offset within every `PTRS_FREQ_DENSITY`-th RB.
pub fn ptrs_subcarriers(cfg: &CarrierConfig) -> impl Iterator<Item = usize> {
    (0..cfg.n_size_grid)
        .step_by(PTRS_FREQ_DENSITY)
        .map(|rb| rb * SUBCARRIERS_PER_RB + PTRS_RE_OFFSET)
}

/// PT-RS symbols: every non-DM-RS symbol, thinned by the time density.
pub fn ptrs_symbols(cfg: &CarrierConfig) -> Vec<usize> {
    // time density counts from the DM-RS symbol, like the NR rule
    (0..cfg.symbols_per_slot)
        .filter(|&l| l != DMRS_TYPE_A_POSITION)
        .filter(|&l| l.abs_diff(DMRS_TYPE_A_POSITION).is_multiple_of(PTRS_TIME_DENSITY))
        .collect()
}

pub fn gen_dmrs(cfg: &CarrierConfig, slot_index: usize, seed_label: SeedLabel) -> PilotSet {
    let mut rng = seed_label.child(slot_index as u64, PilotKind::Dmrs.label()).rng();
    let entries = dmrs_subcarriers(cfg)
        .map(|k| Pilot {
            subcarrier: k,
            symbol: DMRS_TYPE_A_POSITION,
            value: qpsk(&mut rng),
        })
        .collect();
    PilotSet {
        entries,
        kind: PilotKind::Dmrs,
        slot_index,
        seed_label,
    }
}

pub fn gen_ptrs(cfg: &CarrierConfig, slot_index: usize, seed_label: SeedLabel) -> PilotSet {
    let mut rng = seed_label.child(slot_index as u64, PilotKind::Ptrs.label()).rng();
    let subcarriers: Vec<usize> = ptrs_subcarriers(cfg).collect();
    // one value per subcarrier, repeated over the slot
    let values: Vec<Complex64> = subcarriers.iter().map(|_| qpsk(&mut rng)).collect();
    let mut entries = Vec::new();
    for l in ptrs_symbols(cfg) {
        for (k, v) in subcarriers.iter().zip(&values) {
            entries.push(Pilot {
                subcarrier: *k,
                symbol: l,
                value: *v,
            });
        }
    }
    PilotSet {
        entries,
        kind: PilotKind::Ptrs,
        slot_index,
        seed_label,
    }
}
