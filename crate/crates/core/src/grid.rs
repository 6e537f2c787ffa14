//! Resource grids and slot assembly.

use crate::carrier::{CarrierConfig, SUBCARRIERS_PER_RB};
use crate::crc::BitBlock;
use crate::error::{Error, Result};
use crate::qam::{qam_modulate, Modulation};
use crate::refsig::{PilotSet, DMRS_TYPE_A_POSITION};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReRole {
    Data,
    Dmrs,
    Ptrs,
    Empty,
}

impl fmt::Display for ReRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReRole::Data => "data",
            ReRole::Dmrs => "dmrs",
            ReRole::Ptrs => "ptrs",
            ReRole::Empty => "empty",
        })
    }
}

/// Shared-channel allocation. The allocation starts at RB 0 and spans all
/// symbols of the slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdschConfig {
    pub modulation: Modulation,
    pub n_rb: usize,
}

impl PdschConfig {
    pub fn full_grid(cfg: &CarrierConfig, modulation: Modulation) -> Self {
        Self {
            modulation,
            n_rb: cfg.n_size_grid,
        }
    }
}

/// Complex resource elements indexed `(subcarrier, symbol, port)` plus role
/// labels indexed `(subcarrier, symbol)`, shared by every port.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    n_subcarriers: usize,
    n_symbols: usize,
    n_ports: usize,
    /// Slot of symbol 0; selects the cyclic prefix pattern.
    pub first_slot: usize,
    cells: Vec<Complex64>,
    roles: Vec<ReRole>,
}

impl ResourceGrid {
    pub fn new(n_subcarriers: usize, n_symbols: usize, n_ports: usize, first_slot: usize) -> Self {
        Self {
            n_subcarriers,
            n_symbols,
            n_ports,
            first_slot,
            cells: vec![Complex64::new(0.0, 0.0); n_subcarriers * n_symbols * n_ports],
            roles: vec![ReRole::Empty; n_subcarriers * n_symbols],
        }
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    #[inline]
    fn idx(&self, sc: usize, sym: usize, port: usize) -> usize {
        debug_assert!(sc < self.n_subcarriers && sym < self.n_symbols && port < self.n_ports);
        (port * self.n_symbols + sym) * self.n_subcarriers + sc
    }

    #[inline]
    pub fn get(&self, sc: usize, sym: usize, port: usize) -> Complex64 {
        self.cells[self.idx(sc, sym, port)]
    }

    #[inline]
    pub fn set(&mut self, sc: usize, sym: usize, port: usize, v: Complex64) {
        let i = self.idx(sc, sym, port);
        self.cells[i] = v;
    }

    pub fn role(&self, sc: usize, sym: usize) -> ReRole {
        self.roles[sym * self.n_subcarriers + sc]
    }

    pub fn set_role(&mut self, sc: usize, sym: usize, role: ReRole) {
        self.roles[sym * self.n_subcarriers + sc] = role;
    }

    /// One OFDM symbol of one port, ordered by subcarrier.
    pub fn symbol(&self, sym: usize, port: usize) -> &[Complex64] {
        let s = self.idx(0, sym, port);
        &self.cells[s..s + self.n_subcarriers]
    }

    pub fn symbol_mut(&mut self, sym: usize, port: usize) -> &mut [Complex64] {
        let s = self.idx(0, sym, port);
        let n = self.n_subcarriers;
        &mut self.cells[s..s + n]
    }

    pub fn cells(&self) -> &[Complex64] {
        &self.cells
    }

    pub fn roles(&self) -> &[ReRole] {
        &self.roles
    }

    /// Copy labels from a grid of the same `(subcarrier, symbol)` shape.
    pub fn copy_roles_from(&mut self, other: &ResourceGrid) -> Result<()> {
        if other.n_subcarriers != self.n_subcarriers || other.n_symbols != self.n_symbols {
            return Err(Error::LengthMismatch(self.roles.len(), other.roles.len()));
        }
        self.roles.clone_from(&other.roles);
        Ok(())
    }

    pub fn count_role(&self, role: ReRole) -> usize {
        self.roles.iter().filter(|r| **r == role).count()
    }

    /// Data positions in mapping order: symbol by symbol, ascending subcarrier.
    pub fn data_positions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.count_role(ReRole::Data));
        for sym in 0..self.n_symbols {
            for sc in 0..self.n_subcarriers {
                if self.role(sc, sym) == ReRole::Data {
                    out.push((sc, sym));
                }
            }
        }
        out
    }

    pub fn energy(&self) -> f64 {
        self.cells.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `subcarrier,symbol,role,re,im` rows for every port-0 RE.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "subcarrier,symbol,role,re,im")?;
        for sym in 0..self.n_symbols {
            for sc in 0..self.n_subcarriers {
                let v = self.get(sc, sym, 0);
                writeln!(w, "{sc},{sym},{},{},{}", self.role(sc, sym), v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// Role labels of one slot for the given pilots.
pub fn slot_roles(cfg: &CarrierConfig, pdsch: &PdschConfig, dmrs: &PilotSet, ptrs: &PilotSet) -> Result<ResourceGrid> {
    if pdsch.n_rb == 0 {
        return Err(Error::DegenerateAllocation("zero-RB PDSCH allocation".into()));
    }
    if pdsch.n_rb > cfg.n_size_grid {
        return Err(Error::DegenerateAllocation(format!(
            "allocation of {} RB exceeds the {}-RB grid",
            pdsch.n_rb, cfg.n_size_grid
        )));
    }
    let n_sc = cfg.n_subcarriers();
    let n_sym = cfg.symbols_per_slot;
    let mut g = ResourceGrid::new(n_sc, n_sym, 1, dmrs.slot_index);
    let alloc_sc = pdsch.n_rb * SUBCARRIERS_PER_RB;
    for sym in 0..n_sym {
        if sym == DMRS_TYPE_A_POSITION {
            continue;
        }
        for sc in 0..alloc_sc {
            g.set_role(sc, sym, ReRole::Data);
        }
    }
    for p in &dmrs.entries {
        g.set_role(p.subcarrier, p.symbol, ReRole::Dmrs);
    }
    for p in &ptrs.entries {
        if g.role(p.subcarrier, p.symbol) == ReRole::Dmrs {
            return Err(Error::Config("PT-RS collides with DM-RS".into()));
        }
        g.set_role(p.subcarrier, p.symbol, ReRole::Ptrs);
    }
    Ok(g)
}

/// Number of payload bits one slot carries.
pub fn slot_payload_bits(cfg: &CarrierConfig, pdsch: &PdschConfig, dmrs: &PilotSet, ptrs: &PilotSet) -> Result<usize> {
    Ok(slot_roles(cfg, pdsch, dmrs, ptrs)?.count_role(ReRole::Data) * pdsch.modulation.bits_per_symbol())
}

/// Map a payload and its pilots onto one slot.
pub fn build_slot_grid(
    payload: &BitBlock,
    cfg: &CarrierConfig,
    pdsch: &PdschConfig,
    dmrs: &PilotSet,
    ptrs: &PilotSet,
) -> Result<ResourceGrid> {
    let mut g = slot_roles(cfg, pdsch, dmrs, ptrs)?;
    let positions = g.data_positions();
    let expected = positions.len() * pdsch.modulation.bits_per_symbol();
    if payload.len() != expected {
        return Err(Error::PayloadSize {
            expected,
            got: payload.len(),
        });
    }
    let symbols = qam_modulate(&payload.bits, pdsch.modulation)?;
    for ((sc, sym), s) in positions.into_iter().zip(symbols) {
        g.set(sc, sym, 0, s);
    }
    for p in dmrs.entries.iter().chain(&ptrs.entries) {
        g.set(p.subcarrier, p.symbol, 0, p.value);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refsig::{gen_dmrs, gen_ptrs};
    use crate::seed::SeedLabel;

    fn setup() -> (CarrierConfig, PilotSet, PilotSet) {
        let cfg = CarrierConfig::mmwave_default();
        let d = gen_dmrs(&cfg, 0, SeedLabel(1));
        let p = gen_ptrs(&cfg, 0, SeedLabel(1));
        (cfg, d, p)
    }

    #[test]
    fn default_slot_role_counts() {
        let (cfg, d, p) = setup();
        let pdsch = PdschConfig::full_grid(&cfg, Modulation::Qam64);
        let g = slot_roles(&cfg, &pdsch, &d, &p).unwrap();
        assert_eq!(g.count_role(ReRole::Data), 792 * 13 - 33 * 13);
        assert_eq!(g.count_role(ReRole::Data), 9867);
        assert_eq!(g.count_role(ReRole::Dmrs), 396);
        assert_eq!(g.count_role(ReRole::Ptrs), 429);
        let total: usize = [ReRole::Data, ReRole::Dmrs, ReRole::Ptrs, ReRole::Empty]
            .iter()
            .map(|r| g.count_role(*r))
            .sum();
        assert_eq!(total, 792 * 14);
    }

    #[test]
    fn build_places_payload_and_unit_pilots() {
        let (cfg, d, p) = setup();
        let pdsch = PdschConfig::full_grid(&cfg, Modulation::Qam256);
        let nbits = slot_payload_bits(&cfg, &pdsch, &d, &p).unwrap();
        let block = BitBlock::random(nbits, &mut SeedLabel(4).rng()).unwrap();
        let g = build_slot_grid(&block, &cfg, &pdsch, &d, &p).unwrap();
        for sym in 0..14 {
            for sc in 0..792 {
                match g.role(sc, sym) {
                    ReRole::Dmrs | ReRole::Ptrs => assert!((g.get(sc, sym, 0).norm() - 1.0).abs() < 1e-12),
                    ReRole::Empty => assert_eq!(g.get(sc, sym, 0), Complex64::new(0.0, 0.0)),
                    ReRole::Data => {}
                }
            }
        }
        let data: Vec<Complex64> = g.data_positions().iter().map(|(k, l)| g.get(*k, *l, 0)).collect();
        assert_eq!(crate::qam::qam_demodulate(&data, Modulation::Qam256), block.bits);
    }

    #[test]
    fn payload_mismatch_and_zero_rb() {
        let (cfg, d, p) = setup();
        let pdsch = PdschConfig::full_grid(&cfg, Modulation::Qam64);
        let block = BitBlock::random(1000, &mut SeedLabel(0).rng()).unwrap();
        assert!(matches!(
            build_slot_grid(&block, &cfg, &pdsch, &d, &p),
            Err(Error::PayloadSize { .. })
        ));
        let zero = PdschConfig { n_rb: 0, ..pdsch };
        assert!(matches!(
            build_slot_grid(&block, &cfg, &zero, &d, &p),
            Err(Error::DegenerateAllocation(_))
        ));
    }

    #[test]
    fn csv_dump_has_one_row_per_re() {
        let (cfg, d, p) = setup();
        let g = slot_roles(&cfg, &PdschConfig::full_grid(&cfg, Modulation::Qam64), &d, &p).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 792 * 14);
        assert!(text.lines().nth(1).unwrap().starts_with("0,0,ptrs,"));
    }
}
