use super::chest::{estimate_channel, ChannelEstimate, NOISE_VAR_FLOOR};
use super::cpe::{compensate_cpe, estimate_cpe, CpeEstimate};
use super::mmse::equalize_single_layer;
use super::timing::estimate_timing_multi;
use crate::carrier::CarrierConfig;
use crate::crc::crc24a_check;
use crate::error::{Error, Result};
use crate::grid::{slot_roles, PdschConfig, ResourceGrid};
use crate::ofdm::{ofdm_demodulate, ofdm_modulate};
use crate::qam::demap_into;
use crate::refsig::{gen_dmrs, gen_ptrs, PilotSet};
use crate::seed::SeedLabel;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Samples the FFT window is pulled back into the cyclic prefix from the
/// correlation peak, so that channel taps ahead of the strongest one do not
/// leak in from the previous symbol.
pub const TIMING_BACKOFF: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpeMode {
    WithCpe,
    WithoutCpe,
}

impl CpeMode {
    pub fn enabled(self) -> bool {
        self == CpeMode::WithCpe
    }
}

impl From<bool> for CpeMode {
    fn from(on: bool) -> Self {
        if on {
            CpeMode::WithCpe
        } else {
            CpeMode::WithoutCpe
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RxOptions {
    pub cpe: CpeMode,
    /// Known start of slot 0 instead of the correlator.
    pub genie_timing: Option<usize>,
    /// Known noise variance instead of the DM-RS residual estimate.
    pub genie_noise_var: Option<f64>,
    /// Largest lag the correlator searches.
    pub timing_search: usize,
}

impl Default for RxOptions {
    fn default() -> Self {
        Self {
            cpe: CpeMode::WithCpe,
            genie_timing: None,
            genie_noise_var: None,
            timing_search: 128,
        }
    }
}

/// What the receiver made of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRx {
    pub slot_index: usize,
    /// Hard decisions in mapping order, checksum included.
    pub bits: Vec<u8>,
    pub crc_ok: bool,
    /// Equalized data symbols in mapping order.
    pub symbols: Vec<Complex64>,
    pub cpe: Option<CpeEstimate>,
    pub noise_var: f64,
}

/// Received PDSCH of a whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct PdschRx {
    /// Sample where slot 0 starts, after the back-off.
    pub timing_offset: usize,
    pub slots: Vec<SlotRx>,
}

/// Time-domain slot-0 waveform carrying only its DM-RS.
pub fn dmrs_reference(cfg: &CarrierConfig, dmrs: &PilotSet) -> Result<Vec<Complex64>> {
    let mut g = ResourceGrid::new(cfg.n_subcarriers(), cfg.symbols_per_slot, 1, dmrs.slot_index);
    for p in &dmrs.entries {
        g.set(p.subcarrier, p.symbol, 0, p.value);
    }
    Ok(ofdm_modulate(&g, cfg)?.swap_remove(0))
}

/// Undo the linear phase an early FFT window puts on the grid.
fn remove_backoff_ramp(grid: &mut ResourceGrid, backoff: usize, nfft: usize) {
    if backoff == 0 {
        return;
    }
    let n_sc = grid.n_subcarriers();
    let ramp: Vec<Complex64> = (0..n_sc)
        .map(|k| {
            let f = k as f64 - (n_sc / 2) as f64;
            Complex64::from_polar(1.0, 2.0 * PI * f * backoff as f64 / nfft as f64)
        })
        .collect();
    for l in 0..grid.n_symbols() {
        for port in 0..grid.n_ports() {
            for (v, r) in grid.symbol_mut(l, port).iter_mut().zip(&ramp) {
                *v *= r;
            }
        }
    }
}

/// Equalize and detect one slot from its demodulated grid.
pub fn recover_slot(
    rx_grid: &ResourceGrid,
    cfg: &CarrierConfig,
    pdsch: &PdschConfig,
    dmrs: &PilotSet,
    ptrs: &PilotSet,
    opts: &RxOptions,
) -> Result<SlotRx> {
    let roles = slot_roles(cfg, pdsch, dmrs, ptrs)?;
    let mut est = estimate_channel(rx_grid, dmrs)?;
    if let Some(nv) = opts.genie_noise_var {
        est.noise_var = nv.max(NOISE_VAR_FLOOR);
    }
    let (grid, cpe) = if opts.cpe.enabled() {
        let c = estimate_cpe(rx_grid, ptrs, &est)?;
        (compensate_cpe(rx_grid, &c)?, Some(c))
    } else {
        (rx_grid.clone(), None)
    };
    let (symbols, bits) = equalize_data(&grid, &roles, &est, pdsch)?;
    Ok(SlotRx {
        slot_index: dmrs.slot_index,
        crc_ok: crc24a_check(&bits),
        bits,
        symbols,
        cpe,
        noise_var: est.noise_var,
    })
}

fn equalize_data(
    grid: &ResourceGrid,
    roles: &ResourceGrid,
    est: &ChannelEstimate,
    pdsch: &PdschConfig,
) -> Result<(Vec<Complex64>, Vec<u8>)> {
    let positions = roles.data_positions();
    let n_rx = grid.n_ports();
    let mut symbols = Vec::with_capacity(positions.len());
    let mut bits = Vec::with_capacity(positions.len() * pdsch.modulation.bits_per_symbol());
    let mut y = vec![Complex64::new(0.0, 0.0); n_rx];
    let mut h = vec![Complex64::new(0.0, 0.0); n_rx];
    for (sc, sym) in positions {
        for rx in 0..n_rx {
            y[rx] = grid.get(sc, sym, rx);
            h[rx] = est.get(sc, sym, rx, 0);
        }
        let (s, _) = equalize_single_layer(&y, &h, est.noise_var)?;
        demap_into(s, pdsch.modulation, &mut bits);
        symbols.push(s);
    }
    Ok((symbols, bits))
}

/// Timing, OFDM demodulation and per-slot detection of `n_slots` slots whose
/// pilots derive from `pilot_seed`.
pub fn recover_pdsch(
    rx: &[Vec<Complex64>],
    cfg: &CarrierConfig,
    pdsch: &PdschConfig,
    n_slots: usize,
    pilot_seed: SeedLabel,
    opts: &RxOptions,
) -> Result<PdschRx> {
    if rx.is_empty() || n_slots == 0 {
        return Err(Error::Empty("receive waveforms or slot count"));
    }
    let (timing_offset, backoff) = match opts.genie_timing {
        Some(t) => (t, 0),
        None => {
            let reference = dmrs_reference(cfg, &gen_dmrs(cfg, 0, pilot_seed))?;
            let window = (reference.len() + opts.timing_search).min(rx.iter().map(Vec::len).min().unwrap_or(0));
            let views: Vec<&[Complex64]> = rx.iter().map(|a| &a[..window]).collect();
            let peak = estimate_timing_multi(&views, &reference)?;
            let b = peak.min(TIMING_BACKOFF);
            (peak - b, b)
        }
    };
    let mut slots = Vec::with_capacity(n_slots);
    for s in 0..n_slots {
        let dmrs = gen_dmrs(cfg, s, pilot_seed);
        let ptrs = gen_ptrs(cfg, s, pilot_seed);
        let start = timing_offset + cfg.span_len(0, s);
        let mut grid = ofdm_demodulate(rx, cfg, s, 1, start)?;
        remove_backoff_ramp(&mut grid, backoff, cfg.nfft);
        slots.push(recover_slot(&grid, cfg, pdsch, &dmrs, &ptrs, opts)?);
    }
    Ok(PdschRx { timing_offset, slots })
}
