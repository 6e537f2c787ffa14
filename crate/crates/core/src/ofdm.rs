//! CP-OFDM modulation and demodulation.
//!
//! Subcarrier `k` of an `N`-subcarrier grid sits on FFT bin
//! `(k + nfft - N/2) mod nfft`, so the allocation is centred on DC and the
//! guard bins stay zero. Transforms are scaled by `1/sqrt(nfft)`, which makes
//! them unitary: grid energy equals waveform energy with the prefixes removed.

use crate::carrier::CarrierConfig;
use crate::error::{Error, Result};
use crate::fft;
use crate::grid::ResourceGrid;
use num_complex::Complex64;

#[inline]
fn bin_of(k: usize, n_sc: usize, nfft: usize) -> usize {
    (k + nfft - n_sc / 2) % nfft
}

fn check_width(n_sc: usize, cfg: &CarrierConfig) -> Result<()> {
    if n_sc > cfg.nfft {
        return Err(Error::GridTooWide {
            subcarriers: n_sc,
            nfft: cfg.nfft,
        });
    }
    Ok(())
}

/// Time-domain waveform of every grid port.
///
/// The grid must span whole slots starting at `grid.first_slot`.
pub fn ofdm_modulate(grid: &ResourceGrid, cfg: &CarrierConfig) -> Result<Vec<Vec<Complex64>>> {
    check_width(grid.n_subcarriers(), cfg)?;
    let sps = cfg.symbols_per_slot;
    if !grid.n_symbols().is_multiple_of(sps) {
        return Err(Error::InvalidCarrier(format!(
            "grid has {} symbols, not a whole number of {sps}-symbol slots",
            grid.n_symbols()
        )));
    }
    let n_slots = grid.n_symbols() / sps;
    let nfft = cfg.nfft;
    let n_sc = grid.n_subcarriers();
    let scale = 1.0 / (nfft as f64).sqrt();
    let ifft = fft::inverse(nfft);
    let total = cfg.span_len(grid.first_slot, n_slots);

    let mut out = Vec::with_capacity(grid.n_ports());
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for port in 0..grid.n_ports() {
        let mut wave = Vec::with_capacity(total);
        for l in 0..grid.n_symbols() {
            let slot = grid.first_slot + l / sps;
            let cp = cfg.cp_len(slot, l % sps);
            buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            for (k, v) in grid.symbol(l, port).iter().enumerate() {
                buf[bin_of(k, n_sc, nfft)] = *v;
            }
            ifft.process(&mut buf);
            buf.iter_mut().for_each(|b| *b *= scale);
            wave.extend_from_slice(&buf[nfft - cp..]);
            wave.extend_from_slice(&buf);
        }
        out.push(wave);
    }
    Ok(out)
}

/// Recover the grid of slots `first_slot..first_slot + n_slots` from one
/// waveform per receive antenna. `timing_offset` is the sample at which the
/// first slot starts; each FFT window begins right after its prefix.
pub fn ofdm_demodulate(
    rx: &[Vec<Complex64>],
    cfg: &CarrierConfig,
    first_slot: usize,
    n_slots: usize,
    timing_offset: usize,
) -> Result<ResourceGrid> {
    let n_sc = cfg.n_subcarriers();
    check_width(n_sc, cfg)?;
    if rx.is_empty() {
        return Err(Error::Empty("no receive antennas"));
    }
    let need = timing_offset + cfg.span_len(first_slot, n_slots);
    for a in rx {
        if a.len() < need || a.is_empty() {
            return Err(Error::InsufficientSamples { need, have: a.len() });
        }
    }
    let nfft = cfg.nfft;
    let sps = cfg.symbols_per_slot;
    let scale = 1.0 / (nfft as f64).sqrt();
    let fwd = fft::forward(nfft);
    let mut grid = ResourceGrid::new(n_sc, n_slots * sps, rx.len(), first_slot);
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for (port, wave) in rx.iter().enumerate() {
        let mut pos = timing_offset;
        for l in 0..n_slots * sps {
            let slot = first_slot + l / sps;
            let cp = cfg.cp_len(slot, l % sps);
            let start = pos + cp;
            buf.copy_from_slice(&wave[start..start + nfft]);
            fwd.process(&mut buf);
            let row = grid.symbol_mut(l, port);
            for (k, r) in row.iter_mut().enumerate() {
                *r = buf[bin_of(k, n_sc, nfft)] * scale;
            }
            pos += cp + nfft;
        }
    }
    Ok(grid)
}
