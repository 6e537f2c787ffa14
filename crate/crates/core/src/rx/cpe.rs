use super::chest::ChannelEstimate;
use crate::error::{Error, Result};
use crate::grid::ResourceGrid;
use crate::refsig::PilotSet;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Per-symbol common phase error of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct CpeEstimate {
    /// Phase per OFDM symbol, in (-pi, pi].
    pub phi: Vec<f64>,
    /// PT-RS count behind each entry; zero where the value was carried over.
    pub pilot_count: Vec<usize>,
}

impl CpeEstimate {
    /// `symbol,phi_rad,pilot_count` rows, with symbols offset by `first_symbol`.
    pub fn write_csv_rows<W: std::io::Write>(&self, first_symbol: usize, mut w: W) -> std::io::Result<()> {
        for (l, (p, c)) in self.phi.iter().zip(&self.pilot_count).enumerate() {
            writeln!(w, "{},{},{}", first_symbol + l, p, c)?;
        }
        Ok(())
    }
}

fn wrap(phi: f64) -> f64 {
    if phi <= -PI {
        phi + 2.0 * PI
    } else {
        phi
    }
}

/// Correlate every PT-RS against its channel-weighted pilot:
/// `phi_l = arg sum_{rx,k} y[k,l,rx] conj(h[k,l,rx] p[k,l])`.
///
/// For a common rotation in white Gaussian noise this is the maximum
/// likelihood (and MMSE) estimator; the noise variance is constant over the
/// slot, so the weights are uniform. Symbols without PT-RS take the nearest
/// preceding estimate, or the nearest following one at the start of a slot.
pub fn estimate_cpe(rx_grid: &ResourceGrid, ptrs: &PilotSet, est: &ChannelEstimate) -> Result<CpeEstimate> {
    if ptrs.is_empty() {
        return Err(Error::NoPilots("PT-RS"));
    }
    let n_sym = rx_grid.n_symbols();
    let mut corr = vec![Complex64::new(0.0, 0.0); n_sym];
    let mut count = vec![0usize; n_sym];
    for p in &ptrs.entries {
        if p.symbol >= n_sym || p.subcarrier >= rx_grid.n_subcarriers() {
            return Err(Error::NoPilots("PT-RS outside the received grid"));
        }
        for rx in 0..rx_grid.n_ports() {
            let reference = est.get(p.subcarrier, p.symbol, rx, 0) * p.value;
            corr[p.symbol] += rx_grid.get(p.subcarrier, p.symbol, rx) * reference.conj();
        }
        count[p.symbol] += 1;
    }
    let mut phi: Vec<Option<f64>> = corr
        .iter()
        .zip(&count)
        .map(|(c, n)| (*n > 0).then(|| wrap(c.arg())))
        .collect();
    let first = phi.iter().flatten().copied().next().unwrap_or(0.0);
    let mut last = first;
    for p in phi.iter_mut() {
        match p {
            Some(v) => last = *v,
            None => *p = Some(last),
        }
    }
    Ok(CpeEstimate {
        phi: phi.into_iter().map(|p| p.unwrap_or(0.0)).collect(),
        pilot_count: count,
    })
}

/// Rotate every RE of symbol `l` by `exp(j phi[l])`.
pub fn rotate_symbols(grid: &ResourceGrid, phi: &[f64]) -> Result<ResourceGrid> {
    if phi.len() != grid.n_symbols() {
        return Err(Error::LengthMismatch(phi.len(), grid.n_symbols()));
    }
    let mut out = grid.clone();
    for (l, p) in phi.iter().enumerate() {
        let r = Complex64::from_polar(1.0, *p);
        for port in 0..grid.n_ports() {
            out.symbol_mut(l, port).iter_mut().for_each(|v| *v *= r);
        }
    }
    Ok(out)
}

/// Undo the estimated rotation: symbol `l` is multiplied by `exp(-j phi_l)`.
pub fn compensate_cpe(rx_grid: &ResourceGrid, cpe: &CpeEstimate) -> Result<ResourceGrid> {
    let neg: Vec<f64> = cpe.phi.iter().map(|p| -p).collect();
    rotate_symbols(rx_grid, &neg)
}
