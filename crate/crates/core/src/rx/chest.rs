use crate::error::{Error, Result};
use crate::grid::ResourceGrid;
use crate::refsig::PilotSet;
use num_complex::Complex64;

pub const NOISE_VAR_FLOOR: f64 = 1e-12;

/// Channel estimate `h[(subcarrier, symbol, rx, layer)]` and noise variance.
///
/// With a single front-loaded DM-RS symbol the estimate is constant in time,
/// so only one frequency response per `(rx, layer)` is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    h: Vec<Complex64>,
    n_subcarriers: usize,
    n_symbols: usize,
    n_rx: usize,
    n_layers: usize,
    pub noise_var: f64,
}

impl ChannelEstimate {
    /// Estimate from known per-`(rx, subcarrier)` gains, constant over symbols.
    pub fn from_response(response: Vec<Vec<Complex64>>, n_symbols: usize, noise_var: f64) -> Self {
        let n_rx = response.len();
        let n_subcarriers = response.first().map_or(0, Vec::len);
        Self {
            h: response.into_iter().flatten().collect(),
            n_subcarriers,
            n_symbols,
            n_rx,
            n_layers: 1,
            noise_var: noise_var.max(0.0),
        }
    }

    #[inline]
    pub fn get(&self, sc: usize, sym: usize, rx: usize, layer: usize) -> Complex64 {
        debug_assert!(sym < self.n_symbols && layer < self.n_layers);
        self.h[(rx * self.n_layers + layer) * self.n_subcarriers + sc]
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }
}

/// Least-squares estimates at the DM-RS, linearly interpolated across
/// subcarriers (extrapolated at the band edges) and held over the slot.
///
/// The noise variance comes from the residual between every interior pilot
/// and the line through its neighbours, normalized by the noise gain of that
/// prediction and floored at [`NOISE_VAR_FLOOR`].
pub fn estimate_channel(rx_grid: &ResourceGrid, dmrs: &PilotSet) -> Result<ChannelEstimate> {
    if dmrs.is_empty() {
        return Err(Error::NoPilots("DM-RS"));
    }
    let n_sc = rx_grid.n_subcarriers();
    if dmrs
        .entries
        .iter()
        .any(|p| p.subcarrier >= n_sc || p.symbol >= rx_grid.n_symbols())
    {
        return Err(Error::NoPilots("DM-RS outside the received grid"));
    }
    // pilot subcarriers, ascending; average over symbols if several carry DM-RS
    let mut subs: Vec<usize> = dmrs.entries.iter().map(|p| p.subcarrier).collect();
    subs.sort_unstable();
    subs.dedup();

    let n_rx = rx_grid.n_ports();
    let mut h = Vec::with_capacity(n_rx * n_sc);
    let mut resid_sum = 0.0;
    let mut resid_n = 0usize;
    for rx in 0..n_rx {
        let mut ls = vec![Complex64::new(0.0, 0.0); subs.len()];
        let mut cnt = vec![0usize; subs.len()];
        for p in &dmrs.entries {
            let i = subs.binary_search(&p.subcarrier).expect("collected above");
            ls[i] += rx_grid.get(p.subcarrier, p.symbol, rx) / p.value;
            cnt[i] += 1;
        }
        for (v, c) in ls.iter_mut().zip(&cnt) {
            *v /= *c as f64;
        }

        for i in 1..subs.len().saturating_sub(1) {
            let (a, b, c) = (subs[i - 1] as f64, subs[i] as f64, subs[i + 1] as f64);
            let w = (c - b) / (c - a);
            let pred = ls[i - 1] * w + ls[i + 1] * (1.0 - w);
            // per-pilot noise variance is sigma^2 / count; assume equal counts
            let gain = 1.0 + w * w + (1.0 - w) * (1.0 - w);
            resid_sum += (ls[i] - pred).norm_sqr() / gain * cnt[i] as f64;
            resid_n += 1;
        }

        h.extend(interpolate(&subs, &ls, n_sc));
    }
    let noise_var = if resid_n > 0 {
        (resid_sum / resid_n as f64).max(NOISE_VAR_FLOOR)
    } else {
        NOISE_VAR_FLOOR
    };
    Ok(ChannelEstimate {
        h,
        n_subcarriers: n_sc,
        n_symbols: rx_grid.n_symbols(),
        n_rx,
        n_layers: 1,
        noise_var,
    })
}

fn interpolate(x: &[usize], y: &[Complex64], n: usize) -> Vec<Complex64> {
    if x.len() == 1 {
        return vec![y[0]; n];
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for k in 0..n {
        while seg + 2 < x.len() && k > x[seg + 1] {
            seg += 1;
        }
        let (x0, x1) = (x[seg] as f64, x[seg + 1] as f64);
        let t = (k as f64 - x0) / (x1 - x0);
        out.push(y[seg] * (1.0 - t) + y[seg + 1] * t);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carrier::CarrierConfig;
    use crate::refsig::gen_dmrs;
    use crate::seed::{derive_seed, SeedLabel};
    use rand_distr::{Distribution, StandardNormal};

    fn received(h: impl Fn(usize) -> Complex64, noise_var: f64, seed: u64) -> (ResourceGrid, PilotSet) {
        let cfg = CarrierConfig::mmwave_default();
        let d = gen_dmrs(&cfg, 0, SeedLabel(1));
        let mut g = ResourceGrid::new(792, 14, 1, 0);
        let mut rng = derive_seed(seed, 0, "chest-test").rng();
        let s = (noise_var / 2.0).sqrt();
        for p in &d.entries {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            g.set(
                p.subcarrier,
                p.symbol,
                0,
                h(p.subcarrier) * p.value + Complex64::new(a * s, b * s),
            );
        }
        (g, d)
    }

    #[test]
    fn flat_channel_exact() {
        let (g, d) = received(|_| Complex64::new(2.0, 0.0), 0.0, 0);
        let e = estimate_channel(&g, &d).unwrap();
        for k in 0..792 {
            for l in 0..14 {
                assert!((e.get(k, l, 0, 0) - 2.0).norm() < 1e-9);
            }
        }
        assert!(e.noise_var <= 1e-9);
    }

    #[test]
    fn linear_channel_interpolates_exactly() {
        let (a, b) = (Complex64::new(0.003, -0.001), Complex64::new(0.5, 0.8));
        let (g, d) = received(|k| a * k as f64 + b, 0.0, 0);
        let e = estimate_channel(&g, &d).unwrap();
        for k in 0..792 {
            assert!((e.get(k, 5, 0, 0) - (a * k as f64 + b)).norm() < 1e-6, "k={k}");
        }
    }

    #[test]
    fn noise_variance_within_factor_two() {
        let true_var = 0.1; // 10 dB below unit pilots
        let mut ok = 0;
        for seed in 0..100 {
            let (g, d) = received(|_| Complex64::new(1.0, 0.0), true_var, seed);
            let v = estimate_channel(&g, &d).unwrap().noise_var;
            if v > true_var / 2.0 && v < true_var * 2.0 {
                ok += 1;
            }
        }
        assert_eq!(ok, 100);
    }

    #[test]
    fn no_pilots() {
        let g = ResourceGrid::new(792, 14, 1, 0);
        let empty = PilotSet {
            entries: vec![],
            kind: crate::refsig::PilotKind::Dmrs,
            slot_index: 0,
            seed_label: SeedLabel(0),
        };
        assert!(matches!(estimate_channel(&g, &empty), Err(Error::NoPilots(_))));
    }
}
