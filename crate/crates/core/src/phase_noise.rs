//! Oscillator phase noise: multi-pole/zero PSD masks and time-domain synthesis.
//!
//! The single-sideband mask is
//!
//! ```text
//! S(f) [dBc/Hz] = PSD0 + 10 log10( prod_n (1 + (f/fz_n)^az_n) / prod_m (1 + (f/fp_m)^ap_m) )
//! ```
//!
//! and is treated as a two-sided density when synthesizing trajectories.

use crate::error::{Error, Result};
use crate::fft;
use crate::seed::SeedLabel;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Minimum trajectory length accepted by [`synthesize`].
pub const MIN_SYNTH_SAMPLES: usize = 256;

/// Built-in parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PnPreset {
    A,
    B,
    C,
}

impl PnPreset {
    pub const ALL: [PnPreset; 3] = [PnPreset::A, PnPreset::B, PnPreset::C];

    /// Carrier frequency the preset was measured at, in GHz.
    pub fn native_fc_ghz(self) -> f64 {
        match self {
            PnPreset::A => 30.0,
            PnPreset::B => 60.0,
            PnPreset::C => 29.55,
        }
    }

    pub fn model(self) -> PhaseNoiseModel {
        PhaseNoiseModel::preset(self)
    }
}

impl fmt::Display for PnPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PnPreset::A => "A",
            PnPreset::B => "B",
            PnPreset::C => "C",
        };
        f.write_str(s)
    }
}

impl FromStr for PnPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(PnPreset::A),
            "B" | "b" => Ok(PnPreset::B),
            "C" | "c" => Ok(PnPreset::C),
            other => Err(Error::InvalidModel(format!("unknown preset {other:?}"))),
        }
    }
}

/// Pole/zero phase-noise mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseNoiseModel {
    pub name: PnPreset,
    pub carrier_freq_hz: f64,
    pub psd0_dbc_hz: f64,
    pub zero_freqs_hz: Vec<f64>,
    pub zero_exps: Vec<f64>,
    pub pole_freqs_hz: Vec<f64>,
    pub pole_exps: Vec<f64>,
}

const MHZ: f64 = 1e6;

impl PhaseNoiseModel {
    /// Validated constructor.
    pub fn new(
        name: PnPreset,
        carrier_freq_hz: f64,
        psd0_dbc_hz: f64,
        zero_freqs_hz: Vec<f64>,
        zero_exps: Vec<f64>,
        pole_freqs_hz: Vec<f64>,
        pole_exps: Vec<f64>,
    ) -> Result<Self> {
        if zero_freqs_hz.is_empty() || zero_freqs_hz.len() != zero_exps.len() {
            return Err(Error::InvalidModel(format!(
                "need N >= 1 zeros with matching exponents, got {} / {}",
                zero_freqs_hz.len(),
                zero_exps.len()
            )));
        }
        if pole_freqs_hz.is_empty() || pole_freqs_hz.len() != pole_exps.len() {
            return Err(Error::InvalidModel(format!(
                "need M >= 1 poles with matching exponents, got {} / {}",
                pole_freqs_hz.len(),
                pole_exps.len()
            )));
        }
        let all_positive = zero_freqs_hz
            .iter()
            .chain(&zero_exps)
            .chain(&pole_freqs_hz)
            .chain(&pole_exps)
            .all(|v| v.is_finite() && *v > 0.0);
        if !all_positive {
            return Err(Error::InvalidModel(
                "frequencies and exponents must be strictly positive".into(),
            ));
        }
        if !psd0_dbc_hz.is_finite() || !(carrier_freq_hz.is_finite() && carrier_freq_hz > 0.0) {
            return Err(Error::InvalidModel("non-finite PSD0 or carrier".into()));
        }
        Ok(Self {
            name,
            carrier_freq_hz,
            psd0_dbc_hz,
            zero_freqs_hz,
            zero_exps,
            pole_freqs_hz,
            pole_exps,
        })
    }

    /// Tabulated parameter sets. Set C is kept exactly as tabulated even though
    /// its zeros sit below its poles (see `sim psd --model C`).
    pub fn preset(p: PnPreset) -> Self {
        let (fc, psd0, fp, fz, az, ap): (f64, f64, [f64; 3], [f64; 3], [f64; 3], [f64; 3]) = match p {
            PnPreset::A => (
                30e9,
                -79.4,
                [0.1, 0.2, 8.0],
                [1.8, 2.2, 40.0],
                [2.0, 2.0, 2.0],
                [2.0, 2.0, 2.0],
            ),
            PnPreset::B => (
                60e9,
                -70.0,
                [0.005, 0.4, 0.6],
                [0.02, 6.0, 10.0],
                [2.0, 2.0, 2.0],
                [2.0, 2.0, 2.0],
            ),
            PnPreset::C => (
                29.55e9,
                32.0,
                [1.0, 1.6, 30.0],
                [0.003, 0.55, 280.0],
                [2.37, 2.7, 2.53],
                [3.3, 3.3, 1.0],
            ),
        };
        Self {
            name: p,
            carrier_freq_hz: fc,
            psd0_dbc_hz: psd0,
            zero_freqs_hz: fz.iter().map(|f| f * MHZ).collect(),
            zero_exps: az.to_vec(),
            pole_freqs_hz: fp.iter().map(|f| f * MHZ).collect(),
            pole_exps: ap.to_vec(),
        }
    }

    /// Mask level in dBc/Hz at a non-negative offset.
    pub fn psd_at(&self, offset_hz: f64) -> f64 {
        let f = offset_hz.abs();
        if f == 0.0 {
            return self.psd0_dbc_hz;
        }
        // Sum of logs instead of a product of ratios: the high-order terms of
        // set C overflow nothing this way.
        let num: f64 = self
            .zero_freqs_hz
            .iter()
            .zip(&self.zero_exps)
            .map(|(fz, a)| log10_one_plus_pow(f / fz, *a))
            .sum();
        let den: f64 = self
            .pole_freqs_hz
            .iter()
            .zip(&self.pole_exps)
            .map(|(fp, a)| log10_one_plus_pow(f / fp, *a))
            .sum();
        self.psd0_dbc_hz + 10.0 * (num - den)
    }

    /// Linear two-sided density (rad^2/Hz) at an offset.
    pub fn psd_linear(&self, offset_hz: f64) -> f64 {
        10f64.powf(self.psd_at(offset_hz) / 10.0)
    }

    /// Closed-form limit of `psd_at` as the offset grows without bound, valid
    /// when the zero and pole exponent sums agree.
    pub fn high_offset_limit_db(&self) -> Option<f64> {
        let sz: f64 = self.zero_exps.iter().sum();
        let sp: f64 = self.pole_exps.iter().sum();
        if (sz - sp).abs() > 1e-12 {
            return None;
        }
        let lz: f64 = self
            .zero_freqs_hz
            .iter()
            .zip(&self.zero_exps)
            .map(|(f, a)| a * f.log10())
            .sum();
        let lp: f64 = self
            .pole_freqs_hz
            .iter()
            .zip(&self.pole_exps)
            .map(|(f, a)| a * f.log10())
            .sum();
        Some(self.psd0_dbc_hz + 10.0 * (lp - lz))
    }
}

/// log10(1 + x^a) without overflow for large x.
fn log10_one_plus_pow(x: f64, a: f64) -> f64 {
    let lp = a * x.log10();
    if lp > 15.0 {
        lp + (1.0 + 10f64.powf(-lp)).log10()
    } else {
        (1.0 + 10f64.powf(lp)).log10()
    }
}

/// Sampled phase trajectory in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrajectory {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    pub seed_label: SeedLabel,
}

impl PhaseTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Constant-phase trajectory, mostly for tests.
    pub fn constant(phi: f64, n: usize, sample_rate_hz: f64) -> Self {
        Self {
            samples: vec![phi; n],
            sample_rate_hz,
            seed_label: SeedLabel(0),
        }
    }
}

/// Synthesize a real phase trajectory whose periodogram follows the mask.
///
/// Bins `1..n/2` receive independent circular Gaussian coefficients with
/// variance `S(f_k) * df`, their mirrors get the conjugates, and DC and
/// Nyquist stay zero. An unnormalized inverse DFT then yields `phi[n]` with
/// `E[phi^2] = sum_k S(f_k) df`.
pub fn synthesize(
    model: &PhaseNoiseModel,
    sample_rate_hz: f64,
    n_samples: usize,
    seed_label: SeedLabel,
) -> Result<PhaseTrajectory> {
    if n_samples < MIN_SYNTH_SAMPLES || !n_samples.is_multiple_of(2) {
        return Err(Error::TooShort {
            got: n_samples,
            min: MIN_SYNTH_SAMPLES,
        });
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::InvalidCarrier(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    let n = n_samples;
    let df = sample_rate_hz / n as f64;
    let mut rng = seed_label.rng();
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    for k in 1..n / 2 {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        let amp = (model.psd_linear(k as f64 * df) * df / 2.0).sqrt();
        let c = Complex64::new(re * amp, im * amp);
        spec[k] = c;
        spec[n - k] = c.conj();
    }
    fft::ifft_in_place(&mut spec);
    Ok(PhaseTrajectory {
        samples: spec.into_iter().map(|c| c.re).collect(),
        sample_rate_hz,
        seed_label,
    })
}

/// Rotate each sample by the trajectory: `out[n] = x[n] * exp(j phi[n])`.
pub fn apply_phase_noise(samples: &[Complex64], traj: &PhaseTrajectory) -> Result<Vec<Complex64>> {
    if traj.len() < samples.len() {
        return Err(Error::TrajectoryTooShort {
            traj: traj.len(),
            wave: samples.len(),
        });
    }
    Ok(samples
        .iter()
        .zip(&traj.samples)
        .map(|(x, phi)| x * Complex64::from_polar(1.0, *phi))
        .collect())
}

/// Log-spaced `(offset, level)` pairs for plotting a mask.
pub fn psd_curve(model: &PhaseNoiseModel, fmin: f64, fmax: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    if !(fmin > 0.0 && fmax > fmin) || points < 2 {
        return Err(Error::Config(format!(
            "need 0 < fmin < fmax and at least 2 points (fmin={fmin}, fmax={fmax}, points={points})"
        )));
    }
    let (l0, l1) = (fmin.log10(), fmax.log10());
    Ok((0..points)
        .map(|i| {
            let f = 10f64.powf(l0 + (l1 - l0) * i as f64 / (points - 1) as f64);
            (f, model.psd_at(f))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_offset_returns_psd0_exactly() {
        assert_eq!(PnPreset::A.model().psd_at(0.0), -79.4);
        assert_eq!(PnPreset::B.model().psd_at(0.0), -70.0);
        assert_eq!(PnPreset::C.model().psd_at(0.0), 32.0);
    }

    #[test]
    fn preset_tables_are_in_hz() {
        let a = PnPreset::A.model();
        assert_eq!(a.pole_freqs_hz, vec![0.1e6, 0.2e6, 8e6]);
        assert_eq!(a.zero_freqs_hz, vec![1.8e6, 2.2e6, 40e6]);
        let c = PnPreset::C.model();
        assert_eq!(c.zero_freqs_hz[0], 3e3);
        assert_eq!(c.zero_exps, vec![2.37, 2.7, 2.53]);
        assert_eq!(c.pole_exps, vec![3.3, 3.3, 1.0]);
        assert_eq!(c.carrier_freq_hz, 29.55e9);
    }

    #[test]
    fn model_a_high_offset_limit() {
        let a = PnPreset::A.model();
        // psd0 + 20 log10(prod fp / prod fz)
        let closed = -79.4 + 20.0 * ((0.1 * 0.2 * 8.0) / (1.8 * 2.2 * 40.0f64)).log10();
        assert!((a.high_offset_limit_db().unwrap() - closed).abs() < 1e-9);
        assert!((closed - (-139.3)).abs() < 0.1);
        assert!((a.psd_at(1e12) - closed).abs() < 1e-3);
    }

    #[test]
    fn psd_finite_and_continuous_on_range() {
        for p in PnPreset::ALL {
            let m = p.model();
            let fmax = 10.0
                * m.pole_freqs_hz
                    .iter()
                    .chain(&m.zero_freqs_hz)
                    .cloned()
                    .fold(0.0, f64::max);
            assert!((m.psd_at(1e-3) - m.psd_at(0.0)).abs() < 1e-3);
            // log-spaced so the steep low-offset corners are resolved too
            let mut prev = m.psd_at(1.0);
            let steps = 200_000;
            for i in 1..=steps {
                let f = fmax.powf(i as f64 / steps as f64);
                let v = m.psd_at(f);
                assert!(v.is_finite());
                assert!((v - prev).abs() < 1.0, "{p} jump at {f}: {prev} -> {v}");
                prev = v;
            }
        }
    }

    #[test]
    fn invalid_models_rejected() {
        let bad = PhaseNoiseModel::new(PnPreset::A, 30e9, -80.0, vec![1e6], vec![], vec![1e5], vec![2.0]);
        assert!(bad.is_err());
        let bad = PhaseNoiseModel::new(PnPreset::A, 30e9, -80.0, vec![-1e6], vec![2.0], vec![1e5], vec![2.0]);
        assert!(bad.is_err());
        let ok = PhaseNoiseModel::new(PnPreset::A, 30e9, -80.0, vec![1e6], vec![2.0], vec![1e5], vec![2.0]);
        assert!(ok.is_ok());
    }

    #[test]
    fn synthesize_is_deterministic_and_seed_sensitive() {
        let m = PnPreset::A.model();
        let a = synthesize(&m, 61.44e6, 4096, SeedLabel(5)).unwrap();
        let b = synthesize(&m, 61.44e6, 4096, SeedLabel(5)).unwrap();
        let c = synthesize(&m, 61.44e6, 4096, SeedLabel(6)).unwrap();
        assert_eq!(a, b);
        assert!(a.samples.iter().zip(&c.samples).any(|(x, y)| x != y));
    }

    #[test]
    fn synthesize_nondegenerate() {
        let t = synthesize(&PnPreset::A.model(), 61.44e6, 1 << 16, SeedLabel(1)).unwrap();
        assert_eq!(t.len(), 1 << 16);
        assert!(t.samples.iter().all(|v| v.is_finite()));
        let mean = t.samples.iter().sum::<f64>() / t.len() as f64;
        let var = t.samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t.len() as f64;
        assert!(var > 0.0);
        assert!(mean.abs() < 1e-9, "DC bin is zero so the mean vanishes: {mean}");
    }

    #[test]
    fn synthesize_rejects_short_or_odd() {
        let m = PnPreset::A.model();
        assert!(matches!(
            synthesize(&m, 61.44e6, 128, SeedLabel(0)),
            Err(Error::TooShort { .. })
        ));
        assert!(matches!(
            synthesize(&m, 61.44e6, 1001, SeedLabel(0)),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn apply_zero_and_pi() {
        let x: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let zero = PhaseTrajectory::constant(0.0, 8, 1.0);
        assert_eq!(apply_phase_noise(&x, &zero).unwrap(), x);
        let pi = PhaseTrajectory::constant(std::f64::consts::PI, 8, 1.0);
        for (o, i) in apply_phase_noise(&x, &pi).unwrap().iter().zip(&x) {
            assert!((o + i).norm() < 1e-12);
        }
    }

    #[test]
    fn apply_rejects_short_trajectory() {
        let x = vec![Complex64::new(1.0, 0.0); 10];
        let t = PhaseTrajectory::constant(0.0, 9, 1.0);
        assert!(matches!(
            apply_phase_noise(&x, &t),
            Err(Error::TrajectoryTooShort { .. })
        ));
    }

    #[test]
    fn psd_curve_log_spacing() {
        let c = psd_curve(&PnPreset::A.model(), 1e3, 1e9, 7).unwrap();
        assert_eq!(c.len(), 7);
        assert!((c[0].0 - 1e3).abs() < 1e-6);
        assert!((c[6].0 - 1e9).abs() < 1e-3);
        assert!((c[3].0 - 1e6).abs() < 1e-3);
        assert!(psd_curve(&PnPreset::A.model(), 0.0, 1e9, 7).is_err());
    }
}
