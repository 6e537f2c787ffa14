//! Tapped-delay-line Rayleigh fading and additive white Gaussian noise.

use crate::error::{Error, Result};
use crate::seed::SeedLabel;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// Power-delay profile. Linear tap powers always sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdlProfile {
    pub name: String,
    pub tap_delays_s: Vec<f64>,
    pub tap_powers_db: Vec<f64>,
    /// Maximum Doppler; only 0 (static within a drop) is simulated.
    pub doppler_hz: f64,
}

impl TdlProfile {
    /// Build a profile, renormalizing `powers_db` to unit total power.
    pub fn new(name: impl Into<String>, delays_s: Vec<f64>, powers_db: Vec<f64>) -> Result<Self> {
        if delays_s.is_empty() || delays_s.len() != powers_db.len() {
            return Err(Error::InvalidProfile(format!(
                "need matching non-empty delay/power lists, got {} / {}",
                delays_s.len(),
                powers_db.len()
            )));
        }
        if delays_s.iter().any(|d| !d.is_finite() || *d < 0.0) || delays_s.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidProfile(
                "delays must be non-negative and non-decreasing".into(),
            ));
        }
        if powers_db.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidProfile("non-finite tap power".into()));
        }
        let total: f64 = powers_db.iter().map(|p| 10f64.powf(p / 10.0)).sum();
        let offset = 10.0 * total.log10();
        Ok(Self {
            name: name.into(),
            tap_delays_s: delays_s,
            tap_powers_db: powers_db.iter().map(|p| p - offset).collect(),
            doppler_hz: 0.0,
        })
    }

    /// Single 0 dB tap: frequency-flat Rayleigh fading.
    pub fn flat() -> Self {
        Self::new("flat", vec![0.0], vec![0.0]).expect("valid")
    }

    /// Three taps at 0/50/120 ns with 0/-3/-6 dB before normalization.
    pub fn tdl3() -> Self {
        Self::new("tdl3", vec![0.0, 50e-9, 120e-9], vec![0.0, -3.0, -6.0]).expect("valid")
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "flat" => Some(Self::flat()),
            "tdl3" => Some(Self::tdl3()),
            _ => None,
        }
    }

    pub fn n_taps(&self) -> usize {
        self.tap_delays_s.len()
    }

    pub fn linear_powers(&self) -> Vec<f64> {
        self.tap_powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect()
    }

    /// Tap delays rounded to whole samples.
    pub fn delay_samples(&self, sample_rate_hz: f64) -> Vec<usize> {
        self.tap_delays_s
            .iter()
            .map(|d| (d * sample_rate_hz).round() as usize)
            .collect()
    }
}

/// Tap gains indexed `(tap, tx, rx)` for one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    taps: Vec<Complex64>,
    pub profile: TdlProfile,
    pub n_tx: usize,
    pub n_rx: usize,
    pub seed_label: SeedLabel,
}

impl ChannelRealization {
    /// Deterministic channel from explicit gains, laid out `(tap, tx, rx)`.
    pub fn from_gains(profile: TdlProfile, n_tx: usize, n_rx: usize, taps: Vec<Complex64>) -> Result<Self> {
        if n_tx == 0 || n_rx == 0 {
            return Err(Error::Antennas("zero antennas".into()));
        }
        if taps.len() != profile.n_taps() * n_tx * n_rx {
            return Err(Error::LengthMismatch(taps.len(), profile.n_taps() * n_tx * n_rx));
        }
        Ok(Self {
            taps,
            profile,
            n_tx,
            n_rx,
            seed_label: SeedLabel(0),
        })
    }

    /// `(n_taps, n_tx, n_rx)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.profile.n_taps(), self.n_tx, self.n_rx)
    }

    pub fn gain(&self, tap: usize, tx: usize, rx: usize) -> Complex64 {
        self.taps[(tap * self.n_tx + tx) * self.n_rx + rx]
    }

    /// Frequency response of the `(tx, rx)` link at normalized frequency
    /// `bin / nfft`, with delays rounded at `sample_rate_hz`.
    pub fn frequency_response(&self, tx: usize, rx: usize, bin: f64, nfft: usize, sample_rate_hz: f64) -> Complex64 {
        self.profile
            .delay_samples(sample_rate_hz)
            .iter()
            .enumerate()
            .map(|(t, d)| {
                self.gain(t, tx, rx)
                    * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * bin * *d as f64 / nfft as f64)
            })
            .sum()
    }
}

fn cn<R: rand::Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Independent Rayleigh taps for every antenna pair.
pub fn tdl_realize(
    profile: &TdlProfile,
    n_tx: usize,
    n_rx: usize,
    seed_label: SeedLabel,
) -> Result<ChannelRealization> {
    if n_tx == 0 || n_rx == 0 {
        return Err(Error::Antennas(format!("n_tx={n_tx}, n_rx={n_rx}")));
    }
    let mut rng = seed_label.rng();
    let mut taps = Vec::with_capacity(profile.n_taps() * n_tx * n_rx);
    for p in profile.linear_powers() {
        for _ in 0..n_tx * n_rx {
            taps.push(cn(&mut rng, p));
        }
    }
    Ok(ChannelRealization {
        taps,
        profile: profile.clone(),
        n_tx,
        n_rx,
        seed_label,
    })
}

/// Spread one layer over `n_tx` ports with equal weights `1/sqrt(n_tx)`.
pub fn precode_single_layer(wave: &[Complex64], n_tx: usize) -> Vec<Vec<Complex64>> {
    let w = 1.0 / (n_tx as f64).sqrt();
    (0..n_tx).map(|_| wave.iter().map(|s| s * w).collect()).collect()
}

/// Convolve every transmit port with its taps and sum per receive antenna.
/// Outputs are longer than the inputs by the largest delay so no energy is
/// dropped.
pub fn apply_channel(
    tx: &[Vec<Complex64>],
    realization: &ChannelRealization,
    sample_rate_hz: f64,
) -> Result<Vec<Vec<Complex64>>> {
    if tx.len() != realization.n_tx {
        return Err(Error::PortMismatch {
            expected: realization.n_tx,
            got: tx.len(),
        });
    }
    let delays = realization.profile.delay_samples(sample_rate_hz);
    let max_delay = delays.iter().copied().max().unwrap_or(0);
    let len = tx.iter().map(Vec::len).max().unwrap_or(0) + max_delay;
    let mut out = vec![vec![Complex64::new(0.0, 0.0); len]; realization.n_rx];
    for (rx, acc) in out.iter_mut().enumerate() {
        for (t, d) in delays.iter().enumerate() {
            for (i, wave) in tx.iter().enumerate() {
                let g = realization.gain(t, i, rx);
                if g == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (o, s) in acc[*d..].iter_mut().zip(wave) {
                    *o += g * s;
                }
            }
        }
    }
    Ok(out)
}

/// Target SNR, or the explicit no-noise sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    Db(f64),
    NoNoise,
}

impl Snr {
    pub fn db(self) -> Option<f64> {
        match self {
            Snr::Db(v) => Some(v),
            Snr::NoNoise => None,
        }
    }
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Snr::Db(v) => write!(f, "{v}"),
            Snr::NoNoise => f.write_str("no-noise"),
        }
    }
}

impl FromStr for Snr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("no-noise") {
            return Ok(Snr::NoNoise);
        }
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Snr::Db(v)),
            _ => Err(Error::Config(format!(
                "snr_db must be a finite number or \"no-noise\", got {s:?}"
            ))),
        }
    }
}

impl Serialize for Snr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Snr::Db(v) => s.serialize_f64(*v),
            Snr::NoNoise => s.serialize_str("no-noise"),
        }
    }
}

impl<'de> Deserialize<'de> for Snr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v.is_finite() => Ok(Snr::Db(v)),
            Raw::Num(v) => Err(serde::de::Error::custom(format!("non-finite snr_db {v}"))),
            Raw::Int(v) => Ok(Snr::Db(v as f64)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Mean per-sample power across all antennas.
pub fn mean_power(waves: &[Vec<Complex64>]) -> f64 {
    let n: usize = waves.iter().map(Vec::len).sum();
    if n == 0 {
        return 0.0;
    }
    waves.iter().flatten().map(|s| s.norm_sqr()).sum::<f64>() / n as f64
}

/// Add circular Gaussian noise of variance `signal_power_ref / 10^(snr/10)`
/// independently to each antenna. Returns the noisy waveforms and the
/// variance used.
pub fn add_awgn(
    waves: &[Vec<Complex64>],
    snr: Snr,
    signal_power_ref: f64,
    seed_label: SeedLabel,
) -> Result<(Vec<Vec<Complex64>>, f64)> {
    let Snr::Db(snr_db) = snr else {
        return Ok((waves.to_vec(), 0.0));
    };
    if !(signal_power_ref.is_finite() && signal_power_ref > 0.0) {
        return Err(Error::SignalPower(signal_power_ref));
    }
    let var = signal_power_ref / 10f64.powf(snr_db / 10.0);
    let mut out = Vec::with_capacity(waves.len());
    for (a, w) in waves.iter().enumerate() {
        let mut rng = seed_label.child(a as u64, "antenna").rng();
        out.push(w.iter().map(|s| s + cn(&mut rng, var)).collect());
    }
    Ok((out, var))
}
