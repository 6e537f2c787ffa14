//! Scenario and sweep configuration, read from TOML.
//!
//! ```toml
//! [scenario]
//! pn_model = "A"
//! modulation = "QAM64"
//! snr_db = 20            # or "no-noise"
//!
//! [sweep]
//! seeds = 20
//! [sweep.axes]
//! snr_db = [0, 5, 10]
//! cpe_compensation = [true, false]
//!
//! [profiles.short]
//! delays_ns = [0, 30]
//! powers_db = [0, -3]
//! ```

use crate::channel::{Snr, TdlProfile};
use crate::error::{Error, Result};
use crate::phase_noise::PnPreset;
use crate::qam::Modulation;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

/// Sweeps larger than this are refused.
pub const MAX_SWEEP_POINTS: usize = 100_000;

/// A phase noise preset, or no phase noise at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PnChoice {
    None,
    Preset(PnPreset),
}

impl PnChoice {
    pub fn preset(self) -> Option<PnPreset> {
        match self {
            PnChoice::None => None,
            PnChoice::Preset(p) => Some(p),
        }
    }
}

impl fmt::Display for PnChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PnChoice::None => f.write_str("none"),
            PnChoice::Preset(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for PnChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("none") {
            return Ok(PnChoice::None);
        }
        s.parse::<PnPreset>().map(PnChoice::Preset)
    }
}

impl TryFrom<String> for PnChoice {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PnChoice> for String {
    fn from(p: PnChoice) -> String {
        p.to_string()
    }
}

/// Receiver shortcuts that replace an estimator with the true value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenieFlag {
    Timing,
    NoiseVar,
}

/// One link-level run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub pn_model: PnChoice,
    /// Carrier in GHz; defaults to the preset's own carrier. It labels the
    /// run, the mask itself is fixed per preset.
    pub fc_ghz: Option<f64>,
    /// Allow an `fc_ghz` different from the preset's carrier.
    pub fc_override: bool,
    pub modulation: Modulation,
    pub n_tx: usize,
    pub n_rx: usize,
    pub snr_db: Snr,
    pub cpe_compensation: bool,
    pub channel_profile: String,
    pub n_frames: usize,
    pub master_seed: u64,
    pub genie_flags: Vec<GenieFlag>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            pn_model: PnChoice::Preset(PnPreset::A),
            fc_ghz: None,
            fc_override: false,
            modulation: Modulation::Qam64,
            n_tx: 1,
            n_rx: 2,
            snr_db: Snr::Db(20.0),
            cpe_compensation: true,
            channel_profile: "tdl3".into(),
            n_frames: 2,
            master_seed: 0,
            genie_flags: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    /// Carrier in GHz after defaulting; 0 when there is neither a preset
    /// nor an explicit value.
    pub fn effective_fc_ghz(&self) -> f64 {
        self.fc_ghz
            .or(self.pn_model.preset().map(PnPreset::native_fc_ghz))
            .unwrap_or(0.0)
    }

    pub fn has_genie(&self, flag: GenieFlag) -> bool {
        self.genie_flags.contains(&flag)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(Error::Antennas(format!("{}x{} antennas", self.n_tx, self.n_rx)));
        }
        if self.n_frames == 0 {
            return Err(Error::Config("n_frames must be at least 1".into()));
        }
        if let Snr::Db(v) = self.snr_db {
            if !v.is_finite() {
                return Err(Error::Config(format!("snr_db {v} is not finite")));
            }
        }
        if let (Some(p), Some(fc)) = (self.pn_model.preset(), self.fc_ghz) {
            if !self.fc_override && (fc - p.native_fc_ghz()).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "fc_ghz {fc} does not match model {p} ({} GHz); set fc_override = true to force it",
                    p.native_fc_ghz()
                )));
            }
        }
        Ok(())
    }

    /// Short human-readable tag used in error messages.
    pub fn label(&self) -> String {
        format!(
            "pn={} {} {}x{} snr={} cpe={} seed={}",
            self.pn_model, self.modulation, self.n_tx, self.n_rx, self.snr_db, self.cpe_compensation, self.master_seed
        )
    }
}

/// A user-defined tapped delay line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub delays_ns: Vec<f64>,
    pub powers_db: Vec<f64>,
}

/// Look a profile up among the user's definitions, then the built-ins.
pub fn resolve_profile(name: &str, profiles: &BTreeMap<String, ProfileSpec>) -> Result<TdlProfile> {
    if let Some(p) = profiles.get(name) {
        return TdlProfile::new(
            name,
            p.delays_ns.iter().map(|d| d * 1e-9).collect(),
            p.powers_db.clone(),
        );
    }
    TdlProfile::builtin(name).ok_or_else(|| Error::InvalidProfile(format!("unknown channel profile {name:?}")))
}

/// Values swept per scenario field. Unset axes keep the base value.
///
/// Points are enumerated in the field order below with the last axis
/// varying fastest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub pn_model: Option<Vec<PnChoice>>,
    pub modulation: Option<Vec<Modulation>>,
    pub n_tx: Option<Vec<usize>>,
    pub n_rx: Option<Vec<usize>>,
    pub channel_profile: Option<Vec<String>>,
    pub snr_db: Option<Vec<Snr>>,
    pub cpe_compensation: Option<Vec<bool>>,
}

impl SweepAxes {
    fn lens(&self) -> [usize; 7] {
        fn n<T>(v: &Option<Vec<T>>) -> usize {
            v.as_ref().map_or(1, Vec::len)
        }
        [
            n(&self.pn_model),
            n(&self.modulation),
            n(&self.n_tx),
            n(&self.n_rx),
            n(&self.channel_profile),
            n(&self.snr_db),
            n(&self.cpe_compensation),
        ]
    }

    /// Size of the Cartesian product, saturating on overflow.
    pub fn n_points(&self) -> usize {
        self.lens().iter().fold(1usize, |a, b| a.saturating_mul(*b))
    }

    /// Every point of the product applied to `base`.
    pub fn points(&self, base: &ScenarioConfig) -> Result<Vec<ScenarioConfig>> {
        let lens = self.lens();
        if lens.contains(&0) {
            return Err(Error::Config("sweep axis with no values".into()));
        }
        let total = self.n_points();
        if total > MAX_SWEEP_POINTS {
            return Err(Error::Config(format!(
                "sweep has {total} points, limit is {MAX_SWEEP_POINTS}"
            )));
        }
        let mut out = Vec::with_capacity(total);
        for mut i in 0..total {
            let mut idx = [0usize; 7];
            for a in (0..7).rev() {
                idx[a] = i % lens[a];
                i /= lens[a];
            }
            let mut sc = base.clone();
            if let Some(v) = &self.pn_model {
                sc.pn_model = v[idx[0]];
            }
            if let Some(v) = &self.modulation {
                sc.modulation = v[idx[1]];
            }
            if let Some(v) = &self.n_tx {
                sc.n_tx = v[idx[2]];
            }
            if let Some(v) = &self.n_rx {
                sc.n_rx = v[idx[3]];
            }
            if let Some(v) = &self.channel_profile {
                sc.channel_profile = v[idx[4]].clone();
            }
            if let Some(v) = &self.snr_db {
                sc.snr_db = v[idx[5]];
            }
            if let Some(v) = &self.cpe_compensation {
                sc.cpe_compensation = v[idx[6]];
            }
            out.push(sc);
        }
        Ok(out)
    }
}

/// Sweep parameters from the `[sweep]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axes: SweepAxes,
    /// Seeds per point; seed `s` runs with `master_seed + s`.
    pub seeds: usize,
    pub output_path: Option<PathBuf>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            axes: SweepAxes::default(),
            seeds: 1,
            output_path: None,
        }
    }
}

/// A whole sweep: base scenario, axes and custom profiles.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: ScenarioConfig,
    pub axes: SweepAxes,
    pub seeds: usize,
    pub output_path: Option<PathBuf>,
    pub profiles: BTreeMap<String, ProfileSpec>,
}

impl SweepConfig {
    pub fn n_rows(&self) -> usize {
        self.axes.n_points().saturating_mul(self.seeds)
    }
}

/// Contents of a configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: ScenarioConfig,
    pub sweep: SweepSection,
    pub profiles: BTreeMap<String, ProfileSpec>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides(text, &[])
    }

    /// Parse, then apply `key=value` overrides. Keys without a section go to
    /// `[scenario]`; values are read as TOML and fall back to plain strings.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: ConfigFile = doc
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.scenario.validate()?;
        if cfg.sweep.seeds == 0 {
            return Err(Error::Config("sweep.seeds must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            base: self.scenario.clone(),
            axes: self.sweep.axes.clone(),
            seeds: self.sweep.seeds,
            output_path: self.sweep.output_path.clone(),
            profiles: self.profiles.clone(),
        }
    }
}

fn apply_override(doc: &mut toml::Table, arg: &str) -> Result<()> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {arg:?} is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let mut path: Vec<&str> = key.split('.').collect();
    if path.len() == 1 {
        path.insert(0, "scenario");
    }
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key {key:?}")));
    }
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("just inserted"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let (last, parents) = path.split_last().expect("non-empty");
    let mut table = doc;
    for p in parents {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key {key:?} crosses a non-table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}
