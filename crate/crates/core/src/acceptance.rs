//! Built-in acceptance checks, shared by `sim check` and the `acceptance`
//! test target.
//!
//! Each criterion is a list of named checks with pinned tolerances. A few
//! checks cannot hold for this uncoded, single-layer model at desk scale;
//! they are listed in [`KNOWN_SHORTFALLS`] so callers can report them
//! without treating them as regressions.

use crate::campaign::{run_link, run_sweep_to, PnChoice, ScenarioConfig, SweepAxes, SweepConfig};
use crate::carrier::CarrierConfig;
use crate::channel::Snr;
use crate::crc::BitBlock;
use crate::error::Result;
use crate::fft;
use crate::grid::{build_slot_grid, slot_payload_bits, PdschConfig};
use crate::metrics::{evm_pct_to_db, LinkMetrics};
use crate::ofdm::{ofdm_demodulate, ofdm_modulate};
use crate::phase_noise::{apply_phase_noise, synthesize, PhaseTrajectory, PnPreset};
use crate::qam::Modulation;
use crate::refsig::{gen_dmrs, gen_ptrs};
use crate::rx::{equalize_mmse, estimate_cpe, ChannelEstimate};
use crate::seed::{derive_seed, SeedLabel};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::time::Instant;

/// `(criterion, check)` pairs expected to fail; see the project notes for
/// the analysis.
pub const KNOWN_SHORTFALLS: [(u8, &str); 2] = [(7, "QAM64 relative EVM gain >= 15%"), (11, "BLER 4rx < BLER 2rx")];

pub const CRITERIA: std::ops::RangeInclusive<u8> = 1..=12;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Failed checks that are not known shortfalls.
    pub fn unexpected_failures(&self) -> Vec<&Check> {
        self.checks
            .iter()
            .filter(|c| !c.passed && !KNOWN_SHORTFALLS.contains(&(self.id, c.name.as_str())))
            .collect()
    }

    /// One summary line: verdict, id, title, then every check.
    pub fn line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                let mark = match (c.passed, KNOWN_SHORTFALLS.contains(&(self.id, c.name.as_str()))) {
                    (true, _) => "ok",
                    (false, true) => "FAIL(known)",
                    (false, false) => "FAIL",
                };
                format!("{} [{mark}: {}]", c.name, c.detail)
            })
            .collect();
        format!(
            "{verdict} {:>2} {} ({:.1}s): {}",
            self.id,
            self.title,
            self.seconds,
            parts.join("; ")
        )
    }
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

fn failed(name: &str, e: crate::Error) -> Check {
    check(name, false, format!("error: {e}"))
}

/// Run one criterion.
pub fn run(id: u8) -> Outcome {
    let t = Instant::now();
    let (title, checks) = match id {
        1 => ("PSD exactness", psd_exactness()),
        2 => ("spectral fidelity", spectral_fidelity()),
        3 => ("transparent chain", transparent_chain()),
        4 => ("EVM percent/dB consistency", evm_consistency()),
        5 => ("CPE estimator exactness", cpe_exactness()),
        6 => ("MMSE properties", mmse_properties()),
        7 => ("EVM ordering with/without CPE", evm_ordering()),
        8 => ("BER ordering with/without CPE", ber_ordering()),
        9 => ("BLER model C <= model B", model_comparison()),
        10 => ("EVM monotone in SNR", snr_monotonicity()),
        11 => ("BLER 4rx < 2rx", antenna_diversity()),
        12 => ("sweep determinism", determinism()),
        _ => (
            "unknown criterion",
            vec![check("exists", false, format!("no criterion {id}"))],
        ),
    };
    Outcome {
        id,
        title,
        checks,
        seconds: t.elapsed().as_secs_f64(),
    }
}

pub fn run_all() -> Vec<Outcome> {
    CRITERIA.map(run).collect()
}

fn psd_exactness() -> Vec<Check> {
    let mut out = Vec::new();
    for (p, want) in [(PnPreset::A, -79.4), (PnPreset::B, -70.0), (PnPreset::C, 32.0)] {
        let got = p.model().psd_at(0.0);
        out.push(check(format!("{p} at 0 Hz"), got == want, format!("{got}")));
    }
    let a = PnPreset::A.model();
    let far = a.psd_at(1e13);
    let limit = a.high_offset_limit_db().unwrap_or(f64::NAN);
    out.push(check(
        "A high-offset limit -139.3 +-0.1",
        (far + 139.3).abs() <= 0.1 && (limit + 139.3).abs() <= 0.1,
        format!("psd(1e13)={far:.3}, closed form {limit:.3}"),
    ));
    out
}

fn spectral_fidelity() -> Vec<Check> {
    const N: usize = 1 << 16;
    const TRIALS: u64 = 200;
    let fs = 61.44e6;
    let model = PnPreset::A.model();
    let df = fs / N as f64;
    let lo = (10e3 / df).ceil() as usize;
    let hi = (10e6 / df).floor() as usize;
    let sums = (0..TRIALS)
        .into_par_iter()
        .map(|t| -> Result<Vec<f64>> {
            let traj = synthesize(&model, fs, N, derive_seed(0, t, "spectral-fidelity"))?;
            let mut buf: Vec<Complex64> = traj.samples.iter().map(|&p| Complex64::new(p, 0.0)).collect();
            fft::forward(N).process(&mut buf);
            Ok(buf[lo..=hi].iter().map(|c| c.norm_sqr() / (N as f64 * fs)).collect())
        })
        .try_reduce(
            || vec![0.0; hi - lo + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        );
    let sums = match sums {
        Ok(s) => s,
        Err(e) => return vec![failed("synthesis", e)],
    };
    let (mut worst, mut at) = (0.0f64, 0.0);
    for (i, s) in sums.iter().enumerate() {
        let f = (lo + i) as f64 * df;
        let dev = (10.0 * (s / TRIALS as f64).log10() - model.psd_at(f)).abs();
        if dev > worst {
            worst = dev;
            at = f;
        }
    }
    vec![check(
        "periodogram within 2 dB over 10 kHz-10 MHz",
        worst <= 2.0,
        format!("max deviation {worst:.2} dB at {at:.0} Hz over {} bins", hi - lo + 1),
    )]
}

fn transparent_chain() -> Vec<Check> {
    [Modulation::Qam64, Modulation::Qam256]
        .into_iter()
        .map(|m| {
            let sc = ScenarioConfig {
                pn_model: PnChoice::None,
                snr_db: Snr::NoNoise,
                channel_profile: "flat".into(),
                modulation: m,
                ..ScenarioConfig::default()
            };
            let name = format!("{m} clean");
            match run_link(&sc) {
                Ok(r) => check(
                    name,
                    r.ber == 0.0 && r.bler == 0.0 && r.evm_pct < 1e-8,
                    format!("ber={} bler={} evm={:.2e}%", r.ber, r.bler, r.evm_pct),
                ),
                Err(e) => failed(&name, e),
            }
        })
        .collect()
}

fn evm_consistency() -> Vec<Check> {
    let db = evm_pct_to_db(7.4);
    let mut out = vec![check(
        "7.4% -> -22.6 dB",
        (db - -22.6).abs() < 0.05,
        format!("{db:.3} dB"),
    )];
    let rows: Vec<Result<LinkMetrics>> = [
        (PnChoice::Preset(PnPreset::A), 20.0),
        (PnChoice::Preset(PnPreset::B), 5.0),
        (PnChoice::None, 30.0),
    ]
    .into_par_iter()
    .flat_map_iter(|(pn, snr)| {
        [true, false].map(|cpe| {
            run_link(&ScenarioConfig {
                pn_model: pn,
                snr_db: Snr::Db(snr),
                cpe_compensation: cpe,
                n_frames: 1,
                ..ScenarioConfig::default()
            })
        })
    })
    .collect();
    let mut bad = 0;
    for r in &rows {
        match r {
            Ok(m) if m.is_consistent() => {}
            _ => bad += 1,
        }
    }
    out.push(check(
        "emitted rows satisfy the identity to 1e-9",
        bad == 0,
        format!("{} rows, {bad} inconsistent", rows.len()),
    ));
    out
}

fn cpe_exactness() -> Vec<Check> {
    let body = || -> Result<f64> {
        let cfg = CarrierConfig::mmwave_default();
        let pdsch = PdschConfig::full_grid(&cfg, Modulation::Qam64);
        let seed = SeedLabel(0xC0FFEE);
        let dmrs = gen_dmrs(&cfg, 0, seed);
        let ptrs = gen_ptrs(&cfg, 0, seed);
        let n = slot_payload_bits(&cfg, &pdsch, &dmrs, &ptrs)?;
        let block = BitBlock::random(n, &mut seed.rng()).ok_or(crate::Error::Empty("payload"))?;
        let grid = build_slot_grid(&block, &cfg, &pdsch, &dmrs, &ptrs)?;
        let wave = ofdm_modulate(&grid, &cfg)?.swap_remove(0);
        let rotated = apply_phase_noise(&wave, &PhaseTrajectory::constant(0.3, wave.len(), cfg.sample_rate_hz))?;
        let rx = ofdm_demodulate(&[rotated], &cfg, 0, 1, 0)?;
        // genie channel: the link itself is the identity
        let est = ChannelEstimate::from_response(vec![vec![Complex64::new(1.0, 0.0); cfg.n_subcarriers()]], 14, 0.0);
        let cpe = estimate_cpe(&rx, &ptrs, &est)?;
        Ok(cpe.phi.iter().map(|p| (p - 0.3).abs()).fold(0.0, f64::max))
    };
    vec![match body() {
        Ok(err) => check(
            "0.3 rad recovered to 1e-9",
            err <= 1e-9,
            format!("max error {err:.2e} rad"),
        ),
        Err(e) => failed("0.3 rad recovered to 1e-9", e),
    }]
}

/// Least squares by modified Gram-Schmidt QR, independent of the normal
/// equations the equalizer solves.
fn lstsq_qr(h: &[Complex64], n_rx: usize, n_l: usize, y: &[Complex64]) -> Vec<Complex64> {
    let mut q: Vec<Vec<Complex64>> = (0..n_l).map(|c| (0..n_rx).map(|r| h[r * n_l + c]).collect()).collect();
    let mut r = vec![Complex64::new(0.0, 0.0); n_l * n_l];
    for j in 0..n_l {
        for i in 0..j {
            let d: Complex64 = q[i].iter().zip(&q[j]).map(|(a, b)| a.conj() * b).sum();
            r[i * n_l + j] = d;
            let qi = q[i].clone();
            q[j].iter_mut().zip(&qi).for_each(|(b, a)| *b -= d * a);
        }
        let norm = q[j].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        r[j * n_l + j] = Complex64::new(norm, 0.0);
        q[j].iter_mut().for_each(|v| *v /= norm);
    }
    let qy: Vec<Complex64> = q
        .iter()
        .map(|col| col.iter().zip(y).map(|(a, b)| a.conj() * b).sum())
        .collect();
    let mut s = vec![Complex64::new(0.0, 0.0); n_l];
    for i in (0..n_l).rev() {
        let acc: Complex64 = (i + 1..n_l).map(|k| r[i * n_l + k] * s[k]).sum();
        s[i] = (qy[i] - acc) / r[i * n_l + i];
    }
    s
}

fn mmse_properties() -> Vec<Check> {
    let mut rng = derive_seed(0, 0, "mmse-acceptance").rng();
    let mut cn = || {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    };
    let mut worst: f64 = 0.0;
    let mut errors = 0;
    for i in 0..1000 {
        let n_rx = 1 + i % 4;
        let n_l = 1 + (i / 4) % n_rx;
        let h: Vec<Complex64> = (0..n_rx * n_l).map(|_| cn()).collect();
        let y: Vec<Complex64> = (0..n_rx).map(|_| cn()).collect();
        match equalize_mmse(&y, &h, n_l, 0.0) {
            Ok(out) => {
                let oracle = lstsq_qr(&h, n_rx, n_l, &y);
                let scale = oracle.iter().map(|v| v.norm()).fold(1.0, f64::max);
                let err = out
                    .symbols
                    .iter()
                    .zip(&oracle)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
                    / scale;
                worst = worst.max(err);
            }
            Err(_) => errors += 1,
        }
    }
    let mut shrink_worst: f64 = 0.0;
    for _ in 0..200 {
        let (h, y) = (cn(), cn());
        let nv = cn().norm_sqr();
        let closed = h.conj() * y / (h.norm_sqr() + nv);
        match equalize_mmse(&[y], &[h], 1, nv) {
            Ok(o) => shrink_worst = shrink_worst.max((o.symbols[0] - closed).norm()),
            Err(_) => shrink_worst = f64::INFINITY,
        }
    }
    vec![
        check(
            "ZF limit equals least squares to 1e-10 (1000 REs)",
            errors == 0 && worst <= 1e-10,
            format!("max relative error {worst:.2e}, {errors} solver errors"),
        ),
        check(
            "scalar shrinkage closed form",
            shrink_worst <= 1e-12,
            format!("max error {shrink_worst:.2e}"),
        ),
    ]
}

/// Seed-wise metrics for `seeds` paired runs of `sc`.
fn paired(sc: &ScenarioConfig, seeds: u64) -> Result<Vec<LinkMetrics>> {
    (0..seeds)
        .into_par_iter()
        .map(|s| {
            run_link(&ScenarioConfig {
                master_seed: s,
                ..sc.clone()
            })
        })
        .collect()
}

fn mean(rows: &[LinkMetrics], f: impl Fn(&LinkMetrics) -> f64) -> f64 {
    rows.iter().map(f).sum::<f64>() / rows.len() as f64
}

const PAPER_SEEDS: u64 = 20;

fn a20(m: Modulation, cpe: bool) -> ScenarioConfig {
    ScenarioConfig {
        pn_model: PnChoice::Preset(PnPreset::A),
        fc_ghz: Some(30.0),
        modulation: m,
        snr_db: Snr::Db(20.0),
        cpe_compensation: cpe,
        ..ScenarioConfig::default()
    }
}

fn evm_ordering() -> Vec<Check> {
    let mut out = Vec::new();
    for m in [Modulation::Qam64, Modulation::Qam256] {
        let name = format!("{m} mean EVM with < without");
        let (with, without) = match (paired(&a20(m, true), PAPER_SEEDS), paired(&a20(m, false), PAPER_SEEDS)) {
            (Ok(a), Ok(b)) => (mean(&a, |r| r.evm_pct), mean(&b, |r| r.evm_pct)),
            (Err(e), _) | (_, Err(e)) => {
                out.push(failed(&name, e));
                continue;
            }
        };
        let gain = (without - with) / without;
        out.push(check(name, with < without, format!("{without:.3}% -> {with:.3}%")));
        if m == Modulation::Qam64 {
            out.push(check(
                "QAM64 relative EVM gain >= 15%",
                gain >= 0.15,
                format!("{:.1}%", 100.0 * gain),
            ));
        }
    }
    out
}

fn ber_ordering() -> Vec<Check> {
    let name = "QAM64 mean BER with < without";
    match (
        paired(&a20(Modulation::Qam64, true), PAPER_SEEDS),
        paired(&a20(Modulation::Qam64, false), PAPER_SEEDS),
    ) {
        (Ok(a), Ok(b)) => {
            let (with, without) = (mean(&a, |r| r.ber), mean(&b, |r| r.ber));
            vec![check(name, with < without, format!("{without:.3e} -> {with:.3e}"))]
        }
        (Err(e), _) | (_, Err(e)) => vec![failed(name, e)],
    }
}

fn at10(pn: PnPreset, n_rx: usize) -> ScenarioConfig {
    ScenarioConfig {
        pn_model: PnChoice::Preset(pn),
        n_rx,
        snr_db: Snr::Db(10.0),
        cpe_compensation: true,
        ..ScenarioConfig::default()
    }
}

fn model_comparison() -> Vec<Check> {
    let name = "BLER(C) <= BLER(B), 50 seeds";
    match (paired(&at10(PnPreset::C, 2), 50), paired(&at10(PnPreset::B, 2), 50)) {
        (Ok(c), Ok(b)) => {
            let (bc, bb) = (mean(&c, |r| r.bler), mean(&b, |r| r.bler));
            let (ec, eb) = (mean(&c, |r| r.evm_pct), mean(&b, |r| r.evm_pct));
            vec![check(
                name,
                bc <= bb,
                format!("C {bc:.3} vs B {bb:.3} (EVM C {ec:.1}% vs B {eb:.1}%)"),
            )]
        }
        (Err(e), _) | (_, Err(e)) => vec![failed(name, e)],
    }
}

fn snr_monotonicity() -> Vec<Check> {
    let name = "mean EVM strictly decreasing over 0..20 dB";
    let mut evms = Vec::new();
    for snr in [0.0, 5.0, 10.0, 15.0, 20.0] {
        let sc = ScenarioConfig {
            snr_db: Snr::Db(snr),
            cpe_compensation: true,
            ..ScenarioConfig::default()
        };
        match paired(&sc, PAPER_SEEDS) {
            Ok(r) => evms.push(mean(&r, |m| m.evm_pct)),
            Err(e) => return vec![failed(name, e)],
        }
    }
    let ok = evms.windows(2).all(|w| w[1] < w[0]);
    let text: Vec<String> = evms.iter().map(|e| format!("{e:.2}")).collect();
    vec![check(name, ok, format!("{}%", text.join(" > ")))]
}

fn antenna_diversity() -> Vec<Check> {
    let name = "BLER 4rx < BLER 2rx";
    match (
        paired(&at10(PnPreset::A, 4), PAPER_SEEDS),
        paired(&at10(PnPreset::A, 2), PAPER_SEEDS),
    ) {
        (Ok(four), Ok(two)) => {
            let (b4, b2) = (mean(&four, |r| r.bler), mean(&two, |r| r.bler));
            let (e4, e2) = (mean(&four, |r| r.ber), mean(&two, |r| r.ber));
            vec![
                check(name, b4 < b2, format!("{b4:.3} vs {b2:.3}")),
                check("BER 4rx < BER 2rx", e4 < e2, format!("{e4:.3e} vs {e2:.3e}")),
            ]
        }
        (Err(e), _) | (_, Err(e)) => vec![failed(name, e)],
    }
}

fn determinism() -> Vec<Check> {
    let name = "two sweeps give byte-identical CSVs";
    let sw = SweepConfig {
        base: ScenarioConfig {
            n_frames: 1,
            ..ScenarioConfig::default()
        },
        axes: SweepAxes {
            snr_db: Some(vec![Snr::Db(10.0), Snr::Db(20.0)]),
            modulation: Some(vec![Modulation::Qam64, Modulation::Qam256]),
            ..SweepAxes::default()
        },
        seeds: 1,
        ..SweepConfig::default()
    };
    let dir = std::env::temp_dir().join(format!("pnsim-determinism-{}", std::process::id()));
    let body = || -> Result<bool> {
        std::fs::create_dir_all(&dir)?;
        let (a, b) = (dir.join("a.csv"), dir.join("b.csv"));
        run_sweep_to(&sw, &a)?;
        run_sweep_to(&sw, &b)?;
        Ok(std::fs::read(&a)? == std::fs::read(&b)?)
    };
    let res = body();
    let _ = std::fs::remove_dir_all(&dir);
    vec![match res {
        Ok(same) => check(name, same, "4 rows"),
        Err(e) => failed(name, e),
    }]
}
