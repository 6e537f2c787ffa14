use super::config::{resolve_profile, GenieFlag, ProfileSpec, ScenarioConfig};
use crate::carrier::CarrierConfig;
use crate::channel::{add_awgn, apply_channel, precode_single_layer, tdl_realize};
use crate::crc::BitBlock;
use crate::error::{Error, Result};
use crate::grid::{build_slot_grid, slot_payload_bits, PdschConfig, ReRole, ResourceGrid};
use crate::metrics::{LinkAccumulator, LinkMetrics, ScenarioDescriptor};
use crate::ofdm::ofdm_modulate;
use crate::phase_noise::{apply_phase_noise, synthesize, MIN_SYNTH_SAMPLES};
use crate::refsig::{gen_dmrs, gen_ptrs};
use crate::rx::{recover_pdsch, CpeEstimate, RxOptions};
use crate::seed::{derive_seed, SeedLabel};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Cell-level stream the DM-RS and PT-RS values come from. It does not
/// depend on the run seed, like a fixed cell identity.
pub fn pilot_seed() -> SeedLabel {
    derive_seed(1, 0, "pilots")
}

/// A finished run plus the debug material the CLI can dump.
#[derive(Debug, Clone)]
pub struct LinkRun {
    pub metrics: LinkMetrics,
    /// Transmitted grid of slot 0, roles included.
    pub first_grid: ResourceGrid,
    /// Per-slot CPE estimates; empty without compensation.
    pub cpe: Vec<CpeEstimate>,
}

pub fn descriptor(sc: &ScenarioConfig) -> ScenarioDescriptor {
    ScenarioDescriptor {
        pn_model: sc.pn_model.to_string(),
        fc_ghz: sc.effective_fc_ghz(),
        modulation: sc.modulation.to_string(),
        n_tx: sc.n_tx,
        n_rx: sc.n_rx,
        snr_db: sc.snr_db.to_string(),
        cpe_comp: sc.cpe_compensation,
        seed: sc.master_seed,
    }
}

/// Run one scenario with the built-in channel profiles.
pub fn run_link(sc: &ScenarioConfig) -> Result<LinkMetrics> {
    run_link_with(sc, &BTreeMap::new())
}

pub fn run_link_with(sc: &ScenarioConfig, profiles: &BTreeMap<String, ProfileSpec>) -> Result<LinkMetrics> {
    simulate_link(sc, profiles).map(|r| r.metrics)
}

/// Full transmit, impairment and receive chain of one scenario. Errors come
/// back wrapped with the scenario label.
pub fn simulate_link(sc: &ScenarioConfig, profiles: &BTreeMap<String, ProfileSpec>) -> Result<LinkRun> {
    simulate(sc, profiles).map_err(|e| Error::Scenario {
        scenario: sc.label(),
        source: Box::new(e),
    })
}

fn simulate(sc: &ScenarioConfig, profiles: &BTreeMap<String, ProfileSpec>) -> Result<LinkRun> {
    sc.validate()?;
    let cfg = CarrierConfig::mmwave_default();
    let pdsch = PdschConfig::full_grid(&cfg, sc.modulation);
    let profile = resolve_profile(&sc.channel_profile, profiles)?;
    let n_slots = sc.n_frames * cfg.slots_per_frame();
    let fs = cfg.sample_rate_hz;
    let pilots = pilot_seed();
    let master = sc.master_seed;

    // transmitter: one slot at a time, payload stream per slot
    let total = cfg.span_len(0, n_slots);
    let mut wave = Vec::with_capacity(total);
    let mut payloads = Vec::with_capacity(n_slots);
    let mut tx_symbols = Vec::with_capacity(n_slots);
    let mut first_grid = None;
    for s in 0..n_slots {
        let dmrs = gen_dmrs(&cfg, s, pilots);
        let ptrs = gen_ptrs(&cfg, s, pilots);
        let n_bits = slot_payload_bits(&cfg, &pdsch, &dmrs, &ptrs)?;
        let block = BitBlock::random(n_bits, &mut derive_seed(master, s as u64, "payload").rng()).ok_or(
            Error::DegenerateAllocation(format!("{n_bits}-bit slot cannot hold a CRC")),
        )?;
        let grid = build_slot_grid(&block, &cfg, &pdsch, &dmrs, &ptrs)?;
        tx_symbols.push(
            grid.data_positions()
                .into_iter()
                .map(|(k, l)| grid.get(k, l, 0))
                .collect::<Vec<_>>(),
        );
        debug_assert_eq!(grid.count_role(ReRole::Data), tx_symbols[s].len());
        wave.extend(ofdm_modulate(&grid, &cfg)?.swap_remove(0));
        payloads.push(block);
        if s == 0 {
            first_grid = Some(grid);
        }
    }

    // one oscillator drives every transmit branch
    if let Some(p) = sc.pn_model.preset() {
        let n = (total + total % 2).max(MIN_SYNTH_SAMPLES);
        let traj = synthesize(&p.model(), fs, n, derive_seed(master, 0, "phase_noise"))?;
        wave = apply_phase_noise(&wave, &traj)?;
    }
    let ports = precode_single_layer(&wave, sc.n_tx);
    drop(wave);

    // block fading: a fresh drop per slot, tails overlap into the next slot
    let opts = RxOptions {
        cpe: sc.cpe_compensation.into(),
        genie_timing: sc.has_genie(GenieFlag::Timing).then_some(0),
        genie_noise_var: None,
        ..RxOptions::default()
    };
    let max_delay = profile.delay_samples(fs).into_iter().max().unwrap_or(0);
    let rx_len = total + max_delay + opts.timing_search;
    let mut rx = vec![vec![Complex64::new(0.0, 0.0); rx_len]; sc.n_rx];
    let mut seg = vec![Vec::new(); sc.n_tx];
    for s in 0..n_slots {
        let off = cfg.span_len(0, s);
        let len = cfg.slot_len(s);
        for (dst, src) in seg.iter_mut().zip(&ports) {
            dst.clear();
            dst.extend_from_slice(&src[off..off + len]);
        }
        let real = tdl_realize(&profile, sc.n_tx, sc.n_rx, derive_seed(master, s as u64, "fading"))?;
        for (acc, out) in rx.iter_mut().zip(apply_channel(&seg, &real, fs)?) {
            for (a, v) in acc[off..].iter_mut().zip(out) {
                *a += v;
            }
        }
    }
    drop(ports);

    // unit symbol energy, unit mean channel power: per-RE SNR per antenna
    let (rx, noise_var) = add_awgn(&rx, sc.snr_db, 1.0, derive_seed(master, 0, "awgn"))?;
    let opts = RxOptions {
        genie_noise_var: sc.has_genie(GenieFlag::NoiseVar).then_some(noise_var),
        ..opts
    };
    let out = recover_pdsch(&rx, &cfg, &pdsch, n_slots, pilots, &opts)?;

    let mut acc = LinkAccumulator::default();
    let mut cpe = Vec::new();
    for ((slot, block), sent) in out.slots.into_iter().zip(&payloads).zip(&tx_symbols) {
        acc.add_block(sent, &slot.symbols, &block.bits, &slot.bits, slot.crc_ok)?;
        cpe.extend(slot.cpe);
    }
    Ok(LinkRun {
        metrics: acc.finish(descriptor(sc))?,
        first_grid: first_grid.ok_or(Error::Empty("slots"))?,
        cpe,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::config::PnChoice;
    use crate::channel::Snr;
    use crate::qam::Modulation;

    fn short(sc: ScenarioConfig) -> ScenarioConfig {
        ScenarioConfig { n_frames: 1, ..sc }
    }

    #[test]
    fn transparent_chain() {
        for m in [Modulation::Qam64, Modulation::Qam256] {
            let sc = short(ScenarioConfig {
                pn_model: PnChoice::None,
                snr_db: Snr::NoNoise,
                channel_profile: "flat".into(),
                modulation: m,
                n_rx: 1,
                ..ScenarioConfig::default()
            });
            let r = run_link(&sc).unwrap();
            assert_eq!(r.ber, 0.0);
            assert_eq!(r.bler, 0.0);
            assert!(r.evm_pct < 1e-8, "{}", r.evm_pct);
            assert_eq!(r.n_blocks, 40);
            assert_eq!(r.n_symbols, 40 * 9867);
        }
    }

    #[test]
    fn deterministic() {
        let sc = short(ScenarioConfig {
            master_seed: 17,
            ..ScenarioConfig::default()
        });
        assert_eq!(run_link(&sc).unwrap(), run_link(&sc).unwrap());
        let other = ScenarioConfig {
            master_seed: 18,
            ..sc.clone()
        };
        assert_ne!(run_link(&sc).unwrap().evm_pct, run_link(&other).unwrap().evm_pct);
    }

    #[test]
    fn errors_carry_scenario() {
        let sc = ScenarioConfig {
            channel_profile: "missing".into(),
            ..ScenarioConfig::default()
        };
        match run_link(&sc) {
            Err(Error::Scenario { scenario, source }) => {
                assert!(scenario.contains("pn=A"));
                assert!(matches!(*source, Error::InvalidProfile(_)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn high_snr_without_phase_noise_is_clean() {
        let sc = short(ScenarioConfig {
            pn_model: PnChoice::None,
            snr_db: Snr::Db(40.0),
            n_rx: 2,
            ..ScenarioConfig::default()
        });
        let r = run_link(&sc).unwrap();
        assert!(r.evm_pct < 3.0, "{}", r.evm_pct);
        assert!(r.is_consistent());
    }
}
