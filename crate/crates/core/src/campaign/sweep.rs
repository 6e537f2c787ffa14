use super::config::{ScenarioConfig, SweepConfig};
use super::link::{descriptor, run_link_with};
use crate::error::{Error, Result};
use crate::metrics::LinkMetrics;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const RESULTS_HEADER: [&str; 15] = [
    "scenario_id",
    "pn_model",
    "fc_ghz",
    "modulation",
    "n_tx",
    "n_rx",
    "snr_db",
    "cpe_comp",
    "seed",
    "evm_pct",
    "evm_db",
    "ber",
    "bler",
    "n_bits",
    "n_blocks",
];

/// One `(point, seed)` outcome. Failed runs keep their message instead of
/// aborting the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scenario_id: usize,
    pub scenario: ScenarioConfig,
    pub outcome: std::result::Result<LinkMetrics, String>,
}

/// Row of the results CSV; metric columns are empty for failed runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub scenario_id: usize,
    pub pn_model: String,
    pub fc_ghz: f64,
    pub modulation: String,
    pub n_tx: usize,
    pub n_rx: usize,
    pub snr_db: String,
    pub cpe_comp: bool,
    pub seed: u64,
    pub evm_pct: Option<f64>,
    pub evm_db: Option<f64>,
    pub ber: Option<f64>,
    pub bler: Option<f64>,
    pub n_bits: Option<usize>,
    pub n_blocks: Option<usize>,
}

impl From<&SweepRow> for ResultRecord {
    fn from(r: &SweepRow) -> Self {
        let d = descriptor(&r.scenario);
        let m = r.outcome.as_ref().ok();
        ResultRecord {
            scenario_id: r.scenario_id,
            pn_model: d.pn_model,
            fc_ghz: d.fc_ghz,
            modulation: d.modulation,
            n_tx: d.n_tx,
            n_rx: d.n_rx,
            snr_db: d.snr_db,
            cpe_comp: d.cpe_comp,
            seed: d.seed,
            evm_pct: m.map(|m| m.evm_pct),
            evm_db: m.map(|m| m.evm_db),
            ber: m.map(|m| m.ber),
            bler: m.map(|m| m.bler),
            n_bits: m.map(|m| m.n_bits),
            n_blocks: m.map(|m| m.n_blocks),
        }
    }
}

/// Every `(point, seed)` scenario in output order: points in product order,
/// seeds `master_seed + 0..seeds` within each point.
pub fn sweep_scenarios(sw: &SweepConfig) -> Result<Vec<(usize, ScenarioConfig)>> {
    if sw.seeds == 0 {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    let points = sw.axes.points(&sw.base)?;
    let mut out = Vec::with_capacity(points.len() * sw.seeds);
    for (id, p) in points.into_iter().enumerate() {
        for s in 0..sw.seeds {
            let mut sc = p.clone();
            sc.master_seed = sw.base.master_seed.wrapping_add(s as u64);
            out.push((id, sc));
        }
    }
    Ok(out)
}

/// Run every row in parallel; the order of the result never depends on
/// scheduling.
pub fn run_sweep(sw: &SweepConfig) -> Result<Vec<SweepRow>> {
    let jobs = sweep_scenarios(sw)?;
    Ok(jobs
        .into_par_iter()
        .map(|(scenario_id, scenario)| {
            let outcome = run_link_with(&scenario, &sw.profiles).map_err(|e| e.to_string());
            SweepRow {
                scenario_id,
                scenario,
                outcome,
            }
        })
        .collect())
}

pub fn write_results_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(ResultRecord::from(r)).map_err(csv_err)?;
    }
    if rows.is_empty() {
        wr.write_record(RESULTS_HEADER).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    if header != RESULTS_HEADER {
        return Err(Error::Config(format!("{} is not a results file", path.display())));
    }
    rd.deserialize().map(|r| r.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Metadata file next to a results CSV.
pub fn meta_path(results: &Path) -> PathBuf {
    let mut name = results.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    results.with_file_name(name)
}

#[derive(Debug, Serialize)]
struct RowError<'a> {
    row: usize,
    scenario_id: usize,
    seed: u64,
    message: &'a str,
}

/// Run a sweep and write `path` plus `<path>.meta.json`. Both files are
/// created before any simulation so an unwritable location fails fast.
pub fn run_sweep_to(sw: &SweepConfig, path: &Path) -> Result<Vec<SweepRow>> {
    let csv_file = File::create(path)?;
    let meta_file = File::create(meta_path(path))?;
    let rows = run_sweep(sw)?;
    write_results_csv(&rows, std::io::BufWriter::new(csv_file))?;

    let errors: Vec<RowError> = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| {
            r.outcome.as_ref().err().map(|m| RowError {
                row: i,
                scenario_id: r.scenario_id,
                seed: r.scenario.master_seed,
                message: m,
            })
        })
        .collect();
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let meta = serde_json::json!({
        "artifact": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp_unix": timestamp,
        "rows": rows.len(),
        "config": sw,
        "errors": errors,
    });
    serde_json::to_writer_pretty(meta_file, &meta).map_err(|e| Error::Io(e.to_string()))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::config::{PnChoice, SweepAxes};
    use crate::channel::Snr;
    use crate::qam::Modulation;

    fn tiny() -> SweepConfig {
        SweepConfig {
            base: ScenarioConfig {
                n_frames: 1,
                pn_model: PnChoice::None,
                ..ScenarioConfig::default()
            },
            axes: SweepAxes {
                snr_db: Some(vec![Snr::Db(10.0), Snr::Db(30.0)]),
                modulation: Some(vec![Modulation::Qam64, Modulation::Qam256]),
                ..SweepAxes::default()
            },
            seeds: 1,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn row_count_and_order() {
        let sw = SweepConfig { seeds: 3, ..tiny() };
        let sc = sweep_scenarios(&sw).unwrap();
        assert_eq!(sc.len(), 12);
        assert_eq!(sc[0].0, 0);
        assert_eq!(sc[2].1.master_seed, 2);
        assert_eq!(sc[3].0, 1);
    }

    #[test]
    fn sweep_writes_rows_and_error_rows() {
        let mut sw = tiny();
        sw.axes.channel_profile = Some(vec!["flat".into(), "nope".into()]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = run_sweep_to(&sw, &path).unwrap();
        assert_eq!(rows.len(), 8);
        let recs = read_results_csv(&path).unwrap();
        assert_eq!(recs.len(), 8);
        assert_eq!(recs.iter().filter(|r| r.evm_pct.is_none()).count(), 4);
        assert!(recs
            .iter()
            .flat_map(|r| r.evm_pct.zip(r.evm_db))
            .all(|(p, d)| (d - 20.0 * (p / 100.0).log10()).abs() < 1e-9));
        let meta: serde_json::Value = serde_json::from_reader(File::open(meta_path(&path)).unwrap()).unwrap();
        assert_eq!(meta["errors"].as_array().unwrap().len(), 4);

        // a second run gives the same bytes
        let again = dir.path().join("r2.csv");
        run_sweep_to(&sw, &again).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }

    #[test]
    fn unwritable_output() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("missing-dir").join("r.csv");
        assert!(matches!(run_sweep_to(&tiny(), &bad), Err(Error::Io(_))));
    }
}
