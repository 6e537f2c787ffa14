//! `sim`: command-line front end for the link simulator.

use anyhow::Context;
use clap::{Parser, Subcommand};
use pnsim::acceptance;
use pnsim::campaign::{
    config::resolve_profile, plot::write_plot_data, read_results_csv, run_sweep_to, simulate_link, write_results_csv,
    ConfigFile, SweepRow,
};
use pnsim::phase_noise::{psd_curve, PnPreset};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sim",
    version,
    about = "NR downlink link simulator with oscillator phase noise"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print a phase noise mask as `offset_hz,psd_dbc_hz`.
    Psd {
        #[arg(long)]
        model: PnPreset,
        #[arg(long, default_value_t = 1e3)]
        fmin: f64,
        #[arg(long, default_value_t = 1e9)]
        fmax: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the `[scenario]` of a config file once.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `key=value`, applied on top of the file (`snr_db=10`, `sweep.seeds=4`).
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Write the transmitted slot-0 grid as CSV.
        #[arg(long)]
        dump_grid: Option<PathBuf>,
        /// Write the per-symbol CPE estimates as CSV.
        #[arg(long)]
        dump_cpe: Option<PathBuf>,
    },
    /// Run the sweep of a config file and write the results table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Results CSV; defaults to `sweep.output_path`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Aggregate a results table into one figure's CSV.
    PlotData {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        figure: pnsim::campaign::plot::Figure,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in acceptance suite.
    Check {
        /// Only these criteria (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

/// Failure classes and their exit codes.
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
    Acceptance,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
            Failure::Acceptance => 3,
        }
    }
}

fn config_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn runtime_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

fn load_config(path: &Path, overrides: &[String]) -> Result<ConfigFile, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(config_err)?;
    let cfg = ConfigFile::parse_with_overrides(&text, overrides)
        .with_context(|| format!("in {}", path.display()))
        .map_err(config_err)?;
    // unknown profiles are a config problem, not a failed run
    let names = cfg.sweep.axes.channel_profile.clone().unwrap_or_default();
    for name in names.iter().chain(std::iter::once(&cfg.scenario.channel_profile)) {
        resolve_profile(name, &cfg.profiles).map_err(config_err)?;
    }
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(runtime_err)
}

fn psd(model: PnPreset, fmin: f64, fmax: f64, points: usize, out: Option<PathBuf>) -> Result<(), Failure> {
    let curve = psd_curve(&model.model(), fmin, fmax, points).map_err(config_err)?;
    let mut w: Box<dyn Write> = match out {
        Some(p) => Box::new(create(&p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let body = || -> std::io::Result<()> {
        writeln!(w, "offset_hz,psd_dbc_hz")?;
        for (f, v) in curve {
            writeln!(w, "{f},{v}")?;
        }
        w.flush()
    };
    body().map_err(runtime_err)
}

fn run(
    config: &Path,
    overrides: &[String],
    dump_grid: Option<PathBuf>,
    dump_cpe: Option<PathBuf>,
) -> Result<(), Failure> {
    let cfg = load_config(config, overrides)?;
    let run = simulate_link(&cfg.scenario, &cfg.profiles).map_err(runtime_err)?;
    if let Some(p) = dump_grid {
        run.first_grid.write_csv(create(&p)?).map_err(runtime_err)?;
    }
    if let Some(p) = dump_cpe {
        let mut w = create(&p)?;
        let mut body = || -> std::io::Result<()> {
            writeln!(w, "symbol,phi_rad,pilot_count")?;
            for (s, c) in run.cpe.iter().enumerate() {
                c.write_csv_rows(s * c.phi.len(), &mut w)?;
            }
            w.flush()
        };
        body().map_err(runtime_err)?;
    }
    let row = SweepRow {
        scenario_id: 0,
        scenario: cfg.scenario,
        outcome: Ok(run.metrics),
    };
    write_results_csv(&[row], std::io::stdout().lock()).map_err(runtime_err)
}

fn sweep(config: &Path, out: Option<PathBuf>, jobs: Option<usize>, overrides: &[String]) -> Result<(), Failure> {
    let cfg = load_config(config, overrides)?;
    let sw = cfg.sweep_config();
    let Some(path) = out.or_else(|| sw.output_path.clone()) else {
        return Err(config_err(anyhow::anyhow!(
            "no output path: pass --out or set sweep.output_path"
        )));
    };
    sw.axes.points(&sw.base).map_err(config_err)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(config_err(anyhow::anyhow!("--jobs must be at least 1")));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(runtime_err)?;
    let rows = pool
        .install(|| run_sweep_to(&sw, &path))
        .with_context(|| format!("writing {}", path.display()))
        .map_err(runtime_err)?;
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    eprintln!("{} rows written to {} ({failed} failed)", rows.len(), path.display());
    Ok(())
}

fn plot_data(input: &Path, figure: pnsim::campaign::plot::Figure, out: &Path) -> Result<(), Failure> {
    let records = read_results_csv(input).map_err(config_err)?;
    let mut w = create(out)?;
    write_plot_data(&records, figure, &mut w).map_err(runtime_err)?;
    w.flush().map_err(runtime_err)
}

fn check(only: &[u8]) -> Result<(), Failure> {
    let ids: Vec<u8> = if only.is_empty() {
        acceptance::CRITERIA.collect()
    } else {
        only.to_vec()
    };
    let mut all_pass = true;
    for id in ids {
        if !acceptance::CRITERIA.contains(&id) {
            return Err(config_err(anyhow::anyhow!("no criterion {id}")));
        }
        let o = acceptance::run(id);
        println!("{}", o.line());
        all_pass &= o.passed();
    }
    if all_pass {
        Ok(())
    } else {
        Err(Failure::Acceptance)
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Psd {
            model,
            fmin,
            fmax,
            points,
            out,
        } => psd(model, fmin, fmax, points, out),
        Cmd::Run {
            config,
            overrides,
            dump_grid,
            dump_cpe,
        } => run(&config, &overrides, dump_grid, dump_cpe),
        Cmd::Sweep {
            config,
            out,
            jobs,
            overrides,
        } => sweep(&config, out, jobs, &overrides),
        Cmd::PlotData { input, figure, out } => plot_data(&input, figure, &out),
        Cmd::Check { only } => check(&only),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("config error: {e:#}"),
                Failure::Runtime(e) => eprintln!("error: {e:#}"),
                Failure::Acceptance => eprintln!("acceptance check failed"),
            }
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::Config(anyhow::anyhow!("x")).code(), 1);
        assert_eq!(Failure::Runtime(anyhow::anyhow!("x")).code(), 2);
        assert_eq!(Failure::Acceptance.code(), 3);
    }
}
