//! End-to-end runs, parameter sweeps and result files.
//!
//! Every random stream of a run is derived from its master seed and a
//! purpose label, so with and without CPE correction see identical payload,
//! phase noise, fading and noise realizations.

pub mod config;
mod link;
pub mod plot;
mod sweep;

pub use crate::seed::derive_seed;
pub use config::{ConfigFile, GenieFlag, PnChoice, ProfileSpec, ScenarioConfig, SweepAxes, SweepConfig};
pub use link::{descriptor, pilot_seed, run_link, run_link_with, simulate_link, LinkRun};
pub use sweep::{
    meta_path, read_results_csv, run_sweep, run_sweep_to, sweep_scenarios, write_results_csv, ResultRecord, SweepRow,
    RESULTS_HEADER,
};
