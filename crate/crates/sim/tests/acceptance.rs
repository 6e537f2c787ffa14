//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Lines go straight to stderr so they show up even when the harness
//! captures test output. Checks listed in `KNOWN_SHORTFALLS` are reported as failures
//! but do not fail the test; every other check must hold.

use pnsim::acceptance::{self, Outcome, KNOWN_SHORTFALLS};
use std::io::Write;
use std::path::Path;
use std::process::Command;

fn emit(line: &str) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn report(o: &Outcome) {
    emit(&o.line());
    let bad = o.unexpected_failures();
    assert!(bad.is_empty(), "criterion {} failed: {bad:?}", o.id);
}

#[test]
fn criteria_1_to_11() {
    let outcomes: Vec<Outcome> = (1..=11).map(acceptance::run).collect();
    let mut unexpected = Vec::new();
    for o in &outcomes {
        emit(&o.line());
        unexpected.extend(o.unexpected_failures().into_iter().map(|c| (o.id, c.name.clone())));
    }
    // a shortfall that starts passing should be noticed and the notes updated
    for (id, name) in KNOWN_SHORTFALLS {
        let c = outcomes[id as usize - 1].checks.iter().find(|c| c.name == name);
        assert!(c.is_some(), "known shortfall {id} {name:?} no longer checked");
        if c.is_some_and(|c| c.passed) {
            emit(&format!("NOTE {id}: {name} now passes"));
        }
    }
    assert!(unexpected.is_empty(), "unexpected failures: {unexpected:?}");
}

#[test]
fn criterion_12_in_process() {
    report(&acceptance::run(12));
}

fn sweep_once(config: &Path, out: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_sim"))
        .args(["sweep", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .stderr(std::process::Stdio::null())
        .status()
        .expect("sim runs");
    assert!(status.success());
}

#[test]
fn criterion_12_cli_sweeps_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        r#"
[scenario]
n_frames = 1
pn_model = "B"

[sweep]
seeds = 2
[sweep.axes]
snr_db = [5, 25]
cpe_compensation = [true, false]
"#,
    )
    .unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    sweep_once(&config, &a);
    sweep_once(&config, &b);
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let same = ta == tb;
    let rows = String::from_utf8_lossy(&ta).lines().count() - 1;
    emit(&format!(
        "{} 12 sweep determinism via CLI: {rows} rows, identical={same}",
        if same { "PASS" } else { "FAIL" }
    ));
    assert!(same);
    assert_eq!(rows, 8);
}
