use std::path::Path;
use std::process::{Command, Output};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sim"))
        .args(args)
        .output()
        .expect("sim runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn psd_csv() {
    let o = sim(&[
        "psd", "--model", "B", "--fmin", "1e3", "--fmax", "1e8", "--points", "11",
    ]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "offset_hz,psd_dbc_hz");
    assert_eq!(lines.len(), 12);
    assert!(lines[1].starts_with("1000,"));
}

#[test]
fn run_with_overrides_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[scenario]\nn_frames = 1\npn_model = \"none\"\nsnr_db = 5\n",
    );
    let grid = dir.path().join("grid.csv");
    let cpe = dir.path().join("cpe.csv");
    let o = sim(&[
        "run",
        "--config",
        &cfg,
        "--override",
        "snr_db=no-noise",
        "--override",
        "channel_profile=flat",
        "--dump-grid",
        grid.to_str().unwrap(),
        "--dump-cpe",
        cpe.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "none");
    assert_eq!(row[6], "no-noise");
    assert_eq!(row[11], "0.0");
    let g = std::fs::read_to_string(grid).unwrap();
    assert_eq!(g.lines().next().unwrap(), "subcarrier,symbol,role,re,im");
    assert_eq!(g.lines().count(), 1 + 792 * 14);
    let c = std::fs::read_to_string(cpe).unwrap();
    assert_eq!(c.lines().next().unwrap(), "symbol,phi_rad,pilot_count");
    assert_eq!(c.lines().count(), 1 + 40 * 14);
}

#[test]
fn sweep_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.toml",
        "[scenario]\nn_frames = 1\n[sweep]\nseeds = 1\n[sweep.axes]\nsnr_db = [10, 20]\nmodulation = [\"QAM64\", \"QAM256\"]\n",
    );
    let out = dir.path().join("r.csv");
    let o = sim(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--jobs", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "scenario_id,pn_model,fc_ghz,modulation,n_tx,n_rx,snr_db,cpe_comp,seed,evm_pct,evm_db,ber,bler,n_bits,n_blocks"
    );
    assert_eq!(text.lines().count(), 5);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.csv.meta.json")).unwrap()).unwrap();
    assert!(meta["timestamp_unix"].as_u64().is_some());
    assert!(meta["version"].is_string());
    assert_eq!(meta["config"]["seeds"], 1);

    for fig in ["evm_vs_snr", "bler_vs_snr", "pn_compare"] {
        let p = dir.path().join(format!("{fig}.csv"));
        let o = sim(&[
            "plot-data",
            "--in",
            out.to_str().unwrap(),
            "--figure",
            fig,
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        assert_eq!(std::fs::read_to_string(&p).unwrap().lines().count(), 5);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    assert_eq!(
        sim(&["run", "--config", missing.to_str().unwrap()]).status.code(),
        Some(1)
    );
    let bad = write(dir.path(), "bad.toml", "[scenario]\nn_frames = 0\n");
    assert_eq!(sim(&["run", "--config", &bad]).status.code(), Some(1));
    let unknown = write(dir.path(), "u.toml", "[scenario]\nchannel_profile = \"cdl-x\"\n");
    assert_eq!(sim(&["run", "--config", &unknown]).status.code(), Some(1));
    let ok = write(dir.path(), "ok.toml", "[scenario]\nn_frames = 1\n");
    let unwritable = dir.path().join("no-such-dir").join("r.csv");
    assert_eq!(
        sim(&["sweep", "--config", &ok, "--out", unwritable.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(sim(&["sweep", "--config", &ok]).status.code(), Some(1));
    assert_eq!(sim(&["check", "--only", "1,5"]).status.code(), Some(0));
    assert_eq!(sim(&["check", "--only", "99"]).status.code(), Some(1));
    assert_eq!(sim(&["bogus"]).status.code(), Some(1));
}
