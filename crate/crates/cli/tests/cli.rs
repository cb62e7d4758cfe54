use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
[mesh]
backend = "circle"
n_surface = 64
n_radial = 4

[model]
epsilon = 0.25
dt = 1e-3
t_end = 0.01

[initial]
kind = "band"
m = 0.0

[output]
snapshot_times = [0.005, 0.01]
"#;

fn raftlim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_raftlim"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn oracle_prints_reference_values() {
    let out = raftlim(&["oracle", "--epsilon", "0.05"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("sigma = 1.885618083"));
    assert!(text.contains("H(+1.0) = 1.333333333"));
    assert!(text.contains("epsilon = 0.05"));
}

#[test]
fn oracle_rejects_bad_epsilon() {
    let out = raftlim(&["oracle", "--epsilon=-1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_then_diag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out_dir = dir.path().join("out");
    let out_s = out_dir.to_str().unwrap();
    let out = raftlim(&["--quiet", "--config", &cfg, "--out", out_s, "run"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(out_dir.join("series.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);
    assert!(csv.starts_with("t,F,E_total,mass_phi"));
    assert!(out_dir.join("snapshots/snap_0002.txt").exists());

    let out = raftlim(&["--quiet", "--config", &cfg, "--out", out_s, "diag"]);
    assert!(out.status.success());
    let diag = std::fs::read_to_string(out_dir.join("diag.csv")).unwrap();
    assert_eq!(diag.lines().count(), 4);
}

#[test]
fn zero_end_time_writes_the_initial_state() {
    let dir = tempfile::tempdir().unwrap();
    let text = CONFIG
        .replace("t_end = 0.01", "t_end = 0.0")
        .replace("[0.005, 0.01]", "[]");
    let cfg = write_config(dir.path(), &text);
    let out_dir = dir.path().join("out");
    let out = raftlim(&[
        "--quiet",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "run",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(out_dir.join("series.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(out_dir.join("snapshots/snap_0000.txt").exists());
}

#[test]
fn unknown_key_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("m = 0.0", "m = 0.0\nshape = 2"));
    let out = raftlim(&["--config", &cfg, "run"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("error:") && err.contains("shape"), "{err}");
}

#[test]
fn missing_config_exits_with_one() {
    assert_eq!(raftlim(&["run"]).status.code(), Some(1));
}

#[test]
fn unreadable_config_exits_with_three() {
    let out = raftlim(&["--config", "/nonexistent/run.toml", "mesh"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn diag_without_run_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = raftlim(&[
        "--config",
        &cfg,
        "--out",
        dir.path().join("none").to_str().unwrap(),
        "diag",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sweep_without_block_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    assert_eq!(raftlim(&["--config", &cfg, "sweep"]).status.code(), Some(1));
}

#[test]
fn sweep_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{CONFIG}\n[sweep]\nepsilons = [0.3, 0.25]\n"),
    );
    let out_dir = dir.path().join("sweep");
    let out = raftlim(&[
        "--quiet",
        "--threads",
        "2",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "sweep",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(
        v["verdicts"]["masses_conserved"],
        serde_json::Value::Bool(true)
    );
}

#[test]
fn mesh_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = raftlim(&["--config", &cfg, "mesh"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["surface_vertices"], 64);
    assert_eq!(v["watertight"], serde_json::Value::Bool(true));
}
