use std::f64::consts::SQRT_2;
use std::path::Path;

use approx::assert_relative_eq;
use proptest::prelude::*;
use raftlim_core::diagnostics::DiagnosticsRecord;
use raftlim_core::geometry::Backend;
use raftlim_core::harness::{
    diag_from_snapshots, format_csv, format_snapshot, mesh_report, oracle_report, parse_csv,
    parse_snapshot, read_csv, run_simulation, run_sweep, snapshot_file_name, RunConfig,
    SweepSummary,
};
use raftlim_core::model::PhaseState;
use raftlim_core::Error;

const BASE: &str = r#"
[mesh]
backend = "circle"
n_surface = 96
n_radial = 4

[model]
epsilon = 0.2
dt = 1e-3
t_end = 0.02
exchange = "linear"
k1 = 1.0
k2 = 0.5

[initial]
kind = "two-point"
m = 0.1
total_mass = 4.0

[output]
snapshot_times = [0.005, 0.006, 0.02]
"#;

fn cfg() -> RunConfig {
    RunConfig::from_toml_str(BASE).unwrap()
}

#[test]
fn config_defaults_and_parameters() {
    let c = cfg();
    assert_eq!(c.mesh.backend, Backend::Circle);
    assert_eq!(c.model.delta, 1.0);
    let p = c.model_params(0.1);
    assert_eq!(p.epsilon, 0.1);
    assert_eq!(p.num_steps(), 20);
    assert!(c.sweep.is_none());
    let parsed: RunConfig = BASE.parse().unwrap();
    assert_eq!(parsed, c);
}

#[test]
fn config_rejects_unknown_and_inconsistent_keys() {
    let cases = [
        BASE.replace("n_radial = 4", "n_radial = 4\ncolour = 1"),
        BASE.replace("epsilon = 0.2", "epsilon = -0.2"),
        BASE.replace("exchange = \"linear\"", "exchange = \"zero\""),
        BASE.replace("m = 0.1", "m = 1.0"),
        BASE.replace("[0.005, 0.006, 0.02]", "[0.5]"),
        BASE.replace("dt = 1e-3", "dt = 1.0"),
        BASE.replace("backend = \"circle\"", "backend = \"planar\""),
        format!("{BASE}\n[sweep]\nepsilons = [0.1, 0.2]\n"),
        format!("{BASE}\n[sweep]\nepsilons = [0.2]\n"),
        "[mesh]\nbackend = \"circle\"\n".to_string(),
    ];
    for text in &cases {
        let r = RunConfig::from_toml_str(text);
        assert!(matches!(r, Err(Error::Config(_))), "{text}: {r:?}");
        assert_eq!(r.unwrap_err().exit_code(), 1);
    }
}

#[test]
fn snapshot_round_trip_is_exact() {
    let mut st = PhaseState::zeros(5, 3);
    for i in 0..5 {
        st.phi[i] = (i as f64 * 0.37).sin() / 3.0;
        st.v[i] = 1.0 / (i as f64 + 3.0);
        st.mu[i] = -1e-17 * i as f64;
        st.theta[i] = 1e300 / (i as f64 + 1.0);
    }
    st.u = vec![SQRT_2, 0.0, -7.25];
    let text = format_snapshot(Backend::Sphere, &st);
    let (b, back) = parse_snapshot(&text, Path::new("mem")).unwrap();
    assert_eq!(b, Backend::Sphere);
    assert_eq!(back.phi, st.phi);
    assert_eq!(back.v, st.v);
    assert_eq!(back.mu, st.mu);
    assert_eq!(back.theta, st.theta);
    assert_eq!(back.u, st.u);
}

#[test]
fn snapshot_parse_errors_carry_line_numbers() {
    let st = PhaseState::zeros(2, 1);
    let good = format_snapshot(Backend::Circle, &st);
    let bad_magic = good.replacen("RAFTSNAP 1", "RAFTSNAP 2", 1);
    let bad_number = good.replacen("0 0.0000000000000000e0", "0 zero", 1);
    let truncated: String = good.lines().take(3).collect::<Vec<_>>().join("\n");
    let trailing = format!("{good}extra\n");
    for (text, line) in [(bad_magic, 1), (bad_number, 3), (trailing, 6)] {
        match parse_snapshot(&text, Path::new("s.txt")) {
            Err(Error::Parse { line: l, .. }) => assert_eq!(l, line),
            other => panic!("{other:?}"),
        }
    }
    assert!(matches!(
        parse_snapshot(&truncated, Path::new("s.txt")),
        Err(Error::Parse { .. })
    ));
    assert_eq!(snapshot_file_name(7), "snap_0007.txt");
}

#[test]
fn csv_parse_errors() {
    let p = Path::new("x.csv");
    assert!(matches!(
        parse_csv("", p),
        Err(Error::Parse { line: 1, .. })
    ));
    assert!(matches!(
        parse_csv("a,b\n", p),
        Err(Error::Parse { line: 1, .. })
    ));
    let header = DiagnosticsRecord::COLUMNS.join(",");
    assert!(matches!(
        parse_csv(&format!("{header}\n1,2\n"), p),
        Err(Error::Parse { line: 2, .. })
    ));
    assert!(parse_csv(&format!("{header}\n"), p).unwrap().is_empty());
}

#[test]
fn run_writes_csv_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg();
    let out = run_simulation(&c, dir.path()).unwrap();
    assert_eq!(out.snapshot_paths.len(), 4);
    assert!(out.snapshot_paths.iter().all(|p| p.exists()));
    let recs = read_csv(&out.csv_path).unwrap();
    assert_eq!(recs.len(), 21);
    for (a, b) in recs.iter().zip(&out.trajectory.records) {
        let (va, vb) = (a.values(), b.values());
        for k in 0..16 {
            assert!(va[k] == vb[k] || (va[k].is_nan() && vb[k].is_nan()));
        }
    }
    assert!(recs[0].q_work.is_nan());
    assert!(recs[1].energy_residual.is_finite());
}

#[test]
fn runs_are_deterministic() {
    let c = cfg();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_simulation(&c, a.path()).unwrap();
    run_simulation(&c, b.path()).unwrap();
    let read = |d: &Path, f: &str| std::fs::read_to_string(d.join(f)).unwrap();
    assert_eq!(read(a.path(), "series.csv"), read(b.path(), "series.csv"));
    for k in 0..4 {
        let f = format!("snapshots/{}", snapshot_file_name(k));
        assert_eq!(read(a.path(), &f), read(b.path(), &f));
    }
}

#[test]
fn diag_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg();
    let out = run_simulation(&c, dir.path()).unwrap();
    let diag = diag_from_snapshots(&c, dir.path()).unwrap();
    let steps = [0usize, 5, 6, 20];
    assert_eq!(diag.len(), steps.len());
    for (rec, &n) in diag.iter().zip(&steps) {
        let reference = &out.trajectory.records[n];
        let (a, b) = (rec.values(), reference.values());
        for k in 0..16 {
            let name = DiagnosticsRecord::COLUMNS[k];
            let recomputed = !(name == "q_work" || name == "energy_residual") || n == 6;
            if recomputed {
                assert!(
                    (a[k] - b[k]).abs() <= 1e-12 * (1.0 + b[k].abs()),
                    "{name} at step {n}: {} vs {}",
                    a[k],
                    b[k]
                );
            } else {
                assert!(a[k].is_nan(), "{name} at step {n}");
            }
        }
    }
}

#[test]
fn diag_without_snapshots_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let e = diag_from_snapshots(&cfg(), dir.path()).unwrap_err();
    assert!(matches!(e, Error::Io { .. }));
    assert_eq!(e.exit_code(), 3);
}

#[test]
fn under_resolved_epsilon_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let c = RunConfig::from_toml_str(&BASE.replace("epsilon = 0.2", "epsilon = 0.05")).unwrap();
    assert!(matches!(
        run_simulation(&c, dir.path()),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn sweep_writes_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{}\n[sweep]\nepsilons = [0.3, 0.2]\n",
        BASE.replace("n_surface = 96", "n_per_inverse_epsilon = 20.0")
    );
    let c = RunConfig::from_toml_str(&text).unwrap();
    assert_eq!(c.n_surface_for(0.2), 100);
    let summary = run_sweep(&c, dir.path(), 2).unwrap();
    assert_eq!(summary.rows.len(), 2);
    assert_eq!(summary.rows[0].n_surface, 67);
    assert!(summary.rows.iter().all(|r| !r.failed));
    assert_eq!(summary.verdicts.masses_conserved, Some(true));
    let json = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let back: SweepSummary = serde_json::from_str(&json).unwrap();
    assert_eq!(back.epsilons, vec![0.3, 0.2]);
    assert_eq!(back.verdicts, summary.verdicts);
    assert!(dir.path().join("timing.json").exists());
    assert!(dir.path().join("eps_00_0.3").join("series.csv").exists());
}

#[test]
fn sweep_needs_a_sweep_block() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        run_sweep(&cfg(), dir.path(), 1),
        Err(Error::Config(_))
    ));
}

#[test]
fn oracle_values() {
    let r = oracle_report(0.1).unwrap();
    assert_relative_eq!(r.sigma, 4.0 * SQRT_2 / 3.0, epsilon = 1e-9);
    assert_relative_eq!(r.profile_energy, r.sigma, max_relative = 1e-9);
    let h: Vec<f64> = r.h_table.iter().map(|x| x.1).collect();
    assert_eq!(h[0], 0.0);
    assert_relative_eq!(h[2], 2.0 / 3.0, epsilon = 1e-9);
    assert_relative_eq!(h[4], 4.0 / 3.0, epsilon = 1e-9);
    let text = r.to_string();
    assert!(text.starts_with("sigma = 1.885618083"));
    assert!(oracle_report(0.0).is_err());
}

#[test]
fn mesh_report_of_a_sphere() {
    let c = RunConfig::from_toml_str(
        &BASE
            .replace("backend = \"circle\"", "backend = \"sphere\"")
            .replace("n_surface = 96\n", "refinement = 2\n"),
    )
    .unwrap();
    let (s, b) = c.build_meshes(0.2).unwrap();
    let r = mesh_report(&s, &b).unwrap();
    assert_eq!(r.surface_vertices, 162);
    assert_eq!(r.surface_elements, 320);
    assert!(r.watertight);
    assert!(r.kernel_residual < 1e-12);
    assert!(r.trace_mismatch < 1e-12);
    assert!(r.max_chart_multiplicity >= 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip(vals in prop::collection::vec(prop::num::f64::ANY, 16)) {
        let arr: [f64; 16] = vals.clone().try_into().unwrap();
        let rec = DiagnosticsRecord::from_values(arr);
        let back = parse_csv(&format_csv(&[rec.clone(), rec]), Path::new("p")).unwrap();
        prop_assert_eq!(back.len(), 2);
        for (a, b) in back[1].values().iter().zip(&vals) {
            prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }

    #[test]
    fn snapshot_round_trip(phi in prop::collection::vec(-1e3f64..1e3, 1..20), u in prop::collection::vec(-1e3f64..1e3, 1..5)) {
        let mut st = PhaseState::zeros(phi.len(), u.len());
        st.phi = phi.clone();
        st.theta = phi.iter().map(|x| x * 1e-7).collect();
        st.u = u.clone();
        let (_, back) = parse_snapshot(&format_snapshot(Backend::Circle, &st), Path::new("p")).unwrap();
        prop_assert_eq!(back.phi, phi);
        prop_assert_eq!(back.theta, st.theta);
        prop_assert_eq!(back.u, u);
    }
}
