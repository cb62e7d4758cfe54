//! Configuration, file formats, single runs, ε-sweeps and reference values.

mod config;
mod csv;
mod snapshot;
mod sweep;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use config::{
    ExchangeKind, InitialConfig, MeshConfig, ModelConfig, OutputConfig, RunConfig, SweepConfig,
};
pub use csv::{format_csv, parse_csv, read_csv, write_csv};
pub use snapshot::{
    format_snapshot, parse_snapshot, read_snapshot, snapshot_file_name, write_snapshot,
    SNAPSHOT_MAGIC,
};
pub use sweep::{run_sweep, SweepRow, SweepSummary, SweepTiming, SweepVerdicts};

use crate::diagnostics::{exchange_work, record_state, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::geometry::{Backend, BulkMesh, ChartAtlas, SurfaceMesh};
use crate::model::{init_well_prepared, mm_transform, surface_tension_sigma};
use crate::solver::{run, schedule_steps, StepFluxes, Trajectory};

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Result of a single simulation.
#[derive(Debug)]
pub struct RunOutcome {
    pub surface: SurfaceMesh,
    pub bulk: BulkMesh,
    pub trajectory: Trajectory,
    pub csv_path: PathBuf,
    pub snapshot_paths: Vec<PathBuf>,
}

/// Run one simulation at `epsilon` and write the CSV and snapshots under `out_dir`.
pub fn run_with_epsilon(
    cfg: &RunConfig,
    epsilon: f64,
    out_dir: &Path,
    times: &[f64],
) -> Result<RunOutcome> {
    let (surface, bulk) = cfg.build_meshes(epsilon)?;
    let params = cfg.model_params(epsilon);
    params.check_resolution(surface.mean_edge_length())?;
    let initial = init_well_prepared(&cfg.initial_spec(), &surface, &bulk, &params)?;
    let trajectory = run(&initial, &surface, &bulk, &params, times)?;

    create_dir(out_dir)?;
    let snap_dir = out_dir.join(&cfg.output.snapshot_dir);
    create_dir(&snap_dir)?;
    let mut snapshot_paths = Vec::new();
    for (k, state) in trajectory.snapshots.iter().enumerate() {
        let path = snap_dir.join(snapshot_file_name(k));
        write_snapshot(&path, surface.backend(), state)?;
        snapshot_paths.push(path);
    }
    let csv_path = out_dir.join(&cfg.output.csv);
    write_csv(&csv_path, &trajectory.records)?;
    Ok(RunOutcome {
        surface,
        bulk,
        trajectory,
        csv_path,
        snapshot_paths,
    })
}

pub fn run_simulation(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    run_with_epsilon(cfg, cfg.model.epsilon, out_dir, &cfg.output.snapshot_times)
}

/// Recompute diagnostics from the snapshots of a previous `run`.
///
/// Snapshot `k` is placed at the `k`-th scheduled output step. The exchange
/// work and energy residual need the state one step earlier; they are NaN
/// unless that snapshot is present.
pub fn diag_from_snapshots(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let epsilon = cfg.model.epsilon;
    let (surface, bulk) = cfg.build_meshes(epsilon)?;
    let params = cfg.model_params(epsilon);
    let steps = schedule_steps(&cfg.output.snapshot_times, &params)?;
    let snap_dir = out_dir.join(&cfg.output.snapshot_dir);
    let mut records = Vec::new();
    let mut prev: Option<(usize, crate::model::PhaseState, f64)> = None;
    for (k, &n) in steps.iter().enumerate() {
        let path = snap_dir.join(snapshot_file_name(k));
        if !path.exists() {
            break;
        }
        let (backend, mut state) = read_snapshot(&path)?;
        if backend != surface.backend() {
            return Err(Error::Config(format!(
                "{} holds a {backend} snapshot",
                path.display()
            )));
        }
        state.check_shapes(&surface, &bulk)?;
        state.t = n as f64 * params.dt;
        let step = match &prev {
            Some((pn, ps, pe)) if *pn + 1 == n => Some((
                StepFluxes {
                    q_work: exchange_work(ps, &state, &surface, &bulk, &params),
                    ..Default::default()
                },
                *pe,
            )),
            _ => None,
        };
        let rec = record_state(&state, &surface, &bulk, &params, step);
        prev = Some((n, state, rec.e_total));
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::io(
            snap_dir.join(snapshot_file_name(0)),
            std::io::Error::new(std::io::ErrorKind::NotFound, "no snapshots found"),
        ));
    }
    Ok(records)
}

/// Reference values from the one-dimensional profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub sigma: f64,
    pub h_table: Vec<(f64, f64)>,
    pub epsilon: f64,
    /// `∫ ε/2 φ'² + W(φ)/ε` for `φ = tanh(√2 x/ε)` over `[-20ε, 20ε]`.
    pub profile_energy: f64,
}

pub const ORACLE_H_POINTS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

pub fn oracle_report(epsilon: f64) -> Result<OracleReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!(
            "epsilon = {epsilon} must be positive"
        )));
    }
    let k = 2f64.sqrt() / epsilon;
    let density = |x: f64| {
        let t = (k * x).tanh();
        let d = k * (1.0 - t * t);
        0.5 * epsilon * d * d + crate::model::double_well(t) / epsilon
    };
    let l = 20.0 * epsilon;
    let profile_energy = quadrature::double_exponential::integrate(density, -l, 0.0, 1e-12)
        .integral
        + quadrature::double_exponential::integrate(density, 0.0, l, 1e-12).integral;
    Ok(OracleReport {
        sigma: surface_tension_sigma(),
        h_table: ORACLE_H_POINTS
            .iter()
            .map(|&s| (s, mm_transform(s)))
            .collect(),
        epsilon,
        profile_energy,
    })
}

impl std::fmt::Display for OracleReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "sigma = {:.9}", self.sigma)?;
        for (s, h) in &self.h_table {
            writeln!(f, "H({s:+.1}) = {h:.9}")?;
        }
        write!(
            f,
            "profile energy (epsilon = {}) = {:.9}",
            self.epsilon, self.profile_energy
        )
    }
}

/// Summary statistics of a mesh pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshReport {
    pub backend: Backend,
    pub surface_vertices: usize,
    pub surface_elements: usize,
    pub bulk_vertices: usize,
    pub bulk_cells: usize,
    pub area: f64,
    pub volume: f64,
    pub mean_edge_length: f64,
    pub watertight: bool,
    pub stiffness_asymmetry: f64,
    pub kernel_residual: f64,
    pub trace_mismatch: f64,
    pub charts: usize,
    pub chart_radius: f64,
    pub max_chart_multiplicity: usize,
}

pub fn mesh_report(surface: &SurfaceMesh, bulk: &BulkMesh) -> Result<MeshReport> {
    let atlas = ChartAtlas::build(surface)?;
    let ones = vec![1.0; surface.num_vertices()];
    Ok(MeshReport {
        backend: surface.backend(),
        surface_vertices: surface.num_vertices(),
        surface_elements: surface.num_elements(),
        bulk_vertices: bulk.num_vertices(),
        bulk_cells: bulk.num_cells(),
        area: surface.area(),
        volume: bulk.volume(),
        mean_edge_length: surface.mean_edge_length(),
        watertight: surface.is_watertight(),
        stiffness_asymmetry: surface.stiffness().max_asymmetry(),
        kernel_residual: surface
            .stiffness()
            .mul_vec(&ones)
            .iter()
            .fold(0.0, |m, v| m.max(v.abs())),
        trace_mismatch: bulk.trace_mismatch(surface),
        charts: atlas.num_charts(),
        chart_radius: atlas.radius(),
        max_chart_multiplicity: atlas.max_multiplicity(),
    })
}
