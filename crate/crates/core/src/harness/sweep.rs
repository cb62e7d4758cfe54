use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{create_dir, run_with_epsilon, RunConfig};
use crate::diagnostics::{holder_quotient, DEFAULT_HOLDER_EXPONENT};
use crate::error::{Error, Result};

/// Terminal diagnostics of one ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub n_surface: usize,
    pub failed: bool,
    pub error: Option<String>,
    pub disc_ratio: f64,
    pub f_initial: f64,
    pub f_final: f64,
    pub e_total_max: f64,
    pub perimeter: f64,
    pub varifold_mass: f64,
    pub mm_w11: f64,
    pub mm_w11_max: f64,
    pub holder_quotient: f64,
    pub mu_ratio: f64,
    /// Largest relative change of `∫φ` along the run.
    pub delta_mass_phi: f64,
    /// Largest relative change of `∫u + ∫v` along the run.
    pub delta_mass_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepVerdicts {
    /// Terminal discrepancy ratio strictly decreases with ε.
    pub disc_ratio_decreasing: Option<bool>,
    /// Largest over smallest `max_t E_total` is at most 2.
    pub energy_bounded: Option<bool>,
    /// All relative mass changes below `1e-10`.
    pub masses_conserved: Option<bool>,
    /// Largest over smallest `max_t ∫|∇H(φ)|` is below 2.
    pub mm_w11_uniform: Option<bool>,
    /// Largest over smallest Hölder quotient is at most 3.
    pub holder_within_factor_3: Option<bool>,
    /// Largest over smallest terminal μ-bound ratio is at most 3.
    pub mu_ratio_within_factor_3: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub epsilons: Vec<f64>,
    pub rows: Vec<SweepRow>,
    pub verdicts: SweepVerdicts,
    #[serde(skip)]
    pub timing: SweepTiming,
}

/// Wall-clock times; not part of the serialized summary.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTiming {
    pub total_seconds: f64,
    pub run_seconds: Vec<f64>,
    pub threads: usize,
}

const MASS_TOL: f64 = 1e-10;

fn spread(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    if v.len() < 2 {
        return None;
    }
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    Some(max / min)
}

fn relative_drift(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let Some(&first) = v.first() else { return 0.0 };
    // Scale floored at 1 for zero-mean fields.
    let d = v.iter().map(|x| (x - first).abs()).fold(0.0, f64::max);
    d / first.abs().max(1.0)
}

impl SweepVerdicts {
    pub fn from_rows(rows: &[SweepRow]) -> Self {
        let ok: Vec<&SweepRow> = rows.iter().filter(|r| !r.failed).collect();
        let enough = ok.len() >= 2;
        let mut sorted = ok.clone();
        sorted.sort_by(|a, b| b.epsilon.partial_cmp(&a.epsilon).unwrap());
        SweepVerdicts {
            disc_ratio_decreasing: enough
                .then(|| sorted.windows(2).all(|w| w[1].disc_ratio < w[0].disc_ratio)),
            energy_bounded: spread(ok.iter().map(|r| r.e_total_max)).map(|s| s <= 2.0),
            masses_conserved: (!ok.is_empty()).then(|| {
                ok.iter()
                    .all(|r| r.delta_mass_phi < MASS_TOL && r.delta_mass_total < MASS_TOL)
            }),
            mm_w11_uniform: spread(ok.iter().map(|r| r.mm_w11_max)).map(|s| s < 2.0),
            holder_within_factor_3: spread(ok.iter().map(|r| r.holder_quotient)).map(|s| s <= 3.0),
            mu_ratio_within_factor_3: spread(ok.iter().map(|r| r.mu_ratio)).map(|s| s <= 3.0),
        }
    }
}

fn sweep_times(cfg: &RunConfig) -> Vec<f64> {
    if cfg.output.snapshot_times.len() >= 2 {
        cfg.output.snapshot_times.clone()
    } else {
        let t = cfg.model.t_end;
        vec![0.25 * t, 0.5 * t, 0.75 * t, t]
    }
}

fn run_row(cfg: &RunConfig, idx: usize, epsilon: f64, out_dir: &Path) -> (SweepRow, f64) {
    let start = Instant::now();
    let dir = out_dir.join(format!("eps_{idx:02}_{epsilon}"));
    let mut row = SweepRow {
        epsilon,
        n_surface: 0,
        failed: true,
        error: None,
        disc_ratio: f64::NAN,
        f_initial: f64::NAN,
        f_final: f64::NAN,
        e_total_max: f64::NAN,
        perimeter: f64::NAN,
        varifold_mass: f64::NAN,
        mm_w11: f64::NAN,
        mm_w11_max: f64::NAN,
        holder_quotient: f64::NAN,
        mu_ratio: f64::NAN,
        delta_mass_phi: f64::NAN,
        delta_mass_total: f64::NAN,
    };
    match run_with_epsilon(cfg, epsilon, &dir, &sweep_times(cfg)) {
        Ok(out) => {
            let recs = &out.trajectory.records;
            let last = recs.last().expect("at least the initial record");
            row.n_surface = out.surface.num_vertices();
            row.failed = out.trajectory.failed();
            row.error = out.trajectory.failure.clone();
            row.disc_ratio = last.disc_ratio;
            row.f_initial = recs[0].f;
            row.f_final = last.f;
            row.e_total_max = recs
                .iter()
                .map(|r| r.e_total)
                .fold(f64::NEG_INFINITY, f64::max);
            row.perimeter = last.perimeter;
            row.varifold_mass = last.varifold_mass;
            row.mm_w11 = last.mm_w11;
            row.mm_w11_max = recs
                .iter()
                .map(|r| r.mm_w11)
                .fold(f64::NEG_INFINITY, f64::max);
            row.holder_quotient =
                holder_quotient(&out.trajectory, &out.surface, DEFAULT_HOLDER_EXPONENT);
            row.mu_ratio = last.mu_ratio;
            row.delta_mass_phi = relative_drift(recs.iter().map(|r| r.mass_phi));
            row.delta_mass_total = relative_drift(recs.iter().map(|r| r.mass_total));
        }
        Err(e) => {
            log::error!("sweep run at epsilon = {epsilon} failed: {e}");
            row.error = Some(e.to_string());
        }
    }
    (row, start.elapsed().as_secs_f64())
}

/// Run every ε of the sweep block in parallel and write `summary` and
/// `timing.json` under `out_dir`. `threads = 0` uses the rayon default.
pub fn run_sweep(cfg: &RunConfig, out_dir: &Path, threads: usize) -> Result<SweepSummary> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
    create_dir(out_dir)?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<(SweepRow, f64)> = pool.install(|| {
        sweep
            .epsilons
            .par_iter()
            .enumerate()
            .map(|(i, &eps)| run_row(cfg, i, eps, out_dir))
            .collect()
    });
    let (rows, run_seconds): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let summary = SweepSummary {
        epsilons: sweep.epsilons.clone(),
        verdicts: SweepVerdicts::from_rows(&rows),
        rows,
        timing: SweepTiming {
            total_seconds: start.elapsed().as_secs_f64(),
            run_seconds,
            threads: pool.current_num_threads(),
        },
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    let path = out_dir.join(&cfg.output.summary);
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    let tpath = out_dir.join("timing.json");
    let tjson = serde_json::to_string_pretty(&summary.timing).expect("timing serializes");
    std::fs::write(&tpath, tjson + "\n").map_err(|e| Error::io(&tpath, e))?;
    if summary.rows.iter().all(|r| r.failed) {
        return Err(Error::NumericalBlowup {
            field: "sweep",
            t: cfg.model.t_end,
        });
    }
    Ok(summary)
}
