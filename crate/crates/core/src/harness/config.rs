use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{build_circle_disk, build_sphere_ball_with, Backend, BulkMesh, SurfaceMesh};
use crate::model::{ExchangeSpec, InitialKind, InitialSpec, ModelParams};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub backend: Backend,
    #[serde(default = "default_n_surface")]
    pub n_surface: usize,
    /// Rings of the disk or shells of the ball.
    #[serde(default = "default_n_radial")]
    pub n_radial: usize,
    #[serde(default = "default_refinement")]
    pub refinement: u32,
    #[serde(default = "one")]
    pub radius: f64,
    /// Circle only: when set, `n_surface = round(n_per_inverse_epsilon / ε)`.
    #[serde(default)]
    pub n_per_inverse_epsilon: Option<f64>,
}

fn default_n_surface() -> usize {
    256
}
fn default_n_radial() -> usize {
    16
}
fn default_refinement() -> u32 {
    3
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExchangeKind {
    Zero,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub epsilon: f64,
    #[serde(default = "one")]
    pub delta: f64,
    #[serde(default = "default_stabilization")]
    pub stabilization: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_exchange")]
    pub exchange: ExchangeKind,
    #[serde(default)]
    pub k1: f64,
    #[serde(default)]
    pub k2: f64,
    #[serde(default = "default_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_max_iter")]
    pub solver_max_iter: usize,
}

fn default_stabilization() -> f64 {
    ModelParams::DEFAULT_STABILIZATION
}
fn default_exchange() -> ExchangeKind {
    ExchangeKind::Zero
}
fn default_tol() -> f64 {
    ModelParams::DEFAULT_SOLVER_TOL
}
fn default_max_iter() -> usize {
    ModelParams::DEFAULT_SOLVER_MAX_ITER
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub m: f64,
    #[serde(default)]
    pub total_mass: Option<f64>,
    #[serde(default)]
    pub cap_angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "default_csv")]
    pub csv: PathBuf,
    #[serde(default = "default_snapshot_dir")]
    pub snapshot_dir: PathBuf,
    #[serde(default = "default_summary")]
    pub summary: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            snapshot_times: Vec::new(),
            csv: default_csv(),
            snapshot_dir: default_snapshot_dir(),
            summary: default_summary(),
        }
    }
}

fn default_csv() -> PathBuf {
    "series.csv".into()
}
fn default_snapshot_dir() -> PathBuf {
    "snapshots".into()
}
fn default_summary() -> PathBuf {
    "summary.json".into()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
}

/// Complete run description, parsed from TOML.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub model: ModelConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| match e {
            Error::InvalidArgument(m) => Error::Config(m),
            other => other,
        };
        self.model_params(self.model.epsilon)
            .validate()
            .map_err(cfg_err)?;
        if self.model.exchange == ExchangeKind::Zero
            && (self.model.k1 != 0.0 || self.model.k2 != 0.0)
        {
            return Err(Error::Config(
                "model.k1/model.k2 require model.exchange = \"linear\"".into(),
            ));
        }
        if self.mesh.backend == Backend::Planar {
            return Err(Error::Config(
                "mesh.backend must be \"circle\" or \"sphere\"".into(),
            ));
        }
        if let Some(k) = self.mesh.n_per_inverse_epsilon {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Config(format!(
                    "mesh.n_per_inverse_epsilon = {k} must be positive"
                )));
            }
        }
        let m = self.initial.m;
        if !(m > -1.0 && m < 1.0) {
            return Err(Error::Config(format!(
                "initial.m = {m} must lie in (-1, 1)"
            )));
        }
        if let Some(total) = self.initial.total_mass {
            if !(total >= 0.0 && total.is_finite()) {
                return Err(Error::Config(format!(
                    "initial.total_mass = {total} must be >= 0"
                )));
            }
        }
        for &t in &self.output.snapshot_times {
            if !(t >= 0.0 && t <= self.model.t_end) {
                return Err(Error::Config(format!(
                    "output.snapshot_times entry {t} outside [0, {}]",
                    self.model.t_end
                )));
            }
        }
        if self.model.t_end > 0.0 && self.model.dt > self.model.t_end {
            return Err(Error::Config("model.dt exceeds model.t_end".into()));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.epsilons.len() < 2 {
                return Err(Error::Config(
                    "sweep.epsilons needs at least two values".into(),
                ));
            }
            if sweep.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(Error::Config(
                    "sweep.epsilons must be strictly decreasing".into(),
                ));
            }
            if sweep.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
                return Err(Error::Config("sweep.epsilons must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn exchange(&self) -> ExchangeSpec {
        match self.model.exchange {
            ExchangeKind::Zero => ExchangeSpec::Zero,
            ExchangeKind::Linear => ExchangeSpec::Linear {
                k1: self.model.k1,
                k2: self.model.k2,
            },
        }
    }

    /// Model parameters with `epsilon` substituted (for sweeps).
    pub fn model_params(&self, epsilon: f64) -> ModelParams {
        ModelParams {
            epsilon,
            delta: self.model.delta,
            dt: self.model.dt,
            t_end: self.model.t_end,
            stabilization: self.model.stabilization,
            exchange: self.exchange(),
            backend: self.mesh.backend,
            solver_tol: self.model.solver_tol,
            solver_max_iter: self.model.solver_max_iter,
        }
    }

    pub fn initial_spec(&self) -> InitialSpec {
        InitialSpec {
            kind: self.initial.kind,
            m: self.initial.m,
            total_mass: self.initial.total_mass,
            cap_angle: self.initial.cap_angle,
        }
    }

    /// Surface vertex count used for a given `epsilon` on the circle.
    pub fn n_surface_for(&self, epsilon: f64) -> usize {
        match self.mesh.n_per_inverse_epsilon {
            Some(k) => (k / epsilon).round() as usize,
            None => self.mesh.n_surface,
        }
    }

    pub fn build_meshes(&self, epsilon: f64) -> Result<(SurfaceMesh, BulkMesh)> {
        match self.mesh.backend {
            Backend::Circle => build_circle_disk(
                self.n_surface_for(epsilon),
                self.mesh.n_radial,
                self.mesh.radius,
            ),
            Backend::Sphere => {
                build_sphere_ball_with(self.mesh.refinement, self.mesh.n_radial, self.mesh.radius)
            }
            Backend::Planar => Err(Error::Config("planar backend cannot be simulated".into())),
        }
    }
}

impl std::str::FromStr for RunConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_toml_str(s)
    }
}
