//! Surface Cahn–Hilliard dynamics coupled to bulk diffusion, with
//! diagnostics for the sharp-interface limit.
//!
//! The crate is organized as
//! - [`geometry`]: circle/disk and icosphere/ball meshes, Laplace–Beltrami
//!   operator, chart atlas and mollifier, interface extraction;
//! - [`model`]: potential, free energy, exchange term, initial data;
//! - [`solver`]: the linearly implicit time stepper;
//! - [`diagnostics`]: energy identity, discrepancy, varifolds, Gibbs–Thomson;
//! - [`harness`]: configuration, output formats and ε-sweeps.

pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod model;
pub mod solver;
pub mod sparse;

pub use diagnostics::{DiagnosticsRecord, DiscreteVarifold};
pub use error::{Error, Result};
pub use geometry::{Backend, BulkMesh, ChartAtlas, InterfaceCurve, SurfaceMesh};
pub use harness::{RunConfig, SweepSummary};
pub use model::{ExchangeSpec, InitialKind, InitialSpec, ModelParams, PhaseState};
pub use solver::{run, step, Stepper, Trajectory};
