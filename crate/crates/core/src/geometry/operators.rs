use log::warn;

use super::mesh::SurfaceMesh;
use crate::error::Result;
use crate::sparse::{self, SolveStats};

pub const DEFAULT_POISSON_TOL: f64 = 1e-10;
pub const DEFAULT_POISSON_MAX_ITER: usize = 10_000;

/// Discrete Laplace–Beltrami operator `-M⁻¹K f` (negative semidefinite).
pub fn laplace_beltrami_apply(mesh: &SurfaceMesh, field: &[f64]) -> Result<Vec<f64>> {
    mesh.check_len(field, "field")?;
    let kf = mesh.stiffness().mul_vec(field);
    Ok(kf.iter().zip(mesh.mass()).map(|(k, m)| -k / m).collect())
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub psi: Vec<f64>,
    pub stats: SolveStats,
    /// Set when the right-hand side had a non-negligible mean and was projected.
    pub projected: bool,
}

/// Solve `Δ_Γ Ψ = g` with zero mean, i.e. `K Ψ = -M g`.
pub fn solve_surface_poisson(mesh: &SurfaceMesh, g: &[f64]) -> Result<PoissonSolution> {
    solve_surface_poisson_with(mesh, g, DEFAULT_POISSON_TOL, DEFAULT_POISSON_MAX_ITER)
}

pub fn solve_surface_poisson_with(
    mesh: &SurfaceMesh,
    g: &[f64],
    tolerance: f64,
    max_iterations: usize,
) -> Result<PoissonSolution> {
    mesh.check_len(g, "right-hand side")?;
    let mut g = g.to_vec();
    let mean = sparse::weighted_mean(&g, mesh.mass());
    let scale = mesh.l2_norm_sq(&g).sqrt() / mesh.area().sqrt();
    let projected = mean.abs() > 1e-8 * scale;
    if projected {
        warn!("Poisson right-hand side has mean {mean:.3e}; projecting to mean zero");
    }
    sparse::remove_weighted_mean(&mut g, mesh.mass());
    let rhs: Vec<f64> = g.iter().zip(mesh.mass()).map(|(gi, m)| -gi * m).collect();
    let (psi, stats) = sparse::conjugate_gradient(
        mesh.stiffness(),
        &rhs,
        tolerance,
        max_iterations,
        Some(mesh.mass()),
    )?;
    Ok(PoissonSolution {
        psi,
        stats,
        projected,
    })
}
