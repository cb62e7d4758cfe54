use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use super::potential::double_well;
use super::state::PhaseState;
use crate::geometry::{BulkMesh, SurfaceMesh};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    /// Ginzburg–Landau part `∫ ε/2|∇φ|² + W(φ)/ε`.
    pub ginzburg_landau: f64,
    /// `∫ (2v - 1 - φ)²/(2δ)`.
    pub coupling: f64,
    /// `½∫_B u²`.
    pub bulk: f64,
    /// Surface free energy `F`.
    pub f: f64,
    /// `F + ½∫_B u²`.
    pub e_total: f64,
}

pub fn ginzburg_landau(phi: &[f64], surface: &SurfaceMesh, epsilon: f64) -> f64 {
    let grad = surface.dirichlet(phi);
    let well: f64 = phi
        .iter()
        .zip(surface.mass())
        .map(|(&p, m)| m * double_well(p))
        .sum();
    0.5 * epsilon * grad + well / epsilon
}

pub fn energy(
    state: &PhaseState,
    surface: &SurfaceMesh,
    bulk: &BulkMesh,
    params: &ModelParams,
) -> Energy {
    let gl = ginzburg_landau(&state.phi, surface, params.epsilon);
    let coupling: f64 = state
        .v
        .iter()
        .zip(&state.phi)
        .zip(surface.mass())
        .map(|((v, p), m)| {
            let c = 2.0 * v - 1.0 - p;
            m * c * c
        })
        .sum::<f64>()
        / (2.0 * params.delta);
    let bulk_energy: f64 = 0.5
        * state
            .u
            .iter()
            .zip(bulk.mass())
            .map(|(u, m)| m * u * u)
            .sum::<f64>();
    let f = gl + coupling;
    Energy {
        ginzburg_landau: gl,
        coupling,
        bulk: bulk_energy,
        f,
        e_total: f + bulk_energy,
    }
}
