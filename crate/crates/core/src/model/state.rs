use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BulkMesh, SurfaceMesh};

/// Discrete solution at one time: `u` on the bulk, the other fields on the surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub t: f64,
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
    pub v: Vec<f64>,
    pub mu: Vec<f64>,
    pub theta: Vec<f64>,
}

impl PhaseState {
    pub fn zeros(n_surface: usize, n_bulk: usize) -> Self {
        PhaseState {
            t: 0.0,
            u: vec![0.0; n_bulk],
            phi: vec![0.0; n_surface],
            v: vec![0.0; n_surface],
            mu: vec![0.0; n_surface],
            theta: vec![0.0; n_surface],
        }
    }

    pub fn check_shapes(&self, surface: &SurfaceMesh, bulk: &BulkMesh) -> Result<()> {
        let ns = surface.num_vertices();
        for (name, f) in [
            ("phi", &self.phi),
            ("v", &self.v),
            ("mu", &self.mu),
            ("theta", &self.theta),
        ] {
            if f.len() != ns {
                return Err(Error::invalid(format!(
                    "{name} has length {}, surface has {ns} vertices",
                    f.len()
                )));
            }
        }
        if self.u.len() != bulk.num_vertices() {
            return Err(Error::invalid(format!(
                "u has length {}, bulk has {} vertices",
                self.u.len(),
                bulk.num_vertices()
            )));
        }
        Ok(())
    }

    /// Name of the first field containing a non-finite value.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        [
            ("phi", &self.phi),
            ("mu", &self.mu),
            ("v", &self.v),
            ("theta", &self.theta),
            ("u", &self.u),
        ]
        .into_iter()
        .find(|(_, f)| f.iter().any(|x| !x.is_finite()))
        .map(|(name, _)| name)
    }

    /// `max |θ - (2/δ)(2v - 1 - φ)|`.
    pub fn theta_identity_residual(&self, delta: f64) -> f64 {
        self.theta
            .iter()
            .zip(self.v.iter().zip(&self.phi))
            .map(|(th, (v, p))| (th - 2.0 / delta * (2.0 * v - 1.0 - p)).abs())
            .fold(0.0, f64::max)
    }

    pub fn mass_phi(&self, surface: &SurfaceMesh) -> f64 {
        surface.integrate(&self.phi)
    }

    /// `∫_B u + ∫_Γ v`.
    pub fn mass_total(&self, surface: &SurfaceMesh, bulk: &BulkMesh) -> f64 {
        bulk.integrate(&self.u) + surface.integrate(&self.v)
    }
}
