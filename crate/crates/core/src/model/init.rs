use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use super::potential::double_well_prime;
use super::state::PhaseState;
use crate::error::{Error, Result};
use crate::geometry::{Backend, BulkMesh, Point, SurfaceMesh};
use crate::sparse;

/// Shape of the initial interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    /// Circle: one positive arc. Sphere: positive band around the equator.
    Band,
    /// Circle: one positive arc. Sphere: positive cap around the north pole.
    Cap,
    /// Two positive regions: opposite arcs on the circle, polar caps on the sphere.
    TwoPoint,
}

impl std::str::FromStr for InitialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "band" => Ok(InitialKind::Band),
            "cap" => Ok(InitialKind::Cap),
            "two-point" => Ok(InitialKind::TwoPoint),
            other => Err(Error::invalid(format!("unknown initial kind `{other}`"))),
        }
    }
}

/// Specification of well-prepared initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub kind: InitialKind,
    /// Target mean of `φ₀`, in `(-1, 1)`.
    pub m: f64,
    /// Target `∫_B u₀ + ∫_Γ v₀`; `None` means `u₀ ≡ 0`.
    pub total_mass: Option<f64>,
    /// Interface angle overriding the one implied by `m` (cap half-angle on
    /// the sphere, arc half-width on the circle).
    pub cap_angle: Option<f64>,
}

impl InitialSpec {
    pub fn new(kind: InitialKind, m: f64) -> Self {
        InitialSpec {
            kind,
            m,
            total_mass: None,
            cap_angle: None,
        }
    }
}

/// Signed geodesic distance to the target interface, positive inside the
/// positive phase.
pub fn signed_distance(surface: &SurfaceMesh, spec: &InitialSpec) -> Result<Vec<f64>> {
    let m = spec.m;
    let r = surface.radius();
    let wrap = |a: f64| (a + PI).rem_euclid(2.0 * PI) - PI;
    let d: Vec<f64> = match surface.backend() {
        Backend::Circle => {
            let angles = surface.positions().iter().map(|p| p.y.atan2(p.x));
            match spec.kind {
                InitialKind::Band | InitialKind::Cap => {
                    let beta = spec.cap_angle.unwrap_or(PI * (1.0 + m) / 2.0);
                    angles
                        .map(|a| r * (beta - wrap(a - PI / 2.0).abs()))
                        .collect()
                }
                InitialKind::TwoPoint => {
                    let beta = spec.cap_angle.unwrap_or(PI * (1.0 + m) / 4.0);
                    angles
                        .map(|a| r * (beta - wrap(a).abs().min(wrap(a - PI).abs())))
                        .collect()
                }
            }
        }
        Backend::Sphere => {
            let polar = surface
                .positions()
                .iter()
                .map(|p: &Point| (p.z / p.norm()).clamp(-1.0, 1.0).acos());
            match spec.kind {
                InitialKind::Cap => {
                    let alpha = spec.cap_angle.unwrap_or((-m).acos());
                    polar.map(|psi| r * (alpha - psi)).collect()
                }
                InitialKind::Band => {
                    let b = spec.cap_angle.unwrap_or(((1.0 + m) / 2.0).asin());
                    polar.map(|psi| r * (b - (PI / 2.0 - psi).abs())).collect()
                }
                InitialKind::TwoPoint => {
                    let a = spec.cap_angle.unwrap_or(((1.0 - m) / 2.0).acos());
                    polar.map(|psi| r * (a - psi.min(PI - psi))).collect()
                }
            }
        }
        Backend::Planar => {
            return Err(Error::Unsupported(
                "initial data needs a circle or sphere mesh".into(),
            ))
        }
    };
    Ok(d)
}

/// Chemical potentials from the nodal relations:
/// `μ = εM⁻¹Kφ + W'(φ)/ε - (2v-1-φ)/δ` and `θ = (2/δ)(2v-1-φ)`.
pub fn chemical_potentials(
    surface: &SurfaceMesh,
    phi: &[f64],
    v: &[f64],
    params: &ModelParams,
) -> (Vec<f64>, Vec<f64>) {
    let kphi = surface.stiffness().mul_vec(phi);
    let eps = params.epsilon;
    let delta = params.delta;
    let mut mu = Vec::with_capacity(phi.len());
    let mut theta = Vec::with_capacity(phi.len());
    for i in 0..phi.len() {
        let c = 2.0 * v[i] - 1.0 - phi[i];
        mu.push(eps * kphi[i] / surface.mass()[i] + double_well_prime(phi[i]) / eps - c / delta);
        theta.push(2.0 / delta * c);
    }
    (mu, theta)
}

/// Tanh-profile initial data with prescribed `φ`-mean and total cholesterol.
///
/// `φ₀ = tanh(√2·d/ε) + c` with `c` fixing the mean, `v₀ = (1+φ₀)/2·v⁺ + (1-φ₀)/2·v⁻`
/// with `v⁺ = 1, v⁻ = 0`, and `u₀` the constant closing the total mass. When
/// that constant would be negative, `v±` are scaled down instead and `u₀ = 0`.
pub fn init_well_prepared(
    spec: &InitialSpec,
    surface: &SurfaceMesh,
    bulk: &BulkMesh,
    params: &ModelParams,
) -> Result<PhaseState> {
    let m = spec.m;
    if !(m > -1.0 && m < 1.0) {
        return Err(Error::invalid(format!(
            "phi mean m = {m} must lie in (-1, 1)"
        )));
    }
    if let Some(total) = spec.total_mass {
        if !(total >= 0.0 && total.is_finite()) {
            return Err(Error::invalid(format!(
                "total mass M = {total} must be finite and >= 0"
            )));
        }
    }
    if let Some(a) = spec.cap_angle {
        if !(a > 0.0 && a < PI) {
            return Err(Error::invalid(format!("cap angle {a} must lie in (0, pi)")));
        }
    }
    params.validate()?;

    let d = signed_distance(surface, spec)?;
    let k = 2f64.sqrt() / params.epsilon;
    let mut phi: Vec<f64> = d.iter().map(|&di| (k * di).tanh()).collect();
    let shift = m - sparse::weighted_mean(&phi, surface.mass());
    phi.iter_mut().for_each(|p| *p += shift);

    let mut v: Vec<f64> = phi.iter().map(|p| (1.0 + p) / 2.0).collect();
    let v_mass = surface.integrate(&v);
    let u0 = match spec.total_mass {
        None => 0.0,
        Some(total) => {
            let u0 = (total - v_mass) / bulk.volume();
            if u0 >= 0.0 {
                u0
            } else {
                let scale = total / v_mass;
                v.iter_mut().for_each(|x| *x *= scale);
                0.0
            }
        }
    };
    let (mu, theta) = chemical_potentials(surface, &phi, &v, params);
    Ok(PhaseState {
        t: 0.0,
        u: vec![u0; bulk.num_vertices()],
        phi,
        v,
        mu,
        theta,
    })
}
