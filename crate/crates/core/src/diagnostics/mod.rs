//! Scalar and geometric diagnostics of discrete states and trajectories.

mod varifold;

use serde::{Deserialize, Serialize};

pub use varifold::{
    build_varifold, curvature_pairing, first_variation, first_variation_tensor, project_tangent,
    DiscreteVarifold, DIRECTION_THRESHOLD,
};

use crate::error::{Error, Result};
use crate::geometry::{extract_interface, geodesic_curvature, Backend, BulkMesh, SurfaceMesh};
use crate::model::{
    double_well, energy, ginzburg_landau, mm_transform, surface_tension_sigma, ModelParams,
    PhaseState,
};
use crate::solver::{StepFluxes, Trajectory};

/// Default time exponent of the Hölder quotient.
pub const DEFAULT_HOLDER_EXPONENT: f64 = 0.125;
/// Interface points with `|κ_g|` below this are left out of the ratio statistics.
pub const KAPPA_EXCLUSION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    /// `∫ (ξ_ε)₊`.
    pub positive: f64,
    /// `∫ |ξ_ε|`.
    pub absolute: f64,
    /// Elementwise `ξ_ε = ε/2|∇φ|² - W̄/ε`.
    pub density: Vec<f64>,
}

pub fn discrepancy(state: &PhaseState, surface: &SurfaceMesh, params: &ModelParams) -> Discrepancy {
    let eps = params.epsilon;
    let wv: Vec<f64> = state.phi.iter().map(|&p| double_well(p)).collect();
    let density: Vec<f64> = surface
        .elements()
        .iter()
        .map(|e| 0.5 * eps * e.gradient(&state.phi).norm_squared() - e.vertex_mean(&wv) / eps)
        .collect();
    let mut positive = 0.0;
    let mut absolute = 0.0;
    for (e, xi) in surface.elements().iter().zip(&density) {
        positive += e.measure * xi.max(0.0);
        absolute += e.measure * xi.abs();
    }
    Discrepancy {
        positive,
        absolute,
        density,
    }
}

/// `∫_Γ |∇_Γ H(φ)|` with `H` applied nodally.
pub fn mm_w11_norm(state: &PhaseState, surface: &SurfaceMesh) -> f64 {
    let h: Vec<f64> = state.phi.iter().map(|&p| mm_transform(p)).collect();
    surface
        .elements()
        .iter()
        .map(|e| e.measure * e.gradient(&h).norm())
        .sum()
}

/// `max_{t>τ} ‖φ(t) - φ(τ)‖_{L²} / (t - τ)^exponent` over snapshot pairs.
pub fn holder_quotient_of(states: &[PhaseState], surface: &SurfaceMesh, exponent: f64) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            let gap = (states[j].t - states[i].t).abs();
            if gap == 0.0 {
                continue;
            }
            let diff: Vec<f64> = states[j]
                .phi
                .iter()
                .zip(&states[i].phi)
                .map(|(a, b)| a - b)
                .collect();
            best = best.max(surface.l2_norm_sq(&diff).sqrt() / gap.powf(exponent));
        }
    }
    best
}

pub fn holder_quotient(traj: &Trajectory, surface: &SurfaceMesh, exponent: f64) -> f64 {
    holder_quotient_of(&traj.snapshots, surface, exponent)
}

/// `‖μ‖_{H¹} / (F_GL + ‖∇μ‖ + ‖θ‖)`; NaN when the denominator is below `1e-14`.
pub fn mu_bound_ratio(state: &PhaseState, surface: &SurfaceMesh, params: &ModelParams) -> f64 {
    let grad_mu_sq = surface.dirichlet(&state.mu).max(0.0);
    let num = (surface.l2_norm_sq(&state.mu) + grad_mu_sq).sqrt();
    let den = ginzburg_landau(&state.phi, surface, params.epsilon)
        + grad_mu_sq.sqrt()
        + surface.l2_norm_sq(&state.theta).sqrt();
    if den < 1e-14 {
        log::debug!("mu bound ratio: denominator {den:.3e} too small, returning NaN");
        return f64::NAN;
    }
    num / den
}

/// Varifold mass against `σ` times the interface length (number of
/// crossings on the circle).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassPerimeter {
    pub varifold_mass: f64,
    pub sigma_perimeter: f64,
    /// `varifold_mass / sigma_perimeter`; infinite when the perimeter is zero.
    pub ratio: f64,
}

pub fn varifold_mass_vs_perimeter(
    state: &PhaseState,
    surface: &SurfaceMesh,
    params: &ModelParams,
) -> Result<MassPerimeter> {
    let mass = build_varifold(state, surface, params).mass();
    let perimeter = extract_interface(surface, &state.phi)?.length;
    let sp = surface_tension_sigma() * perimeter;
    Ok(MassPerimeter {
        varifold_mass: mass,
        sigma_perimeter: sp,
        ratio: if sp > 0.0 { mass / sp } else { f64::INFINITY },
    })
}

/// Statistics of `(2μ + θ)/κ_g` along the interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsThomson {
    pub points_used: usize,
    pub points_excluded: usize,
    pub mean_ratio: f64,
    pub std_ratio: f64,
    /// `std/|mean|`.
    pub cv: f64,
    pub mean_over_sigma: f64,
    pub mean_curvature: f64,
    pub sigma: f64,
}

pub fn gibbs_thomson_check(
    state: &PhaseState,
    surface: &SurfaceMesh,
    _params: &ModelParams,
) -> Result<GibbsThomson> {
    if surface.backend() != Backend::Sphere {
        return Err(Error::Unsupported(
            "Gibbs–Thomson check needs the sphere backend".into(),
        ));
    }
    let curve = extract_interface(surface, &state.phi)?;
    let sigma = surface_tension_sigma();
    if curve.is_empty() {
        return Err(Error::invalid("interface is empty"));
    }
    let kappa = geodesic_curvature(surface, &curve)?;
    let mut ratios = Vec::new();
    let mut ks = Vec::new();
    let mut excluded = 0;
    for (p, &k) in curve.points().zip(&kappa) {
        if !(k.abs() > KAPPA_EXCLUSION) {
            excluded += 1;
            continue;
        }
        let lhs = 2.0 * p.interpolate(&state.mu) + p.interpolate(&state.theta);
        ratios.push(lhs / k);
        ks.push(k);
    }
    let n = ratios.len();
    let (mean, std, kbar) = if n == 0 {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let mean = ratios.iter().sum::<f64>() / n as f64;
        let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n as f64;
        (mean, var.sqrt(), ks.iter().sum::<f64>() / n as f64)
    };
    Ok(GibbsThomson {
        points_used: n,
        points_excluded: excluded,
        mean_ratio: mean,
        std_ratio: std,
        cv: std / mean.abs(),
        mean_over_sigma: mean / sigma,
        mean_curvature: kbar,
        sigma,
    })
}

/// One row of the time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub f: f64,
    pub e_total: f64,
    pub mass_phi: f64,
    pub mass_total: f64,
    pub diss_mu: f64,
    pub diss_theta: f64,
    pub diss_u: f64,
    pub q_work: f64,
    pub disc_plus: f64,
    pub disc_ratio: f64,
    pub mm_w11: f64,
    pub mu_ratio: f64,
    pub perimeter: f64,
    pub varifold_mass: f64,
    pub energy_residual: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 16] = [
        "t",
        "F",
        "E_total",
        "mass_phi",
        "mass_total",
        "diss_mu",
        "diss_theta",
        "diss_u",
        "q_work",
        "disc_plus",
        "disc_ratio",
        "mmW11",
        "mu_ratio",
        "perimeter",
        "varifold_mass",
        "energy_residual",
    ];

    pub fn values(&self) -> [f64; 16] {
        [
            self.t,
            self.f,
            self.e_total,
            self.mass_phi,
            self.mass_total,
            self.diss_mu,
            self.diss_theta,
            self.diss_u,
            self.q_work,
            self.disc_plus,
            self.disc_ratio,
            self.mm_w11,
            self.mu_ratio,
            self.perimeter,
            self.varifold_mass,
            self.energy_residual,
        ]
    }

    pub fn from_values(v: [f64; 16]) -> Self {
        DiagnosticsRecord {
            t: v[0],
            f: v[1],
            e_total: v[2],
            mass_phi: v[3],
            mass_total: v[4],
            diss_mu: v[5],
            diss_theta: v[6],
            diss_u: v[7],
            q_work: v[8],
            disc_plus: v[9],
            disc_ratio: v[10],
            mm_w11: v[11],
            mu_ratio: v[12],
            perimeter: v[13],
            varifold_mass: v[14],
            energy_residual: v[15],
        }
    }

    pub fn total_dissipation(&self) -> f64 {
        self.diss_mu + self.diss_theta + self.diss_u
    }
}

/// Exchange work `Σ mᵢ q(uⁿ, vⁿ)ᵢ (θ - u)ᵢ` with `q` from `prev` and the
/// potentials from `next`.
pub fn exchange_work(
    prev: &PhaseState,
    next: &PhaseState,
    surface: &SurfaceMesh,
    bulk: &BulkMesh,
    params: &ModelParams,
) -> f64 {
    let trace = bulk.trace();
    (0..surface.num_vertices())
        .map(|i| {
            let q = params.exchange.eval(prev.u[trace[i]], prev.v[i]);
            surface.mass()[i] * q * (next.theta[i] - next.u[trace[i]])
        })
        .sum()
}

/// Diagnostics of one state. `step` carries the fluxes of the step that
/// produced it and the previous total energy; without it the exchange work
/// and the energy residual are NaN.
pub fn record_state(
    state: &PhaseState,
    surface: &SurfaceMesh,
    bulk: &BulkMesh,
    params: &ModelParams,
    step: Option<(StepFluxes, f64)>,
) -> DiagnosticsRecord {
    let en = energy(state, surface, bulk, params);
    let disc = discrepancy(state, surface, params);
    let perimeter = extract_interface(surface, &state.phi)
        .map(|c| c.length)
        .unwrap_or(f64::NAN);
    let diss_mu = surface.dirichlet(&state.mu);
    let diss_theta = surface.dirichlet(&state.theta);
    let diss_u = bulk.stiffness().quad_form(&state.u);
    let (q_work, residual) = match step {
        Some((fl, prev_e)) => {
            let r = (en.e_total - prev_e) / params.dt + diss_mu + diss_theta + diss_u - fl.q_work;
            (fl.q_work, r)
        }
        None => (f64::NAN, f64::NAN),
    };
    DiagnosticsRecord {
        t: state.t,
        f: en.f,
        e_total: en.e_total,
        mass_phi: state.mass_phi(surface),
        mass_total: state.mass_total(surface, bulk),
        diss_mu,
        diss_theta,
        diss_u,
        q_work,
        disc_plus: disc.positive,
        disc_ratio: if en.f > 0.0 {
            disc.positive / en.f
        } else {
            0.0
        },
        mm_w11: mm_w11_norm(state, surface),
        mu_ratio: mu_bound_ratio(state, surface, params),
        perimeter,
        varifold_mass: en.ginzburg_landau,
        energy_residual: residual,
    }
}

/// `r_n = (E_{n+1} - E_n)/Δt + dissipation_{n+1} - q_work_{n+1}` for every step.
pub fn energy_identity_residual(traj: &Trajectory) -> Vec<f64> {
    residuals_from_records(&traj.records, traj.params.dt)
}

pub fn residuals_from_records(records: &[DiagnosticsRecord], dt: f64) -> Vec<f64> {
    records
        .windows(2)
        .map(|w| (w[1].e_total - w[0].e_total) / dt + w[1].total_dissipation() - w[1].q_work)
        .collect()
}

/// Largest deviation of `E(t_n) + Σ Δt(D_k - Q_k - r_k)` from `E(0)`.
pub fn telescoping_defect(records: &[DiagnosticsRecord], dt: f64) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    let r = residuals_from_records(records, dt);
    let mut acc = 0.0;
    let mut worst: f64 = 0.0;
    for (rec, rn) in records[1..].iter().zip(&r) {
        acc += dt * (rec.total_dissipation() - rec.q_work - rn);
        worst = worst.max((rec.e_total + acc - first.e_total).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_circle_disk;

    #[test]
    fn constant_phase_has_no_positive_discrepancy() {
        let (s, _) = build_circle_disk(32, 2, 1.0).unwrap();
        let p = ModelParams::new(Backend::Circle, 0.1, 1e-3, 0.1);
        let mut st = PhaseState::zeros(32, 1);
        st.phi = vec![0.3; 32];
        let d = discrepancy(&st, &s, &p);
        assert_eq!(d.positive, 0.0);
        let w = double_well(0.3) / 0.1;
        assert!(d.density.iter().all(|x| (x + w).abs() < 1e-12));
    }
}
