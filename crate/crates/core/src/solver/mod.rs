//! Linearly implicit time stepping of the coupled surface/bulk system.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{record_state, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::geometry::{BulkMesh, SurfaceMesh};
use crate::model::{double_well_prime, ModelParams, PhaseState};
use crate::sparse::{dot, CholeskySolver, CsrMatrix};

/// Quantities produced by one step besides the new state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepFluxes {
    /// `μᵀKμ` at the new level.
    pub diss_mu: f64,
    /// `θᵀKθ` at the new level.
    pub diss_theta: f64,
    /// `uᵀK_B u` at the new level.
    pub diss_u: f64,
    /// `Σ mᵢ qᵢ (θᵢ - u_{T(i)})` with the old-level exchange and new potentials.
    pub q_work: f64,
}

/// Factored step matrices for a fixed mesh pair and parameter set.
pub struct Stepper<'a> {
    surface: &'a SurfaceMesh,
    bulk: &'a BulkMesh,
    params: ModelParams,
    inv_mass: Vec<f64>,
    inv_bulk_mass: Vec<f64>,
    ch: CholeskySolver,
    cholesterol: CholeskySolver,
    diffusion: CholeskySolver,
}

impl std::fmt::Debug for Stepper<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper")
            .field("params", &self.params)
            .field("ch", &self.ch)
            .field("cholesterol", &self.cholesterol)
            .field("diffusion", &self.diffusion)
            .finish()
    }
}

impl<'a> Stepper<'a> {
    pub fn new(surface: &'a SurfaceMesh, bulk: &'a BulkMesh, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        if bulk.trace().len() != surface.num_vertices() {
            return Err(Error::invalid("trace map does not match the surface mesh"));
        }
        let dt = params.dt;
        let eps = params.epsilon;
        let a = params.stabilization / eps + 1.0 / params.delta;
        let k = surface.stiffness();
        let m = surface.mass();
        let inv_mass: Vec<f64> = m.iter().map(|x| 1.0 / x).collect();

        let kmk = k.sandwich_diagonal(&inv_mass);
        let ch_matrix = CsrMatrix::linear_combination(&[(dt * a, k), (dt * eps, &kmk)], Some(m));
        let v_matrix = CsrMatrix::linear_combination(&[(dt * 4.0 / params.delta, k)], Some(m));
        let u_matrix = CsrMatrix::linear_combination(&[(dt, bulk.stiffness())], Some(bulk.mass()));

        let tol = params.solver_tol;
        Ok(Stepper {
            surface,
            bulk,
            params: params.clone(),
            inv_mass,
            inv_bulk_mass: bulk.mass().iter().map(|x| 1.0 / x).collect(),
            ch: CholeskySolver::new(ch_matrix, tol)?,
            cholesterol: CholeskySolver::new(v_matrix, tol)?,
            diffusion: CholeskySolver::new(u_matrix, tol)?,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn surface(&self) -> &SurfaceMesh {
        self.surface
    }

    pub fn bulk(&self) -> &BulkMesh {
        self.bulk
    }

    /// Advance by one time step.
    pub fn step(&self, state: &PhaseState) -> Result<(PhaseState, StepFluxes)> {
        state.check_shapes(self.surface, self.bulk)?;
        let p = &self.params;
        let (dt, eps, delta) = (p.dt, p.epsilon, p.delta);
        let a = p.stabilization / eps + 1.0 / delta;
        let k = self.surface.stiffness();
        let m = self.surface.mass();
        let n = m.len();
        let trace = self.bulk.trace();

        // Cahn–Hilliard block with μ eliminated through the lumped mass.
        let r2: Vec<f64> = (0..n)
            .map(|i| {
                let ph = state.phi[i];
                m[i] * ((double_well_prime(ph) - p.stabilization * ph) / eps
                    - (2.0 * state.v[i] - 1.0) / delta)
            })
            .collect();
        let minv_r2: Vec<f64> = r2.iter().zip(&self.inv_mass).map(|(r, w)| r * w).collect();
        let k_minv_r2 = k.mul_vec(&minv_r2);
        let rhs: Vec<f64> = (0..n)
            .map(|i| m[i] * state.phi[i] - dt * k_minv_r2[i])
            .collect();
        let (phi_star, _) = self.ch.solve(&rhs)?;
        let k_phi = k.mul_vec(&phi_star);
        let mu: Vec<f64> = (0..n)
            .map(|i| eps * self.inv_mass[i] * k_phi[i] + a * phi_star[i] + minv_r2[i])
            .collect();
        let k_mu = k.mul_vec(&mu);
        let phi: Vec<f64> = (0..n)
            .map(|i| state.phi[i] - dt * self.inv_mass[i] * k_mu[i])
            .collect();

        // Exchange at the old level, shared by the surface and bulk updates.
        let q: Vec<f64> = (0..n)
            .map(|i| p.exchange.eval(state.u[trace[i]], state.v[i]))
            .collect();
        let mq: Vec<f64> = q.iter().zip(m).map(|(q, m)| q * m).collect();

        let k_phi_new = k.mul_vec(&phi);
        let rhs: Vec<f64> = (0..n)
            .map(|i| m[i] * state.v[i] + dt * mq[i] + dt * 2.0 / delta * k_phi_new[i])
            .collect();
        let (v_star, _) = self.cholesterol.solve(&rhs)?;
        let theta_star: Vec<f64> = (0..n)
            .map(|i| 2.0 / delta * (2.0 * v_star[i] - 1.0 - phi[i]))
            .collect();
        let k_theta = k.mul_vec(&theta_star);
        let v: Vec<f64> = (0..n)
            .map(|i| state.v[i] + dt * self.inv_mass[i] * (mq[i] - k_theta[i]))
            .collect();
        let theta: Vec<f64> = (0..n)
            .map(|i| 2.0 / delta * (2.0 * v[i] - 1.0 - phi[i]))
            .collect();

        let nb = self.bulk.num_vertices();
        let mut load = vec![0.0; nb];
        for i in 0..n {
            load[trace[i]] += mq[i];
        }
        let mb = self.bulk.mass();
        let rhs: Vec<f64> = (0..nb).map(|j| mb[j] * state.u[j] - dt * load[j]).collect();
        let (u_star, _) = self.diffusion.solve(&rhs)?;
        let ku = self.bulk.stiffness().mul_vec(&u_star);
        let u: Vec<f64> = (0..nb)
            .map(|j| state.u[j] - dt * self.inv_bulk_mass[j] * (ku[j] + load[j]))
            .collect();

        let next = PhaseState {
            t: state.t + dt,
            u,
            phi,
            v,
            mu,
            theta,
        };
        if let Some(field) = next.first_non_finite() {
            return Err(Error::NumericalBlowup { field, t: next.t });
        }
        let fluxes = StepFluxes {
            diss_mu: dot(&next.mu, &k_mu),
            diss_theta: k.quad_form(&next.theta),
            diss_u: self.bulk.stiffness().quad_form(&next.u),
            q_work: (0..n)
                .map(|i| mq[i] * (next.theta[i] - next.u[trace[i]]))
                .sum(),
        };
        Ok((next, fluxes))
    }
}

/// One step without reusing factorizations.
pub fn step(
    state: &PhaseState,
    surface: &SurfaceMesh,
    bulk: &BulkMesh,
    params: &ModelParams,
) -> Result<PhaseState> {
    Stepper::new(surface, bulk, params)?
        .step(state)
        .map(|(s, _)| s)
}

/// States at the requested output times and the per-step diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: ModelParams,
    pub snapshots: Vec<PhaseState>,
    /// One record per step, starting with the initial state.
    pub records: Vec<DiagnosticsRecord>,
    /// Error message when the run stopped early.
    pub failure: Option<String>,
    /// Number of steps for each output snapshot.
    pub snapshot_steps: Vec<usize>,
    #[serde(skip)]
    pub wall_clock: std::time::Duration,
}

impl Trajectory {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    pub fn last_state(&self) -> Option<&PhaseState> {
        self.snapshots.last()
    }
}

/// Step indices for a list of output times; index 0 is always included.
pub fn schedule_steps(times: &[f64], params: &ModelParams) -> Result<Vec<usize>> {
    let total = params.num_steps();
    let mut steps = vec![0usize];
    for &t in times {
        if !(t >= 0.0 && t <= params.t_end * (1.0 + 1e-12)) {
            return Err(Error::invalid(format!(
                "snapshot time {t} outside [0, {}]",
                params.t_end
            )));
        }
        steps.push(((t / params.dt).round() as usize).min(total));
    }
    steps.sort_unstable();
    steps.dedup();
    Ok(steps)
}

/// Time-step `initial` up to `t_end`, recording diagnostics every step and
/// keeping snapshots at the scheduled times (always including `t = 0`).
/// A blow-up or solver failure ends the run early; the partial trajectory
/// is returned with `failure` set.
pub fn run(
    initial: &PhaseState,
    surface: &SurfaceMesh,
    bulk: &BulkMesh,
    params: &ModelParams,
    output_times: &[f64],
) -> Result<Trajectory> {
    let start = Instant::now();
    initial.check_shapes(surface, bulk)?;
    if params.t_end > 0.0 && params.dt > params.t_end * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "dt = {} exceeds t_end = {}",
            params.dt, params.t_end
        )));
    }
    let steps = schedule_steps(output_times, params)?;
    let total = params.num_steps();
    let mut traj = Trajectory {
        params: params.clone(),
        snapshots: vec![initial.clone()],
        records: vec![record_state(initial, surface, bulk, params, None)],
        failure: None,
        snapshot_steps: vec![0],
        wall_clock: Default::default(),
    };
    if total == 0 {
        traj.wall_clock = start.elapsed();
        return Ok(traj);
    }
    let stepper = Stepper::new(surface, bulk, params)?;
    let mut state = initial.clone();
    let mut prev_e = traj.records[0].e_total;
    for n in 1..=total {
        match stepper.step(&state) {
            Ok((mut next, fluxes)) => {
                next.t = n as f64 * params.dt;
                let rec = record_state(&next, surface, bulk, params, Some((fluxes, prev_e)));
                prev_e = rec.e_total;
                traj.records.push(rec);
                if steps.binary_search(&n).is_ok() {
                    traj.snapshots.push(next.clone());
                    traj.snapshot_steps.push(n);
                }
                state = next;
            }
            Err(e) => {
                log::error!("run stopped at step {n}: {e}");
                traj.failure = Some(e.to_string());
                break;
            }
        }
    }
    traj.wall_clock = start.elapsed();
    Ok(traj)
}
