use approx::assert_relative_eq;
use proptest::prelude::*;
use raftlim_core::diagnostics::{residuals_from_records, telescoping_defect};
use raftlim_core::geometry::{
    build_circle_disk, build_sphere_ball, Backend, BulkMesh, SurfaceMesh,
};
use raftlim_core::model::{
    chemical_potentials, init_well_prepared, ExchangeSpec, InitialKind, InitialSpec, ModelParams,
    PhaseState,
};
use raftlim_core::solver::{run, schedule_steps, step, Stepper};
use raftlim_core::Error;

fn uniform_state(
    s: &SurfaceMesh,
    b: &BulkMesh,
    p: &ModelParams,
    phi: f64,
    v: f64,
    u: f64,
) -> PhaseState {
    let mut st = PhaseState::zeros(s.num_vertices(), b.num_vertices());
    st.phi.fill(phi);
    st.v.fill(v);
    st.u.fill(u);
    let (mu, theta) = chemical_potentials(s, &st.phi, &st.v, p);
    st.mu = mu;
    st.theta = theta;
    st
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn pure_phase_is_an_equilibrium() {
    let (s, b) = build_sphere_ball(2).unwrap();
    let p = ModelParams::new(Backend::Sphere, 0.3, 1e-2, 0.1);
    for (phi, v) in [(-1.0, 0.0), (1.0, 1.0)] {
        let init = uniform_state(&s, &b, &p, phi, v, 0.0);
        let traj = run(&init, &s, &b, &p, &[p.t_end]).unwrap();
        let last = traj.last_state().unwrap();
        assert!(max_abs_diff(&last.phi, &init.phi) < 1e-12);
        assert!(max_abs_diff(&last.v, &init.v) < 1e-12);
        assert!(last.u.iter().all(|u| u.abs() < 1e-12));
    }
}

#[test]
fn mass_is_conserved_every_step() {
    let (s, b) = build_circle_disk(128, 4, 1.0).unwrap();
    let p = ModelParams::new(Backend::Circle, 0.15, 1e-3, 0.05)
        .with_exchange(ExchangeSpec::Linear { k1: 1.0, k2: 2.0 });
    let mut spec = InitialSpec::new(InitialKind::TwoPoint, 0.1);
    spec.total_mass = Some(6.0);
    let init = init_well_prepared(&spec, &s, &b, &p).unwrap();
    let traj = run(&init, &s, &b, &p, &[]).unwrap();
    assert!(!traj.failed());
    assert_eq!(traj.records.len(), p.num_steps() + 1);
    let (m0, t0) = (traj.records[0].mass_phi, traj.records[0].mass_total);
    for r in &traj.records {
        assert!((r.mass_phi - m0).abs() <= 1e-10 * m0.abs().max(1.0));
        assert!((r.mass_total - t0).abs() <= 1e-10 * t0);
    }
}

#[test]
fn theta_identity_holds_after_each_step() {
    let (s, b) = build_sphere_ball(2).unwrap();
    let p = ModelParams::new(Backend::Sphere, 0.25, 1e-3, 0.01).with_delta(0.5);
    let mut st = init_well_prepared(&InitialSpec::new(InitialKind::Cap, 0.3), &s, &b, &p).unwrap();
    let stepper = Stepper::new(&s, &b, &p).unwrap();
    for _ in 0..10 {
        st = stepper.step(&st).unwrap().0;
        assert!(st.theta_identity_residual(p.delta) < 1e-12);
    }
}

#[test]
fn energy_decreases_without_exchange() {
    let (s, b) = build_sphere_ball(3).unwrap();
    let p = ModelParams::new(Backend::Sphere, 0.2, 2e-3, 0.2);
    let init =
        init_well_prepared(&InitialSpec::new(InitialKind::TwoPoint, -0.3), &s, &b, &p).unwrap();
    let traj = run(&init, &s, &b, &p, &[]).unwrap();
    let e0 = traj.records[0].e_total;
    for w in traj.records.windows(2) {
        assert!(
            w[1].e_total <= w[0].e_total + 1e-12 * e0,
            "{} -> {}",
            w[0].e_total,
            w[1].e_total
        );
    }
    assert!(telescoping_defect(&traj.records, p.dt) < 1e-10 * e0);
    let r = residuals_from_records(&traj.records, p.dt);
    assert_eq!(r.len(), traj.records.len() - 1);
    // The residual of the stabilized scheme is a numerical dissipation.
    assert!(r.iter().all(|x| *x <= 1e-9 * e0));
}

#[test]
fn single_step_matches_stepper() {
    let (s, b) = build_circle_disk(64, 4, 1.0).unwrap();
    let p = ModelParams::new(Backend::Circle, 0.2, 1e-3, 0.01);
    let init = init_well_prepared(&InitialSpec::new(InitialKind::Band, 0.0), &s, &b, &p).unwrap();
    let a = step(&init, &s, &b, &p).unwrap();
    let (c, _) = Stepper::new(&s, &b, &p).unwrap().step(&init).unwrap();
    assert_eq!(a.phi, c.phi);
    assert_eq!(a.u, c.u);
    assert_relative_eq!(a.t, p.dt);
}

/// Uniform fields with `q = -k₂ v`: the exchange only depends on `v`, so
/// the surface stays uniform and the update is a forward Euler step.
fn decay_run(k2: f64, dt: f64, t_end: f64) -> (f64, f64, f64, f64) {
    let (s, b) = build_circle_disk(128, 8, 1.0).unwrap();
    let p = ModelParams::new(Backend::Circle, 0.1, dt, t_end)
        .with_exchange(ExchangeSpec::Linear { k1: 0.0, k2 });
    let init = uniform_state(&s, &b, &p, -1.0, 1.0, 0.0);
    let traj = run(&init, &s, &b, &p, &[t_end]).unwrap();
    let last = traj.last_state().unwrap();
    let spread = last.v.iter().cloned().fold(f64::MIN, f64::max)
        - last.v.iter().cloned().fold(f64::MAX, f64::min);
    (
        s.integrate(&last.v) / s.area(),
        b.integrate(&last.u) / b.volume(),
        spread,
        s.area() / b.volume(),
    )
}

#[test]
fn homogeneous_decay_without_bulk_feedback() {
    let (k2, dt, t) = (2.0, 1e-3, 0.5);
    let (v, u, spread, ratio) = decay_run(k2, dt, t);
    let n = (t / dt).round() as i32;
    let v_discrete = (1.0 - k2 * dt).powi(n);
    assert!(spread < 1e-12);
    assert_relative_eq!(v, v_discrete, max_relative = 1e-10);
    assert_relative_eq!(u, ratio * (1.0 - v_discrete), max_relative = 1e-10);
    let v_exact = (-k2 * t).exp();
    assert!(((v - v_exact) / v_exact).abs() < 2.0 * k2 * k2 * t * dt);
}

#[test]
fn time_refinement_is_first_order() {
    let (k2, t) = (2.0f64, 0.5);
    let exact = (-k2 * t).exp();
    let errors: Vec<f64> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| (decay_run(k2, dt, t).0 - exact).abs())
        .collect();
    for w in errors.windows(2) {
        let factor = w[0] / w[1];
        assert!((1.7..=2.3).contains(&factor), "{errors:?}");
    }
}

#[test]
fn phase_field_time_refinement_is_first_order() {
    let (s, b) = build_circle_disk(128, 4, 1.0).unwrap();
    let t = 0.02;
    let phi_at = |dt: f64| {
        let p = ModelParams::new(Backend::Circle, 0.2, dt, t);
        let init =
            init_well_prepared(&InitialSpec::new(InitialKind::TwoPoint, 0.2), &s, &b, &p).unwrap();
        run(&init, &s, &b, &p, &[t])
            .unwrap()
            .last_state()
            .unwrap()
            .phi
            .clone()
    };
    let reference = phi_at(2.5e-5);
    let errors: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
        .iter()
        .map(|&dt| max_abs_diff(&phi_at(dt), &reference))
        .collect();
    for w in errors.windows(2) {
        let factor = w[0] / w[1];
        assert!((1.6..=2.4).contains(&factor), "{errors:?}");
    }
}

#[test]
fn bulk_feedback_makes_the_bulk_nonuniform() {
    // With `k₁ > 0` the boundary flux depends on the trace of `u`, which
    // is no longer the bulk mean.
    let (s, b) = build_circle_disk(128, 8, 1.0).unwrap();
    let spreads: Vec<f64> = [0.25, 0.5]
        .iter()
        .map(|&k1| {
            let p = ModelParams::new(Backend::Circle, 0.1, 1e-3, 0.2)
                .with_exchange(ExchangeSpec::Linear { k1, k2: 0.0 });
            let init = uniform_state(&s, &b, &p, -1.0, 0.0, 1.0);
            let last = run(&init, &s, &b, &p, &[p.t_end])
                .unwrap()
                .snapshots
                .pop()
                .unwrap();
            last.u.iter().cloned().fold(f64::MIN, f64::max)
                - last.u.iter().cloned().fold(f64::MAX, f64::min)
        })
        .collect();
    assert!(spreads[0] > 1e-3);
    let factor = spreads[1] / spreads[0];
    assert!((1.5..=2.5).contains(&factor), "{spreads:?}");
}

#[test]
fn zero_end_time_returns_initial_only() {
    let (s, b) = build_circle_disk(64, 4, 1.0).unwrap();
    let p = ModelParams::new(Backend::Circle, 0.2, 1e-3, 0.0);
    let init = init_well_prepared(&InitialSpec::new(InitialKind::Band, 0.0), &s, &b, &p).unwrap();
    let traj = run(&init, &s, &b, &p, &[0.0]).unwrap();
    assert_eq!(traj.records.len(), 1);
    assert_eq!(traj.snapshots.len(), 1);
    assert_eq!(traj.snapshots[0].phi, init.phi);
    assert!(!traj.failed());
}

#[test]
fn run_rejects_bad_schedules() {
    let (s, b) = build_circle_disk(64, 4, 1.0).unwrap();
    let p = ModelParams::new(Backend::Circle, 0.2, 1e-3, 0.01);
    let init = init_well_prepared(&InitialSpec::new(InitialKind::Band, 0.0), &s, &b, &p).unwrap();
    assert!(matches!(
        run(&init, &s, &b, &p, &[0.02]),
        Err(Error::InvalidArgument(_))
    ));
    let long_step = ModelParams::new(Backend::Circle, 0.2, 0.1, 0.01);
    assert!(matches!(
        run(&init, &s, &b, &long_step, &[]),
        Err(Error::InvalidArgument(_))
    ));
    let wrong = PhaseState::zeros(3, b.num_vertices());
    assert!(run(&wrong, &s, &b, &p, &[]).is_err());
    assert_eq!(
        schedule_steps(&[0.005, 0.01, 0.005], &p).unwrap(),
        vec![0, 5, 10]
    );
}

#[test]
fn non_finite_state_flags_failure() {
    let (s, b) = build_circle_disk(64, 4, 1.0).unwrap();
    let p = ModelParams::new(Backend::Circle, 0.2, 1e-3, 0.01);
    let mut init =
        init_well_prepared(&InitialSpec::new(InitialKind::Band, 0.0), &s, &b, &p).unwrap();
    init.u[0] = f64::NAN;
    let traj = run(&init, &s, &b, &p, &[p.t_end]).unwrap();
    assert!(traj.failed());
    assert_eq!(traj.records.len(), 1);
    assert!(traj.failure.as_deref().unwrap().contains("non-finite"));
    assert!(matches!(
        Stepper::new(&s, &b, &p).unwrap().step(&init),
        Err(Error::NumericalBlowup { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn conservation_for_random_parameters(
        eps in 0.12f64..0.3,
        m in -0.5f64..0.5,
        k1 in 0.0f64..3.0,
        k2 in 0.0f64..3.0,
        total in 1.0f64..10.0,
    ) {
        let (s, b) = build_circle_disk(96, 3, 1.0).unwrap();
        let p = ModelParams::new(Backend::Circle, eps, 1e-3, 0.01)
            .with_exchange(ExchangeSpec::Linear { k1, k2 });
        let mut spec = InitialSpec::new(InitialKind::Cap, m);
        spec.total_mass = Some(total);
        let init = init_well_prepared(&spec, &s, &b, &p).unwrap();
        let traj = run(&init, &s, &b, &p, &[]).unwrap();
        prop_assert!(!traj.failed());
        let last = traj.records.last().unwrap();
        prop_assert!((last.mass_total - total).abs() <= 1e-10 * total);
        prop_assert!((last.mass_phi - traj.records[0].mass_phi).abs() <= 1e-10);
    }
}
