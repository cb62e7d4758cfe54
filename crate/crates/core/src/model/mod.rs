//! Double-well potential, free energy, exchange term, Modica–Mortola
//! transform and initial data.

mod energy;
mod init;
mod params;
mod potential;
mod state;

pub use energy::{energy, ginzburg_landau, Energy};
pub use init::{
    chemical_potentials, init_well_prepared, signed_distance, InitialKind, InitialSpec,
};
pub use params::{
    exchange_eval, growth_grid, validate_growth, validate_growth_fn, ExchangeSpec, ModelParams,
};
pub use potential::{
    double_well, double_well_prime, mm_bounds_on_grid, mm_integrand, mm_transform,
    mm_transform_checked, surface_tension_sigma, MmBounds, QUADRATURE_TOL,
};
pub use state::PhaseState;
