use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Backend;

/// Bulk–surface exchange term `q(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExchangeSpec {
    Zero,
    /// `q(u, v) = k1·u - k2·v`.
    Linear {
        k1: f64,
        k2: f64,
    },
}

impl Default for ExchangeSpec {
    fn default() -> Self {
        ExchangeSpec::Zero
    }
}

impl ExchangeSpec {
    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        match *self {
            ExchangeSpec::Zero => 0.0,
            ExchangeSpec::Linear { k1, k2 } => k1 * u - k2 * v,
        }
    }

    /// Smallest `C` for which the linear growth bound holds analytically.
    pub fn growth_constant(&self) -> f64 {
        match *self {
            ExchangeSpec::Zero => 0.0,
            ExchangeSpec::Linear { k1, k2 } => k1.abs().max(k2.abs()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            ExchangeSpec::Zero => true,
            ExchangeSpec::Linear { k1, k2 } => k1 == 0.0 && k2 == 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ExchangeSpec::Linear { k1, k2 } = *self {
            if !(k1 >= 0.0 && k2 >= 0.0 && k1.is_finite() && k2.is_finite()) {
                return Err(Error::invalid(format!(
                    "exchange coefficients must be finite and non-negative, got k1 = {k1}, k2 = {k2}"
                )));
            }
        }
        Ok(())
    }
}

pub fn exchange_eval(spec: &ExchangeSpec, u: f64, v: f64) -> f64 {
    spec.eval(u, v)
}

/// Sample values `0, ±10^(k/2)` for `k = -12..=12`.
pub fn growth_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    for k in -12..=12 {
        let x = 10f64.powf(k as f64 / 2.0);
        g.push(x);
        g.push(-x);
    }
    g
}

/// Check `|q(u,v)| ≤ C(1 + |u| + |v|)` on the deterministic grid.
pub fn validate_growth_fn(q: impl Fn(f64, f64) -> f64, c: f64) -> bool {
    let grid = growth_grid();
    grid.iter().all(|&u| {
        grid.iter().all(|&v| {
            let bound = c * (1.0 + u.abs() + v.abs());
            q(u, v).abs() <= bound * (1.0 + 1e-12)
        })
    })
}

pub fn validate_growth(spec: &ExchangeSpec, c: f64) -> bool {
    validate_growth_fn(|u, v| spec.eval(u, v), c)
}

/// Parameters of a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub epsilon: f64,
    pub delta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub stabilization: f64,
    pub exchange: ExchangeSpec,
    pub backend: Backend,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
}

impl ModelParams {
    pub const DEFAULT_DELTA: f64 = 1.0;
    pub const DEFAULT_STABILIZATION: f64 = 4.0;
    pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;
    pub const DEFAULT_SOLVER_MAX_ITER: usize = 10_000;

    pub fn new(backend: Backend, epsilon: f64, dt: f64, t_end: f64) -> Self {
        ModelParams {
            epsilon,
            delta: Self::DEFAULT_DELTA,
            dt,
            t_end,
            stabilization: Self::DEFAULT_STABILIZATION,
            exchange: ExchangeSpec::Zero,
            backend,
            solver_tol: Self::DEFAULT_SOLVER_TOL,
            solver_max_iter: Self::DEFAULT_SOLVER_MAX_ITER,
        }
    }

    pub fn with_exchange(mut self, exchange: ExchangeSpec) -> Self {
        self.exchange = exchange;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_stabilization(mut self, s: f64) -> Self {
        self.stabilization = s;
        self
    }

    /// Number of steps to reach `t_end`.
    pub fn num_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| -> Result<()> {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {x}"
                )))
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("delta", self.delta)?;
        positive("dt", self.dt)?;
        positive("solver_tol", self.solver_tol)?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid(format!(
                "t_end must be non-negative, got {}",
                self.t_end
            )));
        }
        if !(self.stabilization >= 0.0 && self.stabilization.is_finite()) {
            return Err(Error::invalid(format!(
                "stabilization must be non-negative, got {}",
                self.stabilization
            )));
        }
        if self.solver_max_iter == 0 {
            return Err(Error::invalid("solver_max_iter must be at least 1"));
        }
        self.exchange.validate()
    }

    /// Check `epsilon` against the mesh size `h`: an error below `h`, a
    /// warning below `2h`. Returns whether the warning was triggered.
    pub fn check_resolution(&self, h: f64) -> Result<bool> {
        if self.epsilon < h {
            return Err(Error::invalid(format!(
                "epsilon = {} is below the mesh size {h:.4e}",
                self.epsilon
            )));
        }
        let under = self.epsilon < 2.0 * h;
        if under {
            log::warn!(
                "epsilon = {} is under-resolved (mesh size {h:.4e})",
                self.epsilon
            );
        }
        Ok(under)
    }
}
