use serde::{Deserialize, Serialize};

use crate::geometry::{Point, SurfaceMesh};
use crate::model::{double_well, ModelParams, PhaseState};

/// Relative gradient magnitude below which an element has no direction.
pub const DIRECTION_THRESHOLD: f64 = 1e-12;

/// Elementwise diffuse varifold built from the energy density of `φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteVarifold {
    /// `λ_e = (ε/2|∇φ|² + W̄/ε)·|e|`.
    pub weights: Vec<f64>,
    /// Unit interface tangent (orthogonal to `∇φ` within the element).
    /// `None` on segments and where the gradient vanishes.
    pub directions: Vec<Option<Point>>,
    /// Unit `∇φ/|∇φ|`; `None` where the gradient vanishes.
    pub gradient_directions: Vec<Option<Point>>,
    /// `c̃ = ε|∇φ|²/e`, the weight of the gradient direction in `h/λ`.
    pub c_tilde: Vec<f64>,
    /// Mass of elements without a direction.
    pub excluded_mass: f64,
}

impl DiscreteVarifold {
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Coefficients `(c_grad, c_tangent) = (1, 1 - c̃)` of the two atoms per
    /// element, from `c_k = 1 + c̃_k - Σ_m c̃_m`.
    pub fn coefficients(&self, e: usize) -> (f64, f64) {
        let ct = [self.c_tilde[e], 0.0];
        let sum: f64 = ct.iter().sum();
        (1.0 + ct[0] - sum, 1.0 + ct[1] - sum)
    }
}

pub fn build_varifold(
    state: &PhaseState,
    surface: &SurfaceMesh,
    params: &ModelParams,
) -> DiscreteVarifold {
    let eps = params.epsilon;
    let grads: Vec<Point> = surface
        .elements()
        .iter()
        .map(|e| e.gradient(&state.phi))
        .collect();
    let gmax = grads.iter().map(|g| g.norm()).fold(0.0, f64::max);
    let wv: Vec<f64> = state.phi.iter().map(|&p| double_well(p)).collect();
    let ne = surface.num_elements();
    let mut v = DiscreteVarifold {
        weights: Vec::with_capacity(ne),
        directions: Vec::with_capacity(ne),
        gradient_directions: Vec::with_capacity(ne),
        c_tilde: Vec::with_capacity(ne),
        excluded_mass: 0.0,
    };
    for (e, g) in surface.elements().iter().zip(&grads) {
        let g2 = g.norm_squared();
        let density = 0.5 * eps * g2 + e.vertex_mean(&wv) / eps;
        let lambda = density * e.measure;
        v.weights.push(lambda);
        v.c_tilde.push(if density > 0.0 {
            eps * g2 / density
        } else {
            0.0
        });
        let gn = g2.sqrt();
        if gmax > 0.0 && gn >= DIRECTION_THRESHOLD * gmax {
            let nhat = g / gn;
            v.gradient_directions.push(Some(nhat));
            v.directions
                .push((e.intrinsic_dim() == 2).then(|| e.normal.cross(&nhat)));
        } else {
            v.gradient_directions.push(None);
            v.directions.push(None);
            v.excluded_mass += lambda;
        }
    }
    v
}

/// Elementwise tangential derivative `D_Γ Y` applied to a direction `a`:
/// returns `(D_Γ Y) a` for a P1 vector field `Y`.
fn directional_derivative(e: &crate::geometry::SurfaceElement, y: &[Point], a: &Point) -> Point {
    e.vertices()
        .iter()
        .zip(e.hat_gradients())
        .fold(Point::zeros(), |acc, (&v, g)| acc + y[v] * g.dot(a))
}

/// First variation `Σ_e λ_e [c_g D_ΓY:τ⊗τ + c_t D_ΓY:n̂⊗n̂]`, where `c_g`
/// weighs the atom normal to `n̂` and `c_t` the atom normal to `τ`.
/// Elements without a direction are skipped.
pub fn first_variation(v: &DiscreteVarifold, surface: &SurfaceMesh, y: &[Point]) -> f64 {
    let y = project_tangent(surface, y).0;
    let mut total = 0.0;
    for (idx, e) in surface.elements().iter().enumerate() {
        let Some(nhat) = v.gradient_directions[idx] else {
            continue;
        };
        let (c_grad, c_tan) = v.coefficients(idx);
        // Id - n̂⊗n̂ projects on τ, Id - τ⊗τ on n̂.
        let mut val = c_tan * nhat.dot(&directional_derivative(e, &y, &nhat));
        if let Some(tau) = v.directions[idx] {
            val += c_grad * tau.dot(&directional_derivative(e, &y, &tau));
        }
        total += v.weights[idx] * val;
    }
    total
}

/// Same quantity written as `Σ_e |e| D_ΓY : (e·Id_T - ε∇φ⊗∇φ)`.
pub fn first_variation_tensor(
    state: &PhaseState,
    surface: &SurfaceMesh,
    params: &ModelParams,
    y: &[Point],
) -> f64 {
    let y = project_tangent(surface, y).0;
    let eps = params.epsilon;
    let wv: Vec<f64> = state.phi.iter().map(|&p| double_well(p)).collect();
    let grads: Vec<Point> = surface
        .elements()
        .iter()
        .map(|e| e.gradient(&state.phi))
        .collect();
    let gmax = grads.iter().map(|g| g.norm()).fold(0.0, f64::max);
    let mut total = 0.0;
    for (e, g) in surface.elements().iter().zip(&grads) {
        if !(gmax > 0.0 && g.norm() >= DIRECTION_THRESHOLD * gmax) {
            continue;
        }
        let density = 0.5 * eps * g.norm_squared() + e.vertex_mean(&wv) / eps;
        let mut trace = 0.0;
        for t in &e.tangents[..e.intrinsic_dim()] {
            trace += t.dot(&directional_derivative(e, &y, t));
        }
        let ggrad = g.dot(&directional_derivative(e, &y, g));
        total += e.measure * (density * trace - eps * ggrad);
    }
    total
}

/// Remove the normal component of each vector; reports the largest normal
/// component found.
pub fn project_tangent(surface: &SurfaceMesh, y: &[Point]) -> (Vec<Point>, f64) {
    let mut worst: f64 = 0.0;
    let out = y
        .iter()
        .zip(surface.vertex_normals())
        .map(|(v, n)| {
            let c = v.dot(n);
            worst = worst.max(c.abs());
            v - n * c
        })
        .collect();
    if worst > 1e-8 {
        log::warn!("test field has normal component {worst:.3e}; projected to the tangent plane");
    }
    (out, worst)
}

/// `∫_Γ φ div_Γ((μ + θ/2) Y)` with elementwise divergence of the P1 field
/// `(μ + θ/2)Y` and vertex-averaged `φ`.
pub fn curvature_pairing(state: &PhaseState, surface: &SurfaceMesh, y: &[Point]) -> f64 {
    let y = project_tangent(surface, y).0;
    let w: Vec<Point> = y
        .iter()
        .enumerate()
        .map(|(i, yi)| yi * (state.mu[i] + 0.5 * state.theta[i]))
        .collect();
    surface
        .elements()
        .iter()
        .map(|e| {
            let div: f64 = e
                .vertices()
                .iter()
                .zip(e.hat_gradients())
                .map(|(&v, g)| g.dot(&w[v]))
                .sum();
            e.measure * e.vertex_mean(&state.phi) * div
        })
        .sum()
}
