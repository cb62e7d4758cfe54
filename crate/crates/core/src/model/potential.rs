use std::sync::atomic::{AtomicBool, Ordering};

use quadrature::double_exponential;

/// Absolute tolerance requested from the quadrature routine.
pub const QUADRATURE_TOL: f64 = 1e-12;

static CLAMP_WARNED: AtomicBool = AtomicBool::new(false);

/// `W(s) = (1 - s²)²`.
#[inline]
pub fn double_well(s: f64) -> f64 {
    let a = 1.0 - s * s;
    a * a
}

/// `W'(s) = 4s³ - 4s`.
#[inline]
pub fn double_well_prime(s: f64) -> f64 {
    4.0 * s * (s * s - 1.0)
}

/// Integrand of the Modica–Mortola transform, `√min{W(r), 1 + r²}`.
#[inline]
pub fn mm_integrand(r: f64) -> f64 {
    double_well(r).min(1.0 + r * r).sqrt()
}

fn integrate(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    double_exponential::integrate(mm_integrand, a, b, QUADRATURE_TOL).integral
}

/// `H(s) = ∫_{-1}^{s} √min{W(r), 1 + r²} dr`, and whether `s` was clamped.
///
/// Arguments below `-1` are clamped to `-1`.
pub fn mm_transform_checked(s: f64) -> (f64, bool) {
    if s < -1.0 {
        return (0.0, true);
    }
    let kink = 3f64.sqrt();
    // The integrand switches branch at 1 and √3.
    let v = integrate(-1.0, s.min(1.0)) + integrate(1.0, s.min(kink)) + integrate(kink, s);
    (v, false)
}

/// Modica–Mortola transform `H`. Logs a warning (once per process) when an
/// argument below `-1` is clamped.
pub fn mm_transform(s: f64) -> f64 {
    let (h, clamped) = mm_transform_checked(s);
    if clamped && !CLAMP_WARNED.swap(true, Ordering::Relaxed) {
        log::warn!("H evaluated at {s} < -1; clamped to -1 (further clamps not reported)");
    }
    h
}

/// One-dimensional transition energy `σ = ∫_{-1}^{1} √(2W(s)) ds`.
pub fn surface_tension_sigma() -> f64 {
    double_exponential::integrate(|s| (2.0 * double_well(s)).sqrt(), -1.0, 1.0, QUADRATURE_TOL)
        .integral
}

/// Measured constants of the two-sided bound
/// `c₁|a-b|² ≤ |H(a)-H(b)| ≤ c₂|a-b|(1+|a|+|b|)` on a sample grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmBounds {
    /// Largest admissible lower constant over the sampled pairs.
    pub c1: f64,
    /// Smallest admissible upper constant over the sampled pairs.
    pub c2: f64,
}

pub fn mm_bounds_on_grid(samples: &[f64]) -> MmBounds {
    let h: Vec<f64> = samples.iter().map(|&s| mm_transform(s)).collect();
    let mut c1 = f64::INFINITY;
    let mut c2: f64 = 0.0;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let d = (samples[i] - samples[j]).abs();
            if d == 0.0 {
                continue;
            }
            let dh = (h[i] - h[j]).abs();
            c1 = c1.min(dh / (d * d));
            c2 = c2.max(dh / (d * (1.0 + samples[i].abs() + samples[j].abs())));
        }
    }
    MmBounds { c1, c2 }
}
