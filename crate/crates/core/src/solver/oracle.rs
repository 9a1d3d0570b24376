use std::f64::consts::PI;

use crate::quadrature::{integrate, QuadOptions};

/// Euclidean radius `tanh(kr/2)` of the point at distance `r` in the disk model.
pub fn disk_radius(k: f64, r: f64) -> f64 {
    (0.5 * k * r).tanh()
}

/// Poisson integral of `phi` on the Euclidean disk of radius `rho_b`, at polar point `(rho, t)`.
pub fn poisson_integral(phi: &dyn Fn(f64) -> f64, rho_b: f64, rho: f64, t: f64) -> f64 {
    if rho == 0.0 {
        return integrate(phi, 0.0, 2.0 * PI, QuadOptions::with_abs_tol(1e-13)).value / (2.0 * PI);
    }
    if rho >= rho_b {
        return phi(t);
    }
    let num = rho_b * rho_b - rho * rho;
    let kernel = |th: f64| {
        let den = rho_b * rho_b - 2.0 * rho * rho_b * (t - th).cos() + rho * rho;
        phi(th) * num / den
    };
    // a period ending at the kernel peak
    let peak = t.rem_euclid(2.0 * PI);
    let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-13, max_intervals: 20_000 };
    let a = integrate(kernel, peak - 2.0 * PI, peak, opts).value;
    a / (2.0 * PI)
}

/// Harmonic function on the hyperbolic ball `B_radius` (curvature `-k²`) with
/// boundary values `phi`, via conformal invariance of the 2-D Laplacian.
/// `radius = ∞` gives the solution with asymptotic data `phi`.
pub fn harmonic_oracle(k: f64, radius: f64, phi: &dyn Fn(f64) -> f64, r: f64, t: f64) -> f64 {
    let rho_b = if radius.is_finite() { disk_radius(k, radius) } else { 1.0 };
    poisson_integral(phi, rho_b, disk_radius(k, r), t)
}
