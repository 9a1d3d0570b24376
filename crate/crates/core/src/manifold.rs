//! Rotationally symmetric models `(ℝ^{n+1}, dr² + f(r)² dω²)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::operator::ScalarFn;
use crate::quadrature::{self, QuadOptions};

/// Radius at which the pole conditions `f(0) = 0`, `f'(0) = 1` are probed.
pub const POLE_PROBE: f64 = 1e-6;

const POLE_TOL_F: f64 = 1e-9;
const POLE_TOL_FP: f64 = 1e-6;

/// Areas of the unit spheres `S^1` through `S^8`.
pub const OMEGA: [f64; 8] = [
    2.0 * std::f64::consts::PI,
    4.0 * std::f64::consts::PI,
    2.0 * std::f64::consts::PI * std::f64::consts::PI,
    8.0 * std::f64::consts::PI * std::f64::consts::PI / 3.0,
    std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI,
    16.0 * std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI / 15.0,
    std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI
        / 3.0,
    32.0 * std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI
        * std::f64::consts::PI
        / 105.0,
];

/// Area of the unit `n`-sphere in `ℝ^{n+1}`.
pub fn sphere_area(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("sphere dimension must be at least 1".into()));
    }
    if n <= OMEGA.len() {
        return Ok(OMEGA[n - 1]);
    }
    // ω_n = 2π/(n-1) ω_{n-2}
    let mut m = if (n - OMEGA.len()) % 2 == 0 {
        OMEGA.len()
    } else {
        OMEGA.len() - 1
    };
    let mut w = OMEGA[m - 1];
    while m < n {
        m += 2;
        w *= 2.0 * std::f64::consts::PI / (m - 1) as f64;
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WarpingKind {
    Hyperbolic,
    /// `f = sinh(q r)/q` with `q ≥ k`.
    SinhScaled { q: f64 },
    Custom { f: String, f_prime: String, f_double_prime: String },
}

/// A warping function with its first two derivatives and curvature bound `k`.
#[derive(Clone)]
pub struct WarpingFunction {
    kind: WarpingKind,
    f: ScalarFn,
    f_prime: ScalarFn,
    f_double_prime: ScalarFn,
    pub k: f64,
    pub r_max: f64,
}

impl fmt::Debug for WarpingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WarpingFunction")
            .field("kind", &self.kind)
            .field("k", &self.k)
            .field("r_max", &self.r_max)
            .finish()
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

impl WarpingFunction {
    /// Constant curvature `-k²`: `f = sinh(kr)/k`.
    pub fn hyperbolic(k: f64, r_max: f64) -> Result<Self> {
        check_positive("k", k)?;
        check_positive("r_max", r_max)?;
        Ok(Self {
            kind: WarpingKind::Hyperbolic,
            f: Arc::new(move |r: f64| (k * r).sinh() / k),
            f_prime: Arc::new(move |r: f64| (k * r).cosh()),
            f_double_prime: Arc::new(move |r: f64| k * (k * r).sinh()),
            k,
            r_max,
        })
    }

    /// Constant curvature `-q²`, used with the weaker bound `k ≤ q`.
    pub fn sinh_scaled(q: f64, k: f64, r_max: f64) -> Result<Self> {
        check_positive("q", q)?;
        check_positive("k", k)?;
        check_positive("r_max", r_max)?;
        if q < k {
            return Err(Error::Domain(format!("sinh_scaled needs q >= k, got q={q}, k={k}")));
        }
        Ok(Self {
            kind: WarpingKind::SinhScaled { q },
            f: Arc::new(move |r: f64| (q * r).sinh() / q),
            f_prime: Arc::new(move |r: f64| (q * r).cosh()),
            f_double_prime: Arc::new(move |r: f64| q * (q * r).sinh()),
            k,
            r_max,
        })
    }

    /// `f`, `f'`, `f''` given as expressions in `r`.
    pub fn from_expressions(
        f: &str,
        f_prime: &str,
        f_double_prime: &str,
        k: f64,
        r_max: f64,
    ) -> Result<Self> {
        check_positive("k", k)?;
        check_positive("r_max", r_max)?;
        let (ef, efp, efpp) = (
            Expr::parse(f)?,
            Expr::parse(f_prime)?,
            Expr::parse(f_double_prime)?,
        );
        Ok(Self {
            kind: WarpingKind::Custom {
                f: f.to_string(),
                f_prime: f_prime.to_string(),
                f_double_prime: f_double_prime.to_string(),
            },
            f: Arc::new(move |r| ef.eval(r)),
            f_prime: Arc::new(move |r| efp.eval(r)),
            f_double_prime: Arc::new(move |r| efpp.eval(r)),
            k,
            r_max,
        })
    }

    /// `f`, `f'`, `f''` given as closures.
    pub fn custom(
        label: impl Into<String>,
        f: ScalarFn,
        f_prime: ScalarFn,
        f_double_prime: ScalarFn,
        k: f64,
        r_max: f64,
    ) -> Result<Self> {
        check_positive("k", k)?;
        check_positive("r_max", r_max)?;
        let label = label.into();
        Ok(Self {
            kind: WarpingKind::Custom {
                f: label.clone(),
                f_prime: format!("d/dr {label}"),
                f_double_prime: format!("d2/dr2 {label}"),
            },
            f,
            f_prime,
            f_double_prime,
            k,
            r_max,
        })
    }

    pub fn kind(&self) -> &WarpingKind {
        &self.kind
    }

    pub fn f(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    pub fn f_prime(&self, r: f64) -> f64 {
        (self.f_prime)(r)
    }

    pub fn f_double_prime(&self, r: f64) -> f64 {
        (self.f_double_prime)(r)
    }

    /// `-f''(r)/f(r)`, the curvature of radial planes.
    pub fn radial_curvature(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("radial curvature needs r > 0, got {r}")));
        }
        Ok(-self.f_double_prime(r) / self.f(r))
    }

    /// Checks `f'/f ≥ k coth kr`, `f ≥ sinh(kr)/k`, `f' ≥ cosh kr` and the
    /// pole conditions. Margins are relative to the right-hand side.
    pub fn comparison_check(&self, grid: &[f64]) -> ComparisonReport {
        let k = self.k;
        let mut log_derivative = Margin::new();
        let mut value = Margin::new();
        let mut derivative = Margin::new();
        for &r in grid {
            let f = self.f(r);
            let fp = self.f_prime(r);
            let kr = k * r;
            let rhs = k / kr.tanh();
            log_derivative.record((fp / f - rhs) / rhs, r);
            let rhs = kr.sinh() / k;
            value.record((f - rhs) / rhs, r);
            let rhs = kr.cosh();
            derivative.record((fp - rhs) / rhs, r);
        }
        let h = POLE_PROBE;
        let f0 = 2.0 * self.f(h) - self.f(2.0 * h);
        let fp0 = 2.0 * self.f_prime(h) - self.f_prime(2.0 * h);
        let pole_ok = f0.abs() <= POLE_TOL_F && (fp0 - 1.0).abs() <= POLE_TOL_FP;
        ComparisonReport {
            log_derivative,
            value,
            derivative,
            pole_f: f0,
            pole_f_prime: fp0,
            pole_ok,
        }
    }

    /// Diagonal metric entries `(g_00, g_11, …, g_nn)` at `r` with angles `θ_1..θ_n`.
    pub fn metric_coefficients(&self, r: f64, angles: &[f64]) -> Result<Vec<f64>> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("metric needs r > 0, got {r}")));
        }
        let n = angles.len();
        if n == 0 {
            return Err(Error::Domain("at least one angle is required".into()));
        }
        let f2 = self.f(r).powi(2);
        let mut g = vec![0.0; n + 1];
        g[0] = 1.0;
        g[n] = f2;
        let mut prod = f2;
        for i in (1..n).rev() {
            prod *= angles[i].sin().powi(2);
            g[i] = prod;
        }
        Ok(g)
    }

    /// `|∂B_r| = ω_n f(r)^n`.
    pub fn sphere_area(&self, n: usize, r: f64) -> Result<f64> {
        Ok(sphere_area(n)? * self.f(r).powi(n as i32))
    }

    /// Volume-growth integral `∫_s^{r_cut} dr / |∂B_r|^{1/(p-1)}` for this model.
    pub fn divergence_test(&self, n: usize, p: f64, s: f64, r_cut: f64) -> Result<DivergenceReport> {
        let omega = sphere_area(n)?;
        if r_cut > self.r_max {
            return Err(Error::Domain(format!(
                "cutoff {r_cut} exceeds working domain r_max = {}",
                self.r_max
            )));
        }
        divergence_test(|r| omega * self.f(r).powi(n as i32), p, s, r_cut)
    }
}

/// Worst relative margin of one inequality (negative means violated).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margin {
    pub worst: f64,
    pub at: f64,
}

impl Margin {
    fn new() -> Self {
        Self {
            worst: f64::INFINITY,
            at: f64::NAN,
        }
    }

    fn record(&mut self, m: f64, r: f64) {
        if m < self.worst || m.is_nan() {
            self.worst = m;
            self.at = r;
        }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.worst >= -tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub log_derivative: Margin,
    pub value: Margin,
    pub derivative: Margin,
    pub pole_f: f64,
    pub pole_f_prime: f64,
    pub pole_ok: bool,
}

impl ComparisonReport {
    /// All three inequalities within relative tolerance `tol`, and a smooth pole.
    pub fn passes(&self, tol: f64) -> bool {
        self.pole_ok
            && self.log_derivative.holds(tol)
            && self.value.holds(tol)
            && self.derivative.holds(tol)
    }

    /// Largest absolute margin, zero in the equality case.
    pub fn max_abs_margin(&self) -> f64 {
        self.log_derivative
            .worst
            .abs()
            .max(self.value.worst.abs())
            .max(self.derivative.worst.abs())
    }
}

/// Relative increase that flags the partial integrals as diverging.
pub const DIVERGENCE_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    /// Partial integral up to `r_cut`.
    pub value: f64,
    /// Cutoffs `r_cut/4, r_cut/2, r_cut` and the partial integrals there.
    pub cutoffs: Vec<f64>,
    pub partials: Vec<f64>,
    /// Relative increase from `r_cut/2` to `r_cut`.
    pub last_increase: f64,
    pub diverging: bool,
}

/// `∫_s^{r_cut} dr / area(r)^{1/(p-1)}` for an arbitrary sphere-area function.
pub fn divergence_test<A: Fn(f64) -> f64>(
    area: A,
    p: f64,
    s: f64,
    r_cut: f64,
) -> Result<DivergenceReport> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("divergence test needs p > 1, got {p}")));
    }
    if !(s > 0.0) || r_cut < s {
        return Err(Error::Domain(format!("need 0 < s <= r_cut, got s={s}, r_cut={r_cut}")));
    }
    let expo = 1.0 / (p - 1.0);
    let integrand = |r: f64| area(r).powf(-expo);
    let at_s = integrand(s);
    if !at_s.is_finite() {
        return Err(Error::Domain(format!(
            "integrand is not finite at s = {s}; s is too close to the pole"
        )));
    }
    if s == r_cut {
        return Ok(DivergenceReport {
            value: 0.0,
            cutoffs: vec![r_cut],
            partials: vec![0.0],
            last_increase: 0.0,
            diverging: false,
        });
    }
    let opts = QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-14,
        max_intervals: 10_000,
    };
    let cutoffs: Vec<f64> = [0.25, 0.5, 1.0]
        .iter()
        .map(|c| (c * r_cut).max(s))
        .collect();
    let mut partials = Vec::with_capacity(cutoffs.len());
    let mut acc = 0.0;
    let mut lo = s;
    for &hi in &cutoffs {
        acc += quadrature::integrate(integrand, lo, hi, opts).value;
        partials.push(acc);
        lo = hi;
    }
    let prev = partials[1];
    let value = partials[2];
    let last_increase = if prev > 0.0 {
        (value - prev) / prev
    } else if value > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(DivergenceReport {
        value,
        cutoffs,
        partials,
        last_increase,
        diverging: last_increase > DIVERGENCE_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn curvature_examples() {
        let h = WarpingFunction::hyperbolic(1.0, 20.0).unwrap();
        assert_abs_diff_eq!(h.radial_curvature(2.0).unwrap(), -1.0, epsilon = 1e-14);
        let s = WarpingFunction::sinh_scaled(2.0, 1.0, 20.0).unwrap();
        assert_abs_diff_eq!(s.radial_curvature(1.0).unwrap(), -4.0, epsilon = 1e-14);
        let h = WarpingFunction::hyperbolic(0.5, 20.0).unwrap();
        assert_abs_diff_eq!(h.radial_curvature(3.0).unwrap(), -0.25, epsilon = 1e-14);
        assert!(h.radial_curvature(0.0).is_err());
    }

    #[test]
    fn comparison_examples() {
        let grid: Vec<f64> = (1..=100).map(|i| i as f64 * 0.1).collect();
        let h = WarpingFunction::hyperbolic(1.0, 20.0).unwrap().comparison_check(&grid);
        assert!(h.passes(1e-12));
        assert!(h.max_abs_margin() <= 1e-12);

        let s = WarpingFunction::sinh_scaled(2.0, 1.0, 20.0).unwrap();
        let rep = s.comparison_check(&grid);
        assert!(rep.passes(0.0));
        assert!(rep.log_derivative.worst > 0.0);
        assert_abs_diff_eq!(s.f_prime(1.0) / s.f(1.0), 2.0 / 2f64.tanh(), epsilon = 1e-14);

        let flat = WarpingFunction::from_expressions("r", "1", "0", 1.0, 20.0).unwrap();
        let rep = flat.comparison_check(&[1.0]);
        assert!(!rep.value.holds(0.0));
        assert!(rep.pole_ok);
    }

    #[test]
    fn bad_pole_detected() {
        let shifted = WarpingFunction::from_expressions("r + 1", "1", "0", 1.0, 20.0).unwrap();
        assert!(!shifted.comparison_check(&[1.0]).pole_ok);
    }

    #[test]
    fn metric_examples() {
        let h = WarpingFunction::hyperbolic(1.0, 20.0).unwrap();
        let g = h.metric_coefficients(1.0, &[0.3, PI / 2.0]).unwrap();
        let s2 = 1f64.sinh().powi(2);
        assert_eq!(g[0], 1.0);
        assert_abs_diff_eq!(g[1], s2, epsilon = 1e-15);
        assert_abs_diff_eq!(g[2], s2, epsilon = 1e-15);

        let g = h.metric_coefficients(1.0, &[0.3, 1.0, 0.0]).unwrap();
        assert_eq!(g[1], 0.0);
        assert_eq!(g[2], 0.0);

        let h2 = WarpingFunction::hyperbolic(2.0, 20.0).unwrap();
        let g = h2.metric_coefficients(0.5, &[1.0]).unwrap();
        assert_abs_diff_eq!(g[1], (1f64.sinh() / 2.0).powi(2), epsilon = 1e-15);
    }

    #[test]
    fn sphere_areas() {
        for n in 1..=12 {
            // 2π^{(n+1)/2} / Γ((n+1)/2) by the half-integer recursion
            let half = (n + 1) as f64 / 2.0;
            let mut gamma = if n % 2 == 1 { 1.0 } else { PI.sqrt() };
            let mut x = if n % 2 == 1 { 1.0 } else { 0.5 };
            while x < half {
                gamma *= x;
                x += 1.0;
            }
            let want = 2.0 * PI.powf(half) / gamma;
            assert!((sphere_area(n).unwrap() - want).abs() <= 1e-13 * want, "n={n}");
        }
        assert!(sphere_area(0).is_err());
    }

    #[test]
    fn divergence_examples() {
        let rep = divergence_test(|r: f64| r * r.ln(), 2.0, std::f64::consts::E, 1e4).unwrap();
        assert_abs_diff_eq!(rep.value, 1e4f64.ln().ln(), epsilon = 1e-9);
        assert!(rep.diverging);

        let h = WarpingFunction::hyperbolic(1.0, 200.0).unwrap();
        let a = h.divergence_test(1, 2.0, 1.0, 50.0).unwrap();
        let b = h.divergence_test(1, 2.0, 1.0, 100.0).unwrap();
        assert!(!a.diverging);
        assert!((a.value - b.value).abs() < 1e-10);

        let e = h.divergence_test(1, 2.0, 3.0, 3.0).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(h.divergence_test(1, 2.0, 0.0, 3.0).is_err());
    }
}
