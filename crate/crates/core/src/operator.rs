//! The profile `a(s)` that defines the quasilinear operator
//! `Q[u] = div(a(|∇u|) ∇u / |∇u|)`, together with checks of its structural
//! conditions:
//!
//! * (a1) `a(0) = 0` and `a'(s) > 0` for `s > 0`;
//! * (a2) `a(s) ≤ C (s^{p-1} + 1)`;
//! * (a3) `a(s) ≥ s^q` on `[0, δ]`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar map shared between threads.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Target accuracy `|a(inverse(y)) - y|` for profiles without a closed-form inverse.
pub const TOL_INV: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    PLaplacian { p: f64 },
    Minimal,
    Custom { name: String },
}

/// The function `a` with its derivative and the constants of (a2), (a3).
#[derive(Clone)]
pub struct AProfile {
    kind: ProfileKind,
    a: ScalarFn,
    a_prime: ScalarFn,
    sup_a: f64,
    pub growth_p: f64,
    pub growth_c: f64,
    pub growth_q: f64,
    pub delta: f64,
}

impl fmt::Debug for AProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AProfile")
            .field("kind", &self.kind)
            .field("sup_a", &self.sup_a)
            .field("growth_p", &self.growth_p)
            .field("growth_c", &self.growth_c)
            .field("growth_q", &self.growth_q)
            .field("delta", &self.delta)
            .finish()
    }
}

/// Growth constants of a custom profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    pub growth_p: f64,
    pub growth_c: f64,
    pub growth_q: f64,
    pub delta: f64,
}

impl AProfile {
    /// `a(s) = s^{p-1}`, the p-Laplacian.
    pub fn p_laplacian(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Domain(format!("p-Laplacian needs p > 1, got {p}")));
        }
        Ok(Self {
            kind: ProfileKind::PLaplacian { p },
            a: Arc::new(move |s: f64| s.powf(p - 1.0)),
            a_prime: Arc::new(move |s: f64| (p - 1.0) * s.powf(p - 2.0)),
            sup_a: f64::INFINITY,
            growth_p: p,
            growth_c: 1.0,
            growth_q: p - 1.0,
            delta: 1.0,
        })
    }

    /// `a(s) = s / sqrt(1 + s²)`, the minimal hypersurface operator.
    ///
    /// The (a3) constants `q = 2`, `δ = 1/2` come from a brute-force scan;
    /// `s/sqrt(1+s²) ≥ s²` holds up to `s ≈ 0.786`.
    pub fn minimal() -> Self {
        Self {
            kind: ProfileKind::Minimal,
            a: Arc::new(|s: f64| s / (1.0 + s * s).sqrt()),
            a_prime: Arc::new(|s: f64| (1.0 + s * s).powf(-1.5)),
            sup_a: 1.0,
            growth_p: 1.0,
            growth_c: 1.0,
            growth_q: 2.0,
            delta: 0.5,
        }
    }

    /// A user supplied profile. `a_prime` must be the exact derivative of `a`.
    pub fn custom(
        name: impl Into<String>,
        a: ScalarFn,
        a_prime: ScalarFn,
        sup_a: f64,
        growth: GrowthParams,
    ) -> Self {
        Self {
            kind: ProfileKind::Custom { name: name.into() },
            a,
            a_prime,
            sup_a,
            growth_p: growth.growth_p,
            growth_c: growth.growth_c,
            growth_q: growth.growth_q,
            delta: growth.delta,
        }
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    /// `α = sup a`, possibly infinite.
    pub fn sup_a(&self) -> f64 {
        self.sup_a
    }

    pub fn a(&self, s: f64) -> f64 {
        (self.a)(s)
    }

    pub fn a_prime(&self, s: f64) -> f64 {
        (self.a_prime)(s)
    }

    /// `a(s)` with a domain check.
    pub fn evaluate(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("a(s) needs s >= 0, got {s}")));
        }
        Ok(self.a(s))
    }

    /// `A(s) = ∫_0^s a`, the energy density whose Euler–Lagrange operator is `Q`.
    pub fn energy_density(&self, s: f64) -> f64 {
        match self.kind {
            ProfileKind::PLaplacian { p } => s.powf(p) / p,
            // √(1+s²) − 1 without cancellation
            ProfileKind::Minimal => s * s / ((1.0 + s * s).sqrt() + 1.0),
            ProfileKind::Custom { .. } => {
                crate::quadrature::integrate(|x| self.a(x), 0.0, s, Default::default()).value
            }
        }
    }

    /// `a⁻¹(y)` for `0 ≤ y < sup a`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Domain(format!("a^-1(y) needs y >= 0, got {y}")));
        }
        if y >= self.sup_a {
            return Err(Error::Range(format!(
                "y = {y} is not below sup a = {}",
                self.sup_a
            )));
        }
        match self.kind {
            ProfileKind::PLaplacian { p } => Ok(y.powf(1.0 / (p - 1.0))),
            ProfileKind::Minimal => Ok(y / ((1.0 - y) * (1.0 + y)).sqrt()),
            ProfileKind::Custom { .. } => Ok(self.inverse_bisect(y)),
        }
    }

    fn inverse_bisect(&self, y: f64) -> f64 {
        if y == 0.0 {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.a(hi) < y {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.a(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if (self.a(mid) - y).abs() <= 0.25 * TOL_INV && (hi - lo) <= f64::EPSILON * hi {
                break;
            }
        }
        if (self.a(lo) - y).abs() < (self.a(hi) - y).abs() {
            lo
        } else {
            hi
        }
    }

    /// Checks (a1)–(a3) on the sorted nonnegative `grid`.
    pub fn check_conditions(&self, grid: &[f64]) -> Result<ConditionReport> {
        if grid.is_empty() {
            return Err(Error::Domain("empty sample grid".into()));
        }
        if grid.windows(2).any(|w| w[1] < w[0]) || grid[0] < 0.0 {
            return Err(Error::Domain("grid must be sorted and nonnegative".into()));
        }

        let mut a1 = ConditionCheck::new();
        let a0 = self.a(0.0);
        for &s in grid.iter().filter(|&&s| s > 0.0) {
            a1.record(self.a_prime(s), s);
        }
        if a0 != 0.0 {
            a1.worst_margin = -a0.abs();
            a1.at = 0.0;
        }
        a1.pass = a0 == 0.0 && a1.worst_margin > 0.0;

        let mut a2 = ConditionCheck::new();
        for &s in grid {
            let bound = self.growth_c * (s.powf(self.growth_p - 1.0) + 1.0);
            a2.record(bound - self.a(s), s);
        }
        a2.pass = a2.worst_margin >= 0.0;

        let mut a3 = ConditionCheck::new();
        for &s in grid.iter().filter(|&&s| s <= self.delta) {
            a3.record(self.a(s) - s.powf(self.growth_q), s);
        }
        a3.pass = a3.worst_margin >= 0.0;

        Ok(ConditionReport { a1, a2, a3 })
    }
}

/// Worst margin of one condition over the grid (negative means violated).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub pass: bool,
    pub worst_margin: f64,
    pub at: f64,
}

impl ConditionCheck {
    fn new() -> Self {
        Self {
            pass: true,
            worst_margin: f64::INFINITY,
            at: f64::NAN,
        }
    }

    fn record(&mut self, margin: f64, s: f64) {
        if margin < self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
            self.at = s;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionReport {
    pub a1: ConditionCheck,
    pub a2: ConditionCheck,
    pub a3: ConditionCheck,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.a1.pass && self.a2.pass && self.a3.pass
    }
}
