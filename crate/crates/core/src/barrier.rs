//! The barrier integral
//!
//! ```text
//! g(s) = ∫_s^∞ a⁻¹(c cosh^{1-n}(kt)) dt
//! ```
//!
//! and the supersolution `Σ = min(g(s), C)` built from it, where `s` is the
//! distance to a convex set.
//!
//! The tail of `g` is bounded with (a3): `a⁻¹(y) ≤ y^{1/q}` for `y ≤ a(δ)`,
//! and `cosh x ≥ eˣ/2` gives
//!
//! ```text
//! ∫_T^∞ a⁻¹(c cosh^{1-n} kt) dt ≤ (2^{n-1}c)^{1/q} q/(k(n-1)) e^{-k(n-1)T/q}.
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{AProfile, ProfileKind};
use crate::quadrature::{self, QuadOptions};

/// Residuals are compared against `TOL_RESIDUAL · c · k`.
pub const TOL_RESIDUAL: f64 = 1e-10;

/// Allowed gap between the analytic and finite-difference residuals, relative to `c · k`.
pub const TOL_FD: f64 = 1e-5;

const FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierQuadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Lower bound for the quadrature cut; the tail is bounded analytically past it.
    pub tail_cut_t: f64,
}

impl Default for BarrierQuadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            tail_cut_t: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierSpec {
    pub profile: AProfile,
    pub k: f64,
    pub n: usize,
    pub height_c: f64,
    pub c: f64,
    pub tau: f64,
    pub quadrature: BarrierQuadrature,
}

/// Serializable snapshot of a [`BarrierSpec`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierSummary {
    pub profile: ProfileKind,
    pub k: f64,
    pub n: usize,
    pub height_c: f64,
    pub c: f64,
    pub tau: f64,
    pub delta: f64,
    pub q: f64,
    pub g0: f64,
    pub quadrature: BarrierQuadrature,
}

/// `g(s)` with its error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GValue {
    pub value: f64,
    /// Quadrature part on `[s, cut]`.
    pub body: f64,
    /// Certified bound on the part beyond `cut`.
    pub tail_bound: f64,
    pub cut: f64,
    pub error: f64,
}

impl BarrierSpec {
    /// Spec with the default constant `c = a(2C)`.
    pub fn new(profile: AProfile, k: f64, n: usize, height_c: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::Domain(format!("k must be positive, got {k}")));
        }
        if n < 2 {
            return Err(Error::Domain(format!("dimension n must be at least 2, got {n}")));
        }
        if !(height_c > 0.0) {
            return Err(Error::Domain(format!("height C must be positive, got {height_c}")));
        }
        let c = profile.a(2.0 * height_c);
        Self::with_c(profile, k, n, height_c, c)
    }

    /// Spec with an explicit constant `c`.
    pub fn with_c(profile: AProfile, k: f64, n: usize, height_c: f64, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::Domain(format!("barrier constant c must be positive, got {c}")));
        }
        if c >= profile.sup_a() {
            return Err(Error::Range(format!(
                "barrier constant c = {c} is not below sup a = {}",
                profile.sup_a()
            )));
        }
        let tau = tau(c, profile.delta, k, n);
        Ok(Self {
            profile,
            k,
            n,
            height_c,
            c,
            tau,
            quadrature: BarrierQuadrature::default(),
        })
    }

    fn nm1(&self) -> f64 {
        (self.n - 1) as f64
    }

    /// `c cosh^{1-n}(ks)`.
    pub fn flux(&self, s: f64) -> f64 {
        self.c * (self.k * s).cosh().powf(-self.nm1())
    }

    fn integrand(&self, t: f64) -> f64 {
        // flux ≤ c < sup a, so the inverse is always in range
        self.profile.inverse(self.flux(t)).unwrap_or(f64::NAN)
    }

    /// Smallest `T` past which `a⁻¹(y) ≤ y^{1/q}` applies to the integrand.
    pub fn tail_threshold(&self) -> f64 {
        let y_max = self.profile.a(self.profile.delta);
        if self.c <= y_max {
            0.0
        } else {
            (self.c / y_max).powf(1.0 / self.nm1()).acosh() / self.k
        }
    }

    /// Analytic bound on `∫_T^∞` of the integrand, valid for `T ≥ tail_threshold()`.
    pub fn tail_bound(&self, t: f64) -> f64 {
        let q = self.profile.growth_q;
        let rate = self.k * self.nm1() / q;
        (2f64.powf(self.nm1()) * self.c).powf(1.0 / q) / rate * (-rate * t).exp()
    }

    fn auto_cut(&self, s: f64) -> f64 {
        let q = self.profile.growth_q;
        let rate = self.k * self.nm1() / q;
        let target = 0.1 * self.quadrature.abs_tol;
        let pre = (2f64.powf(self.nm1()) * self.c).powf(1.0 / q) / rate;
        let needed = if pre > target {
            (pre / target).ln() / rate
        } else {
            0.0
        };
        self.tail_threshold()
            .max(needed)
            .max(self.quadrature.tail_cut_t)
            .max(s)
            + 5.0 / rate
    }

    /// `g(s)` with quadrature on `[s, cut]` and the certified tail beyond.
    pub fn g_detailed(&self, s: f64) -> Result<GValue> {
        self.g_with_cut(s, self.auto_cut(s))
    }

    /// `g(s)` with an explicit quadrature cut (at least the tail threshold).
    pub fn g_with_cut(&self, s: f64, cut: f64) -> Result<GValue> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("g(s) needs s >= 0, got {s}")));
        }
        if self.c >= self.profile.sup_a() {
            return Err(Error::Range(format!(
                "barrier constant c = {} is not below sup a = {}",
                self.c,
                self.profile.sup_a()
            )));
        }
        let cut = cut.max(s).max(self.tail_threshold());
        let opts = QuadOptions {
            abs_tol: 0.1 * self.quadrature.abs_tol,
            rel_tol: self.quadrature.rel_tol,
            max_intervals: 20_000,
        };
        let body = quadrature::integrate(|t| self.integrand(t), s, cut, opts);
        let tail_bound = self.tail_bound(cut);
        Ok(GValue {
            value: body.value + 0.5 * tail_bound,
            body: body.value,
            tail_bound,
            cut,
            error: body.error + 0.5 * tail_bound,
        })
    }

    pub fn g_eval(&self, s: f64) -> Result<f64> {
        Ok(self.g_detailed(s)?.value)
    }

    /// Smallest constant on a geometric scan from `a(2C)` with `g(0) ≥ 2C`.
    pub fn calibrate_c(&self) -> Result<f64> {
        let target = 2.0 * self.height_c;
        let sup = self.profile.sup_a();
        let c0 = self.profile.a(target);
        let mut best_g0 = f64::NEG_INFINITY;
        for j in 0..2000 {
            let c = if sup.is_finite() {
                sup - (sup - c0) * 0.5f64.powi(j)
            } else {
                c0 * 1.1f64.powi(j)
            };
            if !(c < sup) || !c.is_finite() {
                break;
            }
            let mut trial = self.clone();
            trial.c = c;
            trial.tau = tau(c, self.profile.delta, self.k, self.n);
            let g0 = trial.g_eval(0.0)?;
            if g0.is_finite() {
                best_g0 = best_g0.max(g0);
            }
            if g0 >= target {
                return Ok(c);
            }
        }
        Err(Error::Calibration {
            reason: format!("no constant below sup a = {sup} reaches g(0) >= {target}"),
            best_g0,
        })
    }

    /// Copy of this spec with the calibrated constant.
    pub fn calibrated(&self) -> Result<Self> {
        let c = self.calibrate_c()?;
        let mut out = self.clone();
        out.c = c;
        out.tau = tau(c, self.profile.delta, self.k, self.n);
        Ok(out)
    }

    /// `Σ` at a point with the given location relative to `Ω`.
    pub fn sigma_eval(&self, at: Location) -> Result<f64> {
        match at {
            Location::Outside => Ok(self.height_c),
            Location::Inside(d) => Ok(self.g_eval(d)?.min(self.height_c)),
        }
    }

    /// The lower bound `(n-1)k tanh(ks)` for the Laplacian of the distance.
    pub fn laplacian_lower(&self, s: f64) -> f64 {
        self.nm1() * self.k * (self.k * s).tanh()
    }

    /// `Q[v]` for `v = g ∘ s` when `Δs` takes the given value.
    pub fn residual(&self, s: f64, laplacian_s: f64) -> f64 {
        let ks = self.k * s;
        let ch = ks.cosh();
        self.nm1() * self.c * self.k * ch.powf(-(self.n as f64)) * ks.sinh()
            - self.c * ch.powf(1.0 - self.n as f64) * laplacian_s
    }

    /// `v'(s)` as a short-interval average of the integrand.
    fn v_prime_fd(&self, s: f64, h: f64) -> f64 {
        let opts = QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-15,
            max_intervals: 200,
        };
        -quadrature::integrate(|t| self.integrand(t.abs()), s - h, s + h, opts).value / (2.0 * h)
    }

    /// Residual from finite differences of `v` in a Fermi coordinate.
    pub fn residual_fd(&self, s: f64, laplacian_s: f64) -> f64 {
        let h = FD_STEP;
        let flux = |x: f64| self.profile.a(-self.v_prime_fd(x, h));
        -(flux(s + h) - flux(s - h)) / (2.0 * h) - flux(s) * laplacian_s
    }

    /// Residual table for `Δs` given by `laplacian` (the lower bound when `None`).
    pub fn residual_report(
        &self,
        grid: &[f64],
        laplacian: Option<&dyn Fn(f64) -> f64>,
    ) -> Result<ResidualReport> {
        let scale = self.c * self.k;
        let mut nodes = Vec::with_capacity(grid.len());
        let mut worst = (f64::NEG_INFINITY, f64::NAN);
        let mut fd_gap: f64 = 0.0;
        for &s in grid {
            if !(s > 0.0) {
                return Err(Error::Domain(format!("residual grid needs s > 0, got {s}")));
            }
            let lap = laplacian.map_or_else(|| self.laplacian_lower(s), |f| f(s));
            let residual = self.residual(s, lap);
            let fd = self.residual_fd(s, lap);
            fd_gap = fd_gap.max((fd - residual).abs() / scale);
            if residual > worst.0 {
                worst = (residual, s);
            }
            nodes.push(ResidualNode {
                s,
                laplacian: lap,
                residual,
                residual_fd: fd,
            });
        }
        Ok(ResidualReport {
            nodes,
            max_residual: worst.0,
            worst_at: worst.1,
            fd_max_gap: fd_gap,
            pass: worst.0 <= TOL_RESIDUAL * scale,
            fd_consistent: fd_gap <= TOL_FD,
        })
    }

    /// Checks `Q[v] ≤ tol` at every node; fails with the worst location otherwise.
    pub fn verify_supersolution(
        &self,
        grid: &[f64],
        laplacian: Option<&dyn Fn(f64) -> f64>,
    ) -> Result<ResidualReport> {
        let report = self.residual_report(grid, laplacian)?;
        if !report.pass {
            return Err(Error::Verification {
                location: report.worst_at,
                residual: report.max_residual,
            });
        }
        Ok(report)
    }

    /// Rows `(s, g, Σ, residual)` for export.
    pub fn table(&self, grid: &[f64]) -> Result<Vec<BarrierRow>> {
        grid.iter()
            .map(|&s| {
                let g = self.g_eval(s)?;
                Ok(BarrierRow {
                    s,
                    g,
                    sigma: g.min(self.height_c),
                    residual: if s > 0.0 {
                        self.residual(s, self.laplacian_lower(s))
                    } else {
                        0.0
                    },
                })
            })
            .collect()
    }

    pub fn summary(&self) -> Result<BarrierSummary> {
        Ok(BarrierSummary {
            profile: self.profile.kind().clone(),
            k: self.k,
            n: self.n,
            height_c: self.height_c,
            c: self.c,
            tau: self.tau,
            delta: self.profile.delta,
            q: self.profile.growth_q,
            g0: self.g_eval(0.0)?,
            quadrature: self.quadrature,
        })
    }
}

/// `τ` with `c cosh^{1-n}(kτ) = δ`, zero when `δ ≥ c`.
pub fn tau(c: f64, delta: f64, k: f64, n: usize) -> f64 {
    if delta >= c {
        0.0
    } else {
        (c / delta).powf(1.0 / (n - 1) as f64).acosh() / k
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    /// Inside `Ω` at this distance from its boundary.
    Inside(f64),
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualNode {
    pub s: f64,
    pub laplacian: f64,
    pub residual: f64,
    pub residual_fd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub nodes: Vec<ResidualNode>,
    pub max_residual: f64,
    pub worst_at: f64,
    pub fd_max_gap: f64,
    pub pass: bool,
    pub fd_consistent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierRow {
    pub s: f64,
    pub g: f64,
    pub sigma: f64,
    pub residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn gd(x: f64) -> f64 {
        x.sinh().atan()
    }

    fn laplace_spec(c: f64) -> BarrierSpec {
        BarrierSpec::with_c(AProfile::p_laplacian(2.0).unwrap(), 1.0, 2, 1.0, c).unwrap()
    }

    #[test]
    fn g_closed_forms() {
        let spec = laplace_spec(1.0);
        assert_abs_diff_eq!(spec.g_eval(0.0).unwrap(), FRAC_PI_2, epsilon = 1e-10);
        assert_abs_diff_eq!(spec.g_eval(1.0).unwrap(), FRAC_PI_2 - gd(1.0), epsilon = 1e-10);
        assert!(spec.g_eval(40.0).unwrap() < 1e-8);
        assert!(spec.g_eval(-1.0).is_err());
    }

    #[test]
    fn tau_solves_its_equation() {
        let t = tau(3.0, 0.5, 2.0, 3);
        assert_abs_diff_eq!(3.0 * (2.0 * t).cosh().powi(-2), 0.5, epsilon = 1e-14);
        assert_eq!(tau(0.3, 0.5, 1.0, 2), 0.0);
    }

    #[test]
    fn calibration_examples() {
        let p2 = AProfile::p_laplacian(2.0).unwrap();
        let spec = BarrierSpec::new(p2.clone(), 1.0, 2, 0.5).unwrap();
        assert_eq!(spec.calibrate_c().unwrap(), 1.0);
        let spec = BarrierSpec::new(p2, 1.0, 2, 2.0).unwrap();
        assert_eq!(spec.calibrate_c().unwrap(), 4.0);
    }

    #[test]
    fn calibration_raises_c_when_needed() {
        // n = 4 shrinks the integrand enough that a(2C) is not admissible
        let p2 = AProfile::p_laplacian(2.0).unwrap();
        let spec = BarrierSpec::new(p2, 1.0, 4, 1.0).unwrap();
        assert!(spec.g_eval(0.0).unwrap() < 2.0);
        let cal = spec.calibrated().unwrap();
        assert!(cal.c > spec.c);
        assert!(cal.g_eval(0.0).unwrap() >= 2.0);
    }

    #[test]
    fn minimal_calibration_fails_for_tall_barrier() {
        let spec = BarrierSpec::new(AProfile::minimal(), 2.0, 3, 100.0).unwrap();
        match spec.calibrate_c() {
            Err(Error::Calibration { best_g0, .. }) => assert!(best_g0 < 200.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sigma_clamps() {
        let spec = laplace_spec(1.0);
        let spec = BarrierSpec { height_c: 0.5, ..spec };
        assert_eq!(spec.sigma_eval(Location::Inside(0.0)).unwrap(), 0.5);
        assert_eq!(spec.sigma_eval(Location::Outside).unwrap(), 0.5);
        // g(s*) = 1/4 where gd(s*) = π/2 - 1/4
        let s_star = (FRAC_PI_2 - 0.25).tan().asinh();
        assert_abs_diff_eq!(
            spec.sigma_eval(Location::Inside(s_star)).unwrap(),
            0.25,
            epsilon = 1e-10
        );
    }

    #[test]
    fn residual_cases() {
        let grid: Vec<f64> = (1..=50).map(|i| i as f64 * 0.1).collect();
        let spec = laplace_spec(1.0);
        let rep = spec.verify_supersolution(&grid, None).unwrap();
        assert!(rep.max_residual.abs() <= 1e-12);
        assert!(rep.fd_consistent, "fd gap {}", rep.fd_max_gap);

        let plus = |s: f64| (s).tanh() + 0.1;
        let rep = spec.residual_report(&grid, Some(&plus)).unwrap();
        assert!(rep.nodes.iter().all(|n| n.residual < 0.0));

        let zero = |_: f64| 0.0;
        match spec.verify_supersolution(&grid, Some(&zero)) {
            Err(Error::Verification { location, residual }) => {
                assert!(location > 0.0 && residual > 0.0)
            }
            other => panic!("{other:?}"),
        }
    }
}
