//! The rotationally symmetric hypersurfaces `S_R`.
//!
//! The generating curve `(r(t), θ(t))` solves
//!
//! ```text
//! r' = cosh(kR) sin θ,   θ' = k sinh(kR) / sinh²(kr),   r(0) = R, θ(0) = 0,
//! ```
//!
//! with first integral `cos θ · tanh(kr) = tanh(kR)`. In constant curvature
//! `-k²` the hypersurface is totally geodesic; with stronger curvature the
//! side containing the pole is convex.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::{WarpingFunction, WarpingKind};
use crate::ode::{self, OdeOptions};

/// One point of the generating curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SrSample {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub r_prime: f64,
    pub theta_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SrCurve {
    #[serde(rename = "R")]
    pub r0: f64,
    pub k: f64,
    pub samples: Vec<SrSample>,
    pub t_span: (f64, f64),
    pub integrator_tol: f64,
    pub max_residual: f64,
}

/// Right-hand side of the generating ODE.
pub fn sr_rhs(r0: f64, k: f64, y: &[f64; 2]) -> [f64; 2] {
    let s = (k * y[0]).sinh();
    [(k * r0).cosh() * y[1].sin(), k * (k * r0).sinh() / (s * s)]
}

/// `cos θ · tanh(kr) − tanh(kR)`.
pub fn first_integral_residual(r0: f64, k: f64, r: f64, theta: f64) -> f64 {
    theta.cos() * (k * r).tanh() - (k * r0).tanh()
}

/// Integrates the generating curve on `[t_min, t_max]` with `n_samples`
/// uniformly spaced outputs (plus `t = 0`).
pub fn integrate_sr_ode(
    r0: f64,
    k: f64,
    t_span: (f64, f64),
    tol: f64,
    n_samples: usize,
) -> Result<SrCurve> {
    let (t_min, t_max) = t_span;
    if !(r0 > 0.0) || !(k > 0.0) || !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "need R > 0, k > 0, tol > 0; got R={r0}, k={k}, tol={tol}"
        )));
    }
    if !(t_min <= 0.0 && 0.0 <= t_max) {
        return Err(Error::Domain(format!("t_span ({t_min}, {t_max}) must contain 0")));
    }
    let n = n_samples.max(2);
    let mut times: Vec<f64> = (0..n)
        .map(|i| t_min + (t_max - t_min) * i as f64 / (n - 1) as f64)
        .collect();
    times[n - 1] = t_max;
    if !times.contains(&0.0) {
        times.push(0.0);
        times.sort_by(f64::total_cmp);
    }

    // the step control runs one decade tighter so the monitored residual stays below 10·tol
    let opts = OdeOptions::with_tol(0.1 * tol);
    let rhs = |_: f64, y: &[f64; 2]| sr_rhs(r0, k, y);
    let y0 = [r0, 0.0];
    let mut samples = Vec::with_capacity(times.len());

    let back: Vec<f64> = times.iter().rev().copied().filter(|&t| t < 0.0).collect();
    let mut back_samples = Vec::new();
    ode::integrate(rhs, 0.0, y0, &back, opts, |t, y, dy| {
        back_samples.push(sample(t, y, dy))
    })?;
    back_samples.reverse();
    samples.extend(back_samples);

    let fwd: Vec<f64> = times.iter().copied().filter(|&t| t >= 0.0).collect();
    ode::integrate(rhs, 0.0, y0, &fwd, opts, |t, y, dy| samples.push(sample(t, y, dy)))?;

    let mut curve = SrCurve {
        r0,
        k,
        samples,
        t_span,
        integrator_tol: tol,
        max_residual: 0.0,
    };
    curve.max_residual = curve.check_invariants()?;
    Ok(curve)
}

fn sample(t: f64, y: &[f64; 2], dy: &[f64; 2]) -> SrSample {
    SrSample {
        t,
        r: y[0],
        theta: y[1],
        r_prime: dy[0],
        theta_prime: dy[1],
    }
}

impl SrCurve {
    /// Verifies the first integral and the monotonicity invariants; returns
    /// the worst first-integral residual.
    pub fn check_invariants(&self) -> Result<f64> {
        let bound = 10.0 * self.integrator_tol;
        let mut worst: f64 = 0.0;
        for s in &self.samples {
            let res = first_integral_residual(self.r0, self.k, s.r, s.theta).abs();
            worst = worst.max(res);
            if !(res <= bound) {
                return Err(Error::Integrator {
                    reason: format!("first integral drifted at t = {}", s.t),
                    worst_residual: res,
                });
            }
            if s.r < self.r0 * (1.0 - bound) || !(s.theta_prime > 0.0) {
                return Err(Error::Integrator {
                    reason: format!("monotonicity invariant broken at t = {}", s.t),
                    worst_residual: res,
                });
            }
        }
        // θ' > 0 is checked above; far out θ saturates in floating point
        if self.samples.windows(2).any(|w| w[1].theta < w[0].theta) {
            return Err(Error::Integrator {
                reason: "theta is decreasing".into(),
                worst_residual: worst,
            });
        }
        Ok(worst)
    }

    /// The asymptotic half-angle `arccos(tanh kR)`.
    pub fn limit_angle(&self) -> f64 {
        (self.k * self.r0).tanh().acos()
    }

    /// `(r, θ)` at `t` by cubic Hermite interpolation between samples.
    pub fn state_at(&self, t: f64) -> Result<(f64, f64)> {
        let first = self.samples.first().map_or(f64::NAN, |s| s.t);
        let last = self.samples.last().map_or(f64::NAN, |s| s.t);
        if !(t >= first && t <= last) {
            return Err(Error::Domain(format!("t = {t} outside [{first}, {last}]")));
        }
        let i = self.samples.partition_point(|s| s.t < t);
        if self.samples[i.min(self.samples.len() - 1)].t == t {
            let s = self.samples[i];
            return Ok((s.r, s.theta));
        }
        let (a, b) = (self.samples[i - 1], self.samples[i]);
        let h = b.t - a.t;
        let x = (t - a.t) / h;
        let herm = |p0: f64, m0: f64, p1: f64, m1: f64| {
            let x2 = x * x;
            let x3 = x2 * x;
            (2.0 * x3 - 3.0 * x2 + 1.0) * p0
                + (x3 - 2.0 * x2 + x) * h * m0
                + (-2.0 * x3 + 3.0 * x2) * p1
                + (x3 - x2) * h * m1
        };
        Ok((
            herm(a.r, a.r_prime, b.r, b.r_prime),
            herm(a.theta, a.theta_prime, b.theta, b.theta_prime),
        ))
    }

    /// Export rows `(t, r, θ, residual)`.
    pub fn rows(&self) -> Vec<[f64; 4]> {
        self.samples
            .iter()
            .map(|s| {
                [
                    s.t,
                    s.r,
                    s.theta,
                    first_integral_residual(self.r0, self.k, s.r, s.theta),
                ]
            })
            .collect()
    }
}

/// Point of `S_R` in `ℝ^{n+1}` for angles `θ_1..θ_{n-1}` and curve parameter `t`.
///
/// Coordinates follow the spherical convention with `θ(t)` as the last angle:
/// `x_{n+1} = r cos θ`, `x_n = r sin θ cos θ_{n-1}`, …,
/// `x_2 = r sin θ ⋯ sin θ_2 cos θ_1`, `x_1 = r sin θ ⋯ sin θ_2 sin θ_1`.
pub fn embed_sr(curve: &SrCurve, angles: &[f64], t: f64) -> Result<Vec<f64>> {
    let (r, theta) = curve.state_at(t)?;
    let mut all = angles.to_vec();
    all.push(theta);
    let n = all.len();
    let mut x = vec![0.0; n + 1];
    let mut radius = r;
    for j in (0..n).rev() {
        x[j + 1] = radius * all[j].cos();
        radius *= all[j].sin();
    }
    x[0] = radius;
    Ok(x)
}

/// Second fundamental form of `S_R` at one point.
///
/// `raw` values are the coordinate expressions; `normalized` values are the
/// normal curvatures `h(X, X) / (|X|² |N|)` and do not depend on the free angles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FundamentalForm {
    pub h_tt: f64,
    pub h_ii: Vec<f64>,
    pub kappa_tt: f64,
    pub kappa_rot: f64,
}

/// Evaluates the form at a curve sample for free angles `θ_2..θ_{n-1}`
/// (one rotational direction per free angle plus the innermost one).
pub fn second_fundamental_form(
    wf: &WarpingFunction,
    r0: f64,
    k: f64,
    at: &SrSample,
    free_angles: &[f64],
) -> Result<FundamentalForm> {
    for &a in free_angles {
        if !(a > 0.0 && a < std::f64::consts::PI) || a.sin() == 0.0 {
            return Err(Error::Domain(format!(
                "free angle {a} is on the coordinate axis (must lie in (0, π))"
            )));
        }
    }
    let (r, theta) = (at.r, at.theta);
    let [rp, tp] = sr_rhs(r0, k, &[r, theta]);
    let ckr = (k * r0).cosh();
    let f = wf.f(r);
    let fr = wf.f_prime(r);
    let rpp = ckr * theta.cos() * tp;
    let tpp = -2.0 * rp * tp * k / (k * r).tanh();
    let d_f2tp = 2.0 * f * fr * rp * tp + f * f * tpp;
    let h_tt = f * tp * (f * fr * tp * tp - rpp) + rp / f * d_f2tp;

    let rot = fr * tp - ckr * theta.cos() / f;
    let sin2 = theta.sin().powi(2);
    let mut h_ii = Vec::with_capacity(free_angles.len() + 1);
    let mut prod = f * f * sin2;
    h_ii.push(prod * rot);
    for &a in free_angles.iter().rev() {
        prod *= a.sin().powi(2);
        h_ii.push(prod * rot);
    }
    h_ii.reverse();

    let norm = (rp * rp + f * f * tp * tp).sqrt();
    Ok(FundamentalForm {
        h_tt,
        h_ii,
        kappa_tt: h_tt / (norm * norm * norm),
        kappa_rot: rot / norm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityCertificate {
    pub warping: WarpingKind,
    #[serde(rename = "R")]
    pub r0: f64,
    pub k: f64,
    /// Minimal normal curvatures over the grid.
    pub min_h_tt: f64,
    pub min_h_ii: f64,
    pub argmin_h_tt: f64,
    pub argmin_h_ii: (f64, f64),
    /// Minimal raw coordinate values, for reference.
    pub min_raw_h_tt: f64,
    pub min_raw_h_ii: f64,
    pub t_grid: (f64, f64, usize),
    pub angle_grid: (f64, f64, usize),
    pub max_first_integral_residual: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Integrates `S_R` over the span of `t_grid` and evaluates the fundamental
/// form on `t_grid × angle_grid` with one free angle (a 3-dimensional `S_R`).
pub fn certify_convexity(
    wf: &WarpingFunction,
    r0: f64,
    t_grid: &[f64],
    angle_grid: &[f64],
    tol: f64,
) -> Result<ConvexityCertificate> {
    if t_grid.is_empty() || angle_grid.is_empty() {
        return Err(Error::Domain("empty certification grid".into()));
    }
    let k = wf.k;
    let t_min = t_grid.iter().copied().fold(0.0, f64::min);
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let curve = integrate_sr_ode(r0, k, (t_min, t_max), 1e-10, 2)?;
    let r_hi = curve.samples.iter().map(|s| s.r).fold(r0, f64::max);
    let m = 1000;
    let r_grid: Vec<f64> = (1..=m)
        .map(|i| r_hi.min(wf.r_max) * i as f64 / m as f64)
        .collect();
    let comparison = wf.comparison_check(&r_grid);
    if !comparison.passes(1e-12) {
        return Err(Error::Precondition(format!(
            "warping function violates the curvature comparison: {comparison:?}"
        )));
    }

    let mut sorted: Vec<f64> = t_grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut samples = Vec::with_capacity(sorted.len());
    let opts = OdeOptions::with_tol(1e-11);
    let rhs = |_: f64, y: &[f64; 2]| sr_rhs(r0, k, y);
    let back: Vec<f64> = sorted.iter().rev().copied().filter(|&t| t < 0.0).collect();
    ode::integrate(rhs, 0.0, [r0, 0.0], &back, opts, |t, y, dy| {
        samples.push(sample(t, y, dy))
    })?;
    let fwd: Vec<f64> = sorted.iter().copied().filter(|&t| t >= 0.0).collect();
    ode::integrate(rhs, 0.0, [r0, 0.0], &fwd, opts, |t, y, dy| {
        samples.push(sample(t, y, dy))
    })?;

    let mut cert = ConvexityCertificate {
        warping: wf.kind().clone(),
        r0,
        k,
        min_h_tt: f64::INFINITY,
        min_h_ii: f64::INFINITY,
        argmin_h_tt: f64::NAN,
        argmin_h_ii: (f64::NAN, f64::NAN),
        min_raw_h_tt: f64::INFINITY,
        min_raw_h_ii: f64::INFINITY,
        t_grid: (sorted[0], sorted[sorted.len() - 1], sorted.len()),
        angle_grid: (
            angle_grid.iter().copied().fold(f64::INFINITY, f64::min),
            angle_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            angle_grid.len(),
        ),
        max_first_integral_residual: curve.max_residual,
        tol,
        pass: false,
    };
    for s in &samples {
        for &a in angle_grid {
            let form = second_fundamental_form(wf, r0, k, s, &[a])?;
            if form.kappa_tt < cert.min_h_tt {
                cert.min_h_tt = form.kappa_tt;
                cert.argmin_h_tt = s.t;
            }
            if form.kappa_rot < cert.min_h_ii {
                cert.min_h_ii = form.kappa_rot;
                cert.argmin_h_ii = (s.t, a);
            }
            cert.min_raw_h_tt = cert.min_raw_h_tt.min(form.h_tt);
            for &h in &form.h_ii {
                cert.min_raw_h_ii = cert.min_raw_h_ii.min(h);
            }
        }
    }
    cert.pass = cert.min_h_tt >= -tol && cert.min_h_ii >= -tol;
    Ok(cert)
}

/// `R = artanh(cos α)/k` and its curve, whose two ends approach the angle `α`.
pub fn sc_witness(wf: &WarpingFunction, alpha: f64) -> Result<(f64, SrCurve)> {
    if !(alpha > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Domain(format!("alpha must lie in (0, π/2), got {alpha}")));
    }
    let k = wf.k;
    let r0 = alpha.cos().atanh() / k;
    let t_max = 40.0 / k;
    let curve = integrate_sr_ode(r0, k, (-t_max, t_max), 1e-10, 801)?;
    Ok((r0, curve))
}
