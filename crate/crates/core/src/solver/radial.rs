use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::WarpingFunction;
use crate::operator::AProfile;
use crate::quadrature::{integrate, QuadOptions};

const QUAD: QuadOptions = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-14, max_intervals: 20_000 };

/// Radial solution `u(r) = u_in ± ∫_{r_in}^r a⁻¹(c f^{-n})`.
#[derive(Debug, Clone, Serialize)]
pub struct RadialSolution {
    pub r_in: f64,
    pub r_out: f64,
    pub u_in: f64,
    pub u_out: f64,
    pub n: usize,
    /// Signed flux `f(r)^n a(|u'|) · sign(u_out - u_in)`.
    pub c_flux: f64,
    /// `u(r_out)` recomputed from the converged flux.
    pub endpoint_error: f64,
    #[serde(skip)]
    profile: AProfile,
    #[serde(skip)]
    wf: WarpingFunction,
}

impl RadialSolution {
    fn slope(&self, t: f64) -> f64 {
        let c = self.c_flux.abs();
        if c == 0.0 {
            return 0.0;
        }
        let s = self.profile.inverse(c / self.wf.f(t).powi(self.n as i32)).unwrap_or(0.0);
        s * self.c_flux.signum()
    }

    /// `u'(r)`.
    pub fn derivative(&self, r: f64) -> f64 {
        self.slope(r)
    }

    pub fn value(&self, r: f64) -> f64 {
        if self.c_flux == 0.0 {
            return self.u_in;
        }
        let r = r.clamp(self.r_in, self.r_out);
        self.u_in + integrate(|t| self.slope(t), self.r_in, r, QUAD).value
    }

    /// Values at increasing radii by accumulating the integral piecewise.
    pub fn values(&self, radii: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(radii.len());
        let mut last_r = self.r_in;
        let mut acc = self.u_in;
        for &r in radii {
            let r = r.clamp(self.r_in, self.r_out);
            if r < last_r {
                out.push(self.value(r));
                continue;
            }
            if self.c_flux != 0.0 {
                acc += integrate(|t| self.slope(t), last_r, r, QUAD).value;
            }
            last_r = r;
            out.push(acc);
        }
        out
    }
}

/// Radial solution of `Q[u] = 0` on `r_in ≤ r ≤ r_out` in dimension `n + 1`.
pub fn solve_radial(
    profile: &AProfile,
    wf: &WarpingFunction,
    n: usize,
    r_in: f64,
    r_out: f64,
    u_in: f64,
    u_out: f64,
) -> Result<RadialSolution> {
    if n < 1 {
        return Err(Error::Domain("sphere dimension n must be at least 1".into()));
    }
    if !(r_in > 0.0) || !(r_out > r_in) || r_out > wf.r_max {
        return Err(Error::Domain(format!("radial interval [{r_in}, {r_out}] is not admissible")));
    }
    if !u_in.is_finite() || !u_out.is_finite() {
        return Err(Error::Domain("radial boundary values must be finite".into()));
    }
    let mut sol = RadialSolution {
        r_in,
        r_out,
        u_in,
        u_out,
        n,
        c_flux: 0.0,
        endpoint_error: 0.0,
        profile: profile.clone(),
        wf: wf.clone(),
    };
    let jump = (u_out - u_in).abs();
    if jump == 0.0 {
        return Ok(sol);
    }
    let sign = (u_out - u_in).signum();
    let fin = wf.f(r_in).powi(n as i32);
    let rise = |c: f64| -> f64 {
        integrate(
            // at the largest flux, rounding can push a⁻¹ past sup a right next to r_in
            |t| profile.inverse(c / wf.f(t).powi(n as i32)).unwrap_or(0.0),
            r_in,
            r_out,
            QUAD,
        )
        .value
    };
    let sup = profile.sup_a();
    let mut lo = 0.0;
    let mut hi;
    if sup.is_finite() {
        hi = sup * fin;
        let top = rise(hi);
        if !(top >= jump) {
            return Err(Error::Infeasible(format!(
                "a jump of {jump} needs more than the largest flux {hi}, which only reaches {top}"
            )));
        }
    } else {
        let mut c = fin.max(1e-300);
        while rise(c) < jump {
            lo = c;
            c *= 2.0;
            if !c.is_finite() {
                return Err(Error::Search("no flux bracket found".into()));
            }
        }
        hi = c;
    }
    let tol = 1e-12 * jump.max(1.0);
    let mut c = 0.5 * (lo + hi);
    for _ in 0..400 {
        c = 0.5 * (lo + hi);
        let d = rise(c) - jump;
        if d.abs() <= tol || c <= lo || c >= hi {
            break;
        }
        if d < 0.0 {
            lo = c;
        } else {
            hi = c;
        }
    }
    sol.c_flux = sign * c;
    sol.endpoint_error = sol.value(r_out) - u_out;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyp() -> WarpingFunction {
        WarpingFunction::hyperbolic(1.0, 50.0).unwrap()
    }

    #[test]
    fn equal_data_has_zero_flux() {
        let s = solve_radial(&AProfile::minimal(), &hyp(), 1, 1.0, 2.0, 0.3, 0.3).unwrap();
        assert_eq!(s.c_flux, 0.0);
        assert_eq!(s.value(1.5), 0.3);
    }

    #[test]
    fn linear_case_matches_log_tanh() {
        let s = solve_radial(&AProfile::p_laplacian(2.0).unwrap(), &hyp(), 1, 1.0, 2.0, 0.0, 1.0).unwrap();
        // ∫ dt/sinh t = log tanh(t/2)
        let prim = |t: f64| (t / 2.0).tanh().ln();
        let exact = (prim(1.5) - prim(1.0)) / (prim(2.0) - prim(1.0));
        assert!((s.value(1.5) - exact).abs() < 1e-11);
        assert!(s.endpoint_error.abs() < 1e-11);
    }

    #[test]
    fn decreasing_data_is_mirrored() {
        let p = AProfile::p_laplacian(3.0).unwrap();
        let up = solve_radial(&p, &hyp(), 1, 1.0, 2.0, 0.0, 1.0).unwrap();
        let down = solve_radial(&p, &hyp(), 1, 1.0, 2.0, 1.0, 0.0).unwrap();
        assert!((up.value(1.3) + down.value(1.3) - 1.0).abs() < 1e-10);
        assert!(down.c_flux < 0.0);
    }

    #[test]
    fn minimal_profile_rejects_steep_jumps() {
        let r = solve_radial(&AProfile::minimal(), &hyp(), 1, 1.0, 2.0, 0.0, 5.0);
        assert!(matches!(r, Err(Error::Infeasible(_))));
        assert!(solve_radial(&AProfile::minimal(), &hyp(), 1, 1.0, 2.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn cumulative_values_agree_with_pointwise() {
        let s = solve_radial(&AProfile::minimal(), &hyp(), 2, 1.0, 2.0, 0.0, 0.5).unwrap();
        let radii = [1.0, 1.25, 1.5, 2.0];
        for (r, v) in radii.iter().zip(s.values(&radii)) {
            assert!((v - s.value(*r)).abs() < 1e-10);
        }
    }
}
