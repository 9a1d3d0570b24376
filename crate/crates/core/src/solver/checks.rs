use std::f64::consts::PI;

use serde::Serialize;

use super::grid::GridKind;
use super::DiscreteSolution;
use crate::barrier::{BarrierSpec, Location};
use crate::error::{Error, Result};
use crate::manifold::WarpingKind;

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonOutcome {
    pub ordered: bool,
    /// `max(u - v, 0)` over all nodes.
    pub worst_violation: f64,
    pub at: (usize, usize),
}

/// Checks `u ≤ v + tol_newton` nodewise for two solutions on the same grid.
pub fn comparison_check_discrete(u: &DiscreteSolution, v: &DiscreteSolution) -> Result<ComparisonOutcome> {
    let g = &u.grid;
    if !g.same_nodes(&v.grid) || u.values.len() != v.values.len() {
        return Err(Error::Shape("solutions live on different grids".into()));
    }
    let mut boundary: Vec<usize> = vec![g.n_r];
    if g.kind == GridKind::Annulus {
        boundary.push(0);
    }
    for &i in &boundary {
        for j in 0..g.n_t {
            let (a, b) = (u.value(i, j), v.value(i, j));
            if a > b {
                return Err(Error::Precondition(format!(
                    "boundary data are not ordered at ring {i}, angle {j}: {a} > {b}"
                )));
            }
        }
    }
    let tol = u.tol_newton.max(v.tol_newton);
    let mut worst = 0.0;
    let mut at = (0, 0);
    for i in 0..=g.n_r {
        for j in 0..g.n_t {
            let d = u.value(i, j) - v.value(i, j);
            if d > worst {
                worst = d;
                at = (i, j);
            }
        }
    }
    Ok(ComparisonOutcome { ordered: worst <= tol, worst_violation: worst, at })
}

/// Half-plane past the geodesic whose ideal endpoints are `x ± width`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SandwichWindow {
    pub x: f64,
    pub width: f64,
}

impl SandwichWindow {
    /// Distance from the pole to the bounding geodesic.
    pub fn d0(&self, k: f64) -> f64 {
        self.width.cos().atanh() / k
    }

    /// Signed distance to the bounding geodesic, positive inside the window.
    pub fn signed_distance(&self, k: f64, r: f64, t: f64) -> f64 {
        let kd = k * self.d0(k);
        let kr = k * r;
        (kr.sinh() * (t - self.x).cos() * kd.cosh() - kr.cosh() * kd.sinh()).asinh() / k
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub window: SandwichWindow,
    pub d0: f64,
    /// Oscillation of `φ` over the window.
    pub epsilon: f64,
    pub phi_x: f64,
    pub nodes_checked: usize,
    /// `min(ε + Σ - |u - φ(x)|)` over checked nodes.
    pub worst_slack: f64,
    pub at: (usize, usize),
    pub allowance: f64,
    pub holds: bool,
}

/// Checks `|u - φ(x)| ≤ ε + Σ` at the nodes of a ball solution inside the window.
pub fn barrier_sandwich_report(
    sol: &DiscreteSolution,
    spec: &BarrierSpec,
    window: SandwichWindow,
    phi: &dyn Fn(f64) -> f64,
    allowance: f64,
) -> Result<SandwichReport> {
    let g = &sol.grid;
    let wf = g.warping();
    if !matches!(wf.kind(), WarpingKind::Hyperbolic) {
        return Err(Error::Precondition("the sandwich check needs the hyperbolic warping".into()));
    }
    if g.kind != GridKind::Ball {
        return Err(Error::Shape("the sandwich check needs a ball solution".into()));
    }
    if (spec.k - wf.k).abs() > 1e-14 * wf.k {
        return Err(Error::Precondition(format!("barrier k = {} differs from warping k = {}", spec.k, wf.k)));
    }
    if !(window.width > 0.0 && window.width < 0.5 * PI) {
        return Err(Error::Domain(format!("window width must lie in (0, π/2), got {}", window.width)));
    }
    let m = 4096;
    let max_phi = (0..m).map(|i| phi(2.0 * PI * i as f64 / m as f64).abs()).fold(0.0, f64::max);
    if spec.height_c < max_phi {
        return Err(Error::Precondition(format!(
            "barrier height {} is below max |φ| = {max_phi}",
            spec.height_c
        )));
    }
    let phi_x = phi(window.x);
    let epsilon = (0..=m)
        .map(|i| window.x - window.width + 2.0 * window.width * i as f64 / m as f64)
        .map(|t| (phi(t) - phi_x).abs())
        .fold(0.0, f64::max);
    let k = wf.k;
    let mut worst = f64::INFINITY;
    let mut at = (0, 0);
    let mut count = 0;
    for i in 0..=g.n_r {
        for j in 0..g.n_t {
            let s = window.signed_distance(k, g.radius(i), g.angle(j));
            if s < 0.0 {
                continue;
            }
            count += 1;
            let sigma = spec.sigma_eval(Location::Inside(s))?;
            let slack = epsilon + sigma - (sol.value(i, j) - phi_x).abs();
            if slack < worst {
                worst = slack;
                at = (i, j);
            }
        }
    }
    Ok(SandwichReport {
        window,
        d0: window.d0(k),
        epsilon,
        phi_x,
        nodes_checked: count,
        worst_slack: worst,
        at,
        allowance,
        holds: count > 0 && worst >= -allowance,
    })
}
