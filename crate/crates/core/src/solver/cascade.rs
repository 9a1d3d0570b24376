use std::f64::consts::PI;

use serde::Serialize;

use super::grid::PolarGrid;
use super::{solve_ball_from, BoundaryData, DirichletProblem, DiscreteSolution};
use crate::error::{Error, Result};

/// Fixed radial step and angular count, so nodes of nested balls coincide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct GridPolicy {
    pub dr: f64,
    pub n_t: usize,
}

impl GridPolicy {
    pub fn grid_for(&self, problem: &DirichletProblem, radius: f64) -> Result<PolarGrid> {
        let steps = radius / self.dr;
        let n_r = steps.round();
        if !(self.dr > 0.0) || (steps - n_r).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::Domain(format!("radius {radius} is not a multiple of the step {}", self.dr)));
        }
        PolarGrid::ball(&problem.wf, radius, n_r as usize, self.n_t)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CascadeStage {
    #[serde(rename = "R_k")]
    pub radius: f64,
    /// `max |u_k - u_{k-1}|` on the innermost ball, absent for the first stage.
    pub d_k: Option<f64>,
    pub iters: usize,
    pub residual: f64,
    pub max_principle: bool,
    pub max_principle_excess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CascadeReport {
    pub compare_radius: f64,
    pub stages: Vec<CascadeStage>,
    pub d: Vec<f64>,
    pub strictly_decreasing: bool,
    /// Set when some `d_k` grows by more than the noise level.
    pub non_monotone: bool,
    pub converged: bool,
    pub tol_cascade: f64,
}

/// Largest jumps between adjacent samples of `phi` at `n` and `2n` points.
pub fn asymptotic_jumps(phi: &dyn Fn(f64) -> f64, n: usize) -> (f64, f64) {
    let jump = |m: usize| {
        let vals: Vec<f64> = (0..=m).map(|j| phi(2.0 * PI * j as f64 / m as f64)).collect();
        vals.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
    };
    (jump(n), jump(2 * n))
}

/// Solves on balls of increasing radius with data `φ(angle)` on each boundary
/// and compares consecutive solutions on the smallest ball.
pub fn exhaustion_solve(
    problem: &DirichletProblem,
    radii: &[f64],
    policy: GridPolicy,
    tol_cascade: f64,
) -> Result<(DiscreteSolution, CascadeReport)> {
    let phi = match &problem.data {
        BoundaryData::Asymptotic(phi) => phi.clone(),
        other => return Err(Error::Shape(format!("the cascade needs asymptotic data, got {other:?}"))),
    };
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("cascade radii must be nonempty and increasing".into()));
    }
    let (coarse, fine) = asymptotic_jumps(&*phi, 1024);
    if !coarse.is_finite() || fine > 0.75 * coarse + 1e-12 {
        return Err(Error::Precondition(format!(
            "asymptotic data look discontinuous: sample jumps {coarse} then {fine} after refinement"
        )));
    }
    let r1 = radii[0];
    let mut stages = Vec::with_capacity(radii.len());
    let mut d = Vec::new();
    let mut prev: Option<DiscreteSolution> = None;
    for &radius in radii {
        let grid = policy.grid_for(problem, radius)?;
        let init = prev.as_ref().map(|p| extend(p, &grid, &*phi));
        let sol = solve_ball_from(problem, &grid, init.as_deref())?;
        let mp = sol.max_principle();
        let d_k = prev.as_ref().map(|p| {
            let inner = p.grid.n_r.min((r1 / policy.dr).round() as usize);
            let mut m: f64 = 0.0;
            for i in 0..=inner {
                for j in 0..grid.n_t {
                    m = m.max((sol.value(i, j) - p.value(i, j)).abs());
                }
            }
            m
        });
        if let Some(x) = d_k {
            d.push(x);
        }
        stages.push(CascadeStage {
            radius,
            d_k,
            iters: sol.newton_iters,
            residual: sol.residual_norm,
            max_principle: mp.holds,
            max_principle_excess: mp.worst_excess,
        });
        prev = Some(sol);
    }
    let noise = 10.0 * problem.options.tol_newton;
    let strictly_decreasing = d.windows(2).all(|w| w[1] < w[0]);
    let non_monotone = d.windows(2).any(|w| w[1] > w[0] + noise);
    let converged = d.last().is_some_and(|&x| x <= tol_cascade);
    let report = CascadeReport {
        compare_radius: r1,
        stages,
        d,
        strictly_decreasing,
        non_monotone,
        converged,
        tol_cascade,
    };
    Ok((prev.expect("radii is nonempty"), report))
}

// Previous solution inside, radial extension of φ outside.
fn extend(prev: &DiscreteSolution, grid: &PolarGrid, phi: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let mut u = vec![0.0; grid.n_nodes()];
    for i in 0..=grid.n_r {
        for j in 0..grid.n_t {
            u[grid.node(i, j)] =
                if i <= prev.grid.n_r { prev.value(i, j) } else { phi(grid.angle(j)) };
        }
    }
    u
}
