//! Discrete Dirichlet problems for `Q[u] = 0` on 2-D polar grids.
//!
//! The energy `Σ w A(|∇u|)` is minimized over continuous piecewise linear
//! functions on a polar triangulation by damped Newton with a sparse
//! Cholesky factorization.

mod cascade;
mod checks;
mod grid;
mod newton;
mod oracle;
mod radial;

use std::fmt;

use serde::Serialize;

pub use cascade::{asymptotic_jumps, exhaustion_solve, CascadeReport, CascadeStage, GridPolicy};
pub use checks::{
    barrier_sandwich_report, comparison_check_discrete, ComparisonOutcome, SandwichReport,
    SandwichWindow,
};
pub use grid::{GridKind, PolarGrid};
pub use newton::NewtonOptions;
pub use oracle::{disk_radius, harmonic_oracle, poisson_integral};
pub use radial::{solve_radial, RadialSolution};

use crate::error::{Error, Result};
use crate::manifold::WarpingFunction;
use crate::operator::{AProfile, ScalarFn};
use newton::{harmonic_fill, newton, Discretization, Pattern};

/// Dirichlet data for a ball or an annulus.
#[derive(Clone)]
pub enum BoundaryData {
    /// Values at the outer ring nodes `t_j` of a ball.
    Values(Vec<f64>),
    /// A periodic function of the angle, sampled on the outer ring.
    Asymptotic(ScalarFn),
    /// Constant values on the two circles of an annulus.
    Radial { u_in: f64, u_out: f64 },
    /// Nodal values on the two circles of an annulus.
    Annulus { inner: Vec<f64>, outer: Vec<f64> },
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Values(v) => f.debug_tuple("Values").field(&v.len()).finish(),
            Self::Asymptotic(_) => f.write_str("Asymptotic(..)"),
            Self::Radial { u_in, u_out } => {
                f.debug_struct("Radial").field("u_in", u_in).field("u_out", u_out).finish()
            }
            Self::Annulus { inner, outer } => f
                .debug_struct("Annulus")
                .field("inner", &inner.len())
                .field("outer", &outer.len())
                .finish(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DirichletProblem {
    pub wf: WarpingFunction,
    pub profile: AProfile,
    pub data: BoundaryData,
    pub options: NewtonOptions,
}

impl DirichletProblem {
    pub fn new(wf: WarpingFunction, profile: AProfile, data: BoundaryData) -> Self {
        Self { wf, profile, data, options: NewtonOptions::default() }
    }

    pub fn with_options(mut self, options: NewtonOptions) -> Self {
        self.options = options;
        self
    }

    /// Samples `Asymptotic` data at the given angles.
    pub fn phi(&self) -> Option<&ScalarFn> {
        match &self.data {
            BoundaryData::Asymptotic(phi) => Some(phi),
            _ => None,
        }
    }

    fn check_inputs(&self, grid: &PolarGrid) -> Result<()> {
        let s_grid: Vec<f64> = (-60..=60).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
        let report = self.profile.check_conditions(&s_grid)?;
        if !report.all_pass() {
            return Err(Error::Precondition(format!("profile fails its structure conditions: {report:?}")));
        }
        let m = 1000;
        let r_grid: Vec<f64> = (1..=m).map(|i| grid.r_out * i as f64 / m as f64).collect();
        let cmp = self.wf.comparison_check(&r_grid);
        if !cmp.passes(1e-12) {
            return Err(Error::Precondition(format!(
                "warping function violates the curvature comparison: {cmp:?}"
            )));
        }
        if grid.warping().f(grid.r_out) != self.wf.f(grid.r_out) {
            return Err(Error::Shape("grid was built for a different warping function".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxPrinciple {
    pub holds: bool,
    /// Largest excursion outside `[min data, max data]`, zero if none.
    pub worst_excess: f64,
    pub at: (usize, usize),
}

/// Converged nodal values; ring 0 of a ball holds the pole value `n_t` times.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub grid: PolarGrid,
    pub values: Vec<f64>,
    pub energy: f64,
    pub residual_norm: f64,
    pub newton_iters: usize,
    pub energy_history: Vec<f64>,
    pub boundary_min: f64,
    pub boundary_max: f64,
    pub tol_newton: f64,
}

impl DiscreteSolution {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.node(i, j)]
    }

    pub fn max_principle(&self) -> MaxPrinciple {
        let g = &self.grid;
        let mut worst = 0.0;
        let mut at = (0, 0);
        for i in 0..=g.n_r {
            for j in 0..g.n_t {
                let u = self.value(i, j);
                let excess = (self.boundary_min - u).max(u - self.boundary_max);
                if excess > worst {
                    worst = excess;
                    at = (i, j);
                }
            }
        }
        MaxPrinciple { holds: worst <= self.tol_newton, worst_excess: worst, at }
    }

    /// `(r, t, u)` per node; the pole of a ball appears once.
    pub fn rows(&self) -> Vec<[f64; 3]> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(g.n_nodes());
        for i in 0..=g.n_r {
            let r = g.radius(i);
            if i == 0 && g.kind == GridKind::Ball {
                out.push([0.0, 0.0, self.value(0, 0)]);
                continue;
            }
            for j in 0..g.n_t {
                out.push([r, g.angle(j), self.value(i, j)]);
            }
        }
        out
    }
}

fn data_range(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn ring_values(data: &[f64], n_t: usize, what: &str) -> Result<Vec<f64>> {
    if data.len() != n_t {
        return Err(Error::Shape(format!("{what} has {} values, grid has {n_t} angles", data.len())));
    }
    if let Some(v) = data.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("{what} contains the non-finite value {v}")));
    }
    Ok(data.to_vec())
}

/// Solves the ball problem, optionally starting Newton from `initial` (full nodal values).
pub fn solve_ball_from(
    problem: &DirichletProblem,
    grid: &PolarGrid,
    initial: Option<&[f64]>,
) -> Result<DiscreteSolution> {
    if grid.kind != GridKind::Ball {
        return Err(Error::Shape("solve_ball needs a ball grid".into()));
    }
    let outer = match &problem.data {
        BoundaryData::Values(v) => ring_values(v, grid.n_t, "boundary data")?,
        BoundaryData::Asymptotic(phi) => {
            ring_values(&grid.angles().iter().map(|&t| phi(t)).collect::<Vec<_>>(), grid.n_t, "boundary data")?
        }
        other => return Err(Error::Shape(format!("ball problems take ring data, got {other:?}"))),
    };
    run(problem, grid, None, outer, initial)
}

pub fn solve_ball(problem: &DirichletProblem, grid: &PolarGrid) -> Result<DiscreteSolution> {
    solve_ball_from(problem, grid, None)
}

pub fn solve_annulus(problem: &DirichletProblem, grid: &PolarGrid) -> Result<DiscreteSolution> {
    if grid.kind != GridKind::Annulus {
        return Err(Error::Shape("solve_annulus needs an annulus grid".into()));
    }
    let (inner, outer) = match &problem.data {
        BoundaryData::Radial { u_in, u_out } => (vec![*u_in; grid.n_t], vec![*u_out; grid.n_t]),
        BoundaryData::Annulus { inner, outer } => (
            ring_values(inner, grid.n_t, "inner data")?,
            ring_values(outer, grid.n_t, "outer data")?,
        ),
        other => return Err(Error::Shape(format!("annulus problems take two rings, got {other:?}"))),
    };
    for v in inner.iter().chain(&outer) {
        if !v.is_finite() {
            return Err(Error::Domain(format!("boundary data contains {v}")));
        }
    }
    run(problem, grid, Some(inner), outer, None)
}

fn run(
    problem: &DirichletProblem,
    grid: &PolarGrid,
    inner: Option<Vec<f64>>,
    outer: Vec<f64>,
    initial: Option<&[f64]>,
) -> Result<DiscreteSolution> {
    problem.check_inputs(grid)?;
    let opts = &problem.options;
    let nt = grid.n_t;
    let mut data = outer.clone();
    if let Some(inner) = &inner {
        data.extend_from_slice(inner);
    }
    let (lo, hi) = data_range(&data);
    let mut u = vec![0.0; grid.n_nodes()];
    let done = |values: Vec<f64>, energy, residual, iters, history| DiscreteSolution {
        grid: grid.clone(),
        values,
        energy,
        residual_norm: residual,
        newton_iters: iters,
        energy_history: history,
        boundary_min: lo,
        boundary_max: hi,
        tol_newton: opts.tol_newton,
    };
    if lo == hi {
        u.fill(lo);
        return Ok(done(u, 0.0, 0.0, 0, vec![0.0]));
    }
    let disc = Discretization::new(grid, &problem.profile);
    let pattern = Pattern::new(&disc)?;
    match initial {
        Some(init) if init.len() == u.len() => u.copy_from_slice(init),
        Some(init) => {
            return Err(Error::Shape(format!("initial guess has {} values, grid has {}", init.len(), u.len())))
        }
        None => {}
    }
    u[grid.n_r * nt..].copy_from_slice(&outer);
    if let Some(inner) = &inner {
        u[..nt].copy_from_slice(inner);
    }
    if initial.is_none() {
        harmonic_fill(&disc, &pattern, &mut u)?;
    }
    let delta = opts.regularization.unwrap_or(1e-8 * (hi - lo) / grid.r_out);
    let out = newton(&disc, &pattern, u, delta, opts)?;
    Ok(done(out.u, out.energy, out.residual, out.iterations, out.energy_history))
}
