use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::{Mat, Side};

use super::grid::{Dof, GridKind, PolarGrid};
use crate::error::{Error, Result};
use crate::operator::AProfile;

/// Newton controls. `regularization = None` picks `1e-8 · range / R`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NewtonOptions {
    pub max_newton: usize,
    pub tol_newton: f64,
    /// Smallest line-search step before giving up.
    pub damping_floor: f64,
    pub regularization: Option<f64>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_newton: 60, tol_newton: 1e-10, damping_floor: 2f64.powi(-20), regularization: None }
    }
}

#[derive(Debug, Clone, Copy)]
enum Flux<'a> {
    Harmonic,
    Profile(&'a AProfile),
}

impl Flux<'_> {
    // a(s)/s, the factor turning the gradient into the flux vector
    fn ratio(&self, s: f64) -> f64 {
        match self {
            Flux::Harmonic => 1.0,
            Flux::Profile(p) => {
                if s > 0.0 {
                    p.a(s) / s
                } else {
                    0.0
                }
            }
        }
    }
}

/// Discrete energy, gradient and Hessian for fixed grid and profile.
pub(crate) struct Discretization<'a> {
    pub grid: &'a PolarGrid,
    pub profile: &'a AProfile,
    diag: Vec<f64>,
}

impl<'a> Discretization<'a> {
    pub fn new(grid: &'a PolarGrid, profile: &'a AProfile) -> Self {
        let mut full = vec![0.0; grid.n_nodes()];
        for t in grid.triangles() {
            for a in 0..3 {
                full[t.nodes[a]] += t.weight * (t.coef[a][0].powi(2) + t.coef[a][1].powi(2));
            }
        }
        let diag = full[grid.n_t..grid.n_t + grid.n_unknowns()].to_vec();
        Self { grid, profile, diag }
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        self.grid
            .triangles()
            .map(|t| {
                let g = t.gradient(u);
                t.weight * self.profile.energy_density(g[0].hypot(g[1]))
            })
            .sum()
    }

    fn gradient(&self, u: &[f64], flux: Flux<'_>) -> Vec<f64> {
        let grid = self.grid;
        let nt = grid.n_t;
        let mut full = vec![0.0; grid.n_nodes()];
        for t in grid.triangles() {
            let g = t.gradient(u);
            let m = flux.ratio(g[0].hypot(g[1]));
            let q = [m * g[0], m * g[1]];
            for a in 0..3 {
                full[t.nodes[a]] += t.weight * (t.coef[a][0] * q[0] + t.coef[a][1] * q[1]);
            }
        }
        let mut out = full[nt..nt + grid.n_unknowns()].to_vec();
        if grid.kind == GridKind::Ball {
            let gp: f64 = full[..nt].iter().sum();
            for x in out.iter_mut().take(nt) {
                *x += gp / nt as f64;
            }
        }
        out
    }

    /// `max_i |g_i| / D_i` with `D_i` the diagonal of the discrete Laplacian.
    fn scaled_max(&self, g: &[f64]) -> f64 {
        g.iter().zip(&self.diag).map(|(g, d)| (g / d).abs()).fold(0.0, f64::max)
    }

    /// Emits the lower triangle of the reduced Hessian in a fixed order.
    /// With `delta = None` the linearization is the Laplacian.
    fn hessian<F: FnMut(usize, usize, f64)>(&self, u: &[f64], delta: Option<f64>, sink: &mut F) {
        let grid = self.grid;
        let nt = grid.n_t;
        let mut hpp = 0.0;
        let mut cpole = vec![0.0; nt];
        for t in grid.triangles() {
            let m = match delta {
                None => [[1.0, 0.0], [0.0, 1.0]],
                Some(d) => {
                    let g = t.gradient(u);
                    let s2 = g[0] * g[0] + g[1] * g[1] + d * d;
                    let s = s2.sqrt();
                    let al = self.profile.a(s) / s;
                    let be = (self.profile.a_prime(s) - al) / s2;
                    [
                        [al + be * g[0] * g[0], be * g[0] * g[1]],
                        [be * g[0] * g[1], al + be * g[1] * g[1]],
                    ]
                }
            };
            let dofs = t.nodes.map(|n| grid.dof(n));
            for a in 0..3 {
                let ca = t.coef[a];
                let mc = [m[0][0] * ca[0] + m[0][1] * ca[1], m[1][0] * ca[0] + m[1][1] * ca[1]];
                for b in 0..3 {
                    let cb = t.coef[b];
                    let h = t.weight * (mc[0] * cb[0] + mc[1] * cb[1]);
                    match (dofs[a], dofs[b]) {
                        (Dof::Unknown(x), Dof::Unknown(y)) if x >= y => sink(x, y, h),
                        (Dof::Pole, Dof::Unknown(y)) => cpole[y] += h,
                        (Dof::Pole, Dof::Pole) => hpp += h,
                        _ => {}
                    }
                }
            }
        }
        if grid.kind == GridKind::Ball {
            let n = nt as f64;
            for x in 0..nt {
                for y in 0..=x {
                    sink(x, y, hpp / (n * n) + (cpole[x] + cpole[y]) / n);
                }
            }
        }
    }
}

/// Sparsity pattern and symbolic factorization, shared by all Newton steps.
pub(crate) struct Pattern {
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    llt: SymbolicLlt<usize>,
    len: usize,
}

impl Pattern {
    pub fn new(disc: &Discretization<'_>) -> Result<Self> {
        let n = disc.grid.n_unknowns();
        let zeros = vec![0.0; disc.grid.n_nodes()];
        let mut pairs = Vec::new();
        disc.hessian(&zeros, None, &mut |r, c, _| pairs.push(Pair { row: r, col: c }));
        let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(n, n, &pairs)
            .map_err(|e| Error::Shape(format!("sparsity pattern: {e:?}")))?;
        let llt = SymbolicLlt::try_new(symbolic.as_ref(), Side::Lower)
            .map_err(|e| Error::Shape(format!("symbolic factorization: {e:?}")))?;
        Ok(Self { symbolic, argsort, llt, len: pairs.len() })
    }

    /// Solves `H x = rhs` for the Hessian linearized at `u`.
    fn solve(
        &self,
        disc: &Discretization<'_>,
        u: &[f64],
        delta: Option<f64>,
        rhs: &[f64],
    ) -> Result<Vec<f64>> {
        let mut vals = Vec::with_capacity(self.len);
        disc.hessian(u, delta, &mut |_, _, h| vals.push(h));
        let mat = SparseColMat::new_from_argsort(self.symbolic.clone(), &self.argsort, &vals)
            .map_err(|e| Error::Shape(format!("matrix assembly: {e:?}")))?;
        let llt = Llt::try_new_with_symbolic(self.llt.clone(), mat.as_ref(), Side::Lower)
            .map_err(|e| Error::Precondition(format!("Hessian is not positive definite: {e:?}")))?;
        let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = llt.solve(&b);
        Ok((0..rhs.len()).map(|i| x[(i, 0)]).collect())
    }
}

/// Outcome of a Newton run on full nodal values.
pub(crate) struct NewtonRun {
    pub u: Vec<f64>,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub energy_history: Vec<f64>,
}

fn apply_step(grid: &PolarGrid, u: &mut [f64], base: &[f64], step: &[f64], alpha: f64) {
    let nt = grid.n_t;
    for (x, d) in step.iter().enumerate() {
        u[nt + x] = base[nt + x] + alpha * d;
    }
    if grid.kind == GridKind::Ball {
        let mean = u[nt..2 * nt].iter().sum::<f64>() / nt as f64;
        u[..nt].fill(mean);
    }
}

/// Replaces the interior by the discrete harmonic extension of the boundary values in `u`.
pub(crate) fn harmonic_fill(disc: &Discretization<'_>, pattern: &Pattern, u: &mut [f64]) -> Result<()> {
    let g = disc.gradient(u, Flux::Harmonic);
    let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
    let d = pattern.solve(disc, u, None, &rhs)?;
    let base = u.to_vec();
    apply_step(disc.grid, u, &base, &d, 1.0);
    Ok(())
}

/// Damped Newton on the reduced energy starting from `u` (boundary values already set).
pub(crate) fn newton(
    disc: &Discretization<'_>,
    pattern: &Pattern,
    mut u: Vec<f64>,
    delta: f64,
    opts: &NewtonOptions,
) -> Result<NewtonRun> {
    let grid = disc.grid;
    let mut energy = disc.energy(&u);
    let mut history = vec![energy];
    let mut trial = u.clone();
    for iter in 0..=opts.max_newton {
        let g = disc.gradient(&u, Flux::Profile(disc.profile));
        let residual = disc.scaled_max(&g);
        if residual <= opts.tol_newton {
            return Ok(NewtonRun { u, energy, residual, iterations: iter, energy_history: history });
        }
        if iter == opts.max_newton {
            return Err(Error::NonConvergence { iterations: iter, residual });
        }
        let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        let d = pattern.solve(disc, &u, Some(delta), &rhs)?;
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let slack = 64.0 * f64::EPSILON * energy.abs();
        let mut alpha = 1.0;
        loop {
            apply_step(grid, &mut trial, &u, &d, alpha);
            let e = disc.energy(&trial);
            if e.is_finite() && e <= energy + 1e-4 * alpha * slope.min(0.0) + slack {
                std::mem::swap(&mut u, &mut trial);
                trial.copy_from_slice(&u);
                energy = e;
                history.push(e);
                break;
            }
            alpha *= 0.5;
            if alpha < opts.damping_floor {
                return Err(Error::NonConvergence { iterations: iter + 1, residual });
            }
        }
    }
    unreachable!("loop returns on its last iteration")
}
