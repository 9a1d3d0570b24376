use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::WarpingFunction;
use crate::quadrature::{integrate, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Geodesic ball around the pole; ring 0 is the pole itself.
    Ball,
    /// Annulus `r_in ≤ r ≤ r_out` with Dirichlet data on both circles.
    Annulus,
}

/// Role of a grid node in the discrete problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Dof {
    Unknown(usize),
    Pole,
    Fixed,
}

/// Polar grid `r_i = r_in + iΔr` (i = 0..=n_r), `t_j = jΔt` (j = 0..n_t).
///
/// For a ball `r_in = 0` and every `(0, j)` refers to the pole. Each cell
/// `[r_i, r_{i+1}] × [t_j, t_{j+1}]` is split into two P1 triangles; the
/// sectors at the pole are collapsed bilinear cells with two quadrature points.
#[derive(Debug, Clone)]
pub struct PolarGrid {
    pub kind: GridKind,
    pub r_in: f64,
    pub r_out: f64,
    pub n_r: usize,
    pub n_t: usize,
    pub dr: f64,
    pub dt: f64,
    wf: WarpingFunction,
    // (weight, angular scale) of the lower-left / upper-right triangle of ring i
    lo: Vec<(f64, f64)>,
    hi: Vec<(f64, f64)>,
    // the two quadrature points of a pole sector (pole, (1, j), (1, j+1))
    pole: [Triangle; 2],
}

impl PolarGrid {
    pub fn ball(wf: &WarpingFunction, radius: f64, n_r: usize, n_t: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
        }
        Self::build(wf, GridKind::Ball, 0.0, radius, n_r, n_t)
    }

    pub fn annulus(
        wf: &WarpingFunction,
        r_in: f64,
        r_out: f64,
        n_r: usize,
        n_t: usize,
    ) -> Result<Self> {
        if !(r_in > 0.0) || !(r_out > r_in) || !r_out.is_finite() {
            return Err(Error::Domain(format!(
                "annulus needs 0 < r_in < r_out, got [{r_in}, {r_out}]"
            )));
        }
        Self::build(wf, GridKind::Annulus, r_in, r_out, n_r, n_t)
    }

    fn build(
        wf: &WarpingFunction,
        kind: GridKind,
        r_in: f64,
        r_out: f64,
        n_r: usize,
        n_t: usize,
    ) -> Result<Self> {
        if n_r < 8 {
            return Err(Error::Domain(format!("n_r must be at least 8, got {n_r}")));
        }
        if n_t < 4 || n_t % 2 != 0 {
            return Err(Error::Domain(format!("n_t must be even and at least 4, got {n_t}")));
        }
        if r_out > wf.r_max {
            return Err(Error::Domain(format!(
                "grid radius {r_out} exceeds the warping range {}",
                wf.r_max
            )));
        }
        let dr = (r_out - r_in) / n_r as f64;
        let dt = 2.0 * PI / n_t as f64;
        // Exact metric integrals over each triangle in (r, t) coordinates:
        // W_r = ∫ f and W_t = ∫ 1/f. The weight is W_r and the angular scale is
        // chosen so that the quadratic energy is integrated exactly.
        let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-14, max_intervals: 200 };
        let mut lo = Vec::with_capacity(n_r);
        let mut hi = Vec::with_capacity(n_r);
        for i in 0..n_r {
            let r = r_in + i as f64 * dr;
            if !(wf.f(r + 0.5 * dr) > 0.0) || (r > 0.0 && !(wf.f(r) > 0.0)) {
                return Err(Error::Precondition(format!("warping function is not positive near r = {r}")));
            }
            let down = |x: f64| 1.0 - x / dr;
            let up = |x: f64| x / dr;
            let w_lo = dt * integrate(|x| down(x) * wf.f(r + x), 0.0, dr, opts).value;
            let w_hi = dt * integrate(|x| up(x) * wf.f(r + x), 0.0, dr, opts).value;
            let t_hi = dt * integrate(|x| up(x) / wf.f(r + x), 0.0, dr, opts).value;
            if r == 0.0 {
                lo.push((w_lo, 0.0));
            } else {
                let t_lo = dt * integrate(|x| down(x) / wf.f(r + x), 0.0, dr, opts).value;
                lo.push((w_lo, (t_lo / w_lo).sqrt() / dt));
            }
            hi.push((w_hi, (t_hi / w_hi).sqrt() / dt));
        }
        // Pole sectors carry u = u_P (1 - r/dr) + (r/dr)·lerp(u_A, u_B), sampled at
        // two Gauss points in the angle; exact for the quadratic energy.
        let w_pole = dt * integrate(|x| wf.f(x), 0.0, dr, opts).value;
        let t_pole = dt * integrate(|x| (x / dr).powi(2) / wf.f(x), 0.0, dr, opts).value;
        let st = (t_pole / w_pole).sqrt() / dt;
        let pole = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()].map(|tau| Triangle {
            nodes: [0, 0, 0],
            coef: [[-1.0 / dr, 0.0], [(1.0 - tau) / dr, -st], [tau / dr, st]],
            weight: 0.5 * w_pole,
        });
        Ok(Self { kind, r_in, r_out, n_r, n_t, dr, dt, wf: wf.clone(), lo, hi, pole })
    }

    pub fn warping(&self) -> &WarpingFunction {
        &self.wf
    }

    pub fn radius(&self, i: usize) -> f64 {
        if i == self.n_r {
            self.r_out
        } else {
            self.r_in + i as f64 * self.dr
        }
    }

    pub fn angle(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.n_t).map(|j| self.angle(j)).collect()
    }

    /// Number of nodes including ring 0 (the pole is repeated `n_t` times).
    pub fn n_nodes(&self) -> usize {
        (self.n_r + 1) * self.n_t
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        i * self.n_t + j % self.n_t
    }

    pub fn n_unknowns(&self) -> usize {
        (self.n_r - 1) * self.n_t
    }

    pub(crate) fn dof(&self, node: usize) -> Dof {
        let i = node / self.n_t;
        if i == self.n_r {
            return Dof::Fixed;
        }
        if i == 0 {
            return match self.kind {
                GridKind::Ball => Dof::Pole,
                GridKind::Annulus => Dof::Fixed,
            };
        }
        Dof::Unknown(node - self.n_t)
    }

    /// True when both grids have the same nodes.
    pub fn same_nodes(&self, other: &PolarGrid) -> bool {
        self.kind == other.kind
            && self.n_r == other.n_r
            && self.n_t == other.n_t
            && self.r_in == other.r_in
            && self.r_out == other.r_out
    }

    /// Area element `f(r_i)ΔrΔt` of node ring `i`.
    pub fn area_weight(&self, i: usize) -> f64 {
        self.wf.f(self.radius(i)) * self.dr * self.dt
    }

    pub(crate) fn triangles(&self) -> Triangles<'_> {
        Triangles { grid: self, cell: 0, upper: false }
    }
}

/// A quadrature point with constant gradient `∇u = Σ_a c_a u_a` over three
/// nodes, `c_a = (radial, angular)` already scaled by `1/Δr` and `1/(f Δt)`
/// for an effective `f`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Triangle {
    pub nodes: [usize; 3],
    pub coef: [[f64; 2]; 3],
    pub weight: f64,
}

impl Triangle {
    pub fn gradient(&self, u: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (a, &n) in self.nodes.iter().enumerate() {
            g[0] += self.coef[a][0] * u[n];
            g[1] += self.coef[a][1] * u[n];
        }
        g
    }
}

pub(crate) struct Triangles<'a> {
    grid: &'a PolarGrid,
    cell: usize,
    upper: bool,
}

impl Iterator for Triangles<'_> {
    type Item = Triangle;

    fn next(&mut self) -> Option<Triangle> {
        let g = self.grid;
        if self.cell >= g.n_r * g.n_t {
            return None;
        }
        let i = self.cell / g.n_t;
        let j = self.cell % g.n_t;
        let sr = 1.0 / g.dr;
        let tri = if i == 0 && g.kind == GridKind::Ball {
            Triangle {
                nodes: [g.node(0, j), g.node(1, j), g.node(1, j + 1)],
                ..g.pole[self.upper as usize]
            }
        } else if !self.upper {
            let (weight, st) = g.lo[i];
            Triangle {
                nodes: [g.node(i, j), g.node(i + 1, j), g.node(i, j + 1)],
                coef: [[-sr, -st], [sr, 0.0], [0.0, st]],
                weight,
            }
        } else {
            let (weight, st) = g.hi[i];
            Triangle {
                nodes: [g.node(i + 1, j + 1), g.node(i, j + 1), g.node(i + 1, j)],
                coef: [[sr, st], [-sr, 0.0], [0.0, -st]],
                weight,
            }
        };
        if self.upper {
            self.cell += 1;
        }
        self.upper = !self.upper;
        Some(tri)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyp() -> WarpingFunction {
        WarpingFunction::hyperbolic(1.0, 50.0).unwrap()
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(PolarGrid::ball(&hyp(), 2.0, 4, 16).is_err());
        assert!(PolarGrid::ball(&hyp(), 2.0, 16, 15).is_err());
        assert!(PolarGrid::ball(&hyp(), 0.0, 16, 16).is_err());
        assert!(PolarGrid::annulus(&hyp(), 2.0, 1.0, 16, 16).is_err());
        assert!(PolarGrid::ball(&hyp(), 60.0, 16, 16).is_err());
    }

    #[test]
    fn triangle_areas_sum_to_ball_area() {
        let g = PolarGrid::ball(&hyp(), 2.0, 64, 64).unwrap();
        let total: f64 = g.triangles().map(|t| t.weight).sum();
        let exact = 2.0 * PI * (2.0f64.cosh() - 1.0);
        assert!((total - exact).abs() / exact < 1e-12);
    }

    #[test]
    fn gradient_is_exact_for_linear_in_r() {
        let g = PolarGrid::annulus(&hyp(), 1.0, 2.0, 8, 8).unwrap();
        let u: Vec<f64> = (0..g.n_nodes()).map(|n| 3.0 * g.radius(n / g.n_t)).collect();
        for t in g.triangles() {
            let gr = t.gradient(&u);
            assert!((gr[0] - 3.0).abs() < 1e-12 && gr[1].abs() < 1e-12);
        }
    }

    #[test]
    fn dof_layout() {
        let b = PolarGrid::ball(&hyp(), 1.0, 8, 4).unwrap();
        assert_eq!(b.dof(0), Dof::Pole);
        assert_eq!(b.dof(b.node(1, 2)), Dof::Unknown(2));
        assert_eq!(b.dof(b.node(8, 0)), Dof::Fixed);
        let a = PolarGrid::annulus(&hyp(), 1.0, 2.0, 8, 4).unwrap();
        assert_eq!(a.dof(1), Dof::Fixed);
        assert_eq!(a.n_unknowns(), 28);
    }
}
