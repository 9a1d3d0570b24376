//! Numerical laboratory for asymptotic Dirichlet problems of quasilinear
//! operators `div(a(|∇u|) ∇u / |∇u|)` on rotationally symmetric Hadamard
//! manifolds.
//!
//! The crate is organized bottom-up:
//!
//! * [`operator`]: the profile `a` and its structural conditions.
//! * [`manifold`]: warping functions, curvature and volume growth.
//! * [`barrier`]: the barrier integral `g`, constant calibration and `Σ`.
//! * [`sc_geometry`]: the hypersurfaces `S_R` and their convexity.
//! * [`exhaustion`]: the scalar skeleton of the convex exhaustion.
//! * [`solver`]: discrete Dirichlet solves on polar grids.
//!
//! ```
//! use hadamard_dirichlet::operator::AProfile;
//!
//! let minimal = AProfile::minimal();
//! let s = minimal.inverse(0.6).unwrap();
//! assert!((s - 0.75).abs() < 1e-15);
//! ```

pub mod barrier;
pub mod error;
pub mod exhaustion;
pub mod expr;
pub mod manifold;
pub mod ode;
pub mod operator;
pub mod quadrature;
pub mod sc_geometry;
pub mod solver;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/operator.md")]
    mod operator {}
    #[doc = include_str!("../../../book/src/manifold.md")]
    mod manifold {}
    #[doc = include_str!("../../../book/src/barrier.md")]
    mod barrier {}
    #[doc = include_str!("../../../book/src/sc_geometry.md")]
    mod sc_geometry {}
    #[doc = include_str!("../../../book/src/exhaustion.md")]
    mod exhaustion {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
}
