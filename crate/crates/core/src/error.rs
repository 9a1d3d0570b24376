use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A value lies outside the range of an invertible map.
    #[error("range error: {0}")]
    Range(String),

    /// A precondition of the operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The adaptive ODE integrator failed or violated its monitored invariant.
    #[error("integrator failure: {reason} (worst residual {worst_residual:e})")]
    Integrator { reason: String, worst_residual: f64 },

    /// Barrier constant calibration found no admissible constant.
    #[error("calibration failed: {reason} (largest g(0) reached {best_g0})")]
    Calibration { reason: String, best_g0: f64 },

    /// The supersolution residual is positive beyond tolerance.
    #[error("verification failed at s = {location}: residual {residual:e}")]
    Verification { location: f64, residual: f64 },

    /// A nonlinear or linear solve did not converge.
    #[error("nonconvergence after {iterations} iterations: residual {residual:e}")]
    NonConvergence { iterations: usize, residual: f64 },

    /// Radial boundary data cannot be matched with an admissible flux.
    #[error("infeasible radial problem: {0}")]
    Infeasible(String),

    /// Two discrete objects do not live on the same grid.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A search over a bounded grid ran past its cap.
    #[error("search exhausted: {0}")]
    Search(String),

    /// Malformed arithmetic expression.
    #[error("expression error at offset {offset}: {message}")]
    Expression { offset: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
