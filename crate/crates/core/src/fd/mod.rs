//! Crank-Nicolson solvers used as independent oracles.
//!
//! * [`solve_nonlinear_forward`]: the fixed-domain Fisher-Stefan system on
//!   `[0, 1]` with a Neumann control at `x = 0`.
//! * [`solve_linearized_forward`]: the extended linear system on `[-1, 1]`
//!   with a distributed control on `omega`.
//! * [`solve_adjoint`]: the backward adjoint system with its nonlocal right
//!   boundary condition.
//! * [`duality_residual`]: the transposition identity pairing the two.
//!
//! Boundary fluxes are extracted with the second-order one-sided stencil
//! `(3 u_N - 4 u_{N-1} + u_{N-2}) / (2 dx)` and drive the Stefan ODE through
//! the trapezoidal rule.

mod adjoint;
mod duality;
mod linearized;
pub mod manufactured;
mod nonlinear;
mod tridiag;

pub use adjoint::{boundary_tie_residual, solve_adjoint, AdjointSolution};
pub use duality::{duality_refinement_study, duality_residual, duality_terms, DualityTerms, SmoothCase};
pub use linearized::{solve_linearized_forward, LinearizedSolution};
pub use nonlinear::{solve_nonlinear_forward, NonlinearProblem, NonlinearSolution};
pub use tridiag::Tridiagonal;

use ndarray::ArrayView1;

/// One-sided second-order derivative at the right end of a row.
pub(crate) fn right_flux(row: ArrayView1<'_, f64>, dx: f64) -> f64 {
    let n = row.len();
    (3.0 * row[n - 1] - 4.0 * row[n - 2] + row[n - 3]) / (2.0 * dx)
}

/// One-sided second-order derivative at the left end of a row.
pub(crate) fn left_flux(row: ArrayView1<'_, f64>, dx: f64) -> f64 {
    (-3.0 * row[0] + 4.0 * row[1] - row[2]) / (2.0 * dx)
}

pub(crate) fn check_finite(values: &[f64], what: &str, step: usize) -> crate::Result<()> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(crate::Error::NonFinite(format!("{what} at step {step}, node {i}")));
    }
    Ok(())
}
