//! Controls for the Fisher-Stefan free-boundary problem.
//!
//! The crate is split into the pieces a control study needs:
//!
//! * [`model`]: domain types, the front-fixing change of variables and the
//!   coefficients of the perturbation system around a reference trajectory.
//! * [`fd`]: Crank-Nicolson solvers for the nonlinear fixed-domain system,
//!   the extended linearized system and its adjoint, plus the transposition
//!   (duality) residual. These are the independent oracles.
//! * [`carleman`]: the auxiliary function `eta` and the Carleman weight
//!   families, evaluated as numeric diagnostics.
//! * [`neural`]: a small tanh multilayer perceptron with exact input
//!   derivatives up to second order, reverse-mode parameter gradients,
//!   Glorot initialization and ADAM.
//! * [`pinn`]: collocation sampling, the eight-term control loss and the
//!   training loop.
//!
//! Data-parallel loops (collocation batches) go through [`exec::ExecPolicy`].
//! With the `parallel` feature (on by default) they run on rayon; otherwise
//! they run sequentially. Both paths reduce partial results in a fixed order,
//! so the numbers are bit-identical either way.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod carleman;
pub mod error;
pub mod exec;
pub mod fd;
pub mod model;
pub mod neural;
pub mod pinn;

pub use error::{Error, Result};
pub use exec::ExecPolicy;
