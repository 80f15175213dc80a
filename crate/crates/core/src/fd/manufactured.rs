//! Closed-form solutions with injected sources for convergence studies.
//!
//! The linearized case uses `z* = e^t sin(pi (x + 1) / 2)` on `[-1, 1]` with
//! `psi_bar = 0`, `h_bar = 1`. Then `z*_x(1, t) = -pi e^t / 2`, and the Stefan
//! ODE gives `k*(t) = k0 + mu pi (e^t - 1)`.
//!
//! The nonlinear case uses `psi* = e^{-t} (1 - x)` on `[0, 1]` with the
//! Neumann control `u = -e^{-t}` and `h* = h0 + 2 mu (1 - e^{-t})`.

use ndarray::Array1;
use serde::Serialize;
use std::f64::consts::PI;

use super::{
    solve_linearized_forward, solve_nonlinear_forward, LinearizedSolution, NonlinearProblem, NonlinearSolution,
};
use crate::model::{Grid, ModelConfig, PerturbationProblem, SpaceTimeField};
use crate::Result;

/// Default data of the linearized manufactured case.
pub const LINEARIZED_K0: f64 = 0.25;
pub const LINEARIZED_MU: f64 = 0.5;
/// Default data of the nonlinear manufactured case.
pub const NONLINEAR_H0: f64 = 0.5;
pub const NONLINEAR_MU: f64 = 0.5;

/// Max-norm errors of a manufactured run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManufacturedErrors {
    /// Spatial intervals.
    pub intervals: usize,
    pub steps: usize,
    pub state: f64,
    pub scalar: f64,
    /// Scalar at `T` computed by the solver.
    pub scalar_final: f64,
}

pub fn linearized_exact_state(x: f64, t: f64) -> f64 {
    t.exp() * (PI * (x + 1.0) / 2.0).sin()
}

pub fn linearized_exact_scalar(t: f64, k0: f64, mu: f64) -> f64 {
    k0 + mu * PI * (t.exp() - 1.0)
}

/// Builds the linearized problem on `intervals` x `steps` over `[0, T]`.
pub fn linearized_case(intervals: usize, steps: usize, final_time: f64) -> Result<PerturbationProblem> {
    let grid = Grid::new(intervals + 1, steps, -1.0, 1.0, final_time)?;
    let z0 = Array1::from_shape_fn(grid.nx, |i| linearized_exact_state(grid.x(i), 0.0));
    let mut problem = PerturbationProblem::homogeneous(grid, LINEARIZED_MU, z0, LINEARIZED_K0, (-0.9, -0.1))?;
    problem.z0[0] = 0.0;
    problem.z0[grid.nx - 1] = 0.0;
    problem.f0 = SpaceTimeField::from_fn(grid, |x, t| PI * PI / 4.0 * linearized_exact_state(x, t));
    Ok(problem)
}

pub fn linearized_errors(problem: &PerturbationProblem, sol: &LinearizedSolution) -> ManufacturedErrors {
    let grid = problem.grid();
    let mut state = 0.0_f64;
    let mut scalar = 0.0_f64;
    for j in 0..=grid.nt {
        let t = grid.t(j);
        scalar = scalar.max((sol.k[j] - linearized_exact_scalar(t, problem.k0, problem.mu)).abs());
        for i in 0..grid.nx {
            state = state.max((sol.z.at(j, i) - linearized_exact_state(grid.x(i), t)).abs());
        }
    }
    ManufacturedErrors { intervals: grid.nx - 1, steps: grid.nt, state, scalar, scalar_final: sol.k[grid.nt] }
}

/// Solves the linearized case and measures its errors.
pub fn run_linearized(
    intervals: usize,
    steps: usize,
    final_time: f64,
) -> Result<(LinearizedSolution, ManufacturedErrors)> {
    let problem = linearized_case(intervals, steps, final_time)?;
    let sol = solve_linearized_forward(&problem, &SpaceTimeField::zeros(problem.grid()))?;
    let errors = linearized_errors(&problem, &sol);
    Ok((sol, errors))
}

pub fn nonlinear_exact_state(x: f64, t: f64) -> f64 {
    (-t).exp() * (1.0 - x)
}

pub fn nonlinear_exact_scalar(t: f64, h0: f64, mu: f64) -> f64 {
    h0 + 2.0 * mu * (1.0 - (-t).exp())
}

pub fn nonlinear_case(intervals: usize, steps: usize, final_time: f64) -> Result<(NonlinearProblem, Grid)> {
    let grid = Grid::new(intervals + 1, steps, 0.0, 1.0, final_time)?;
    let (mu, h0) = (NONLINEAR_MU, NONLINEAR_H0);
    let source = SpaceTimeField::from_fn(grid, |x, t| {
        let (p, h) = (nonlinear_exact_state(x, t), nonlinear_exact_scalar(t, h0, mu));
        let p_x = -(-t).exp();
        let h_prime = 2.0 * mu * (-t).exp();
        -h * p - 0.5 * x * h_prime * p_x - h * p * (1.0 - p)
    });
    let problem = NonlinearProblem {
        config: ModelConfig::new(mu, final_time)?,
        psi0: Array1::from_shape_fn(grid.nx, |i| nonlinear_exact_state(grid.x(i), 0.0)),
        h0,
        control: Array1::from_shape_fn(grid.nt + 1, |j| -(-grid.t(j)).exp()),
        source: Some(source),
    };
    Ok((problem, grid))
}

pub fn run_nonlinear(
    intervals: usize,
    steps: usize,
    final_time: f64,
) -> Result<(NonlinearSolution, ManufacturedErrors)> {
    let (problem, grid) = nonlinear_case(intervals, steps, final_time)?;
    let sol = solve_nonlinear_forward(&problem, grid)?;
    let (mu, h0) = (problem.config.mu, problem.h0);
    let mut state = 0.0_f64;
    let mut scalar = 0.0_f64;
    for j in 0..=grid.nt {
        let t = grid.t(j);
        scalar = scalar.max((sol.h[j] - nonlinear_exact_scalar(t, h0, mu)).abs());
        for i in 0..grid.nx {
            state = state.max((sol.psi.at(j, i) - nonlinear_exact_state(grid.x(i), t)).abs());
        }
    }
    let errors = ManufacturedErrors { intervals, steps, state, scalar, scalar_final: sol.h[grid.nt] };
    Ok((sol, errors))
}

/// `log2` of the ratio between successive errors.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
