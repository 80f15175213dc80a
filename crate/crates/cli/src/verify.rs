//! Feeds a control into the finite-difference solvers and measures how close
//! the terminal state comes to the target.

use std::time::Instant;

use anyhow::{Context, Result};
use fisher_stefan::fd::{
    solve_linearized_forward, solve_nonlinear_forward, LinearizedSolution, NonlinearProblem, NonlinearSolution,
};
use fisher_stefan::model::{Grid, ModelConfig, PerturbationProblem, SpaceTimeField};
use fisher_stefan::pinn::{FreeBoundarySpec, LinearizedSpec};
use ndarray::Array1;
use serde::Serialize;

use crate::config::ProblemKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub problem: ProblemKind,
    pub intervals: usize,
    pub steps: usize,
    /// `max |z(., T)|` or `max |psi(., T)|`.
    pub terminal_state_norm: f64,
    /// `|k(T)|` or `|h(T) - h_target|`.
    pub terminal_scalar_err: f64,
    /// Smallest state value on the physical part of the domain, `x in [0, 1]`.
    pub min_density: f64,
    /// `max |z0|` or `max |psi0|` on the grid.
    pub initial_state_norm: f64,
    pub runtime_seconds: f64,
}

/// Linearized system with `psi_bar = 0`, `h_bar = 1` driven by `1_omega v`.
pub fn linearized_problem(spec: &LinearizedSpec, intervals: usize, steps: usize) -> Result<PerturbationProblem> {
    let grid = Grid::new(intervals + 1, steps, -1.0, 1.0, spec.final_time)?;
    let mut z0 = grid.xs().mapv(|x| spec.z0.value(x));
    z0[0] = 0.0;
    z0[grid.nx - 1] = 0.0;
    Ok(PerturbationProblem::homogeneous(grid, spec.mu, z0, spec.k0, spec.omega)?)
}

pub fn verify_linearized(
    spec: &LinearizedSpec,
    control: impl Fn(f64, f64) -> f64,
    intervals: usize,
    steps: usize,
) -> Result<(VerificationReport, LinearizedSolution)> {
    verify_linearized_problem(&linearized_problem(spec, intervals, steps)?, control)
}

/// Runs the linearized solver on explicit problem data.
pub fn verify_linearized_problem(
    problem: &PerturbationProblem,
    control: impl Fn(f64, f64) -> f64,
) -> Result<(VerificationReport, LinearizedSolution)> {
    let start = Instant::now();
    let grid = problem.grid();
    let v = SpaceTimeField::from_fn(grid, control);
    let sol = solve_linearized_forward(problem, &v).context("linearized verification solve")?;
    let physical = (0..grid.nx).filter(|&i| grid.x(i) >= 0.0).collect::<Vec<_>>();
    let min_density = sol
        .z
        .values
        .rows()
        .into_iter()
        .flat_map(|row| physical.iter().map(move |&i| row[i]))
        .fold(f64::INFINITY, f64::min);
    let report = VerificationReport {
        problem: ProblemKind::Experiment1,
        intervals: grid.nx - 1,
        steps: grid.nt,
        terminal_state_norm: sol.z.max_abs_at_level(grid.nt),
        terminal_scalar_err: sol.k[grid.nt].abs(),
        min_density,
        initial_state_norm: problem.z0.iter().fold(0.0, |m, v| m.max(v.abs())),
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((report, sol))
}

pub fn free_boundary_problem(
    spec: &FreeBoundarySpec,
    control: impl Fn(f64) -> f64,
    intervals: usize,
    steps: usize,
) -> Result<(NonlinearProblem, Grid)> {
    let grid = Grid::new(intervals + 1, steps, 0.0, 1.0, spec.final_time)?;
    let mut psi0 = grid.xs().mapv(|x| spec.psi0.value(x));
    psi0[grid.nx - 1] = 0.0;
    let problem = NonlinearProblem {
        config: ModelConfig::new(spec.mu, spec.final_time)?,
        psi0,
        h0: spec.h0,
        control: Array1::from_shape_fn(grid.nt + 1, |j| control(grid.t(j))),
        source: None,
    };
    Ok((problem, grid))
}

pub fn verify_free_boundary(
    spec: &FreeBoundarySpec,
    control: impl Fn(f64) -> f64,
    intervals: usize,
    steps: usize,
) -> Result<(VerificationReport, NonlinearSolution)> {
    let start = Instant::now();
    let (problem, grid) = free_boundary_problem(spec, control, intervals, steps)?;
    let sol = solve_nonlinear_forward(&problem, grid).context("nonlinear verification solve")?;
    let report = VerificationReport {
        problem: ProblemKind::Experiment2,
        intervals,
        steps,
        terminal_state_norm: sol.psi.max_abs_at_level(grid.nt),
        terminal_scalar_err: (sol.h[grid.nt] - spec.h_target).abs(),
        min_density: sol.psi.min(),
        initial_state_norm: problem.psi0.iter().fold(0.0, |m, v| m.max(v.abs())),
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((report, sol))
}
