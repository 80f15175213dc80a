//! Transposition identity between the linearized system and its adjoint.
//!
//! For a forward solution `(z, k)` driven by `(z0, k0, f0, g0, v)` and an
//! adjoint solution `(w, theta)` driven by `(f1, g1, w_T, theta_T)`:
//!
//! ```text
//! int z f1 + int k g1 + int h_bar(T) z(T) w_T + k(T) theta_T
//!   = int 1_omega v w + int f0 w + int g0 theta + h_bar(0) int z0 w(0) + k0 theta(0)
//! ```
//!
//! With zero terminal data the two terminal terms vanish. Every integral is
//! evaluated with the trapezoidal rule on the common grid.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{solve_adjoint, solve_linearized_forward, AdjointSolution, LinearizedSolution};
use crate::model::{trapezoid, trapezoid_2d, Grid, PerturbationProblem, ReferenceTrajectory, SpaceTimeField};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityTerms {
    pub lhs: f64,
    pub rhs: f64,
}

impl DualityTerms {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

fn pointwise(a: &SpaceTimeField, b: &SpaceTimeField) -> SpaceTimeField {
    SpaceTimeField { grid: a.grid, values: &a.values * &b.values }
}

pub fn duality_terms(
    fwd: &LinearizedSolution,
    adj: &AdjointSolution,
    problem: &PerturbationProblem,
    v: &SpaceTimeField,
) -> Result<DualityTerms> {
    let grid = problem.grid();
    for (name, g) in [("forward", fwd.z.grid), ("adjoint", adj.w.grid), ("control", v.grid)] {
        if !g.same_shape(&grid) {
            return Err(Error::Shape(format!("{name} grid {}x{} differs from problem grid", g.nx, g.nt)));
        }
    }
    let (dx, dt, last) = (grid.dx(), grid.dt(), grid.nt);
    let h_bar = &problem.reference.h_bar;

    let lhs = trapezoid_2d(&pointwise(&fwd.z, &adj.f1))
        + trapezoid(fwd.k.iter().zip(adj.g1.iter()).map(|(k, g)| k * g), dt)
        + h_bar[last] * trapezoid(fwd.z.level(last).iter().zip(adj.w_terminal.iter()).map(|(z, w)| z * w), dx)
        + fwd.k[last] * adj.theta_terminal;

    let masked = SpaceTimeField::from_fn(grid, |x, _| if problem.in_omega(x) { 1.0 } else { 0.0 });
    let rhs = trapezoid_2d(&pointwise(&pointwise(&masked, v), &adj.w))
        + trapezoid_2d(&pointwise(&problem.f0, &adj.w))
        + trapezoid(problem.g0.iter().zip(adj.theta.iter()).map(|(g, t)| g * t), dt)
        + h_bar[0] * trapezoid(problem.z0.iter().zip(adj.w.level(0).iter()).map(|(z, w)| z * w), dx)
        + problem.k0 * adj.theta[0];
    Ok(DualityTerms { lhs, rhs })
}

pub fn duality_residual(
    fwd: &LinearizedSolution,
    adj: &AdjointSolution,
    problem: &PerturbationProblem,
    v: &SpaceTimeField,
) -> Result<f64> {
    duality_terms(fwd, adj, problem, v).map(|t| t.residual())
}

/// Smooth pseudo-random forward and adjoint data on a given grid.
///
/// The reference trajectory is nontrivial (`psi_bar`, `h_bar` depend on
/// `x` and `t`) so every coupling term of both systems is exercised. The
/// control is a bump vanishing on the boundary of `omega`; adjoint terminal
/// data are zero.
#[derive(Debug, Clone)]
pub struct SmoothCase {
    pub problem: PerturbationProblem,
    pub control: SpaceTimeField,
    pub f1: SpaceTimeField,
    pub g1: Array1<f64>,
}

impl SmoothCase {
    pub const OMEGA: (f64, f64) = (-0.9, -0.1);

    pub fn generate(grid: Grid, mu: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let (cz, ck, cf, cg, cv, cf1, cg1) =
            (coeffs(3), coeffs(1), coeffs(4), coeffs(3), coeffs(2), coeffs(4), coeffs(3));
        let mode = |k: usize, x: f64| (k as f64 * std::f64::consts::PI * (x + 1.0) / 2.0).sin();
        let (a, b) = Self::OMEGA;

        let psi_bar = SpaceTimeField::from_fn(grid, |x, t| 0.2 * (1.0 - x * x) * (1.0 + 0.5 * t));
        let h_bar = Array1::from_shape_fn(grid.nt + 1, |j| 1.0 + 0.25 * grid.t(j));
        let reference = ReferenceTrajectory::from_state(psi_bar, h_bar, Array1::zeros(grid.nt + 1))?;

        let mut z0 = Array1::from_shape_fn(grid.nx, |i| (1..=3).map(|k| cz[k - 1] * mode(k, grid.x(i))).sum());
        z0[0] = 0.0;
        z0[grid.nx - 1] = 0.0;
        let f0 = SpaceTimeField::from_fn(grid, |x, t| {
            cf[0] * mode(1, x) * t.cos() + cf[1] * mode(2, x) * t + cf[2] * x * (1.0 + t) + cf[3]
        });
        let g0 = Array1::from_shape_fn(grid.nt + 1, |j| {
            let t = grid.t(j);
            cg[0] + cg[1] * t + cg[2] * (2.0 * t).sin()
        });
        let control = SpaceTimeField::from_fn(grid, |x, t| {
            if x > a && x < b {
                (std::f64::consts::PI * (x - a) / (b - a)).sin().powi(2) * (cv[0] + cv[1] * t)
            } else {
                0.0
            }
        });
        let f1 = SpaceTimeField::from_fn(grid, |x, t| {
            cf1[0] * mode(1, x) + cf1[1] * mode(3, x) * (1.0 - t) + cf1[2] * x * t + cf1[3]
        });
        let g1 = Array1::from_shape_fn(grid.nt + 1, |j| {
            let t = grid.t(j);
            cg1[0] + cg1[1] * t * t + cg1[2] * t.cos()
        });
        let problem = PerturbationProblem::new(mu, z0, ck[0], f0, g0, Self::OMEGA, reference)?;
        Ok(Self { problem, control, f1, g1 })
    }

    pub fn residual(&self) -> Result<f64> {
        let grid = self.problem.grid();
        let fwd = solve_linearized_forward(&self.problem, &self.control)?;
        let adj =
            solve_adjoint(&self.problem.reference, self.problem.mu, &self.f1, &self.g1, &Array1::zeros(grid.nx), 0.0)?;
        duality_residual(&fwd, &adj, &self.problem, &self.control)
    }
}

/// Duality residual of [`SmoothCase`] on `[-1, 1] x [0, T]` for each listed
/// number of spatial intervals (`nt = 2 * intervals`).
pub fn duality_refinement_study(intervals: &[usize], mu: f64, final_time: f64, seed: u64) -> Result<Vec<(usize, f64)>> {
    intervals
        .iter()
        .map(|&n| {
            let grid = Grid::new(n + 1, 2 * n, -1.0, 1.0, final_time)?;
            SmoothCase::generate(grid, mu, seed)?.residual().map(|r| (n, r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_data_residual_is_exactly_zero() {
        let g = Grid::new(41, 40, -1.0, 1.0, 1.0).unwrap();
        let p = PerturbationProblem::homogeneous(g, 0.5, Array1::zeros(41), 0.0, (-0.9, -0.1)).unwrap();
        let v = SpaceTimeField::zeros(g);
        let fwd = solve_linearized_forward(&p, &v).unwrap();
        let adj =
            solve_adjoint(&p.reference, 0.5, &SpaceTimeField::zeros(g), &Array1::zeros(41), &Array1::zeros(41), 0.0)
                .unwrap();
        assert_eq!(duality_residual(&fwd, &adj, &p, &v).unwrap(), 0.0);
    }

    #[test]
    fn residual_converges_under_refinement() {
        let study = duality_refinement_study(&[50, 100, 200], 0.5, 1.0, 7).unwrap();
        for pair in study.windows(2) {
            let ratio = pair[0].1 / pair[1].1;
            assert!(ratio >= 1.8, "ratio {ratio} from {:?}", study);
        }
    }

    #[test]
    fn manufactured_pair_with_terminal_data() {
        let g = Grid::new(201, 400, -1.0, 1.0, 1.0).unwrap();
        let mu = 0.5;
        let z_exact = |x: f64, t: f64| t.exp() * (PI * (x + 1.0) / 2.0).sin();
        let z0 = Array1::from_shape_fn(g.nx, |i| z_exact(g.x(i), 0.0));
        let mut p = PerturbationProblem::homogeneous(g, mu, z0, 0.3, (-0.9, -0.1)).unwrap();
        p.f0 = SpaceTimeField::from_fn(g, |x, t| PI * PI / 4.0 * z_exact(x, t));
        let v = SpaceTimeField::zeros(g);
        let fwd = solve_linearized_forward(&p, &v).unwrap();

        let theta_t = 0.8;
        let f1 = SpaceTimeField::from_fn(g, |x, _| -theta_t * (1.0 + x) / 2.0);
        let w_t = Array1::from_shape_fn(g.nx, |i| theta_t * (1.0 + g.x(i)) / 2.0);
        let adj = solve_adjoint(&p.reference, mu, &f1, &Array1::zeros(g.nt + 1), &w_t, theta_t).unwrap();
        let r = duality_residual(&fwd, &adj, &p, &v).unwrap();
        assert!(r <= 1e-3, "residual {r}");
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let g = Grid::new(21, 20, -1.0, 1.0, 1.0).unwrap();
        let other = Grid::new(41, 20, -1.0, 1.0, 1.0).unwrap();
        let case = SmoothCase::generate(g, 0.5, 1).unwrap();
        let fwd = solve_linearized_forward(&case.problem, &case.control).unwrap();
        let adj = solve_adjoint(&case.problem.reference, 0.5, &case.f1, &case.g1, &Array1::zeros(21), 0.0).unwrap();
        let bad = SpaceTimeField::zeros(other);
        assert!(matches!(duality_terms(&fwd, &adj, &case.problem, &bad), Err(Error::Shape(_))));
    }
}
