//! Extended linearized system on `[-1, 1]`:
//!
//! ```text
//! h_bar z_t - z_xx - (x/2) h_bar' z_x + mu x psi_bar_x z_x(1,t) + m k + n z = f0 + 1_omega v
//! z(-1,t) = z(1,t) = 0,   k' + 2 mu z_x(1,t) = g0
//! ```
//!
//! Each Crank-Nicolson step is linear in `(z^{j+1}, k^{j+1})`. Eliminating
//! `k^{j+1}` through the trapezoidal Stefan update leaves a tridiagonal
//! system plus a rank-one term from the boundary flux, which is solved
//! exactly with Sherman-Morrison.

use ndarray::{Array1, ArrayView1};

use super::{check_finite, right_flux, Tridiagonal};
use crate::model::{PerturbationProblem, SpaceTimeField};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedSolution {
    pub z: SpaceTimeField,
    pub k: Array1<f64>,
    /// `z_x(1, t)` at every time level.
    pub flux_right: Array1<f64>,
}

struct Level<'a> {
    x: &'a [f64],
    dx: f64,
    mu: f64,
    hbp: f64,
    psi_x: ArrayView1<'a, f64>,
    m: ArrayView1<'a, f64>,
    n: ArrayView1<'a, f64>,
}

impl Level<'_> {
    /// Interior rows of `z_xx + (x/2) h_bar' z_x - n z - mu x psi_bar_x F - m k`.
    fn apply(&self, z: ArrayView1<'_, f64>, flux: f64, k: f64) -> Vec<f64> {
        let nx = z.len();
        let (dx, dx2) = (self.dx, self.dx * self.dx);
        (1..nx - 1)
            .map(|i| {
                let xi = self.x[i];
                (z[i + 1] - 2.0 * z[i] + z[i - 1]) / dx2 + 0.5 * xi * self.hbp * (z[i + 1] - z[i - 1]) / (2.0 * dx)
                    - self.n[i] * z[i]
                    - self.mu * xi * self.psi_x[i] * flux
                    - self.m[i] * k
            })
            .collect()
    }
}

/// Solves the linearized extended system with distributed control `v`.
///
/// `v` is sampled on the problem grid; it is multiplied by the indicator of
/// `omega` (nodes strictly inside the interval) before use.
pub fn solve_linearized_forward(problem: &PerturbationProblem, v: &SpaceTimeField) -> Result<LinearizedSolution> {
    let grid = problem.grid();
    if !v.grid.same_shape(&grid) {
        return Err(Error::Shape(format!(
            "control grid {}x{} vs problem grid {}x{}",
            v.grid.nx, v.grid.nt, grid.nx, grid.nt
        )));
    }
    let nx = grid.nx;
    let (dx, dt, mu) = (grid.dx(), grid.dt(), problem.mu);
    let x: Vec<f64> = grid.xs().to_vec();
    let reference = &problem.reference;
    let mask: Vec<f64> = x.iter().map(|&xi| if problem.in_omega(xi) { 1.0 } else { 0.0 }).collect();
    let source = |j: usize, i: usize| problem.f0.at(j, i) + mask[i] * v.at(j, i);
    let level = |j: usize| Level {
        x: &x,
        dx,
        mu,
        hbp: reference.h_bar_prime[j],
        psi_x: reference.psi_bar_x.level(j),
        m: reference.m.level(j),
        n: reference.n.level(j),
    };

    // Flux row over interior unknowns z_1..z_{N-1} (z_N = 0).
    let n_int = nx - 2;
    let mut r = vec![0.0; n_int];
    r[n_int - 1] += -4.0 / (2.0 * dx);
    if n_int >= 2 {
        r[n_int - 2] += 1.0 / (2.0 * dx);
    }

    let mut z = SpaceTimeField::zeros(grid);
    z.values.row_mut(0).assign(&problem.z0);
    z.values[[0, 0]] = 0.0;
    z.values[[0, nx - 1]] = 0.0;
    let mut k = Array1::zeros(grid.nt + 1);
    let mut flux = Array1::zeros(grid.nt + 1);
    k[0] = problem.k0;
    flux[0] = right_flux(z.level(0), dx);

    let mut tri = Tridiagonal::zeros(n_int);
    let mut u = vec![0.0; n_int];
    let mut rhs = vec![0.0; n_int];
    for j in 0..grid.nt {
        let (now, next) = (level(j), level(j + 1));
        let hm = 0.5 * (reference.h_bar[j] + reference.h_bar[j + 1]);
        let explicit = now.apply(z.level(j), flux[j], k[j]);
        let k_known = k[j] + 0.5 * dt * (problem.g0[j] - 2.0 * mu * flux[j] + problem.g0[j + 1]);
        for i in 1..nx - 1 {
            let row = i - 1;
            let adv = 0.5 * x[i] * next.hbp / (2.0 * dx);
            tri.lower[row] = -0.5 * (1.0 / (dx * dx) - adv);
            tri.diag[row] = hm / dt + 1.0 / (dx * dx) + 0.5 * next.n[i];
            tri.upper[row] = -0.5 * (1.0 / (dx * dx) + adv);
            u[row] = 0.5 * mu * x[i] * next.psi_x[i] - 0.5 * next.m[i] * dt * mu;
            rhs[row] = hm / dt * z.at(j, i) + 0.5 * explicit[row] + 0.5 * (source(j, i) + source(j + 1, i))
                - 0.5 * next.m[i] * k_known;
        }
        let interior = tri.solve_rank_one(&u, &r, &rhs)?;
        check_finite(&interior, "linearized state", j + 1)?;
        let mut row = z.values.row_mut(j + 1);
        row[0] = 0.0;
        row[nx - 1] = 0.0;
        for (i, val) in interior.iter().enumerate() {
            row[i + 1] = *val;
        }
        flux[j + 1] = right_flux(z.level(j + 1), dx);
        k[j + 1] =
            k[j] + 0.5 * dt * ((problem.g0[j] - 2.0 * mu * flux[j]) + (problem.g0[j + 1] - 2.0 * mu * flux[j + 1]));
        if !k[j + 1].is_finite() {
            return Err(Error::NonFinite(format!("k at step {}", j + 1)));
        }
    }
    Ok(LinearizedSolution { z, k, flux_right: flux })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Grid, ReferenceTrajectory};
    use std::f64::consts::PI;

    fn manufactured(nx: usize, nt: usize) -> (f64, f64) {
        let grid = Grid::new(nx, nt, -1.0, 1.0, 1.0).unwrap();
        let exact = |x: f64, t: f64| t.exp() * (PI * (x + 1.0) / 2.0).sin();
        let z0 = Array1::from_shape_fn(nx, |i| exact(grid.x(i), 0.0));
        let mut problem = PerturbationProblem::homogeneous(grid, 0.5, z0, 0.25, (-0.9, -0.1)).unwrap();
        problem.f0 = SpaceTimeField::from_fn(grid, |x, t| PI * PI / 4.0 * exact(x, t));
        let sol = solve_linearized_forward(&problem, &SpaceTimeField::zeros(grid)).unwrap();
        let mut err = 0.0_f64;
        for j in 0..=nt {
            for i in 0..nx {
                err = err.max((sol.z.at(j, i) - exact(grid.x(i), grid.t(j))).abs());
            }
        }
        let k_exact = 0.25 + PI / 2.0 * (1f64.exp() - 1.0);
        (err, (sol.k[nt] - k_exact).abs())
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = Grid::new(41, 20, -1.0, 1.0, 1.0).unwrap();
        let p = PerturbationProblem::homogeneous(grid, 0.5, Array1::zeros(41), 0.0, (-0.9, -0.1)).unwrap();
        let s = solve_linearized_forward(&p, &SpaceTimeField::zeros(grid)).unwrap();
        assert_eq!(s.z.max_abs(), 0.0);
        assert!(s.k.iter().all(|&k| k == 0.0));
    }

    #[test]
    fn manufactured_second_order() {
        let (e1, k1) = manufactured(51, 100);
        let (e2, k2) = manufactured(101, 200);
        assert!((e1 / e2) > 3.0 && (e1 / e2) < 5.0, "state ratio {}", e1 / e2);
        assert!((k1 / k2) > 3.0 && (k1 / k2) < 5.0, "k ratio {}", k1 / k2);
    }

    #[test]
    fn stefan_update_is_trapezoidal() {
        let grid = Grid::new(41, 40, -1.0, 1.0, 1.0).unwrap();
        let z0 = Array1::from_shape_fn(41, |i| (PI * grid.x(i)).sin());
        let mut p = PerturbationProblem::homogeneous(grid, 0.5, z0, -0.5, (-0.9, -0.1)).unwrap();
        p.g0 = Array1::from_shape_fn(grid.nt + 1, |j| (3.0 * grid.t(j)).cos());
        let v = SpaceTimeField::from_fn(grid, |x, t| (x + 0.5) * t);
        let s = solve_linearized_forward(&p, &v).unwrap();
        let dt = grid.dt();
        for j in 0..grid.nt {
            let rate = |j: usize| p.g0[j] - 2.0 * p.mu * s.flux_right[j];
            let defect = s.k[j + 1] - s.k[j] - 0.5 * dt * (rate(j) + rate(j + 1));
            assert!(defect.abs() <= 1e-12, "step {j}: {defect:e}");
        }
        assert_eq!(s.z.values.column(0).iter().fold(0.0_f64, |m, v| m.max(v.abs())), 0.0);
        assert_eq!(s.z.values.column(40).iter().fold(0.0_f64, |m, v| m.max(v.abs())), 0.0);
    }

    #[test]
    fn nonconstant_reference_converges() {
        // Time-varying h_bar and psi_bar exercise every coefficient.
        let run = |nx: usize, nt: usize| {
            let grid = Grid::new(nx, nt, -1.0, 1.0, 1.0).unwrap();
            let psi = SpaceTimeField::from_fn(grid, |x, t| 0.2 * (1.0 - x * x) * (1.0 + t));
            let h = Array1::from_shape_fn(nt + 1, |j| 1.0 + 0.3 * grid.t(j));
            let reference = ReferenceTrajectory::from_state(psi, h, Array1::zeros(nt + 1)).unwrap();
            let z0 = Array1::from_shape_fn(nx, |i| (PI * grid.x(i)).sin());
            let p = PerturbationProblem::new(
                0.5,
                z0,
                0.1,
                SpaceTimeField::zeros(grid),
                Array1::zeros(nt + 1),
                (-0.9, -0.1),
                reference,
            )
            .unwrap();
            let s = solve_linearized_forward(&p, &SpaceTimeField::zeros(grid)).unwrap();
            (s.z.level(nt).to_vec(), s.k[nt])
        };
        let (z1, k1) = run(41, 40);
        let (z2, k2) = run(81, 80);
        let (z3, k3) = run(161, 160);
        let diff =
            |a: &[f64], b: &[f64]| a.iter().zip(b.iter().step_by(2)).fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()));
        let ratio = diff(&z1, &z2) / diff(&z2, &z3);
        assert!(ratio > 3.0, "self-convergence ratio {ratio}");
        assert!(((k1 - k2) / (k2 - k3)).abs() > 3.0);
    }
}
