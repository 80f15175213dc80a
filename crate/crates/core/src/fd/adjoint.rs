//! Backward adjoint system on `[-1, 1]`:
//!
//! ```text
//! -(h_bar w)_t - w_xx + (h_bar'/2)(x w)_x + n w = f1
//! w(-1,t) = 0,   w(1,t) = mu * int x psi_bar_x w dx + 2 mu theta
//! -theta' + int m w dx = g1
//! ```
//!
//! Expanded, the PDE reads `-h_bar w_t = f1 + w_xx - (x h_bar'/2) w_x - (n - h_bar'/2) w`,
//! which is marched from `t = T` down to `t = 0` with Crank-Nicolson.
//!
//! Per step the interior values are affine in the unknown boundary value
//! `s = w(1)`: `w = Y + s P`. Two Thomas solves give `Y` and `P`; the
//! nonlocal condition and the trapezoidal `theta` update then reduce to one
//! scalar linear equation for `s`.

use ndarray::{Array1, ArrayView1};

use super::{check_finite, Tridiagonal};
use crate::model::{trapezoid, ReferenceTrajectory, SpaceTimeField};
use crate::{Error, Result};

const COMPATIBILITY_TOL: f64 = 1e-8;
const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointSolution {
    pub w: SpaceTimeField,
    pub theta: Array1<f64>,
    pub w_terminal: Array1<f64>,
    pub theta_terminal: f64,
    pub f1: SpaceTimeField,
    pub g1: Array1<f64>,
}

/// Residual of the nonlocal right boundary condition for a single profile.
pub fn boundary_tie_residual(
    w: ArrayView1<'_, f64>,
    theta: f64,
    x: &[f64],
    psi_bar_x: ArrayView1<'_, f64>,
    mu: f64,
    dx: f64,
) -> f64 {
    let nonlocal = trapezoid((0..w.len()).map(|i| x[i] * psi_bar_x[i] * w[i]), dx);
    w[w.len() - 1] - mu * nonlocal - 2.0 * mu * theta
}

/// Applies `w_xx - (x h_bar'/2) w_x - (n - h_bar'/2) w` at interior nodes.
fn apply(w: ArrayView1<'_, f64>, x: &[f64], dx: f64, hbp: f64, n: ArrayView1<'_, f64>) -> Vec<f64> {
    let dx2 = dx * dx;
    (1..w.len() - 1)
        .map(|i| {
            (w[i + 1] - 2.0 * w[i] + w[i - 1]) / dx2
                - 0.25 * x[i] * hbp * (w[i + 1] - w[i - 1]) / dx
                - (n[i] - 0.5 * hbp) * w[i]
        })
        .collect()
}

pub fn solve_adjoint(
    reference: &ReferenceTrajectory,
    mu: f64,
    f1: &SpaceTimeField,
    g1: &Array1<f64>,
    w_terminal: &Array1<f64>,
    theta_terminal: f64,
) -> Result<AdjointSolution> {
    let grid = reference.grid();
    let nx = grid.nx;
    if !f1.grid.same_shape(&grid) || g1.len() != grid.nt + 1 || w_terminal.len() != nx {
        return Err(Error::Shape(format!(
            "adjoint data shapes f1 {}x{}, g1 {}, w_T {} do not match grid {}x{}",
            f1.grid.nx,
            f1.grid.nt,
            g1.len(),
            w_terminal.len(),
            nx,
            grid.nt
        )));
    }
    let (dx, dt) = (grid.dx(), grid.dt());
    let x: Vec<f64> = grid.xs().to_vec();
    let last = grid.nt;

    if w_terminal[0].abs() > COMPATIBILITY_TOL {
        return Err(Error::Compatibility(format!("w_T(-1) = {:e} must vanish", w_terminal[0])));
    }
    let tie = boundary_tie_residual(w_terminal.view(), theta_terminal, &x, reference.psi_bar_x.level(last), mu, dx);
    if tie.abs() > COMPATIBILITY_TOL {
        return Err(Error::Compatibility(format!("terminal boundary tie violated by {tie:e}")));
    }

    let mut w = SpaceTimeField::zeros(grid);
    w.values.row_mut(last).assign(w_terminal);
    let mut theta = Array1::zeros(grid.nt + 1);
    theta[last] = theta_terminal;

    let n_int = nx - 2;
    let mut tri = Tridiagonal::zeros(n_int);
    let mut rhs = vec![0.0; n_int];
    let mut unit = vec![0.0; n_int];
    for j in (0..last).rev() {
        let (hbp_now, hbp_next) = (reference.h_bar_prime[j], reference.h_bar_prime[j + 1]);
        let hm = 0.5 * (reference.h_bar[j] + reference.h_bar[j + 1]);
        let n_now = reference.n.level(j);
        let later = w.level(j + 1).to_owned();
        let explicit = apply(later.view(), &x, dx, hbp_next, reference.n.level(j + 1));
        for i in 1..nx - 1 {
            let row = i - 1;
            let adv = 0.25 * x[i] * hbp_now / dx;
            tri.lower[row] = -0.5 * (1.0 / (dx * dx) + adv);
            tri.diag[row] = hm / dt + 1.0 / (dx * dx) + 0.5 * (n_now[i] - 0.5 * hbp_now);
            tri.upper[row] = -0.5 * (1.0 / (dx * dx) - adv);
            rhs[row] = hm / dt * later[i] + 0.5 * explicit[row] + 0.5 * (f1.at(j, i) + f1.at(j + 1, i));
        }
        let coupling = tri.upper[n_int - 1];
        tri.upper[n_int - 1] = 0.0;
        unit.fill(0.0);
        unit[n_int - 1] = coupling;
        let y = tri.solve(&rhs)?;
        let q = tri.solve(&unit)?;

        // Affine profiles: w = base + s * dir.
        let mut base = Array1::zeros(nx);
        let mut dir = Array1::zeros(nx);
        for row in 0..n_int {
            base[row + 1] = y[row];
            dir[row + 1] = -q[row];
        }
        dir[nx - 1] = 1.0;

        let psi_x = reference.psi_bar_x.level(j);
        let m_now = reference.m.level(j);
        let weighted = |prof: &Array1<f64>, c: ArrayView1<'_, f64>, with_x: bool| {
            trapezoid((0..nx).map(|i| if with_x { x[i] } else { 1.0 } * c[i] * prof[i]), dx)
        };
        let (a_c, b_c) = (weighted(&base, psi_x, true), weighted(&dir, psi_x, true));
        let (a_m, b_m) = (weighted(&base, m_now, false), weighted(&dir, m_now, false));
        let m_later = trapezoid((0..nx).map(|i| reference.m.at(j + 1, i) * later[i]), dx);
        let theta_known = theta[j + 1] - 0.5 * dt * (-g1[j] + m_later - g1[j + 1]);

        let coef = 1.0 - mu * b_c + mu * dt * b_m;
        if coef.abs() < SINGULAR_TOL {
            return Err(Error::Singular(format!("adjoint boundary closure at step {j}: coefficient {coef:e}")));
        }
        let s = (mu * a_c + 2.0 * mu * theta_known - mu * dt * a_m) / coef;
        let profile = &base + &(s * &dir);
        check_finite(profile.as_slice().expect("contiguous"), "adjoint state", j)?;
        theta[j] = theta_known - 0.5 * dt * (a_m + s * b_m);
        w.values.row_mut(j).assign(&profile);
    }
    Ok(AdjointSolution { w, theta, w_terminal: w_terminal.clone(), theta_terminal, f1: f1.clone(), g1: g1.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grid;
    use std::f64::consts::PI;

    fn grid(nx: usize, nt: usize) -> Grid {
        Grid::new(nx, nt, -1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = grid(41, 40);
        let r = ReferenceTrajectory::trivial(g);
        let s = solve_adjoint(&r, 0.5, &SpaceTimeField::zeros(g), &Array1::zeros(41), &Array1::zeros(41), 0.0).unwrap();
        assert_eq!(s.w.max_abs(), 0.0);
        assert!(s.theta.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn steady_linear_profile_is_reproduced() {
        let g = grid(201, 400);
        let r = ReferenceTrajectory::trivial(g);
        let theta_t = 0.8;
        let f1 = SpaceTimeField::from_fn(g, |x, _| -theta_t * (1.0 + x) / 2.0);
        let w_t = Array1::from_shape_fn(g.nx, |i| theta_t * (1.0 + g.x(i)) / 2.0);
        let s = solve_adjoint(&r, 0.5, &f1, &Array1::zeros(g.nt + 1), &w_t, theta_t).unwrap();
        for j in 0..=g.nt {
            for i in 0..g.nx {
                assert!((s.w.at(j, i) - w_t[i]).abs() < 1e-10);
            }
            assert!((s.theta[j] - theta_t).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_constant_when_m_vanishes() {
        let g = grid(51, 50);
        let r = ReferenceTrajectory::trivial(g);
        let f1 = SpaceTimeField::from_fn(g, |x, t| (PI * x).sin() * t);
        let s = solve_adjoint(&r, 0.5, &f1, &Array1::zeros(g.nt + 1), &Array1::zeros(g.nx), 0.0).unwrap();
        assert!(s.w.max_abs() > 1e-3);
        assert!(s.theta.iter().all(|t| t.abs() < 1e-14));
        assert!(s.w.values.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn boundary_tie_holds_at_every_level() {
        let g = grid(81, 80);
        let psi_bar = SpaceTimeField::from_fn(g, |x, t| 0.2 * (1.0 - x * x) * (1.0 + t));
        let h_bar = Array1::from_shape_fn(g.nt + 1, |j| 1.0 + 0.3 * g.t(j));
        let r = ReferenceTrajectory::from_state(psi_bar, h_bar, Array1::zeros(g.nt + 1)).unwrap();
        let f1 = SpaceTimeField::from_fn(g, |x, t| (1.0 + x) * (2.0 - t));
        let g1 = Array1::from_shape_fn(g.nt + 1, |j| g.t(j).cos());
        let s = solve_adjoint(&r, 0.5, &f1, &g1, &Array1::zeros(g.nx), 0.0).unwrap();
        let x = g.xs().to_vec();
        for j in 0..=g.nt {
            let res = boundary_tie_residual(s.w.level(j), s.theta[j], &x, r.psi_bar_x.level(j), 0.5, g.dx());
            assert!(res.abs() < 1e-11, "level {j}: {res}");
        }
    }

    #[test]
    fn manufactured_time_dependent_second_order() {
        // With psi_bar = 0 the tie reads w(1) = 2 mu theta and theta' = -g1.
        let run = |nx: usize, nt: usize| {
            let g = grid(nx, nt);
            let r = ReferenceTrajectory::trivial(g);
            let mu = 0.5;
            let exact = |x: f64, t: f64| (t - 1.0).exp() * ((1.0 + x) / 2.0 + 0.3 * (PI * x).sin());
            // -w_t - w_xx - w = f1 with n = -1; theta = w(1)/(2 mu).
            let f1 = SpaceTimeField::from_fn(g, |x, t| {
                let w = exact(x, t);
                let w_xx = -(t - 1.0).exp() * 0.3 * PI * PI * (PI * x).sin();
                -w - w_xx - w
            });
            let theta = |t: f64| (t - 1.0).exp() / (2.0 * mu);
            let g1 = Array1::from_shape_fn(g.nt + 1, |j| -theta(g.t(j)));
            let w_t = Array1::from_shape_fn(nx, |i| exact(g.x(i), 1.0));
            let s = solve_adjoint(&r, mu, &f1, &g1, &w_t, theta(1.0)).unwrap();
            let mut e = 0.0_f64;
            for j in 0..=nt {
                for i in 0..nx {
                    e = e.max((s.w.at(j, i) - exact(g.x(i), g.t(j))).abs());
                }
                e = e.max((s.theta[j] - theta(g.t(j))).abs());
            }
            e
        };
        let (e1, e2) = (run(41, 40), run(81, 80));
        assert!(e1 < 1e-2);
        assert!((e1 / e2).log2() > 1.8, "order {}", (e1 / e2).log2());
    }

    #[test]
    fn incompatible_terminal_data_is_rejected() {
        let g = grid(21, 20);
        let r = ReferenceTrajectory::trivial(g);
        let w_t = Array1::from_shape_fn(g.nx, |i| 1.0 + g.x(i));
        let err = solve_adjoint(&r, 0.5, &SpaceTimeField::zeros(g), &Array1::zeros(21), &w_t, 0.0).unwrap_err();
        assert!(matches!(err, Error::Compatibility(_)));
    }
}
