//! Fixed-domain Fisher-Stefan system on `[0, 1]`:
//!
//! ```text
//! h psi_t - psi_xx - (x/2) h' psi_x = h psi (1 - psi) + source
//! psi_x(0,t) = u(t),  psi(1,t) = 0,  h' + 2 mu psi_x(1,t) = 0
//! ```
//!
//! Crank-Nicolson in `psi` with a per-step Picard iteration on the Stefan
//! coupling and the logistic term.

use ndarray::Array1;

use super::{check_finite, left_flux, right_flux, Tridiagonal};
use crate::model::{Grid, ModelConfig, SpaceTimeField};
use crate::{Error, Result};

const PICARD_TOL: f64 = 1e-10;
const PICARD_MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearProblem {
    pub config: ModelConfig,
    /// Initial state at the nodes of `[0, 1]`.
    pub psi0: Array1<f64>,
    pub h0: f64,
    /// Neumann control `u(t)` at every time level.
    pub control: Array1<f64>,
    /// Optional forcing added to the right-hand side of the PDE.
    pub source: Option<SpaceTimeField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearSolution {
    pub psi: SpaceTimeField,
    pub h: Array1<f64>,
    /// `psi_x(1, t)` at every time level.
    pub flux_right: Array1<f64>,
    /// `psi_x(0, t)` as realised by the discrete boundary row.
    pub flux_left: Array1<f64>,
}

pub fn solve_nonlinear_forward(problem: &NonlinearProblem, grid: Grid) -> Result<NonlinearSolution> {
    let nx = grid.nx;
    if grid.x_lo != 0.0 || grid.x_hi != 1.0 {
        return Err(Error::Domain(format!("nonlinear system lives on [0, 1], grid is [{}, {}]", grid.x_lo, grid.x_hi)));
    }
    if problem.psi0.len() != nx || problem.control.len() != grid.nt + 1 {
        return Err(Error::Shape(format!(
            "psi0 has {} nodes and u {} levels; grid is {}x{}",
            problem.psi0.len(),
            problem.control.len(),
            nx,
            grid.nt + 1
        )));
    }
    if let Some(src) = &problem.source {
        if !src.grid.same_shape(&grid) {
            return Err(Error::Shape("source grid differs from solver grid".into()));
        }
    }
    if !(problem.h0 > 0.0) {
        return Err(Error::Domain(format!("h0 = {} must be positive", problem.h0)));
    }
    if problem.psi0[nx - 1].abs() > 1e-12 {
        return Err(Error::Domain(format!("psi0(1) = {} must vanish", problem.psi0[nx - 1])));
    }

    let (dx, dt, mu) = (grid.dx(), grid.dt(), problem.config.mu);
    let dx2 = dx * dx;
    let x: Vec<f64> = grid.xs().to_vec();
    let src = |j: usize, i: usize| problem.source.as_ref().map_or(0.0, |s| s.at(j, i));

    let mut psi = SpaceTimeField::zeros(grid);
    psi.values.row_mut(0).assign(&problem.psi0);
    psi.values[[0, nx - 1]] = 0.0;
    let mut h = Array1::zeros(grid.nt + 1);
    let mut flux = Array1::zeros(grid.nt + 1);
    let mut flux_left = Array1::zeros(grid.nt + 1);
    h[0] = problem.h0;
    flux[0] = right_flux(psi.level(0), dx);
    flux_left[0] = left_flux(psi.level(0), dx);

    // Unknowns are psi_0 .. psi_{N-1}; psi_N = 0.
    let n_unk = nx - 1;
    let mut tri = Tridiagonal::zeros(n_unk);
    let mut rhs = vec![0.0; n_unk];
    let mut explicit = vec![0.0; n_unk];
    for j in 0..grid.nt {
        let hj = h[j];
        let hpj = -2.0 * mu * flux[j];
        let prev = psi.level(j).to_owned();
        for i in 1..n_unk {
            explicit[i] = (prev[i + 1] - 2.0 * prev[i] + prev[i - 1]) / dx2
                + 0.5 * x[i] * hpj * (prev[i + 1] - prev[i - 1]) / (2.0 * dx)
                + hj * prev[i] * (1.0 - prev[i])
                + src(j, i);
        }

        let mut guess = prev.clone();
        let mut guess_flux = flux[j];
        let mut converged = None;
        let mut update = f64::INFINITY;
        for _ in 0..PICARD_MAX_ITER {
            let h_next = hj - dt * mu * (flux[j] + guess_flux);
            if !(h_next > 0.0) {
                return Err(Error::BoundaryCollapse { step: j + 1, time: grid.t(j + 1), value: h_next });
            }
            let hp_next = -2.0 * mu * guess_flux;
            let hm = 0.5 * (hj + h_next);

            tri.diag[0] = -3.0;
            tri.upper[0] = 4.0;
            rhs[0] = 2.0 * dx * problem.control[j + 1];
            for i in 1..n_unk {
                let adv = 0.5 * x[i] * hp_next / (2.0 * dx);
                tri.lower[i] = -0.5 * (1.0 / dx2 - adv);
                tri.diag[i] = hm / dt + 1.0 / dx2 - 0.5 * h_next * (1.0 - guess[i]);
                tri.upper[i] = -0.5 * (1.0 / dx2 + adv);
                rhs[i] = hm / dt * prev[i] + 0.5 * explicit[i] + 0.5 * src(j + 1, i);
            }
            tri.upper[n_unk - 1] = 0.0;
            // The one-sided Neumann row also touches psi_2; eliminate it with row 1.
            if n_unk > 2 {
                let s = 1.0 / tri.upper[1];
                tri.diag[0] += s * tri.lower[1];
                tri.upper[0] += s * tri.diag[1];
                rhs[0] += s * rhs[1];
            }
            let sol = tri.solve(&rhs)?;
            check_finite(&sol, "nonlinear state", j + 1)?;
            let mut next = Array1::zeros(nx);
            for (i, v) in sol.iter().enumerate() {
                next[i] = *v;
            }
            let next_flux = right_flux(next.view(), dx);
            update = next
                .iter()
                .zip(guess.iter())
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
                .max(dt * mu * (next_flux - guess_flux).abs());
            guess = next;
            guess_flux = next_flux;
            if update < PICARD_TOL {
                converged = Some(());
                break;
            }
        }
        if converged.is_none() {
            return Err(Error::Stepping { step: j + 1, time: grid.t(j + 1), update });
        }
        psi.values.row_mut(j + 1).assign(&guess);
        flux[j + 1] = guess_flux;
        flux_left[j + 1] = left_flux(guess.view(), dx);
        h[j + 1] = hj - dt * mu * (flux[j] + flux[j + 1]);
        if !(h[j + 1] > 0.0) {
            return Err(Error::BoundaryCollapse { step: j + 1, time: grid.t(j + 1), value: h[j + 1] });
        }
    }
    Ok(NonlinearSolution { psi, h, flux_right: flux, flux_left })
}
