//! Reference trajectory, perturbation variables and the coefficients of the
//! perturbation system.

use ndarray::{Array1, Array2};

use super::{derivative_1d, FixedTrajectory, Grid, SpaceTimeField};
use crate::{Error, Result};

/// Trajectory `(psi_bar, h_bar, u_bar)` the state is steered to, together with
/// the derived coefficients of the perturbation system.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub psi_bar: SpaceTimeField,
    pub h_bar: Array1<f64>,
    pub u_bar: Array1<f64>,
    /// `m = psi_bar_t - psi_bar (1 - psi_bar)`.
    pub m: SpaceTimeField,
    /// `n = -h_bar (1 - 2 psi_bar)`.
    pub n: SpaceTimeField,
    pub h_bar_prime: Array1<f64>,
    pub psi_bar_x: SpaceTimeField,
}

impl ReferenceTrajectory {
    pub fn from_state(psi_bar: SpaceTimeField, h_bar: Array1<f64>, u_bar: Array1<f64>) -> Result<Self> {
        let grid = psi_bar.grid;
        if h_bar.len() != grid.nt + 1 || u_bar.len() != grid.nt + 1 {
            return Err(Error::Shape(format!(
                "h_bar/u_bar have {}/{} samples, grid has {} levels",
                h_bar.len(),
                u_bar.len(),
                grid.nt + 1
            )));
        }
        if let Some(h) = h_bar.iter().find(|h| !(**h > 0.0)) {
            return Err(Error::Domain(format!("h_bar must stay positive, found {h}")));
        }
        let (m, n) = reference_coefficients(&psi_bar, &h_bar)?;
        let h_bar_prime = derivative_1d(h_bar.view(), grid.dt());
        let psi_bar_x = psi_bar.space_derivative();
        Ok(Self { psi_bar, h_bar, u_bar, m, n, h_bar_prime, psi_bar_x })
    }

    /// `psi_bar = 0`, `h_bar = 1`, `u_bar = 0` (so `m = 0`, `n = -1`).
    pub fn trivial(grid: Grid) -> Self {
        Self::from_state(SpaceTimeField::zeros(grid), Array1::ones(grid.nt + 1), Array1::zeros(grid.nt + 1))
            .expect("trivial reference is valid")
    }

    pub fn grid(&self) -> Grid {
        self.psi_bar.grid
    }
}

/// Coefficients `m` and `n` of the perturbation system.
pub fn reference_coefficients(
    psi_bar: &SpaceTimeField,
    h_bar: &Array1<f64>,
) -> Result<(SpaceTimeField, SpaceTimeField)> {
    let grid = psi_bar.grid;
    if h_bar.len() != grid.nt + 1 {
        return Err(Error::Shape(format!("h_bar has {} samples, expected {}", h_bar.len(), grid.nt + 1)));
    }
    let psi_t = psi_bar.time_derivative();
    let mut m = Array2::zeros(psi_bar.values.dim());
    let mut n = Array2::zeros(psi_bar.values.dim());
    for ((j, i), &p) in psi_bar.values.indexed_iter() {
        m[[j, i]] = psi_t.values[[j, i]] - p * (1.0 - p);
        n[[j, i]] = -h_bar[j] * (1.0 - 2.0 * p);
    }
    Ok((SpaceTimeField { grid, values: m }, SpaceTimeField { grid, values: n }))
}

/// Pointwise nonlinear remainder of the perturbation system:
/// `Q = -k z_t - mu x z_x(1,t) z_x - k z^2 + (1 - 2 psi_bar) k z - h_bar z^2`.
#[allow(clippy::too_many_arguments)]
pub fn nonlinear_residual_q(
    z: f64,
    z_t: f64,
    z_x: f64,
    z_x_at_1: f64,
    k: f64,
    psi_bar: f64,
    h_bar: f64,
    x: f64,
    mu: f64,
) -> f64 {
    -k * z_t - mu * x * z_x_at_1 * z_x - k * z * z + (1.0 - 2.0 * psi_bar) * k * z - h_bar * z * z
}

/// `z = psi - psi_bar`, `k = h - h_bar`.
pub fn perturbation_decompose(
    fixed: &FixedTrajectory,
    reference: &ReferenceTrajectory,
) -> Result<(SpaceTimeField, Array1<f64>)> {
    let (a, b) = (fixed.psi.grid, reference.grid());
    if !a.same_shape(&b) || fixed.h.len() != reference.h_bar.len() {
        return Err(Error::Shape(format!("state grid {}x{} vs reference grid {}x{}", a.nx, a.nt, b.nx, b.nt)));
    }
    let z = &fixed.psi.values - &reference.psi_bar.values;
    let k = &fixed.h - &reference.h_bar;
    Ok((SpaceTimeField { grid: a, values: z }, k))
}

/// Inverse of [`perturbation_decompose`].
pub fn perturbation_recompose(
    z: &SpaceTimeField,
    k: &Array1<f64>,
    reference: &ReferenceTrajectory,
    control: Array1<f64>,
) -> Result<FixedTrajectory> {
    if !z.grid.same_shape(&reference.grid()) || k.len() != reference.h_bar.len() {
        return Err(Error::Shape("perturbation and reference grids differ".into()));
    }
    Ok(FixedTrajectory {
        psi: SpaceTimeField { grid: z.grid, values: &z.values + &reference.psi_bar.values },
        h: k + &reference.h_bar,
        control,
    })
}

/// Data of the extended linear(ized) control problem on `(-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationProblem {
    pub mu: f64,
    /// `z0` at the grid nodes of `[-1, 1]`.
    pub z0: Array1<f64>,
    pub k0: f64,
    pub f0: SpaceTimeField,
    pub g0: Array1<f64>,
    /// Control interval `omega = (a, b)`, compactly inside `(-1, 0)`.
    pub omega: (f64, f64),
    pub reference: ReferenceTrajectory,
}

impl PerturbationProblem {
    pub fn new(
        mu: f64,
        z0: Array1<f64>,
        k0: f64,
        f0: SpaceTimeField,
        g0: Array1<f64>,
        omega: (f64, f64),
        reference: ReferenceTrajectory,
    ) -> Result<Self> {
        let grid = reference.grid();
        if z0.len() != grid.nx || !f0.grid.same_shape(&grid) || g0.len() != grid.nt + 1 {
            return Err(Error::Shape("problem data do not match the reference grid".into()));
        }
        let tol = 1e-12;
        if z0[0].abs() > tol || z0[grid.nx - 1].abs() > tol {
            return Err(Error::Domain(format!(
                "z0 must vanish at x = -1 and x = 1 (got {}, {})",
                z0[0],
                z0[grid.nx - 1]
            )));
        }
        let (a, b) = omega;
        if !(-1.0 < a && a < b && b < 0.0) {
            return Err(Error::Domain(format!("omega = ({a}, {b}) is not inside (-1, 0)")));
        }
        Ok(Self { mu, z0, k0, f0, g0, omega, reference })
    }

    /// Zero sources, `psi_bar = 0`, `h_bar = 1`.
    pub fn homogeneous(grid: Grid, mu: f64, z0: Array1<f64>, k0: f64, omega: (f64, f64)) -> Result<Self> {
        Self::new(
            mu,
            z0,
            k0,
            SpaceTimeField::zeros(grid),
            Array1::zeros(grid.nt + 1),
            omega,
            ReferenceTrajectory::trivial(grid),
        )
    }

    pub fn grid(&self) -> Grid {
        self.reference.grid()
    }

    pub fn in_omega(&self, x: f64) -> bool {
        x > self.omega.0 && x < self.omega.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(21, 10, -1.0, 1.0, 1.0).unwrap()
    }

    fn check_constant(psi: f64, h: f64, m_expected: f64, n_expected: f64) {
        let g = grid();
        let (m, n) =
            reference_coefficients(&SpaceTimeField::constant(g, psi), &Array1::from_elem(g.nt + 1, h)).unwrap();
        assert!(m.values.iter().all(|&v| (v - m_expected).abs() < 1e-15));
        assert!(n.values.iter().all(|&v| (v - n_expected).abs() < 1e-15));
    }

    #[test]
    fn coefficients_of_constant_states() {
        check_constant(0.0, 1.0, 0.0, -1.0);
        check_constant(1.0, 1.0, 0.0, 1.0);
        check_constant(0.5, 2.0, -0.25, 0.0);
    }

    #[test]
    fn time_independent_reference_gives_logistic_m() {
        let g = grid();
        let psi = SpaceTimeField::from_fn(g, |x, _| 0.3 * (1.0 - x * x));
        let (m, _) = reference_coefficients(&psi, &Array1::ones(g.nt + 1)).unwrap();
        for ((j, i), &v) in m.values.indexed_iter() {
            let p = psi.at(j, i);
            assert!((v + p * (1.0 - p)).abs() < 1e-12);
        }
    }

    #[test]
    fn coefficient_shape_mismatch() {
        let g = grid();
        assert!(reference_coefficients(&SpaceTimeField::zeros(g), &Array1::ones(3)).is_err());
    }

    #[test]
    fn q_examples() {
        assert_eq!(nonlinear_residual_q(0.0, 0.0, 0.0, 0.0, 3.0, 0.2, 1.5, 0.4, 0.5), 0.0);
        let z = 0.7;
        assert!((nonlinear_residual_q(z, 2.0, 0.0, 0.0, 0.0, 0.3, 1.0, 0.5, 0.5) + z * z).abs() < 1e-15);
        assert_eq!(nonlinear_residual_q(1.0, 3.0, 4.0, 4.0, 2.0, 0.0, 1.0, 1.0, 0.5), -15.0);
    }

    #[test]
    fn q_has_no_linear_part() {
        let (z, zt, zx, zx1, k) = (0.3, -1.2, 0.8, -0.4, 0.6);
        let mut prev = f64::INFINITY;
        for p in 1..8 {
            let lam = 10f64.powi(-p);
            let q = nonlinear_residual_q(lam * z, lam * zt, lam * zx, lam * zx1, lam * k, 0.2, 1.3, 0.7, 0.5);
            let ratio = (q / lam).abs();
            assert!(ratio < prev);
            prev = ratio;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn decompose_recompose() {
        let g = Grid::new(11, 4, 0.0, 1.0, 1.0).unwrap();
        let psi = SpaceTimeField::from_fn(g, |x, t| (1.0 - x) * (1.0 + t));
        let h = Array1::from_elem(g.nt + 1, 0.5);
        let fixed = FixedTrajectory { psi: psi.clone(), h: h.clone(), control: Array1::zeros(g.nt + 1) };
        let reference = ReferenceTrajectory::trivial(g);
        let (z, k) = perturbation_decompose(&fixed, &reference).unwrap();
        assert_eq!(z.values, psi.values);
        assert!((k[0] + 0.5).abs() < 1e-15);
        let back = perturbation_recompose(&z, &k, &reference, fixed.control.clone()).unwrap();
        assert_eq!(back, fixed);

        let same = FixedTrajectory {
            psi: reference.psi_bar.clone(),
            h: reference.h_bar.clone(),
            control: fixed.control.clone(),
        };
        let (z, k) = perturbation_decompose(&same, &reference).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0) && k.iter().all(|&v| v == 0.0));

        let other = ReferenceTrajectory::trivial(Grid::new(12, 4, 0.0, 1.0, 1.0).unwrap());
        assert!(perturbation_decompose(&fixed, &other).is_err());
    }

    #[test]
    fn problem_validation() {
        let g = grid();
        let z0 = Array1::from_shape_fn(g.nx, |i| (std::f64::consts::PI * g.x(i)).sin());
        assert!(PerturbationProblem::homogeneous(g, 0.5, z0.clone(), -0.5, (-0.9, -0.1)).is_ok());
        assert!(PerturbationProblem::homogeneous(g, 0.5, z0.clone(), -0.5, (-0.1, 0.2)).is_err());
        let mut bad = z0;
        bad[0] = 0.1;
        assert!(PerturbationProblem::homogeneous(g, 0.5, bad, -0.5, (-0.9, -0.1)).is_err());
    }
}
