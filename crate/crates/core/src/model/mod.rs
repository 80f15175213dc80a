//! Domain types shared by the solvers and the network pipeline.

mod reference;
mod transform;

pub use reference::{
    nonlinear_residual_q, perturbation_decompose, perturbation_recompose, reference_coefficients, PerturbationProblem,
    ReferenceTrajectory,
};
pub use transform::{from_fixed_domain, to_fixed_domain, FixedTrajectory, PhysicalTrajectory};

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Physical constants of the scaled model. Diffusivity, growth rate and
/// carrying capacity are all 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Stefan coupling (inverse Stefan number).
    pub mu: f64,
    /// Control horizon.
    pub final_time: f64,
}

impl ModelConfig {
    pub fn new(mu: f64, final_time: f64) -> Result<Self> {
        if !(mu > 0.0) || !(final_time > 0.0) {
            return Err(Error::Domain(format!("mu and T must be positive (mu = {mu}, T = {final_time})")));
        }
        Ok(Self { mu, final_time })
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { mu: 0.5, final_time: 1.0 }
    }
}

/// Uniform tensor-product grid: `nx` nodes on `[x_lo, x_hi]` and `nt` steps
/// on `[0, final_time]` (so `nt + 1` time levels).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub nt: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub final_time: f64,
}

impl Grid {
    pub fn new(nx: usize, nt: usize, x_lo: f64, x_hi: f64, final_time: f64) -> Result<Self> {
        if nx < 3 || nt < 2 {
            return Err(Error::Domain(format!("grid needs nx >= 3 and nt >= 2 (got {nx}, {nt})")));
        }
        if !(x_hi > x_lo) || !(final_time > 0.0) {
            return Err(Error::Domain(format!("degenerate grid bounds [{x_lo}, {x_hi}] x [0, {final_time}]")));
        }
        Ok(Self { nx, nt, x_lo, x_hi, final_time })
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.nx - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.final_time / self.nt as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx - 1 {
            self.x_hi
        } else {
            self.x_lo + i as f64 * self.dx()
        }
    }

    pub fn t(&self, j: usize) -> f64 {
        if j == self.nt {
            self.final_time
        } else {
            j as f64 * self.dt()
        }
    }

    pub fn xs(&self) -> Array1<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ts(&self) -> Array1<f64> {
        (0..=self.nt).map(|j| self.t(j)).collect()
    }

    /// Same bounds, every spacing halved.
    pub fn refined(&self) -> Self {
        Self { nx: 2 * (self.nx - 1) + 1, nt: 2 * self.nt, ..*self }
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.nx == other.nx && self.nt == other.nt
    }
}

/// Samples of a scalar field on a [`Grid`]. Row `j` holds time level `t_j`;
/// within a row `x` runs fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub grid: Grid,
    pub values: Array2<f64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: Array2::zeros((grid.nt + 1, grid.nx)) }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: Array2::from_elem((grid.nt + 1, grid.nx), value) }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn((grid.nt + 1, grid.nx), |(j, i)| f(grid.x(i), grid.t(j)));
        Self { grid, values }
    }

    pub fn from_values(grid: Grid, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (grid.nt + 1, grid.nx) {
            return Err(Error::Shape(format!(
                "field has shape {:?}, grid expects {:?}",
                values.dim(),
                (grid.nt + 1, grid.nx)
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn at(&self, j: usize, i: usize) -> f64 {
        self.values[[j, i]]
    }

    pub fn level(&self, j: usize) -> ArrayView1<'_, f64> {
        self.values.row(j)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_at_level(&self, j: usize) -> f64 {
        self.values.row(j).iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Second-order time derivative: centered inside, three-point one-sided
    /// at `t = 0` and `t = T`.
    pub fn time_derivative(&self) -> SpaceTimeField {
        let n = self.grid.nt;
        let dt = self.grid.dt();
        let v = &self.values;
        let mut out = Array2::zeros(v.dim());
        for i in 0..self.grid.nx {
            out[[0, i]] = (-3.0 * v[[0, i]] + 4.0 * v[[1, i]] - v[[2, i]]) / (2.0 * dt);
            for j in 1..n {
                out[[j, i]] = (v[[j + 1, i]] - v[[j - 1, i]]) / (2.0 * dt);
            }
            out[[n, i]] = (3.0 * v[[n, i]] - 4.0 * v[[n - 1, i]] + v[[n - 2, i]]) / (2.0 * dt);
        }
        SpaceTimeField { grid: self.grid, values: out }
    }

    /// Second-order space derivative with one-sided three-point ends.
    pub fn space_derivative(&self) -> SpaceTimeField {
        let mut out = Array2::zeros(self.values.dim());
        for j in 0..=self.grid.nt {
            let d = derivative_1d(self.values.row(j), self.grid.dx());
            out.row_mut(j).assign(&d);
        }
        SpaceTimeField { grid: self.grid, values: out }
    }
}

/// Second-order derivative of uniformly spaced samples.
pub fn derivative_1d(v: ArrayView1<'_, f64>, h: f64) -> Array1<f64> {
    let n = v.len();
    let mut out = Array1::zeros(n);
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    out[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    out
}

/// Trapezoidal rule for uniformly spaced samples.
pub fn trapezoid(v: impl IntoIterator<Item = f64>, h: f64) -> f64 {
    let mut it = v.into_iter().peekable();
    let mut sum = 0.0;
    let mut first = true;
    while let Some(x) = it.next() {
        let w = if first || it.peek().is_none() { 0.5 } else { 1.0 };
        first = false;
        sum += w * x;
    }
    sum * h
}

/// Trapezoidal rule on the space-time grid.
pub fn trapezoid_2d(f: &SpaceTimeField) -> f64 {
    let g = f.grid;
    let rows: Vec<f64> = (0..=g.nt).map(|j| trapezoid(f.level(j).iter().copied(), g.dx())).collect();
    trapezoid(rows, g.dt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing() {
        let g = Grid::new(201, 400, -1.0, 1.0, 1.0).unwrap();
        assert!((g.dx() - 0.01).abs() < 1e-15);
        assert!((g.dt() - 0.0025).abs() < 1e-15);
        assert_eq!(g.x(200), 1.0);
        assert_eq!(g.t(400), 1.0);
        assert!(Grid::new(2, 10, 0.0, 1.0, 1.0).is_err());
        assert!(Grid::new(10, 1, 0.0, 1.0, 1.0).is_err());
        let r = g.refined();
        assert_eq!((r.nx, r.nt), (401, 800));
    }

    #[test]
    fn model_config_rejects_nonpositive() {
        assert!(ModelConfig::new(0.0, 1.0).is_err());
        assert!(ModelConfig::new(0.5, -1.0).is_err());
        assert!(ModelConfig::new(0.5, 1.0).is_ok());
    }

    #[test]
    fn derivatives_exact_for_quadratics() {
        let g = Grid::new(11, 10, 0.0, 1.0, 1.0).unwrap();
        let f = SpaceTimeField::from_fn(g, |x, t| x * x + 3.0 * t * t);
        let ft = f.time_derivative();
        let fx = f.space_derivative();
        for j in 0..=g.nt {
            for i in 0..g.nx {
                assert!((ft.at(j, i) - 6.0 * g.t(j)).abs() < 1e-12);
                assert!((fx.at(j, i) - 2.0 * g.x(i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trapezoid_linear_exact() {
        let g = Grid::new(5, 4, -1.0, 1.0, 2.0).unwrap();
        let f = SpaceTimeField::from_fn(g, |x, t| 1.0 + x + t);
        // integral of 1 + x + t over [-1,1]x[0,2] = 4 + 0 + 4
        assert!((trapezoid_2d(&f) - 8.0).abs() < 1e-12);
    }
}
