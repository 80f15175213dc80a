//! Front fixing: `psi(x, t) = rho(x L(t), t)`, `h = L^2`.

use ndarray::{Array1, Array2, ArrayView1};

use super::{Grid, SpaceTimeField};
use crate::{Error, Result};

/// Density on the moving domain `(0, L(t))`.
///
/// `rho` is sampled on a fixed uniform `y` grid covering `[0, y_max]` with
/// `y_max >= max L(t)`; values beyond `L(t)` are outside the domain and are
/// never read.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalTrajectory {
    pub y: Array1<f64>,
    pub t: Array1<f64>,
    /// Shape `(t.len(), y.len())`.
    pub rho: Array2<f64>,
    pub length: Array1<f64>,
    pub control: Array1<f64>,
}

/// State on the fixed domain `x in [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedTrajectory {
    pub psi: SpaceTimeField,
    pub h: Array1<f64>,
    pub control: Array1<f64>,
}

impl PhysicalTrajectory {
    pub fn new(
        y: Array1<f64>,
        t: Array1<f64>,
        rho: Array2<f64>,
        length: Array1<f64>,
        control: Array1<f64>,
    ) -> Result<Self> {
        if rho.dim() != (t.len(), y.len()) || length.len() != t.len() || control.len() != t.len() {
            return Err(Error::Shape(format!(
                "rho {:?}, y {}, t {}, L {}, u {}",
                rho.dim(),
                y.len(),
                t.len(),
                length.len(),
                control.len()
            )));
        }
        if y.len() < 2 {
            return Err(Error::Shape("need at least two y samples".into()));
        }
        Ok(Self { y, t, rho, length, control })
    }
}

/// Piecewise-linear interpolation of samples on a uniform grid starting at
/// `x0` with spacing `h`. Clamps to the end samples.
pub(crate) fn interp_uniform(values: ArrayView1<'_, f64>, x0: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    let s = (x - x0) / h;
    if s <= 0.0 {
        return values[0];
    }
    let i = s.floor() as usize;
    if i >= n - 1 {
        return values[n - 1];
    }
    let frac = s - i as f64;
    values[i] * (1.0 - frac) + values[i + 1] * frac
}

/// Linear interpolation that treats the front `y = len` as a node where
/// the density vanishes, so samples stored beyond the front are never used.
fn sample_up_to_front(values: ArrayView1<'_, f64>, y0: f64, dy: f64, y: f64, len: f64) -> f64 {
    if y >= len {
        return 0.0;
    }
    let left = ((y - y0) / dy).floor().max(0.0);
    let y_left = y0 + left * dy;
    let y_right = y_left + dy;
    if y_right <= len || (left as usize) + 1 >= values.len() {
        return interp_uniform(values, y0, dy, y);
    }
    let v_left = values[left as usize];
    v_left + (y - y_left) * (0.0 - v_left) / (len - y_left)
}

fn time_grid(t: &Array1<f64>, nx: usize, x_lo: f64, x_hi: f64) -> Result<Grid> {
    if t.len() < 3 || t[0] != 0.0 {
        return Err(Error::Shape("time samples must start at 0 with at least 3 levels".into()));
    }
    Grid::new(nx, t.len() - 1, x_lo, x_hi, t[t.len() - 1])
}

/// Maps a moving-domain density onto `nx` uniform nodes of `[0, 1]`.
pub fn to_fixed_domain(phys: &PhysicalTrajectory, nx: usize) -> Result<FixedTrajectory> {
    let grid = time_grid(&phys.t, nx, 0.0, 1.0)?;
    let dy = phys.y[1] - phys.y[0];
    let y_max = phys.y[phys.y.len() - 1];
    let mut psi = SpaceTimeField::zeros(grid);
    for (j, &len) in phys.length.iter().enumerate() {
        if !(len > 0.0) {
            return Err(Error::Domain(format!("L(t) = {len} at level {j}")));
        }
        if len > y_max * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("L(t) = {len} exceeds sampled range {y_max}")));
        }
        let row = phys.rho.row(j);
        for i in 0..nx {
            psi.values[[j, i]] = sample_up_to_front(row, phys.y[0], dy, grid.x(i) * len, len);
        }
    }
    Ok(FixedTrajectory { psi, h: phys.length.mapv(|l| l * l), control: phys.control.clone() })
}

/// Maps a fixed-domain state back to a density on `ny` uniform nodes of
/// `[0, max L]`. Nodes beyond `L(t)` get 0.
pub fn from_fixed_domain(fixed: &FixedTrajectory, ny: usize) -> Result<PhysicalTrajectory> {
    if ny < 2 {
        return Err(Error::Shape("need at least two y samples".into()));
    }
    if let Some((j, &h)) = fixed.h.iter().enumerate().find(|(_, &h)| !(h > 0.0)) {
        return Err(Error::Domain(format!("h(t) = {h} at level {j}")));
    }
    let grid = fixed.psi.grid;
    if fixed.h.len() != grid.nt + 1 {
        return Err(Error::Shape(format!("h has {} samples, grid has {}", fixed.h.len(), grid.nt + 1)));
    }
    let length = fixed.h.mapv(f64::sqrt);
    let y_max = length.iter().copied().fold(0.0, f64::max);
    let dy = y_max / (ny - 1) as f64;
    let y: Array1<f64> = (0..ny).map(|i| if i == ny - 1 { y_max } else { i as f64 * dy }).collect();
    let mut rho = Array2::zeros((grid.nt + 1, ny));
    for j in 0..=grid.nt {
        let len = length[j];
        let row = fixed.psi.level(j);
        for (k, &yk) in y.iter().enumerate() {
            if yk <= len {
                rho[[j, k]] = interp_uniform(row, grid.x_lo, grid.dx(), yk / len);
            }
        }
    }
    PhysicalTrajectory::new(y, grid.ts(), rho, length, fixed.control.clone())
}
