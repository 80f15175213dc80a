use crate::{Error, Result};

/// Tridiagonal matrix stored by diagonals. `lower[0]` and `upper[n-1]` are
/// unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self { lower: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Thomas algorithm.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::Shape(format!("rhs length {} for {n}x{n} system", rhs.len())));
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        for i in 0..n {
            if i > 0 {
                denom = self.diag[i] - self.lower[i] * c[i - 1];
            }
            if denom.abs() < 1e-300 || !denom.is_finite() {
                return Err(Error::Singular(format!("zero pivot in tridiagonal solve at row {i}")));
            }
            c[i] = if i + 1 < n { self.upper[i] / denom } else { 0.0 };
            d[i] = if i > 0 { (rhs[i] - self.lower[i] * d[i - 1]) / denom } else { rhs[i] / denom };
        }
        for i in (0..n.saturating_sub(1)).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// Solves `(T + u r^T) x = rhs` with the Sherman-Morrison formula.
    pub fn solve_rank_one(&self, u: &[f64], r: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        let y = self.solve(rhs)?;
        let q = self.solve(u)?;
        let ry: f64 = r.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rq: f64 = r.iter().zip(&q).map(|(a, b)| a * b).sum();
        let denom = 1.0 + rq;
        if denom.abs() < 1e-12 {
            return Err(Error::Singular(format!("rank-one update denominator {denom:e}")));
        }
        let scale = ry / denom;
        Ok(y.iter().zip(&q).map(|(a, b)| a - scale * b).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Tridiagonal {
        Tridiagonal {
            lower: vec![0.0, -1.0, 0.5, -2.0, 1.0],
            diag: vec![4.0, 5.0, 6.0, 7.0, 3.0],
            upper: vec![1.0, 2.0, -1.0, 0.5, 0.0],
        }
    }

    #[test]
    fn thomas_solves() {
        let t = sample();
        let x = vec![1.0, -2.0, 3.0, 0.5, -1.0];
        let b = t.mul_vec(&x);
        let sol = t.solve(&b).unwrap();
        for (a, e) in sol.iter().zip(&x) {
            assert!((a - e).abs() < 1e-13);
        }
    }

    #[test]
    fn rank_one_matches_dense_product() {
        let t = sample();
        let u = vec![0.3, -0.1, 0.2, 0.0, 0.4];
        let r = vec![0.0, 0.0, 0.0, 1.5, -0.7];
        let x = vec![0.2, 1.0, -1.0, 2.0, 0.1];
        let rx: f64 = r.iter().zip(&x).map(|(a, b)| a * b).sum();
        let b: Vec<f64> = t.mul_vec(&x).iter().zip(&u).map(|(tb, ui)| tb + ui * rx).collect();
        let sol = t.solve_rank_one(&u, &r, &b).unwrap();
        for (a, e) in sol.iter().zip(&x) {
            assert!((a - e).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_pivot() {
        let t = Tridiagonal { lower: vec![0.0, 1.0], diag: vec![0.0, 1.0], upper: vec![1.0, 0.0] };
        assert!(matches!(t.solve(&[1.0, 1.0]), Err(Error::Singular(_))));
    }
}
