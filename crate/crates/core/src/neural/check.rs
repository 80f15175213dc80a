//! Finite-difference cross-checks of the analytic input derivatives.

use super::Mlp;
use crate::Result;

/// Relative discrepancies between tape derivatives and difference quotients
/// at one input point.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDerivativeCheck {
    /// One entry per input.
    pub first: Vec<f64>,
    /// Second derivative along input 0.
    pub second: f64,
}

/// Fourth-order central differences of `net` at `point`.
///
/// Relative errors use `max(|analytic|, floor)` as the denominator so that
/// derivatives that happen to vanish do not blow up the ratio.
pub fn input_derivative_check(net: &Mlp, point: &[f64], floor: f64) -> Result<InputDerivativeCheck> {
    let analytic = net.input_derivatives(point)?;
    let f = |k: usize, offset: f64| -> Result<f64> {
        let mut p = point.to_vec();
        p[k] += offset;
        net.eval(&p)
    };
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(floor);

    let h1 = 1e-3;
    let mut first = Vec::with_capacity(point.len());
    for k in 0..point.len() {
        let d = (f(k, -2.0 * h1)? - 8.0 * f(k, -h1)? + 8.0 * f(k, h1)? - f(k, 2.0 * h1)?) / (12.0 * h1);
        first.push(rel(analytic.grad[k], d));
    }
    let h2 = 1e-2 / 4.0;
    let d2 = (-f(0, -2.0 * h2)? + 16.0 * f(0, -h2)? - 30.0 * f(0, 0.0)? + 16.0 * f(0, h2)? - f(0, 2.0 * h2)?)
        / (12.0 * h2 * h2);
    Ok(InputDerivativeCheck { first, second: rel(analytic.hess_xx, d2) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_network_derivatives_agree() {
        let net = Mlp::glorot(&[2, 12, 12, 1], 5, 0).unwrap();
        let c = input_derivative_check(&net, &[0.3, 0.6], 1e-3).unwrap();
        assert!(c.first.iter().all(|&e| e < 1e-8), "{c:?}");
        assert!(c.second < 1e-7, "{c:?}");
    }
}
