use super::Mlp;
use crate::{Error, Result};

/// A scalar function of a set of networks.
///
/// When `grads` is given it holds one zero-initialised accumulator per
/// network, and the implementation adds the parameter gradient into it.
pub trait Objective {
    fn evaluate(&self, nets: &[Mlp], grads: Option<&mut [Mlp]>) -> Result<f64>;
}

impl<F> Objective for F
where
    F: Fn(&[Mlp], Option<&mut [Mlp]>) -> Result<f64>,
{
    fn evaluate(&self, nets: &[Mlp], grads: Option<&mut [Mlp]>) -> Result<f64> {
        self(nets, grads)
    }
}

/// Value and parameter gradient of `objective` at `nets`.
pub fn param_gradient(objective: &impl Objective, nets: &[Mlp]) -> Result<(f64, Vec<Mlp>)> {
    let mut grads: Vec<Mlp> = nets.iter().map(Mlp::zeros_like).collect();
    let value = objective.evaluate(nets, Some(&mut grads))?;
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("objective value {value}")));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient of network {i}")));
    }
    Ok((value, grads))
}

/// Central-difference gradient, one parameter at a time.
pub fn finite_difference_gradient(objective: &impl Objective, nets: &[Mlp], step: f64) -> Result<Vec<Mlp>> {
    let mut work = nets.to_vec();
    let mut out = Vec::with_capacity(nets.len());
    for n in 0..nets.len() {
        let base = nets[n].flat();
        let mut grad = vec![0.0; base.len()];
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] = base[i] + step;
            work[n].set_flat(&p)?;
            let up = objective.evaluate(&work, None)?;
            p[i] = base[i] - step;
            work[n].set_flat(&p)?;
            let down = objective.evaluate(&work, None)?;
            grad[i] = (up - down) / (2.0 * step);
        }
        work[n].set_flat(&base)?;
        let mut g = nets[n].zeros_like();
        g.set_flat(&grad)?;
        out.push(g);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_norm(nets: &[Mlp], grads: Option<&mut [Mlp]>) -> Result<f64> {
        if let Some(g) = grads {
            for (gi, ni) in g.iter_mut().zip(nets) {
                gi.add_assign(ni);
            }
        }
        Ok(nets.iter().flat_map(|n| n.flat()).map(|v| 0.5 * v * v).sum())
    }

    #[test]
    fn constant_objective_has_zero_gradient() {
        let nets = vec![Mlp::glorot(&[2, 3, 1], 1, 0).unwrap()];
        let constant = |_: &[Mlp], _: Option<&mut [Mlp]>| -> Result<f64> { Ok(3.5) };
        let (v, g) = param_gradient(&constant, &nets).unwrap();
        assert_eq!(v, 3.5);
        assert!(g[0].flat().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn half_norm_gradient_is_identity() {
        let nets = vec![Mlp::glorot(&[2, 3, 1], 1, 0).unwrap(), Mlp::glorot(&[1, 2, 1], 1, 1).unwrap()];
        let (_, g) = param_gradient(&half_norm, &nets).unwrap();
        assert_eq!(g, nets);
        let fd = finite_difference_gradient(&half_norm, &nets, 1e-5).unwrap();
        for (a, b) in fd.iter().zip(&nets) {
            for (x, y) in a.flat().iter().zip(b.flat()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn non_finite_value_is_reported() {
        let nets = vec![Mlp::zeros(&[1, 1]).unwrap()];
        let bad = |_: &[Mlp], _: Option<&mut [Mlp]>| -> Result<f64> { Ok(f64::NAN) };
        assert!(matches!(param_gradient(&bad, &nets), Err(Error::NonFinite(_))));
    }
}
