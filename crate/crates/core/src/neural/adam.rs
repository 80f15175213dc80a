use serde::{Deserialize, Serialize};

use super::Mlp;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Moment estimates for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Mlp,
    pub v: Mlp,
    pub step: u64,
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        Self { config, m: net.zeros_like(), v: net.zeros_like(), step: 0 }
    }

    /// One bias-corrected update of `params` along `grad`.
    pub fn step(&mut self, params: &mut Mlp, grad: &Mlp) -> Result<()> {
        if params.layer_sizes != self.m.layer_sizes || grad.layer_sizes != self.m.layer_sizes {
            return Err(Error::Shape("optimizer, parameter and gradient shapes differ".into()));
        }
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        self.step += 1;
        let bias1 = 1.0 - beta1.powi(self.step as i32);
        let bias2 = 1.0 - beta2.powi(self.step as i32);
        let tensors = params.tensors_mut().zip(grad.tensors()).zip(self.m.tensors_mut().zip(self.v.tensors_mut()));
        for ((p, g), (m, v)) in tensors {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_net(value: f64) -> Mlp {
        let mut net = Mlp::zeros(&[1, 1]).unwrap();
        net.biases[0][0] = value;
        net
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut p = Mlp::glorot(&[2, 3, 1], 4, 0).unwrap();
        let before = p.clone();
        let mut st = AdamState::new(&p, AdamConfig::default());
        let zero = p.zeros_like();
        for _ in 0..3 {
            st.step(&mut p, &zero).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_hand_computed() {
        let mut p = scalar_net(1.0);
        let mut st = AdamState::new(&p, AdamConfig::default());
        st.step(&mut p, &scalar_net(0.5)).unwrap();
        // m_hat = 0.5, v_hat = 0.25
        let expected = 1.0 - 1e-3 * 0.5 / (0.5 + 1e-8);
        assert!((p.biases[0][0] - expected).abs() < 1e-12);
        assert!((st.m.biases[0][0] - 0.05).abs() < 1e-15);
        assert!((st.v.biases[0][0] - 0.00025).abs() < 1e-15);
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut p = Mlp::glorot(&[2, 3, 1], 8, 0).unwrap();
            let g = Mlp::glorot(&[2, 3, 1], 9, 0).unwrap();
            let mut st = AdamState::new(&p, AdamConfig::default());
            st.step(&mut p, &g).unwrap();
            st.step(&mut p, &g).unwrap();
            (p, st)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch() {
        let mut p = scalar_net(0.0);
        let mut st = AdamState::new(&p, AdamConfig::default());
        assert!(st.step(&mut p, &Mlp::zeros(&[2, 1]).unwrap()).is_err());
    }
}
