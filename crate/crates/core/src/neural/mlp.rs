use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tape::{Order, Tape};
use crate::{Error, Result};

/// Fully connected network: `tanh` on hidden layers, linear output.
///
/// `weights[l]` has shape `(layer_sizes[l + 1], layer_sizes[l])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Value, first input derivatives and `d^2/dx0^2` at one input.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBundle {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess_xx: f64,
}

impl DerivativeBundle {
    pub fn z_x(&self) -> f64 {
        self.grad[0]
    }

    /// Derivative along input 1; only meaningful for `(x, t)` networks.
    pub fn z_t(&self) -> f64 {
        self.grad[1]
    }
}

/// Serialized form: layer sizes plus row-major weight and bias data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

fn validate_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::Shape(format!("need at least input and output sizes, got {layer_sizes:?}")));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::Shape(format!("zero-width layer in {layer_sizes:?}")));
    }
    if layer_sizes[layer_sizes.len() - 1] != 1 {
        return Err(Error::Shape(format!("output width must be 1, got {layer_sizes:?}")));
    }
    Ok(())
}

impl Mlp {
    /// All-zero parameters.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let weights = layer_sizes.windows(2).map(|w| Array2::zeros((w[1], w[0]))).collect();
        let biases = layer_sizes[1..].iter().map(|&n| Array1::zeros(n)).collect();
        Ok(Self { layer_sizes: layer_sizes.to_vec(), weights, biases })
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.layer_sizes).expect("sizes already validated")
    }

    /// Glorot-uniform weights and zero biases from a ChaCha8 stream.
    ///
    /// Weights are drawn layer by layer in row-major order from
    /// `ChaCha8Rng::seed_from_u64(seed)` on stream `stream`, so several
    /// networks can share one seed without sharing draws.
    pub fn glorot(layer_sizes: &[usize], seed: u64, stream: u64) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        for w in &mut net.weights {
            let (fan_out, fan_in) = w.dim();
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            w.iter_mut().for_each(|v| *v = rng.random_range(-bound..=bound));
        }
        Ok(net)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(Array2::len).sum::<usize>() + self.biases.iter().map(Array1::len).sum::<usize>()
    }

    /// Parameter tensors in a fixed order (weights then bias, per layer).
    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice().expect("standard layout"), b.as_slice().expect("contiguous")])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_slice_mut().expect("standard layout"), b.as_slice_mut().expect("contiguous")])
    }

    pub fn flat(&self) -> Vec<f64> {
        self.tensors().flat_map(|t| t.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::Shape(format!("{} values for {} parameters", values.len(), self.num_params())));
        }
        let mut rest = values;
        for t in self.tensors_mut() {
            let (head, tail) = rest.split_at(t.len());
            t.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Mlp) {
        for (a, b) in self.tensors_mut().zip(other.tensors()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().all(|t| t.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} entries, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn eval(&self, input: &[f64]) -> Result<f64> {
        self.check_input(input)?;
        let mut h = Array1::from(input.to_vec());
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let a = w.dot(&h) + b;
            h = if l < last { a.mapv(super::tanh) } else { a };
        }
        Ok(h[0])
    }

    /// Hidden-layer outputs for one input, for inspection.
    pub fn hidden_activations(&self, input: &[f64]) -> Result<Vec<Array1<f64>>> {
        self.check_input(input)?;
        let mut h = Array1::from(input.to_vec());
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases).take(self.weights.len() - 1) {
            h = (w.dot(&h) + b).mapv(super::tanh);
            out.push(h.clone());
        }
        Ok(out)
    }

    pub fn input_derivatives(&self, input: &[f64]) -> Result<DerivativeBundle> {
        self.check_input(input)?;
        let inputs = Array2::from_shape_vec((input.len(), 1), input.to_vec()).expect("column");
        let tape = Tape::forward(self, &inputs, Order::Second)?;
        Ok(DerivativeBundle {
            value: tape.value(0),
            grad: (0..self.input_dim()).map(|k| tape.first(k, 0)).collect(),
            hess_xx: tape.second(0),
        })
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            layer_sizes: self.layer_sizes.clone(),
            weights: self.weights.iter().map(|w| w.iter().copied().collect()).collect(),
            biases: self.biases.iter().map(|b| b.to_vec()).collect(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let mut net = Self::zeros(&ckpt.layer_sizes)?;
        if ckpt.weights.len() != net.weights.len() || ckpt.biases.len() != net.biases.len() {
            return Err(Error::Shape("checkpoint layer count mismatch".into()));
        }
        for (l, (w, b)) in ckpt.weights.iter().zip(&ckpt.biases).enumerate() {
            if w.len() != net.weights[l].len() || b.len() != net.biases[l].len() {
                return Err(Error::Shape(format!("checkpoint layer {l} has wrong size")));
            }
            net.weights[l].as_slice_mut().expect("standard layout").copy_from_slice(w);
            net.biases[l].as_slice_mut().expect("contiguous").copy_from_slice(b);
        }
        if !net.is_finite() {
            return Err(Error::NonFinite("checkpoint contains non-finite parameters".into()));
        }
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn glorot_bounds_and_zero_biases() {
        let net = Mlp::glorot(&[2, 50, 50, 1], 11, 0).unwrap();
        for w in &net.weights {
            let (o, i) = w.dim();
            let g = (6.0 / (o + i) as f64).sqrt();
            assert!(w.iter().all(|v| v.abs() <= g));
        }
        assert!(net.biases.iter().all(|b| b.iter().all(|&v| v == 0.0)));
        assert_eq!(net, Mlp::glorot(&[2, 50, 50, 1], 11, 0).unwrap());
        assert_ne!(net, Mlp::glorot(&[2, 50, 50, 1], 11, 1).unwrap());
        assert_eq!(net.num_params(), 2 * 50 + 50 + 50 * 50 + 50 + 50 + 1);
    }

    #[test]
    fn invalid_sizes() {
        assert!(Mlp::zeros(&[]).is_err());
        assert!(Mlp::zeros(&[2]).is_err());
        assert!(Mlp::zeros(&[2, 0, 1]).is_err());
        assert!(Mlp::zeros(&[2, 3]).is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(&[2, 5, 1]).unwrap();
        assert_eq!(net.eval(&[0.3, -2.0]).unwrap(), 0.0);
        assert!(net.eval(&[0.3]).is_err());
    }

    #[test]
    fn linear_network_is_projection() {
        let mut net = Mlp::zeros(&[2, 1]).unwrap();
        net.weights[0][[0, 0]] = 1.0;
        assert_eq!(net.eval(&[0.37, 5.0]).unwrap(), 0.37);
        let d = net.input_derivatives(&[0.37, 5.0]).unwrap();
        assert_eq!((d.z_x(), d.z_t(), d.hess_xx), (1.0, 0.0, 0.0));
    }

    #[test]
    fn single_unit_closed_form() {
        let mut net = Mlp::zeros(&[1, 1, 1]).unwrap();
        let (w1, b1, w2, b2) = (1.3, -0.4, 0.7, 0.2);
        net.weights[0][[0, 0]] = w1;
        net.biases[0][0] = b1;
        net.weights[1][[0, 0]] = w2;
        net.biases[1][0] = b2;
        let x = 0.45;
        let y = (w1 * x + b1).tanh();
        let d = net.input_derivatives(&[x]).unwrap();
        assert!((d.value - (w2 * y + b2)).abs() < 1e-12);
        assert!((d.z_x() - w2 * w1 * (1.0 - y * y)).abs() < 1e-12);
        assert!((d.hess_xx - (-2.0 * w2 * w1 * w1 * y * (1.0 - y * y))).abs() < 1e-12);
    }

    #[test]
    fn checkpoint_round_trip() {
        let net = Mlp::glorot(&[2, 4, 3, 1], 5, 2).unwrap();
        let json = serde_json::to_string(&net.to_checkpoint()).unwrap();
        let back = Mlp::from_checkpoint(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(net, back);
        let mut bad = net.to_checkpoint();
        bad.weights[1].pop();
        assert!(Mlp::from_checkpoint(&bad).is_err());
    }

    #[test]
    fn flat_round_trip() {
        let net = Mlp::glorot(&[2, 4, 1], 9, 0).unwrap();
        let mut other = net.zeros_like();
        other.set_flat(&net.flat()).unwrap();
        assert_eq!(net, other);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn hidden_units_stay_in_open_interval(seed in any::<u64>(), x in -50.0..50.0f64, t in -50.0..50.0f64) {
            let net = Mlp::glorot(&[2, 8, 8, 1], seed, 0).unwrap();
            for layer in net.hidden_activations(&[x, t]).unwrap() {
                prop_assert!(layer.iter().all(|v| v.abs() <= 1.0));
            }
        }
    }
}
