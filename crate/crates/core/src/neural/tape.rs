//! Batched forward pass carrying derivative channels, and its reverse pass.
//!
//! For a batch of `B` inputs every layer stores an `(n, C * B)` matrix whose
//! column blocks are the channels
//!
//! ```text
//! [ value | d/d in_0 | ... | d/d in_{d-1} | d^2/d in_0^2 ]
//! ```
//!
//! (the last block only for [`Order::Second`]). A linear layer acts on every
//! block with the same weight matrix, so one GEMM per layer moves all
//! channels; the bias only enters the value block. Through `y = tanh(a)`:
//!
//! ```text
//! y'    = s1 a'            s1 = 1 - y^2
//! y''   = s1 a'' + s2 a'^2  s2 = -2 y s1
//! ```

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Axis};

use super::Mlp;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Value,
    First,
    Second,
}

impl Order {
    fn channels(self, d_in: usize) -> usize {
        match self {
            Order::Value => 1,
            Order::First => 1 + d_in,
            Order::Second => 2 + d_in,
        }
    }
}

/// Forward record for one network and one batch.
#[derive(Debug, Clone)]
pub struct Tape {
    order: Order,
    batch: usize,
    d_in: usize,
    /// Layer inputs `H_0 .. H_{L-1}`.
    inputs: Vec<Array2<f64>>,
    /// Hidden pre-activations.
    pre: Vec<Array2<f64>>,
    /// Hidden activations (value block only).
    act: Vec<Array2<f64>>,
    output: Array1<f64>,
}

/// Gradients of a scalar with respect to the output channels of a tape.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputGrads {
    pub value: Vec<f64>,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<f64>,
}

impl OutputGrads {
    pub fn zeros(tape: &Tape) -> Self {
        let b = tape.batch;
        let n_first = if tape.order == Order::Value { 0 } else { tape.d_in };
        let n_second = if tape.order == Order::Second { b } else { 0 };
        Self { value: vec![0.0; b], first: vec![vec![0.0; b]; n_first], second: vec![0.0; n_second] }
    }

    fn is_zero(&self) -> bool {
        self.value.iter().chain(self.first.iter().flatten()).chain(&self.second).all(|&g| g == 0.0)
    }
}

impl Tape {
    /// Runs the network on the columns of `inputs` (`d_in x B`).
    pub fn forward(net: &Mlp, inputs: &Array2<f64>, order: Order) -> Result<Self> {
        let d_in = net.input_dim();
        let (rows, batch) = inputs.dim();
        if rows != d_in {
            return Err(Error::Shape(format!("inputs have {rows} rows, network expects {d_in}")));
        }
        let c = order.channels(d_in);
        let mut h = Array2::zeros((d_in, c * batch));
        h.slice_mut(s![.., 0..batch]).assign(inputs);
        if order != Order::Value {
            for k in 0..d_in {
                h.slice_mut(s![k, (1 + k) * batch..(2 + k) * batch]).fill(1.0);
            }
        }

        let n_layers = net.weights.len();
        let mut tape = Tape {
            order,
            batch,
            d_in,
            inputs: Vec::with_capacity(n_layers),
            pre: Vec::with_capacity(n_layers - 1),
            act: Vec::with_capacity(n_layers - 1),
            output: Array1::zeros(0),
        };
        for (l, (w, b)) in net.weights.iter().zip(&net.biases).enumerate() {
            let mut a = Array2::zeros((w.nrows(), c * batch));
            general_mat_mul(1.0, w, &h, 0.0, &mut a);
            a.slice_mut(s![.., 0..batch]).zip_mut_with(&b.view().insert_axis(Axis(1)), |x, y| *x += y);
            tape.inputs.push(h);
            if l + 1 == n_layers {
                tape.output = a.row(0).to_owned();
                break;
            }
            let (next, y) = activate(&a, batch, order, d_in);
            tape.pre.push(a);
            tape.act.push(y);
            h = next;
        }
        if let Some(i) = tape.output.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("network output channel entry {i}")));
        }
        Ok(tape)
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn value(&self, b: usize) -> f64 {
        self.output[b]
    }

    /// Derivative along input `k`.
    pub fn first(&self, k: usize, b: usize) -> f64 {
        debug_assert!(self.order != Order::Value);
        self.output[(1 + k) * self.batch + b]
    }

    /// Second derivative along input 0.
    pub fn second(&self, b: usize) -> f64 {
        debug_assert!(self.order == Order::Second);
        self.output[(1 + self.d_in) * self.batch + b]
    }

    /// Accumulates the parameter gradient of a scalar whose sensitivities to
    /// the output channels are `grads` into `acc`.
    pub fn backward(&self, net: &Mlp, grads: &OutputGrads, acc: &mut Mlp) -> Result<()> {
        let (batch, d_in) = (self.batch, self.d_in);
        let c = self.order.channels(d_in);
        if grads.value.len() != batch
            || grads.first.len() != OutputGrads::zeros(self).first.len()
            || grads.first.iter().any(|g| g.len() != batch)
            || grads.second.len() != OutputGrads::zeros(self).second.len()
        {
            return Err(Error::Shape("output gradient channels do not match the tape".into()));
        }
        if grads.is_zero() {
            return Ok(());
        }
        let mut g = Array2::zeros((1, c * batch));
        {
            let row = g.as_slice_mut().expect("standard layout");
            row[..batch].copy_from_slice(&grads.value);
            for (k, gk) in grads.first.iter().enumerate() {
                row[(1 + k) * batch..(2 + k) * batch].copy_from_slice(gk);
            }
            if self.order == Order::Second {
                row[(1 + d_in) * batch..].copy_from_slice(&grads.second);
            }
        }

        for l in (0..net.weights.len()).rev() {
            let h_in = &self.inputs[l];
            general_mat_mul(1.0, &g, &h_in.t(), 1.0, &mut acc.weights[l]);
            acc.biases[l] += &g.slice(s![.., 0..batch]).sum_axis(Axis(1));
            if l == 0 {
                break;
            }
            let g_h = net.weights[l].t().dot(&g);
            g = activate_backward(&self.pre[l - 1], &self.act[l - 1], &g_h, batch, self.order, d_in);
        }
        Ok(())
    }
}

/// `tanh` on every channel; returns the next layer input and the value-block
/// activations.
fn activate(a: &Array2<f64>, batch: usize, order: Order, d_in: usize) -> (Array2<f64>, Array2<f64>) {
    let (n, width) = a.dim();
    let mut h = Array2::zeros((n, width));
    let mut y = Array2::zeros((n, batch));
    let rows = a
        .as_slice()
        .expect("standard layout")
        .chunks_exact(width)
        .zip(h.as_slice_mut().expect("standard layout").chunks_exact_mut(width))
        .zip(y.as_slice_mut().expect("standard layout").chunks_exact_mut(batch));
    for ((ar, hr), yr) in rows {
        let (a_v, a_d) = ar.split_at(batch);
        let (h_v, h_d) = hr.split_at_mut(batch);
        for ((y, h), &a) in yr.iter_mut().zip(h_v.iter_mut()).zip(a_v) {
            *y = super::tanh(a);
            *h = *y;
        }
        if order == Order::Value {
            continue;
        }
        for k in 0..d_in {
            let block = k * batch..(k + 1) * batch;
            for ((h, &a), &y) in h_d[block.clone()].iter_mut().zip(&a_d[block]).zip(yr.iter()) {
                *h = (1.0 - y * y) * a;
            }
        }
        if order == Order::Second {
            let (a_x, a_xx) = (&a_d[..batch], &a_d[d_in * batch..]);
            for (((h, &axx), &ax), &y) in h_d[d_in * batch..].iter_mut().zip(a_xx).zip(a_x).zip(yr.iter()) {
                let s1 = 1.0 - y * y;
                *h = s1 * axx - 2.0 * y * s1 * ax * ax;
            }
        }
    }
    (h, y)
}

/// Pulls the gradient with respect to the activations back to the
/// pre-activations.
///
/// With `s1 = 1 - y^2`, `s2 = -2 y s1` and `s2' = -2 s1^2 + 4 y^2 s1`:
///
/// ```text
/// g_a[k]   = g_h[k] s1 + [k = 0] g_h[xx] 2 s2 a[0]
/// g_a[xx]  = g_h[xx] s1
/// g_a[val] = g_h[val] s1 + sum_k g_h[k] s2 a[k] + g_h[xx] (s2 a[xx] + s2' a[0]^2)
/// ```
fn activate_backward(
    a: &Array2<f64>,
    y: &Array2<f64>,
    g_h: &Array2<f64>,
    batch: usize,
    order: Order,
    d_in: usize,
) -> Array2<f64> {
    let (n, width) = a.dim();
    let mut g_a = Array2::zeros((n, width));
    let rows = a
        .as_slice()
        .expect("standard layout")
        .chunks_exact(width)
        .zip(y.as_slice().expect("standard layout").chunks_exact(batch))
        .zip(g_h.as_slice().expect("standard layout").chunks_exact(width))
        .zip(g_a.as_slice_mut().expect("standard layout").chunks_exact_mut(width));
    for (((ar, yr), gr), out) in rows {
        let (g_v, g_d) = gr.split_at(batch);
        let a_d = &ar[batch..];
        let (out_v, out_d) = out.split_at_mut(batch);
        for ((o, &g), &y) in out_v.iter_mut().zip(g_v).zip(yr) {
            *o = g * (1.0 - y * y);
        }
        if order == Order::Value {
            continue;
        }
        for k in 0..d_in {
            let block = k * batch..(k + 1) * batch;
            let rows =
                out_v.iter_mut().zip(&mut out_d[block.clone()]).zip(&g_d[block.clone()]).zip(&a_d[block]).zip(yr);
            for ((((ov, od), &g), &a), &y) in rows {
                let s1 = 1.0 - y * y;
                *ov += g * (-2.0 * y * s1) * a;
                *od = g * s1;
            }
        }
        if order == Order::Second {
            let (out_x, out_xx) = out_d.split_at_mut(d_in * batch);
            let (a_x, a_xx, g_xx) = (&a_d[..batch], &a_d[d_in * batch..], &g_d[d_in * batch..]);
            let rows =
                out_v.iter_mut().zip(out_x.iter_mut()).zip(out_xx.iter_mut()).zip(g_xx).zip(a_x).zip(a_xx).zip(yr);
            for ((((((ov, ox), oxx), &g), &ax), &axx), &y) in rows {
                let s1 = 1.0 - y * y;
                let s2 = -2.0 * y * s1;
                let s2p = -2.0 * s1 * s1 + 4.0 * y * y * s1;
                *ov += g * (s2 * axx + s2p * ax * ax);
                *ox += g * 2.0 * s2 * ax;
                *oxx = g * s1;
            }
        }
    }
    g_a
}
