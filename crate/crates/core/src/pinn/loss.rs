//! The eight-term control loss and its parameter gradient.
//!
//! | term          | linearized form                     | free-boundary form                           |
//! |---------------|-------------------------------------|----------------------------------------------|
//! | `int_pde`     | `z_t - z_xx - z - 1_omega v`        | `h psi_t - psi_xx - (x/2) h' psi_x - h psi (1 - psi)` |
//! | `int_ode`     | `k' + 2 mu z_x(1, t)`               | `h' + 2 mu psi_x(1, t)`                      |
//! | `boundary`    | `z(-1, t)^2 + z(1, t)^2`            | `(psi_x(0, t) - u(t))^2 + psi(1, t)^2`       |
//! | `init_state`  | `(z(x, 0) - z0)^2`                  | `(psi(x, 0) - psi0)^2`                       |
//! | `init_scalar` | `abs(k(0) - k0)`                    | `abs(h(0) - h0)`                             |
//! | `term_state`  | `z(x, T)^2`                         | `psi(x, T)^2`                                |
//! | `term_scalar` | `abs(k(T))`                         | `abs(h(T) - h_target)`                       |
//! | `nonneg`      | `softplus penalty of -z`            | `softplus penalty of -psi`                   |
//!
//! Squared residuals are summed with Monte Carlo weights (region measure over
//! point count). Interior points are processed in chunks of
//! [`CHUNK`](crate::exec::CHUNK); partial sums and gradients are folded in
//! chunk order.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{CollocationSet, ControlProblem};
use crate::exec::{chunk_ranges, map_chunks, ExecPolicy};
use crate::neural::{Mlp, Objective, Order, OutputGrads, Tape};
use crate::{Error, Result};

pub const TERM_NAMES: [&str; 8] =
    ["int_pde", "int_ode", "boundary", "init_state", "init_scalar", "term_state", "term_scalar", "nonneg"];

pub const STATE: usize = 0;
pub const SCALAR: usize = 1;
pub const CONTROL: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    /// `w1 .. w8` in the order of [`TERM_NAMES`].
    pub w: [f64; 8],
    /// Sharpness of the softplus penalty.
    pub beta_pen: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { w: [1.0; 8], beta_pen: 100.0 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if self.w.iter().any(|w| !(*w > 0.0)) || !(self.beta_pen > 0.0) {
            return Err(Error::Config(format!("loss weights must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Raw (unweighted) loss terms, the weights used, and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub int_pde: f64,
    pub int_ode: f64,
    pub boundary: f64,
    pub init_state: f64,
    pub init_scalar: f64,
    pub term_state: f64,
    pub term_scalar: f64,
    pub nonneg: f64,
    pub total: f64,
    pub weights: [f64; 8],
}

impl LossBreakdown {
    fn from_terms(terms: [f64; 8], weights: [f64; 8]) -> Self {
        let total = terms.iter().zip(&weights).map(|(t, w)| t * w).sum();
        let [int_pde, int_ode, boundary, init_state, init_scalar, term_state, term_scalar, nonneg] = terms;
        Self { int_pde, int_ode, boundary, init_state, init_scalar, term_state, term_scalar, nonneg, total, weights }
    }

    pub fn terms(&self) -> [f64; 8] {
        [
            self.int_pde,
            self.int_ode,
            self.boundary,
            self.init_state,
            self.init_scalar,
            self.term_state,
            self.term_scalar,
            self.nonneg,
        ]
    }

    pub fn weighted(&self) -> [f64; 8] {
        let mut out = self.terms();
        out.iter_mut().zip(&self.weights).for_each(|(t, w)| *t *= w);
        out
    }
}

fn softplus(u: f64) -> f64 {
    if u > 30.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `(softplus(-beta z) / beta)^2`, a smooth stand-in for `max(0, -z)^2`.
pub fn nonneg_penalty(z: f64, beta_pen: f64) -> f64 {
    let s = softplus(-beta_pen * z) / beta_pen;
    s * s
}

fn nonneg_penalty_derivative(z: f64, beta_pen: f64) -> f64 {
    let s = softplus(-beta_pen * z) / beta_pen;
    -2.0 * s * sigmoid(-beta_pen * z)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_nets(nets: &[Mlp], problem: &ControlProblem) -> Result<()> {
    if nets.len() != 3 {
        return Err(Error::Shape(format!("expected state, scalar and control networks, got {}", nets.len())));
    }
    let want = [2, 1, problem.control_inputs()];
    for (i, (net, w)) in nets.iter().zip(want).enumerate() {
        if net.input_dim() != w {
            return Err(Error::Shape(format!("network {i} takes {} inputs, expected {w}", net.input_dim())));
        }
    }
    Ok(())
}

fn columns(points: &[(f64, f64)]) -> Array2<f64> {
    Array2::from_shape_fn((2, points.len()), |(k, b)| if k == 0 { points[b].0 } else { points[b].1 })
}

fn row(values: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((1, values.len()), values.to_vec()).expect("row vector")
}

struct ChunkOut {
    pde: f64,
    nonneg: f64,
    grad_state: Option<Mlp>,
    grad_control: Option<Mlp>,
    scalar_value: Vec<f64>,
    scalar_slope: Vec<f64>,
}

struct Context<'a> {
    nets: &'a [Mlp],
    colloc: &'a CollocationSet,
    weights: &'a LossWeights,
    problem: &'a ControlProblem,
    h: Vec<f64>,
    h_slope: Vec<f64>,
    with_grad: bool,
}

impl Context<'_> {
    fn interior_chunk(&self, range: std::ops::Range<usize>) -> Result<ChunkOut> {
        let colloc = self.colloc;
        let n_t = colloc.t_draws.len();
        let pts: Vec<(f64, f64, usize)> = range.map(|p| colloc.interior_point(p)).collect();
        let xt: Vec<(f64, f64)> = pts.iter().map(|&(x, t, _)| (x, t)).collect();
        let state = Tape::forward(&self.nets[STATE], &columns(&xt), Order::Second)?;

        let (in_omega, control) = match self.problem {
            ControlProblem::Linearized(spec) => {
                let idx: Vec<usize> =
                    (0..pts.len()).filter(|&b| pts[b].0 > spec.omega.0 && pts[b].0 < spec.omega.1).collect();
                let sub: Vec<(f64, f64)> = idx.iter().map(|&b| xt[b]).collect();
                let tape = if sub.is_empty() {
                    None
                } else {
                    Some(Tape::forward(&self.nets[CONTROL], &columns(&sub), Order::Value)?)
                };
                (idx, tape)
            }
            ControlProblem::FreeBoundary(_) => (Vec::new(), None),
        };
        let mut control_of = vec![None; pts.len()];
        for (slot, &b) in in_omega.iter().enumerate() {
            control_of[b] = Some(slot);
        }

        let quad = colloc.domain_length() * colloc.final_time / colloc.interior_len() as f64;
        let (c_pde, c_neg) = (self.weights.w[0] * quad, self.weights.w[7] * quad);
        let beta = self.weights.beta_pen;
        let mut out = ChunkOut {
            pde: 0.0,
            nonneg: 0.0,
            grad_state: None,
            grad_control: None,
            scalar_value: vec![0.0; n_t],
            scalar_slope: vec![0.0; n_t],
        };
        let mut g_state = OutputGrads::zeros(&state);
        let mut g_control = control.as_ref().map(OutputGrads::zeros);
        for (b, &(x, t, j)) in pts.iter().enumerate() {
            let (z, z_x, z_t, z_xx) = (state.value(b), state.first(0, b), state.first(1, b), state.second(b));
            let r = match self.problem {
                ControlProblem::Linearized(_) => {
                    let v = control_of[b].map_or(0.0, |s| control.as_ref().expect("control tape").value(s));
                    z_t - z_xx - z - v
                }
                ControlProblem::FreeBoundary(_) => {
                    let (h, hp) = (self.h[j], self.h_slope[j]);
                    h * z_t - z_xx - 0.5 * x * hp * z_x - h * z * (1.0 - z)
                }
            };
            if !r.is_finite() {
                return Err(Error::NonFinite(format!("PDE residual at (x, t) = ({x}, {t})")));
            }
            out.pde += r * r;
            out.nonneg += nonneg_penalty(z, beta);
            if !self.with_grad {
                continue;
            }
            let g = 2.0 * c_pde * r;
            let neg = c_neg * nonneg_penalty_derivative(z, beta);
            g_state.second[b] = -g;
            match self.problem {
                ControlProblem::Linearized(_) => {
                    g_state.value[b] = -g + neg;
                    g_state.first[1][b] = g;
                    if let Some(s) = control_of[b] {
                        g_control.as_mut().expect("control grads").value[s] = -g;
                    }
                }
                ControlProblem::FreeBoundary(_) => {
                    let (h, hp) = (self.h[j], self.h_slope[j]);
                    g_state.value[b] = -g * h * (1.0 - 2.0 * z) + neg;
                    g_state.first[0][b] = -g * 0.5 * x * hp;
                    g_state.first[1][b] = g * h;
                    out.scalar_value[j] += g * (z_t - z * (1.0 - z));
                    out.scalar_slope[j] += -g * 0.5 * x * z_x;
                }
            }
        }
        if self.with_grad {
            let mut acc = self.nets[STATE].zeros_like();
            state.backward(&self.nets[STATE], &g_state, &mut acc)?;
            out.grad_state = Some(acc);
            if let (Some(tape), Some(grads)) = (&control, &g_control) {
                let mut acc = self.nets[CONTROL].zeros_like();
                tape.backward(&self.nets[CONTROL], grads, &mut acc)?;
                out.grad_control = Some(acc);
            }
        }
        Ok(out)
    }
}

fn evaluate(
    nets: &[Mlp],
    colloc: &CollocationSet,
    weights: &LossWeights,
    problem: &ControlProblem,
    policy: ExecPolicy,
    with_grad: bool,
) -> Result<(LossBreakdown, Option<Vec<Mlp>>)> {
    check_nets(nets, problem)?;
    weights.validate()?;
    if colloc.domain != problem.domain() || colloc.final_time != problem.final_time() {
        return Err(Error::Shape("collocation region does not match the problem".into()));
    }
    let (x_lo, x_hi) = colloc.domain;
    let big_t = colloc.final_time;
    let omega_len = colloc.domain_length();
    let mu = problem.mu();
    let w = weights.w;
    let n_t = colloc.t_draws.len();

    // Scalar network at the time draws, then t = 0 and t = T.
    let mut scalar_t = colloc.t_draws.clone();
    scalar_t.extend([0.0, big_t]);
    let scalar = Tape::forward(&nets[SCALAR], &row(&scalar_t), Order::First)?;
    let h: Vec<f64> = (0..scalar_t.len()).map(|j| scalar.value(j)).collect();
    let h_slope: Vec<f64> = (0..scalar_t.len()).map(|j| scalar.first(0, j)).collect();
    let mut g_scalar = OutputGrads::zeros(&scalar);

    let ctx = Context { nets, colloc, weights, problem, h: h.clone(), h_slope: h_slope.clone(), with_grad };
    let ranges = chunk_ranges(colloc.interior_len());
    let chunks = map_chunks(policy, ranges.len(), |c| ctx.interior_chunk(ranges[c].clone()));

    let mut terms = [0.0; 8];
    let mut grads: Option<Vec<Mlp>> = with_grad.then(|| nets.iter().map(Mlp::zeros_like).collect());
    let (mut pde, mut nonneg) = (0.0, 0.0);
    for chunk in chunks {
        let chunk = chunk?;
        pde += chunk.pde;
        nonneg += chunk.nonneg;
        if let Some(g) = grads.as_mut() {
            if let Some(gs) = &chunk.grad_state {
                g[STATE].add_assign(gs);
            }
            if let Some(gc) = &chunk.grad_control {
                g[CONTROL].add_assign(gc);
            }
            for j in 0..n_t {
                g_scalar.value[j] += chunk.scalar_value[j];
                g_scalar.first[0][j] += chunk.scalar_slope[j];
            }
        }
    }
    let quad = omega_len * big_t / colloc.interior_len() as f64;
    terms[0] = pde * quad;
    terms[7] = nonneg * quad;

    // State network at the ODE, boundary, initial and terminal nodes.
    let n_b = colloc.boundary_t.len();
    let mut aux: Vec<(f64, f64)> = colloc.t_draws.iter().map(|&t| (x_hi, t)).collect();
    aux.extend(colloc.boundary_t.iter().map(|&t| (x_lo, t)));
    aux.extend(colloc.boundary_t.iter().map(|&t| (x_hi, t)));
    aux.extend(colloc.initial_x.iter().map(|&x| (x, 0.0)));
    aux.extend(colloc.terminal_x.iter().map(|&x| (x, big_t)));
    let (left0, right0) = (n_t, n_t + n_b);
    let init0 = n_t + 2 * n_b;
    let term0 = init0 + colloc.initial_x.len();
    let state = Tape::forward(&nets[STATE], &columns(&aux), Order::First)?;
    let mut g_state = OutputGrads::zeros(&state);

    let q_ode = big_t / n_t as f64;
    for j in 0..n_t {
        let r = h_slope[j] + 2.0 * mu * state.first(0, j);
        terms[1] += q_ode * r * r;
        let g = 2.0 * w[1] * q_ode * r;
        g_scalar.first[0][j] += g;
        g_state.first[0][j] += g * 2.0 * mu;
    }

    let q_b = big_t / n_b as f64;
    let boundary_control = match problem {
        ControlProblem::FreeBoundary(_) => Some(Tape::forward(&nets[CONTROL], &row(&colloc.boundary_t), Order::Value)?),
        ControlProblem::Linearized(_) => None,
    };
    let mut g_boundary_control = boundary_control.as_ref().map(OutputGrads::zeros);
    for i in 0..n_b {
        let (l, r) = (left0 + i, right0 + i);
        let right = state.value(r);
        let left = match &boundary_control {
            Some(u) => state.first(0, l) - u.value(i),
            None => state.value(l),
        };
        terms[2] += q_b * (left * left + right * right);
        let c = 2.0 * w[2] * q_b;
        g_state.value[r] += c * right;
        match g_boundary_control.as_mut() {
            Some(gu) => {
                g_state.first[0][l] += c * left;
                gu.value[i] -= c * left;
            }
            None => g_state.value[l] += c * left,
        }
    }

    let (z0, scalar0, scalar_target) = match problem {
        ControlProblem::Linearized(p) => (p.z0, p.k0, 0.0),
        ControlProblem::FreeBoundary(p) => (p.psi0, p.h0, p.h_target),
    };
    let q_0 = omega_len / colloc.initial_x.len() as f64;
    for (i, &x) in colloc.initial_x.iter().enumerate() {
        let d = state.value(init0 + i) - z0.value(x);
        terms[3] += q_0 * d * d;
        g_state.value[init0 + i] += 2.0 * w[3] * q_0 * d;
    }
    let q_term = omega_len / colloc.terminal_x.len() as f64;
    for i in 0..colloc.terminal_x.len() {
        let z = state.value(term0 + i);
        terms[5] += q_term * z * z;
        g_state.value[term0 + i] += 2.0 * w[5] * q_term * z;
    }
    let d0 = h[n_t] - scalar0;
    let d_end = h[n_t + 1] - scalar_target;
    terms[4] = d0.abs();
    terms[6] = d_end.abs();
    g_scalar.value[n_t] += w[4] * sign(d0);
    g_scalar.value[n_t + 1] += w[6] * sign(d_end);

    if let Some((i, _)) = terms.iter().enumerate().find(|(_, t)| !t.is_finite()) {
        return Err(Error::NonFinite(format!("loss term {}", TERM_NAMES[i])));
    }
    if let Some(g) = grads.as_mut() {
        state.backward(&nets[STATE], &g_state, &mut g[STATE])?;
        scalar.backward(&nets[SCALAR], &g_scalar, &mut g[SCALAR])?;
        if let (Some(tape), Some(gu)) = (&boundary_control, &g_boundary_control) {
            tape.backward(&nets[CONTROL], gu, &mut g[CONTROL])?;
        }
    }
    Ok((LossBreakdown::from_terms(terms, w), grads))
}

/// Evaluates every loss term for networks `[state, scalar, control]`.
pub fn assemble_loss(
    nets: &[Mlp],
    colloc: &CollocationSet,
    weights: &LossWeights,
    problem: &ControlProblem,
    policy: ExecPolicy,
) -> Result<LossBreakdown> {
    evaluate(nets, colloc, weights, problem, policy, false).map(|(b, _)| b)
}

/// Loss terms plus the gradient of the weighted total for each network.
pub fn loss_and_gradient(
    nets: &[Mlp],
    colloc: &CollocationSet,
    weights: &LossWeights,
    problem: &ControlProblem,
    policy: ExecPolicy,
) -> Result<(LossBreakdown, Vec<Mlp>)> {
    evaluate(nets, colloc, weights, problem, policy, true).map(|(b, g)| (b, g.expect("gradient requested")))
}

/// The weighted total as an [`Objective`] over `[state, scalar, control]`.
#[derive(Debug, Clone)]
pub struct PinnObjective {
    pub colloc: CollocationSet,
    pub weights: LossWeights,
    pub problem: ControlProblem,
    pub policy: ExecPolicy,
}

impl Objective for PinnObjective {
    fn evaluate(&self, nets: &[Mlp], grads: Option<&mut [Mlp]>) -> Result<f64> {
        match grads {
            None => assemble_loss(nets, &self.colloc, &self.weights, &self.problem, self.policy).map(|b| b.total),
            Some(acc) => {
                let (b, g) = loss_and_gradient(nets, &self.colloc, &self.weights, &self.problem, self.policy)?;
                acc.iter_mut().zip(&g).for_each(|(a, gi)| a.add_assign(gi));
                Ok(b.total)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{finite_difference_gradient, param_gradient};
    use crate::pinn::{sample_collocation, CollocationCounts, FreeBoundarySpec, InitialProfile, LinearizedSpec};

    fn linearized(z0: InitialProfile, k0: f64) -> ControlProblem {
        ControlProblem::Linearized(LinearizedSpec { z0, k0, ..Default::default() })
    }

    fn zero_nets(problem: &ControlProblem) -> Vec<Mlp> {
        vec![
            Mlp::zeros(&[2, 3, 1]).unwrap(),
            Mlp::zeros(&[1, 3, 1]).unwrap(),
            Mlp::zeros(&[problem.control_inputs(), 3, 1]).unwrap(),
        ]
    }

    #[test]
    fn penalty_values() {
        assert!(nonneg_penalty(1.0, 100.0) < 1e-80);
        assert!((nonneg_penalty(0.0, 100.0) - (2f64.ln() / 100.0).powi(2)).abs() < 1e-18);
        assert!((nonneg_penalty(-0.5, 100.0) - 0.25).abs() < 1e-12);
        assert!(nonneg_penalty(-1e6, 100.0).is_finite());
    }

    #[test]
    fn penalty_derivative_matches_difference_quotient() {
        for &z in &[-0.3, -0.01, 0.0, 0.004, 0.2] {
            let h = 1e-7;
            let fd = (nonneg_penalty(z + h, 100.0) - nonneg_penalty(z - h, 100.0)) / (2.0 * h);
            assert!((fd - nonneg_penalty_derivative(z, 100.0)).abs() < 1e-7);
        }
    }

    #[test]
    fn zero_networks_leave_only_the_penalty() {
        let p = linearized(InitialProfile::Zero, 0.0);
        let set = sample_collocation((-1.0, 1.0), 1.0, CollocationCounts::uniform(7), 3, 0).unwrap();
        let b = assemble_loss(&zero_nets(&p), &set, &LossWeights::default(), &p, ExecPolicy::Sequential).unwrap();
        let expected = 2.0 * (2f64.ln() / 100.0).powi(2);
        assert!((b.nonneg - expected).abs() < 1e-15);
        assert!((expected - 9.6e-5).abs() < 1e-6);
        assert_eq!(b.terms()[..7], [0.0; 7]);
    }

    #[test]
    fn scalar_terms_for_constant_k() {
        let p = linearized(InitialProfile::HalfSine, -0.5);
        let mut nets = zero_nets(&p);
        nets[SCALAR].biases[1][0] = -0.5;
        let set = sample_collocation((-1.0, 1.0), 1.0, CollocationCounts::uniform(5), 3, 0).unwrap();
        let b = assemble_loss(&nets, &set, &LossWeights::default(), &p, ExecPolicy::Sequential).unwrap();
        assert_eq!(b.init_scalar, 0.0);
        assert_eq!(b.term_scalar, 0.5);
    }

    #[test]
    fn single_point_hand_computation() {
        // One hidden unit per network: z = a tanh(x + t) , v = c, k = d t.
        let p = linearized(InitialProfile::Zero, 0.0);
        let mut state = Mlp::zeros(&[2, 1, 1]).unwrap();
        state.weights[0][[0, 0]] = 1.0;
        state.weights[0][[0, 1]] = 1.0;
        state.weights[1][[0, 0]] = 0.4;
        let mut scalar = Mlp::zeros(&[1, 1]).unwrap();
        scalar.weights[0][[0, 0]] = 0.3;
        let mut control = Mlp::zeros(&[2, 1]).unwrap();
        control.biases[0][0] = 0.2;
        let set = CollocationSet {
            domain: (-1.0, 1.0),
            final_time: 1.0,
            x_draws: vec![-0.5],
            t_draws: vec![0.25],
            boundary_t: vec![0.5],
            initial_x: vec![0.1],
            terminal_x: vec![-0.2],
            seed: 0,
        };
        let weights = LossWeights { w: [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], beta_pen: 100.0 };
        let b = assemble_loss(&[state, scalar, control], &set, &weights, &p, ExecPolicy::Sequential).unwrap();

        let a = 0.4;
        let z = |x: f64, t: f64| a * (x + t).tanh();
        let zx = |x: f64, t: f64| a * (1.0 - (x + t).tanh().powi(2));
        let zxx = |x: f64, t: f64| -2.0 * a * (x + t).tanh() * (1.0 - (x + t).tanh().powi(2));
        let (x, t) = (-0.5, 0.25);
        let r = zx(x, t) - zxx(x, t) - z(x, t) - 0.2;
        let pde = 2.0 * r * r;
        let ode = (0.3 + 2.0 * 0.5 * zx(1.0, 0.25)).powi(2);
        let bnd = z(-1.0, 0.5).powi(2) + z(1.0, 0.5).powi(2);
        let init = 2.0 * z(0.1, 0.0).powi(2);
        let term = 2.0 * z(-0.2, 1.0).powi(2);
        let neg = 2.0 * nonneg_penalty(z(x, t), 100.0);
        let expected = pde + 2.0 * ode + 3.0 * bnd + 4.0 * init + 5.0 * 0.0 + 6.0 * term + 7.0 * 0.3 + 8.0 * neg;
        assert!((b.total - expected).abs() < 1e-12, "{} vs {expected}", b.total);
    }

    #[test]
    fn total_is_weighted_sum_and_weights_are_linear() {
        let p = linearized(InitialProfile::HalfSine, -0.5);
        let nets = vec![
            Mlp::glorot(&[2, 6, 1], 1, 0).unwrap(),
            Mlp::glorot(&[1, 6, 1], 1, 1).unwrap(),
            Mlp::glorot(&[2, 6, 1], 1, 2).unwrap(),
        ];
        let set = sample_collocation((-1.0, 1.0), 1.0, CollocationCounts::uniform(6), 3, 0).unwrap();
        let base = assemble_loss(&nets, &set, &LossWeights::default(), &p, ExecPolicy::Sequential).unwrap();
        let sum: f64 = base.weighted().iter().sum();
        assert!((base.total - sum).abs() <= 1e-12 * base.total.max(1.0));
        let mut doubled = LossWeights::default();
        doubled.w[0] = 2.0;
        let b2 = assemble_loss(&nets, &set, &doubled, &p, ExecPolicy::Sequential).unwrap();
        assert_eq!(b2.int_pde, base.int_pde);
        assert!((b2.total - base.total - base.int_pde).abs() <= 1e-12 * base.total.max(1.0));
        assert!(base.terms().iter().all(|&t| t >= 0.0));
    }

    fn gradient_check(problem: ControlProblem, seed: u64) {
        let nets = vec![
            Mlp::glorot(&[2, 5, 4, 1], seed, 0).unwrap(),
            Mlp::glorot(&[1, 5, 1], seed, 1).unwrap(),
            Mlp::glorot(&[problem.control_inputs(), 4, 1], seed, 2).unwrap(),
        ];
        let counts = CollocationCounts { n_x: 5, n_t: 2, n_boundary: 3, n_initial: 4, n_terminal: 4 };
        let colloc = sample_collocation(problem.domain(), problem.final_time(), counts, seed, 0).unwrap();
        let obj = PinnObjective { colloc, weights: LossWeights::default(), problem, policy: ExecPolicy::Sequential };
        let (_, analytic) = param_gradient(&obj, &nets).unwrap();
        let fd = finite_difference_gradient(&obj, &nets, 1e-5).unwrap();
        for (a, f) in analytic.iter().zip(&fd) {
            for (x, y) in a.flat().iter().zip(f.flat()) {
                assert!((x - y).abs() <= 1e-5 * (1.0 + x.abs()), "analytic {x} fd {y}");
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences_linearized() {
        gradient_check(linearized(InitialProfile::HalfSine, -0.5), 21);
    }

    #[test]
    fn gradient_matches_finite_differences_free_boundary() {
        gradient_check(ControlProblem::FreeBoundary(FreeBoundarySpec::default()), 22);
    }

    #[test]
    fn mismatched_networks_rejected() {
        let p = ControlProblem::FreeBoundary(FreeBoundarySpec::default());
        let set = sample_collocation((0.0, 1.0), 1.0, CollocationCounts::uniform(3), 1, 0).unwrap();
        let nets = zero_nets(&linearized(InitialProfile::Zero, 0.0));
        assert!(assemble_loss(&nets, &set, &LossWeights::default(), &p, ExecPolicy::Sequential).is_err());
        let wrong_region = sample_collocation((-1.0, 1.0), 1.0, CollocationCounts::uniform(3), 1, 0).unwrap();
        assert!(
            assemble_loss(&zero_nets(&p), &wrong_region, &LossWeights::default(), &p, ExecPolicy::Sequential).is_err()
        );
    }
}
