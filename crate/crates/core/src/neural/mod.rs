//! Tanh multilayer perceptrons with exact input derivatives and
//! reverse-mode parameter gradients.
//!
//! A network maps `d_in` inputs to one output through hidden `tanh` layers
//! and a linear output layer. Input derivatives (all first derivatives and
//! the second derivative along input 0) are obtained by pushing derivative
//! channels through every layer alongside the values; see [`Tape`]. The
//! parameter gradient of any scalar built from those channels is computed by
//! running the same graph backwards.

mod adam;
mod check;
mod mlp;
mod objective;
mod tape;

pub use adam::{AdamConfig, AdamState};
pub use check::{input_derivative_check, InputDerivativeCheck};
pub use mlp::{Checkpoint, DerivativeBundle, Mlp};
pub use objective::{finite_difference_gradient, param_gradient, Objective};
pub use tape::{Order, OutputGrads, Tape};

/// `tanh(a) = 1 - 2 / (e^{2a} + 1)`, saturating to `+-1`.
///
/// The exponential is evaluated branch-free (round-to-nearest range
/// reduction and a degree-13 Taylor polynomial on `|r| <= ln 2 / 2`) so the
/// activation loops vectorise. Absolute error is a few ulp of 1.
#[inline(always)]
pub fn tanh(a: f64) -> f64 {
    1.0 - 2.0 / (exp_moderate((2.0 * a).clamp(-80.0, 80.0)) + 1.0)
}

/// `e^x` for `|x| <= 80`.
#[inline(always)]
fn exp_moderate(x: f64) -> f64 {
    const LOG2E: f64 = std::f64::consts::LOG2_E;
    const LN2_HI: f64 = 6.931_471_803_691_238e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    // Adding 1.5 * 2^52 rounds to an integer held in the low mantissa bits.
    const SHIFT: f64 = 6_755_399_441_055_744.0;
    let shifted = x * LOG2E + SHIFT;
    let n = shifted - SHIFT;
    let n_bits = (shifted.to_bits() as i64).wrapping_sub(SHIFT.to_bits() as i64);
    let r = (x - n * LN2_HI) - n * LN2_LO;
    let mut p = 1.0 / 6_227_020_800.0;
    for c in [
        1.0 / 479_001_600.0,
        1.0 / 39_916_800.0,
        1.0 / 3_628_800.0,
        1.0 / 362_880.0,
        1.0 / 40_320.0,
        1.0 / 5_040.0,
        1.0 / 720.0,
        1.0 / 120.0,
        1.0 / 24.0,
        1.0 / 6.0,
        0.5,
        1.0,
        1.0,
    ] {
        p = p * r + c;
    }
    p * f64::from_bits(((n_bits + 1023) << 52) as u64)
}
