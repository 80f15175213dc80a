//! Physics-informed training of state, scalar and control networks.
//!
//! Two problem forms share the machinery:
//!
//! * [`ControlProblem::Linearized`]: perturbation `z(x, t)` on `[-1, 1]`
//!   around `psi_bar = 0`, `h_bar = 1`, scalar `k(t)`, distributed control
//!   `v(x, t)` acting on `omega`.
//! * [`ControlProblem::FreeBoundary`]: the fixed-domain state `psi(x, t)`
//!   on `[0, 1]`, `h(t) = L(t)^2` and a Neumann control `u(t)` at `x = 0`.
//!
//! Each form is driven to a terminal target by minimising the eight-term
//! loss of [`assemble_loss`] with full-batch ADAM.

mod collocation;
mod loss;
mod train;

pub use collocation::{sample_collocation, CollocationCounts, CollocationSet};
pub use loss::{
    assemble_loss, loss_and_gradient, nonneg_penalty, LossBreakdown, LossWeights, PinnObjective, TERM_NAMES,
};
pub use train::{generalization_error, train, NetworkShapes, Networks, TrainConfig, TrainReport};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Initial profiles used by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialProfile {
    /// `sin(pi x)` on `[0, 1]`, zero for `x < 0`.
    HalfSine,
    /// `sin(pi x)` everywhere.
    Sine,
    Zero,
}

impl InitialProfile {
    pub fn value(self, x: f64) -> f64 {
        match self {
            Self::HalfSine if x < 0.0 => 0.0,
            Self::HalfSine | Self::Sine => (std::f64::consts::PI * x).sin(),
            Self::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearizedSpec {
    pub mu: f64,
    pub final_time: f64,
    pub z0: InitialProfile,
    pub k0: f64,
    pub omega: (f64, f64),
}

impl Default for LinearizedSpec {
    fn default() -> Self {
        Self { mu: 0.5, final_time: 1.0, z0: InitialProfile::HalfSine, k0: -0.5, omega: (-0.9, -0.1) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FreeBoundarySpec {
    pub mu: f64,
    pub final_time: f64,
    pub psi0: InitialProfile,
    pub h0: f64,
    /// Target for `h(T)`; the state target is `psi(., T) = 0`.
    pub h_target: f64,
}

impl Default for FreeBoundarySpec {
    fn default() -> Self {
        Self { mu: 0.5, final_time: 1.0, psi0: InitialProfile::Sine, h0: 0.5, h_target: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum ControlProblem {
    Linearized(LinearizedSpec),
    FreeBoundary(FreeBoundarySpec),
}

impl ControlProblem {
    pub fn validate(&self) -> Result<()> {
        let (mu, t) = (self.mu(), self.final_time());
        if !(mu > 0.0 && t > 0.0) {
            return Err(Error::Config(format!("mu = {mu} and T = {t} must be positive")));
        }
        match self {
            Self::Linearized(p) => {
                let (a, b) = p.omega;
                if !(-1.0 < a && a < b && b < 0.0) {
                    return Err(Error::Config(format!("omega = ({a}, {b}) is not inside (-1, 0)")));
                }
            }
            Self::FreeBoundary(p) => {
                if !(p.h0 > 0.0 && p.h_target > 0.0) {
                    return Err(Error::Config("h0 and the h target must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn mu(&self) -> f64 {
        match self {
            Self::Linearized(p) => p.mu,
            Self::FreeBoundary(p) => p.mu,
        }
    }

    pub fn final_time(&self) -> f64 {
        match self {
            Self::Linearized(p) => p.final_time,
            Self::FreeBoundary(p) => p.final_time,
        }
    }

    /// Spatial interval of the state.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Self::Linearized(_) => (-1.0, 1.0),
            Self::FreeBoundary(_) => (0.0, 1.0),
        }
    }

    /// Input width of the control network (`(x, t)` or `t`).
    pub fn control_inputs(&self) -> usize {
        match self {
            Self::Linearized(_) => 2,
            Self::FreeBoundary(_) => 1,
        }
    }
}
