//! TOML experiment configuration.
//!
//! Every key is optional; omitted keys take the defaults listed in the
//! README. Unknown keys are rejected so typos do not silently fall back to
//! defaults.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fisher_stefan::neural::AdamConfig;
use fisher_stefan::pinn::{
    CollocationCounts, FreeBoundarySpec, LinearizedSpec, LossWeights, NetworkShapes, TrainConfig,
};
use fisher_stefan::ExecPolicy;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Experiment1,
    Experiment2,
    Forward,
    Adjoint,
    Duality,
    WeightsCheck,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Experiment1 => "experiment1",
            Self::Experiment2 => "experiment2",
            Self::Forward => "forward",
            Self::Adjoint => "adjoint",
            Self::Duality => "duality",
            Self::WeightsCheck => "weights-check",
            Self::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Informational; the subcommand given on the command line wins.
    pub which: Option<Command>,
    pub seed: u64,
    pub output: PathBuf,
    pub experiment1: LinearizedSpec,
    pub experiment2: FreeBoundarySpec,
    pub training: TrainingConfig,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    pub forward: ForwardConfig,
    pub diagnostics: DiagnosticsConfig,
    pub verify: VerifyConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            which: None,
            seed: 2024,
            output: PathBuf::from("runs"),
            experiment1: LinearizedSpec::default(),
            experiment2: FreeBoundarySpec::default(),
            training: TrainingConfig::default(),
            grid: GridConfig::default(),
            tolerances: Tolerances::default(),
            forward: ForwardConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

/// PINN hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
    /// Hidden layer widths of each of the three networks.
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Spatial draws of the interior product grid.
    pub n_x: usize,
    /// Time draws of the interior product grid (also the ODE points).
    pub n_t: usize,
    pub n_boundary: usize,
    pub n_initial: usize,
    pub n_terminal: usize,
    /// Per-direction count of the test set; every test region gets this many
    /// points and the interior gets `n_test^2`.
    pub n_test: usize,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub w5: f64,
    pub w6: f64,
    pub w7: f64,
    pub w8: f64,
    pub beta_pen: f64,
    pub parallel: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        let counts = CollocationCounts::uniform(100);
        Self {
            epochs: 20_000,
            hidden: NetworkShapes::default().hidden,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            n_x: counts.n_x,
            n_t: counts.n_t,
            n_boundary: counts.n_boundary,
            n_initial: counts.n_initial,
            n_terminal: counts.n_terminal,
            n_test: 10,
            w1: 1.0,
            w2: 1.0,
            w3: 1.0,
            w4: 1.0,
            w5: 1.0,
            w6: 1.0,
            w7: 1.0,
            w8: 1.0,
            beta_pen: LossWeights::default().beta_pen,
            parallel: true,
        }
    }
}

impl TrainingConfig {
    pub fn to_train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            seed,
            shapes: NetworkShapes { hidden: self.hidden.clone() },
            adam: AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, eps: self.eps },
            weights: LossWeights {
                w: [self.w1, self.w2, self.w3, self.w4, self.w5, self.w6, self.w7, self.w8],
                beta_pen: self.beta_pen,
            },
            train_counts: CollocationCounts {
                n_x: self.n_x,
                n_t: self.n_t,
                n_boundary: self.n_boundary,
                n_initial: self.n_initial,
                n_terminal: self.n_terminal,
            },
            test_counts: CollocationCounts::uniform(self.n_test),
            policy: if self.parallel { ExecPolicy::Parallel } else { ExecPolicy::Sequential },
        }
    }
}

/// Finite-difference verification grid and export sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Spatial intervals on `[-1, 1]` for the linearized verification.
    pub linearized_intervals: usize,
    /// Spatial intervals on `[0, 1]` for the nonlinear verification.
    pub free_boundary_intervals: usize,
    pub steps: usize,
    /// Nodes per direction of the exported network fields.
    pub sample_nx: usize,
    pub sample_nt: usize,
    /// Times at which physical densities are exported.
    pub density_times: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            linearized_intervals: 200,
            free_boundary_intervals: 100,
            steps: 400,
            sample_nx: 101,
            sample_nt: 101,
            density_times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

/// Pass/fail bounds applied by the experiment subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Bound on `max |z(., T)|` relative to `max |z0|`.
    pub linearized_state: f64,
    pub linearized_scalar: f64,
    pub min_density: f64,
    pub free_boundary_state: f64,
    pub free_boundary_scalar: f64,
    /// Allowed factor between a loss term and its reference magnitude.
    pub table_factor: f64,
    pub generalization: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            linearized_state: 0.05,
            linearized_scalar: 0.05,
            min_density: -0.02,
            free_boundary_state: 0.07,
            free_boundary_scalar: 0.07,
            table_factor: 10.0,
            generalization: 0.1,
        }
    }
}

/// Manufactured-solution refinement studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForwardConfig {
    /// Spatial intervals of the linearized study; `steps = 2 * intervals`.
    pub linearized_intervals: Vec<usize>,
    /// Spatial intervals of the nonlinear study; `steps = intervals`.
    pub nonlinear_intervals: Vec<usize>,
    pub max_error: f64,
    pub ratio_range: (f64, f64),
    pub min_order: f64,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self {
            linearized_intervals: vec![100, 200],
            nonlinear_intervals: vec![20, 40],
            max_error: 1e-3,
            ratio_range: (3.0, 5.0),
            min_order: 1.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub duality_intervals: Vec<usize>,
    pub min_duality_ratio: f64,
    pub lambda: f64,
    pub s: f64,
    pub kappa: f64,
    pub omega_prime: (f64, f64),
    pub t_samples: usize,
    /// Weight functions are tabulated on this many nodes per direction.
    pub weight_nx: usize,
    pub weight_nt: usize,
    pub tie_tolerance: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            duality_intervals: vec![100, 200],
            min_duality_ratio: 1.8,
            lambda: 2.0,
            s: 2.0,
            kappa: 1.5,
            omega_prime: (-0.6, -0.4),
            t_samples: 1000,
            weight_nx: 201,
            weight_nt: 101,
            tie_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Experiment1,
    Experiment2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub problem: ProblemKind,
    /// Directory holding `control.json`; without it the zero control is used.
    pub checkpoints: Option<PathBuf>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { problem: ProblemKind::Experiment1, checkpoints: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.training.epochs = 7;
        cfg.experiment1.k0 = -0.25;
        cfg.verify.checkpoints = Some(PathBuf::from("ckpt"));
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let cfg = ExperimentConfig::from_toml("[training]\nepochs = 5\nw3 = 2.0\n[experiment2]\nh0 = 0.7\n").unwrap();
        assert_eq!(cfg.training.epochs, 5);
        assert_eq!(cfg.training.n_x, 100);
        let train = cfg.training.to_train_config(cfg.seed);
        assert_eq!(train.weights.w[2], 2.0);
        assert_eq!(cfg.experiment2.h0, 0.7);
        assert_eq!(cfg.experiment2.mu, 0.5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("[training]\nepoch = 5\n").is_err());
    }

    #[test]
    fn defaults_carry_the_experiment_data() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.experiment1.mu, 0.5);
        assert_eq!(cfg.experiment1.k0, -0.5);
        assert_eq!(cfg.experiment1.omega, (-0.9, -0.1));
        assert_eq!(cfg.experiment2.h0, 0.5);
        let train = cfg.training.to_train_config(cfg.seed);
        assert_eq!(train.train_counts.n_x * train.train_counts.n_t, 10_000);
        assert_eq!(train.test_counts.n_x * train.test_counts.n_t, 100);
        assert_eq!(train.shapes.hidden, vec![50, 50]);
    }
}
