//! Experiment driver for Fisher-Stefan boundary control.
//!
//! Each [`Command`] writes its artifacts to `<output>/<command>/` and returns
//! the list of checks it evaluated; the binary exits with status 0 only when
//! every check passed.

pub mod checks;
pub mod config;
pub mod diagnostics;
pub mod experiments;
pub mod output;
pub mod verify;

use anyhow::Result;
use fisher_stefan::pinn::LossBreakdown;

pub use checks::{Check, CheckList};
pub use config::{Command, ExperimentConfig};
use output::RunDir;

/// Runs one subcommand with the given configuration.
pub fn run(
    command: Command,
    config: &ExperimentConfig,
    progress: &mut dyn FnMut(usize, &LossBreakdown),
) -> Result<CheckList> {
    let dir = RunDir::create(&config.output, command)?;
    match command {
        Command::Experiment1 => Ok(experiments::run_experiment1(config, &dir, progress)?.checks),
        Command::Experiment2 => Ok(experiments::run_experiment2(config, &dir, progress)?.checks),
        Command::Forward => diagnostics::run_forward(config, &dir),
        Command::Adjoint => diagnostics::run_adjoint(config, &dir),
        Command::Duality => diagnostics::run_duality(config, &dir),
        Command::WeightsCheck => diagnostics::run_weights_check(config, &dir),
        Command::Verify => diagnostics::run_verify(config, &dir),
    }
}
