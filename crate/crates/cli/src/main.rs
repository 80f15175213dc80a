use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use stefan_control::{run, Command, ExperimentConfig};

/// Control synthesis and verification for the Fisher-Stefan model.
#[derive(Debug, Parser)]
#[command(version = stefan_control::output::VERSION)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML configuration; defaults apply to every omitted key.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Output directory; artifacts go to `<out>/<command>/`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the loss every this many epochs (0 disables).
    #[arg(long, default_value_t = 500)]
    log_every: usize,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    config.which = Some(cli.command);
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(epochs) = cli.epochs {
        config.training.epochs = epochs;
    }
    if let Some(out) = &cli.out {
        config.output = out.clone();
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let every = cli.log_every;
    let mut progress = |epoch: usize, b: &fisher_stefan::pinn::LossBreakdown| {
        if every > 0 && epoch.is_multiple_of(every) {
            eprintln!("epoch {epoch:>6}  loss {:.4e}", b.total);
        }
    };
    match run(cli.command, &config, &mut progress) {
        Ok(checks) => {
            for c in checks.iter() {
                println!("{c}");
            }
            if checks.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
