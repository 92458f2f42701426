use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use moddev_cli::config::BUDGET_ENV;
use moddev_cli::{emit, run_command, Command, ExperimentConfig, Result};

#[derive(Debug, Parser)]
#[command(
    name = "moddev",
    version,
    about = "Moderate-deviations bounds for likelihood-ratio tests"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Azuma, refined and expanded bounds per block length.
    Bounds(Common),
    /// Exact error probabilities by the method of types.
    Exact(Common),
    /// Importance-sampled estimates next to the exact values.
    Simulate(Common),
    /// Scaled exact exponent against the moderate-deviations limits.
    MdpSweep(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides `output.path` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit probabilities instead of natural-log probabilities.
    #[arg(long)]
    linear: bool,
}

fn run(command: Command, args: Common) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    cfg.apply_budget_override(std::env::var(BUDGET_ENV).ok().as_deref())?;
    let mut table = run_command(command, &cfg)?;
    if args.linear {
        table.linearize();
    }
    emit(&table, &cfg, args.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Bounds(a) => (Command::Bounds, a),
        Sub::Exact(a) => (Command::Exact, a),
        Sub::Simulate(a) => (Command::Simulate, a),
        Sub::MdpSweep(a) => (Command::MdpSweep, a),
    };
    match run(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("moddev: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
