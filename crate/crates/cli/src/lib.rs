//! Experiment runner for the `moddev` command: loads a JSON configuration,
//! evaluates bounds, exact error probabilities, Monte Carlo estimates or the
//! moderate-deviations sweep over a grid of block lengths, and writes the
//! result as CSV or JSON.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::path::PathBuf;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use table::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Bounds,
    Exact,
    Simulate,
    MdpSweep,
}

pub fn run_command(command: Command, cfg: &ExperimentConfig) -> Result<Table> {
    match command {
        Command::Bounds => commands::cmd_bounds(cfg),
        Command::Exact => commands::cmd_exact(cfg),
        Command::Simulate => commands::cmd_simulate(cfg),
        Command::MdpSweep => commands::cmd_mdp_sweep(cfg),
    }
}

/// Renders `table` and writes it to `out`, or to the config's output path,
/// or to stdout.
pub fn emit(table: &Table, cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<()> {
    let text = table.render(cfg.output.format);
    match out.or_else(|| cfg.output.path.clone()) {
        Some(path) => std::fs::write(&path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}
