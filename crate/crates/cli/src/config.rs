//! Experiment configuration: a single JSON document.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "hypothesis": { "p1": [0.5, 0.5], "p2": [0.25, 0.75], "priors": [0.5, 0.5] },
//!   "policy": { "kind": "moderate", "eta": 0.75, "eps1": 0.1, "eps2": 0.1 },
//!   "n_grid": [1, 10, 100],
//!   "mc": { "samples": 100000, "seed": 7, "streams": 4, "tilt": "auto" },
//!   "output": { "format": "csv", "path": "bounds.csv" },
//!   "budget": 10000000
//! }
//! ```
//!
//! `priors`, `mc`, `output` and `budget` are optional. Unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use moddev_core::exact::EnumerationBudget;
use moddev_core::hypotest::{bind_thresholds, ThresholdPolicy};
use moddev_core::montecarlo::McConfig;
use moddev_core::{HypothesisPair, Pmf};
use serde::Deserialize;

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable overriding the enumeration budget.
pub const BUDGET_ENV: &str = "MODDEV_BUDGET";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawHypothesis {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    #[serde(default = "equal_priors")]
    pub priors: [f64; 2],
}

fn equal_priors() -> [f64; 2] {
    [0.5, 0.5]
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: Format,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema: u32,
    pub hypothesis: RawHypothesis,
    pub policy: ThresholdPolicy,
    pub n_grid: Vec<u64>,
    pub mc: Option<McConfig>,
    #[serde(default)]
    pub output: OutputSpec,
    pub budget: Option<u64>,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub hypothesis: HypothesisPair,
    pub policy: ThresholdPolicy,
    pub n_grid: Vec<u64>,
    pub mc: Option<McConfig>,
    pub output: OutputSpec,
    pub budget: EnumerationBudget,
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(config_err)?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        if raw.schema != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema {}, expected {SCHEMA_VERSION}",
                raw.schema
            )));
        }
        let p1 = Pmf::new(raw.hypothesis.p1).map_err(config_err)?;
        let p2 = Pmf::new(raw.hypothesis.p2).map_err(config_err)?;
        let [prior1, prior2] = raw.hypothesis.priors;
        let hypothesis = HypothesisPair::new(p1, p2, prior1, prior2).map_err(config_err)?;

        raw.policy.validate().map_err(config_err)?;
        if let ThresholdPolicy::Fixed { .. } = raw.policy {
            // Fixed thresholds do not depend on n; check them once.
            bind_thresholds(&raw.policy, &hypothesis, 1).map_err(config_err)?;
        }

        if raw.n_grid.is_empty() {
            return Err(CliError::Config("n_grid must not be empty".into()));
        }
        if raw.n_grid[0] == 0 || raw.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(
                "n_grid must hold positive, strictly increasing block lengths".into(),
            ));
        }
        if let Some(mc) = &raw.mc {
            mc.validate().map_err(config_err)?;
        }
        Ok(Self {
            hypothesis,
            policy: raw.policy,
            n_grid: raw.n_grid,
            mc: raw.mc,
            output: raw.output,
            budget: EnumerationBudget(raw.budget.unwrap_or(moddev_core::exact::DEFAULT_BUDGET)),
        })
    }

    /// Applies `MODDEV_BUDGET` when it is set.
    pub fn apply_budget_override(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            let parsed = v
                .trim()
                .parse::<u64>()
                .map_err(|e| CliError::Config(format!("{BUDGET_ENV}={v:?}: {e}")))?;
            self.budget = EnumerationBudget(parsed);
        }
        Ok(())
    }
}
