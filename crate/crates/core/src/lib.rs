//! Concentration bounds, exact oracles and Monte Carlo estimators for the
//! log-likelihood-ratio test with moderate-deviations thresholds.
//!
//! * [`types`]: distributions, hypothesis pairs, divergences and LLR
//!   martingale statistics.
//! * [`concentration`]: Azuma's inequality, its variance-aware refinement and
//!   the moderate-deviations exponents derived from it.
//! * [`hypotest`]: the two-threshold decision rule with erasures.
//! * [`exact`]: exact LLR laws by type-class enumeration.
//! * [`montecarlo`]: plain and importance-sampled tail estimates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concentration;
pub mod error;
pub mod exact;
pub mod hypotest;
pub mod montecarlo;
pub mod types;

pub use error::{Error, Result};
pub use types::{Hypothesis, HypothesisPair, LlrProfile, Pmf};
