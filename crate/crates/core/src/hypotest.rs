//! Two-threshold LLR test with an erasure region.
//!
//! The test decides `H1` when `L > n * hi`, `H2` when `L < n * lo`, and
//! declares an erasure otherwise. `hi` and `lo` are either fixed or follow the
//! moderate-deviations schedule
//!
//! ```text
//! hi(n) =  D(P1||P2) - eps1 * n^-(1-eta)
//! lo(n) = -D(P2||P1) + eps2 * n^-(1-eta)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{llr_profile, HypothesisPair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdPolicy {
    Fixed { lambda_hi: f64, lambda_lo: f64 },
    Moderate { eta: f64, eps1: f64, eps2: f64 },
}

impl ThresholdPolicy {
    /// Checks the parameter ranges that do not depend on a hypothesis pair.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdPolicy::Fixed {
                lambda_hi,
                lambda_lo,
            } => {
                if !lambda_hi.is_finite() || !lambda_lo.is_finite() || lambda_lo > lambda_hi {
                    return Err(Error::ParameterOutOfRange(format!(
                        "fixed thresholds need finite lo <= hi, got lo = {lambda_lo}, hi = {lambda_hi}"
                    )));
                }
            }
            ThresholdPolicy::Moderate { eta, eps1, eps2 } => {
                if !(eta > 0.5 && eta < 1.0) {
                    return Err(Error::ParameterOutOfRange(format!(
                        "eta = {eta} must lie in (1/2, 1)"
                    )));
                }
                if !(eps1 > 0.0 && eps1.is_finite()) || !(eps2 > 0.0 && eps2.is_finite()) {
                    return Err(Error::ParameterOutOfRange(format!(
                        "eps1 = {eps1} and eps2 = {eps2} must be positive"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_moderate(&self) -> bool {
        matches!(self, ThresholdPolicy::Moderate { .. })
    }
}

/// Per-symbol thresholds in force at block length `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundThresholds {
    pub n: u64,
    pub hi: f64,
    pub lo: f64,
}

impl BoundThresholds {
    pub fn hi_total(&self) -> f64 {
        self.n as f64 * self.hi
    }

    pub fn lo_total(&self) -> f64 {
        self.n as f64 * self.lo
    }
}

pub fn bind_thresholds(
    policy: &ThresholdPolicy,
    hyp: &HypothesisPair,
    n: u64,
) -> Result<BoundThresholds> {
    if n == 0 {
        return Err(Error::ParameterOutOfRange(
            "block length must be positive".into(),
        ));
    }
    policy.validate()?;
    let prof = llr_profile(hyp);
    match *policy {
        ThresholdPolicy::Fixed {
            lambda_hi,
            lambda_lo,
        } => {
            if !(-prof.d21 < lambda_lo && lambda_lo <= lambda_hi && lambda_hi < prof.d12) {
                return Err(Error::FixedThresholdOutOfRange {
                    lo: lambda_lo,
                    hi: lambda_hi,
                    lower_limit: -prof.d21,
                    upper_limit: prof.d12,
                });
            }
            Ok(BoundThresholds {
                n,
                hi: lambda_hi,
                lo: lambda_lo,
            })
        }
        ThresholdPolicy::Moderate { eta, eps1, eps2 } => {
            let shrink = (n as f64).powf(-(1.0 - eta));
            let margin = (eps1 + eps2) * shrink;
            let span = prof.d12 + prof.d21;
            if margin > span {
                return Err(Error::ThresholdCrossing { n, margin, span });
            }
            let hi = prof.d12 - eps1 * shrink;
            let lo = (-prof.d21 + eps2 * shrink).min(hi);
            Ok(BoundThresholds { n, hi, lo })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    H1,
    H2,
    Erasure,
}

/// Applies the test to an observed LLR sum. Values exactly on a threshold
/// are erasures.
pub fn decide(llr_sum: f64, thresholds: &BoundThresholds) -> Decision {
    if llr_sum > thresholds.hi_total() {
        Decision::H1
    } else if llr_sum < thresholds.lo_total() {
        Decision::H2
    } else {
        Decision::Erasure
    }
}

/// Log-probabilities of the four tail events:
/// `alpha1 = P1(L <= n hi)`, `alpha2 = P1(L <= n lo)`,
/// `beta1 = P2(L >= n lo)`, `beta2 = P2(L >= n hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailLogProbs {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

/// Error and error-or-erasure probabilities, all as natural logs.
///
/// `pe1` mixes the error-or-erasure events, `pe2` the error events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorProbabilities {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub pe1: f64,
    pub pe2: f64,
}

/// `ln(e^a + e^b)` with `-inf` as the identity.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

pub fn assemble_probabilities(
    tails: &TailLogProbs,
    prior1: f64,
    prior2: f64,
) -> Result<ErrorProbabilities> {
    for v in [tails.alpha1, tails.alpha2, tails.beta1, tails.beta2] {
        if !(v <= 0.0) {
            return Err(Error::InvalidLogProbability(v));
        }
    }
    if !(prior1 > 0.0 && prior1 < 1.0 && prior2 > 0.0 && prior2 < 1.0) {
        return Err(Error::InvalidPriors { prior1, prior2 });
    }
    let (w1, w2) = (prior1.ln(), prior2.ln());
    let mix = |a: f64, b: f64| log_add_exp(w1 + a, w2 + b).min(0.0);
    Ok(ErrorProbabilities {
        alpha1: tails.alpha1,
        alpha2: tails.alpha2,
        beta1: tails.beta1,
        beta2: tails.beta2,
        pe1: mix(tails.alpha1, tails.beta1),
        pe2: mix(tails.alpha2, tails.beta2),
    })
}
