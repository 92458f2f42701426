//! Concentration bounds for martingales with bounded jumps.
//!
//! Two families are provided:
//!
//! * Azuma's inequality, `P(|X_n - X_0| >= r) <= 2 exp(-r^2 / (2 sum d_k^2))`.
//! * The refinement that also uses a bound `var` on the conditional variance
//!   of the jumps:
//!
//! ```text
//! P(|X_n - X_0| >= alpha n) <= 2 exp(-n D((delta + gamma)/(1 + gamma) || gamma/(1 + gamma)))
//! gamma = var / d^2,  delta = alpha / d
//! ```
//!
//! and the probability is zero outright when `delta > 1`.
//!
//! With moderate-deviations thresholds (`alpha = eps * n^-(1-eta)`) the
//! divergence is lower-bounded through [`lemma1_gap`], giving the closed-form
//! [`expanded_exponent_bound`] whose scaled exponent tends to
//! `-eps^2 / (2 var)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when checking `var <= d^2` on computed inputs.
const VARIANCE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Validity {
    Valid,
    /// `delta > 1`: the deviation is larger than any path can reach, so the
    /// probability is exactly zero.
    DeltaExceedsOne,
    /// `n < n0`: the expanded bound's derivation does not apply.
    BelowN0,
}

impl Validity {
    pub fn as_str(self) -> &'static str {
        match self {
            Validity::Valid => "valid",
            Validity::DeltaExceedsOne => "delta_exceeds_one",
            Validity::BelowN0 => "below_n0",
        }
    }
}

/// A probability bound as produced by its formula, plus the same value
/// capped at one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub raw_bound: f64,
    pub capped_bound: f64,
    /// Rate such that `raw_bound = c * exp(-n * exponent_per_n)`.
    pub exponent_per_n: f64,
    pub validity: Validity,
}

impl BoundReport {
    fn new(raw_bound: f64, exponent_per_n: f64, validity: Validity) -> Self {
        Self {
            raw_bound,
            capped_bound: raw_bound.min(1.0),
            exponent_per_n,
            validity,
        }
    }

    /// Natural log of the raw bound (`-inf` for a zero bound).
    pub fn log_raw(&self) -> f64 {
        self.raw_bound.ln()
    }
}

/// Per-step jump bounds for [`azuma_bound`].
#[derive(Debug, Clone, PartialEq)]
pub enum Increments {
    Uniform(f64),
    PerStep(Vec<f64>),
}

pub fn azuma_bound(
    n: u64,
    increments: &Increments,
    r: f64,
    one_sided: bool,
) -> Result<BoundReport> {
    if n == 0 {
        return Err(Error::ParameterOutOfRange("n must be positive".into()));
    }
    if !(r >= 0.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "deviation r = {r} must be >= 0"
        )));
    }
    let sum_sq = match increments {
        Increments::Uniform(d) => {
            if !(*d > 0.0) {
                return Err(Error::NonPositiveIncrementBound {
                    index: 0,
                    value: *d,
                });
            }
            n as f64 * d * d
        }
        Increments::PerStep(ds) => {
            if ds.len() as u64 != n {
                return Err(Error::IncrementCountMismatch {
                    expected: n as usize,
                    actual: ds.len(),
                });
            }
            let mut acc = 0.0;
            for (index, &d) in ds.iter().enumerate() {
                if !(d > 0.0) {
                    return Err(Error::NonPositiveIncrementBound { index, value: d });
                }
                acc += d * d;
            }
            acc
        }
    };
    let exponent = r * r / (2.0 * sum_sq);
    let lead = if one_sided { 1.0 } else { 2.0 };
    Ok(BoundReport::new(
        lead * (-exponent).exp(),
        exponent / n as f64,
        Validity::Valid,
    ))
}

/// Hypotheses of the refined bound: jump bound `d`, conditional variance
/// bound `var` and per-step deviation `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinedParams {
    d: f64,
    var: f64,
    gamma: f64,
    alpha: f64,
    delta: f64,
}

impl RefinedParams {
    pub fn new(d: f64, var: f64, alpha: f64) -> Result<Self> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::ParameterOutOfRange(format!(
                "jump bound d = {d} must be positive"
            )));
        }
        if !(var > 0.0) || var > d * d * (1.0 + VARIANCE_SLACK) {
            return Err(Error::ParameterOutOfRange(format!(
                "variance {var} must lie in (0, d^2 = {}]",
                d * d
            )));
        }
        if !(alpha >= 0.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "deviation alpha = {alpha} must be >= 0"
            )));
        }
        let var = var.min(d * d);
        Ok(Self {
            d,
            var,
            gamma: var / (d * d),
            alpha,
            delta: alpha / d,
        })
    }

    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn var(&self) -> f64 {
        self.var
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// `D((delta + gamma)/(1 + gamma) || gamma/(1 + gamma))` for `delta in [0, 1]`.
///
/// Expanded as `[(gamma + delta) ln(1 + delta/gamma) + (1 - delta) ln(1 - delta)] / (1 + gamma)`,
/// which avoids the cancellation of the two-term form when `delta` is small.
pub fn refined_exponent(delta: f64, gamma: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&delta));
    let head = (gamma + delta) * (delta / gamma).ln_1p();
    let tail = if delta < 1.0 {
        (1.0 - delta) * (-delta).ln_1p()
    } else {
        0.0
    };
    ((head + tail) / (1.0 + gamma)).max(0.0)
}

pub fn refined_bound(n: u64, params: &RefinedParams, one_sided: bool) -> BoundReport {
    if params.delta > 1.0 {
        return BoundReport::new(0.0, f64::INFINITY, Validity::DeltaExceedsOne);
    }
    let exponent = refined_exponent(params.delta, params.gamma);
    let lead = if one_sided { 1.0 } else { 2.0 };
    BoundReport::new(
        lead * (-(n as f64) * exponent).exp(),
        exponent,
        Validity::Valid,
    )
}

/// `(1+u) ln(1+u)` minus its polynomial lower bound: `u + u^2/2` on `[-1, 0]`
/// and `u + u^2/2 - u^3/6` for `u >= 0`. Nonnegative on the whole domain.
pub fn lemma1_gap(u: f64) -> Result<f64> {
    if !(u >= -1.0) {
        return Err(Error::DomainError(format!("u = {u} is below -1")));
    }
    let lhs = if u == -1.0 {
        0.0
    } else {
        (1.0 + u) * u.ln_1p()
    };
    let rhs = if u <= 0.0 {
        u + u * u / 2.0
    } else {
        u + u * u / 2.0 - u * u * u / 6.0
    };
    Ok(lhs - rhs)
}

fn check_moderate(eta: f64, eps: f64) -> Result<()> {
    if !(eta > 0.5 && eta < 1.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "eta = {eta} must lie in (1/2, 1)"
        )));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::ParameterOutOfRange(format!(
            "epsilon = {eps} must be positive"
        )));
    }
    Ok(())
}

/// `eps * n^-(1-eta) / d`, the normalized per-step deviation.
pub fn moderate_delta(n: u64, eta: f64, eps: f64, d: f64) -> f64 {
    eps * (n as f64).powf(-(1.0 - eta)) / d
}

/// Smallest block length with `eps * n^-(1-eta) / d < 1`.
pub fn n0_threshold(eta: f64, eps1: f64, d1: f64) -> Result<u64> {
    check_moderate(eta, eps1)?;
    if !(d1 > 0.0) || !d1.is_finite() {
        return Err(Error::ParameterOutOfRange(format!(
            "d1 = {d1} must be positive"
        )));
    }
    let root = (eps1 / d1).powf(1.0 / (1.0 - eta));
    if !(root < 1e18) {
        return Err(Error::ParameterOutOfRange(format!(
            "n0 = ({eps1}/{d1})^(1/(1-{eta})) does not fit in a block length"
        )));
    }
    // Start from the closed form and settle against the defining inequality,
    // so the result agrees with `moderate_delta` exactly.
    let mut n = (root.floor() as u64).max(1);
    while n > 1 && moderate_delta(n - 1, eta, eps1, d1) < 1.0 {
        n -= 1;
    }
    while moderate_delta(n, eta, eps1, d1) >= 1.0 {
        n += 1;
    }
    Ok(n)
}

/// Closed-form bound `exp(-(eps^2 n^(2 eta - 1) / (2 var)) (1 - eps d / (3 var (1 + gamma)) n^-(1-eta)))`
/// on the one-sided deviation `P(U_n - U_0 <= -eps n^eta)`.
///
/// Flagged [`Validity::BelowN0`] (value still computed) when `n < n0`.
pub fn expanded_exponent_bound(
    n: u64,
    eta: f64,
    eps1: f64,
    d1: f64,
    var1: f64,
) -> Result<BoundReport> {
    if n == 0 {
        return Err(Error::ParameterOutOfRange("n must be positive".into()));
    }
    let params = RefinedParams::new(d1, var1, 0.0)?;
    let n0 = n0_threshold(eta, eps1, d1)?;
    let (var, gamma) = (params.var(), params.gamma());
    let nf = n as f64;
    let correction = 1.0 - eps1 * d1 / (3.0 * var * (1.0 + gamma)) * nf.powf(-(1.0 - eta));
    let exponent = eps1 * eps1 * nf.powf(2.0 * eta - 1.0) / (2.0 * var) * correction;
    let validity = if n >= n0 {
        Validity::Valid
    } else {
        Validity::BelowN0
    };
    Ok(BoundReport::new((-exponent).exp(), exponent / nf, validity))
}

/// `n^(1-2 eta) ln(bound)` for the expanded bound, i.e.
/// `-(eps^2 / (2 var)) (1 - eps d / (3 var (1 + gamma)) n^-(1-eta))`.
pub fn expanded_scaled_exponent(n: u64, eta: f64, eps1: f64, d1: f64, var1: f64) -> Result<f64> {
    let report = expanded_exponent_bound(n, eta, eps1, d1, var1)?;
    Ok(-(report.exponent_per_n * n as f64) * (n as f64).powf(1.0 - 2.0 * eta))
}

/// Limits of `n^(1-2 eta) ln P(|S_n| >= alpha n^eta)` implied by Azuma's
/// inequality and by the refined bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MdpExponents {
    pub azuma_exp: f64,
    pub refined_exp: f64,
}

pub fn mdp_exponents(alpha: f64, d: f64, var: f64) -> Result<MdpExponents> {
    let params = RefinedParams::new(d, var, alpha)?;
    Ok(MdpExponents {
        azuma_exp: -alpha * alpha / (2.0 * d * d),
        refined_exp: -alpha * alpha / (2.0 * params.var()),
    })
}
