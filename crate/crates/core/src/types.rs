//! Finite-alphabet distributions, hypothesis pairs and the statistics of the
//! log-likelihood-ratio martingale.
//!
//! Under `H1` the Doob martingale of the LLR sum has increments
//! `ln(P1(x)/P2(x)) - D(P1||P2)`. Their almost-sure bound `d1` and conditional
//! variance `var1` are the only inputs the concentration bounds need. The
//! mirrored quantities under `H2` centre the LLR at `-D(P2||P1)` and take
//! expectations under `P2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a [`Pmf`] and on prior sums.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Strictly positive probability vector over the alphabet `0..k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    /// Validates `raw` and renormalizes it if its sum is within
    /// [`NORMALIZATION_TOLERANCE`] of one.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::AlphabetTooSmall { size: raw.len() });
        }
        for (index, &value) in raw.iter().enumerate() {
            // `!(value > 0.0)` also rejects NaN.
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveEntry { index, value });
            }
        }
        let sum: f64 = raw.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized {
                sum,
                tolerance: NORMALIZATION_TOLERANCE,
            });
        }
        let probs = raw.into_iter().map(|p| p / sum).collect();
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, symbol: usize) -> f64 {
        self.probs[symbol]
    }
}

impl<'de> Deserialize<'de> for Pmf {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<f64>::deserialize(deserializer)?;
        Pmf::new(raw).map_err(serde::de::Error::custom)
    }
}

/// Free-function form of [`Pmf::new`].
pub fn validate_pmf(raw: &[f64]) -> Result<Pmf> {
    Pmf::new(raw.to_vec())
}

/// Which hypothesis generates the observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    H1,
    H2,
}

/// Two distributions on a common alphabet together with their priors.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisPair {
    p1: Pmf,
    p2: Pmf,
    prior1: f64,
    prior2: f64,
}

impl HypothesisPair {
    pub fn new(p1: Pmf, p2: Pmf, prior1: f64, prior2: f64) -> Result<Self> {
        if p1.len() != p2.len() {
            return Err(Error::AlphabetMismatch {
                left: p1.len(),
                right: p2.len(),
            });
        }
        let in_open_unit = |p: f64| p > 0.0 && p < 1.0;
        if !in_open_unit(prior1)
            || !in_open_unit(prior2)
            || (prior1 + prior2 - 1.0).abs() > NORMALIZATION_TOLERANCE
        {
            return Err(Error::InvalidPriors { prior1, prior2 });
        }
        if p1.probs() == p2.probs() {
            return Err(Error::IdenticalHypotheses);
        }
        Ok(Self {
            p1,
            p2,
            prior1,
            prior2,
        })
    }

    /// Equal priors.
    pub fn uniform_priors(p1: Pmf, p2: Pmf) -> Result<Self> {
        Self::new(p1, p2, 0.5, 0.5)
    }

    pub fn p1(&self) -> &Pmf {
        &self.p1
    }

    pub fn p2(&self) -> &Pmf {
        &self.p2
    }

    pub fn pmf(&self, under: Hypothesis) -> &Pmf {
        match under {
            Hypothesis::H1 => &self.p1,
            Hypothesis::H2 => &self.p2,
        }
    }

    pub fn prior1(&self) -> f64 {
        self.prior1
    }

    pub fn prior2(&self) -> f64 {
        self.prior2
    }

    pub fn alphabet_size(&self) -> usize {
        self.p1.len()
    }

    /// Per-symbol log-likelihood ratios `ln(P1(x)/P2(x))`.
    pub fn llr(&self) -> Vec<f64> {
        self.p1
            .probs()
            .iter()
            .zip(self.p2.probs())
            .map(|(a, b)| (a / b).ln())
            .collect()
    }
}

/// `D(p||q)` between Bernoulli(p) and Bernoulli(q), in nats.
///
/// `p` may sit on `{0, 1}` (using `0 ln 0 = 0`); `q` must be interior.
pub fn binary_divergence(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::DomainError(format!("p = {p} is outside [0, 1]")));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::DomainError(format!("q = {q} is outside (0, 1)")));
    }
    let head = if p > 0.0 { p * (p / q).ln() } else { 0.0 };
    let tail = if p < 1.0 {
        (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()
    } else {
        0.0
    };
    Ok((head + tail).max(0.0))
}

/// Relative entropy `D(p||q)` in nats.
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::AlphabetMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let d: f64 = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(a, b)| a * (a / b).ln())
        .sum();
    Ok(d.max(0.0))
}

/// LLR values and the increment statistics of the martingales under both
/// hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlrProfile {
    pub llr: Vec<f64>,
    /// `D(P1||P2)`.
    pub d12: f64,
    /// `D(P2||P1)`.
    pub d21: f64,
    pub d1: f64,
    pub var1: f64,
    pub gamma1: f64,
    pub d2: f64,
    pub var2: f64,
    pub gamma2: f64,
}

/// Bound, variance and their ratio for the increments `llr[x] - center`
/// weighted by `weights`.
fn increment_stats(llr: &[f64], weights: &[f64], center: f64) -> (f64, f64, f64) {
    let mut max_abs = 0.0f64;
    let mut min_abs = f64::INFINITY;
    let mut var = 0.0;
    for (&l, &w) in llr.iter().zip(weights) {
        let c = l - center;
        max_abs = max_abs.max(c.abs());
        min_abs = min_abs.min(c.abs());
        var += w * c * c;
    }
    // All increments share one magnitude: the variance equals d^2 exactly,
    // rounding in the weighted sum notwithstanding.
    if max_abs - min_abs <= 1e-12 * max_abs {
        return (max_abs, max_abs * max_abs, 1.0);
    }
    let var = var.min(max_abs * max_abs);
    (max_abs, var, var / (max_abs * max_abs))
}

pub fn llr_profile(hyp: &HypothesisPair) -> LlrProfile {
    let llr = hyp.llr();
    let p1 = hyp.p1().probs();
    let p2 = hyp.p2().probs();
    let d12: f64 = p1
        .iter()
        .zip(&llr)
        .map(|(p, l)| p * l)
        .sum::<f64>()
        .max(0.0);
    let d21: f64 = p2
        .iter()
        .zip(&llr)
        .map(|(p, l)| -p * l)
        .sum::<f64>()
        .max(0.0);
    let (d1, var1, gamma1) = increment_stats(&llr, p1, d12);
    let (d2, var2, gamma2) = increment_stats(&llr, p2, -d21);
    LlrProfile {
        llr,
        d12,
        d21,
        d1,
        var1,
        gamma1,
        d2,
        var2,
        gamma2,
    }
}

impl LlrProfile {
    /// `(d, var)` of the martingale increments under `under`.
    pub fn increment_bounds(&self, under: Hypothesis) -> (f64, f64) {
        match under {
            Hypothesis::H1 => (self.d1, self.var1),
            Hypothesis::H2 => (self.d2, self.var2),
        }
    }
}
