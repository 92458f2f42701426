//! Monte Carlo estimates of LLR tail probabilities, with optional
//! exponential tilting along the geometric path `P_t ∝ P1^(1-t) P2^t`.
//!
//! Sampling from `P_t` and weighting each sequence by `prod P(X_i)/P_t(X_i)`
//! keeps the estimator unbiased for the law `P` of the chosen hypothesis. The
//! tilted mean of the per-symbol LLR falls from `D(P1||P2)` at `t = 0` to
//! `-D(P2||P1)` at `t = 1`, so a tail event at a threshold between the two
//! becomes typical once `t` matches the threshold.
//!
//! Results depend only on `(seed, streams, samples)`: each stream owns a
//! ChaCha generator on its own stream id and the per-stream sums are merged
//! in stream order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::TailKind;
use crate::exact::MERGE_TOLERANCE;
use crate::types::{llr_profile, Hypothesis, HypothesisPair};

/// Tolerance on the tilted mean when solving for an automatic tilt.
pub const TILT_MEAN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tilt {
    None,
    Auto,
    Manual(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    #[serde(default = "default_streams")]
    pub streams: u32,
    #[serde(default = "default_tilt")]
    pub tilt: Tilt,
}

fn default_streams() -> u32 {
    1
}

fn default_tilt() -> Tilt {
    Tilt::Auto
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::ParameterOutOfRange("samples must be >= 1".into()));
        }
        if self.streams == 0 {
            return Err(Error::ParameterOutOfRange("streams must be >= 1".into()));
        }
        if let Tilt::Manual(t) = self.tilt {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::ParameterOutOfRange(format!(
                    "manual tilt {t} must lie in [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    /// Natural log of the estimate; `-inf` when no sample hit the event.
    pub log_p_hat: f64,
    /// Relative standard error of the estimate, which is also the delta-method
    /// standard error of `log_p_hat`.
    pub std_err: f64,
    pub samples_used: u64,
    /// Kish effective sample size of the weighted indicators.
    pub effective_sample_size: f64,
}

/// Log-probabilities of the tilted distribution `P_t`.
pub fn tilted_log_pmf(hyp: &HypothesisPair, t: f64) -> Result<Vec<f64>> {
    let raw: Vec<f64> = hyp
        .p1()
        .probs()
        .iter()
        .zip(hyp.p2().probs())
        .map(|(a, b)| (1.0 - t) * a.ln() + t * b.ln())
        .collect();
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm = max + raw.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    let out: Vec<f64> = raw.iter().map(|v| v - norm).collect();
    if !norm.is_finite() || out.iter().any(|v| !v.is_finite() || v.exp() <= 0.0) {
        return Err(Error::DegenerateTilt(t));
    }
    Ok(out)
}

/// `E_{P_t}[ln(P1(X)/P2(X))]`.
pub fn tilted_mean(hyp: &HypothesisPair, t: f64) -> Result<f64> {
    let log_pt = tilted_log_pmf(hyp, t)?;
    Ok(log_pt
        .iter()
        .zip(hyp.llr())
        .map(|(lp, l)| lp.exp() * l)
        .sum())
}

/// Tilt `t` whose tilted LLR mean equals `threshold_per_symbol`.
pub fn auto_tilt(hyp: &HypothesisPair, threshold_per_symbol: f64) -> Result<f64> {
    let prof = llr_profile(hyp);
    let (low, high) = (-prof.d21, prof.d12);
    let outside = || Error::ThresholdOutsideMeanRange {
        threshold: threshold_per_symbol,
        low,
        high,
    };
    if !(threshold_per_symbol >= low - TILT_MEAN_TOLERANCE
        && threshold_per_symbol <= high + TILT_MEAN_TOLERANCE)
    {
        return Err(outside());
    }
    if (threshold_per_symbol - high).abs() < TILT_MEAN_TOLERANCE {
        return Ok(0.0);
    }
    if (threshold_per_symbol - low).abs() < TILT_MEAN_TOLERANCE {
        return Ok(1.0);
    }
    // The tilted mean is strictly decreasing in t (its derivative is minus the
    // tilted variance of the LLR).
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut mid = 0.5;
    for _ in 0..200 {
        mid = 0.5 * (a + b);
        let gap = tilted_mean(hyp, mid)? - threshold_per_symbol;
        if gap.abs() < TILT_MEAN_TOLERANCE {
            break;
        }
        if gap > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(mid)
}

/// Draws i.i.d. symbols from `P_t` and weights them toward the law of one
/// hypothesis.
#[derive(Debug, Clone)]
pub struct TiltedSampler {
    t: f64,
    cdf: Vec<f64>,
    /// `ln P_under(x) - ln P_t(x)` per symbol.
    log_ratio: Vec<f64>,
    llr: Vec<f64>,
}

impl TiltedSampler {
    pub fn new(hyp: &HypothesisPair, under: Hypothesis, t: f64) -> Result<Self> {
        let log_pt = tilted_log_pmf(hyp, t)?;
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = log_pt
            .iter()
            .map(|lp| {
                acc += lp.exp();
                acc
            })
            .collect();
        // Guard the last bucket against rounding in the running sum.
        if let Some(last) = cdf.last_mut() {
            *last = f64::INFINITY;
        }
        let log_ratio = hyp
            .pmf(under)
            .probs()
            .iter()
            .zip(&log_pt)
            .map(|(p, lp)| p.ln() - lp)
            .collect();
        Ok(Self {
            t,
            cdf,
            log_ratio,
            llr: hyp.llr(),
        })
    }

    pub fn tilt(&self) -> f64 {
        self.t
    }

    pub fn draw_symbol<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cdf.len() - 1)
    }

    pub fn draw_sequence<R: Rng + ?Sized>(&self, rng: &mut R, n: u64) -> Vec<usize> {
        (0..n).map(|_| self.draw_symbol(rng)).collect()
    }

    /// Fills `counts` with the symbol counts of a fresh length-`n` sequence.
    pub fn draw_counts<R: Rng + ?Sized>(&self, rng: &mut R, n: u64, counts: &mut [u64]) {
        counts.fill(0);
        for _ in 0..n {
            counts[self.draw_symbol(rng)] += 1;
        }
    }

    pub fn log_weight(&self, counts: &[u64]) -> f64 {
        counts
            .iter()
            .zip(&self.log_ratio)
            .map(|(&c, r)| c as f64 * r)
            .sum()
    }

    pub fn llr_sum(&self, counts: &[u64]) -> f64 {
        counts
            .iter()
            .zip(&self.llr)
            .map(|(&c, l)| c as f64 * l)
            .sum()
    }

    pub fn log_ratio(&self) -> &[f64] {
        &self.log_ratio
    }
}

/// Running sums of `f` and `f^2` for log-domain values `ln f`, scaled by
/// `exp(-shift)` so they neither overflow nor underflow.
#[derive(Debug, Clone, Copy)]
struct WeightSums {
    shift: f64,
    s1: f64,
    s2: f64,
    count: u64,
}

impl WeightSums {
    fn new() -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            s1: 0.0,
            s2: 0.0,
            count: 0,
        }
    }

    fn rescale(&mut self, shift: f64) {
        if shift > self.shift {
            if self.shift > f64::NEG_INFINITY {
                let r = (self.shift - shift).exp();
                self.s1 *= r;
                self.s2 *= r * r;
            }
            self.shift = shift;
        }
    }

    fn push_log(&mut self, log_f: f64) {
        self.rescale(log_f);
        let v = (log_f - self.shift).exp();
        self.s1 += v;
        self.s2 += v * v;
    }

    fn merge(&mut self, other: &WeightSums) {
        self.count += other.count;
        if other.shift == f64::NEG_INFINITY {
            return;
        }
        self.rescale(other.shift);
        let r = (other.shift - self.shift).exp();
        self.s1 += other.s1 * r;
        self.s2 += other.s2 * r * r;
    }

    fn estimate(&self) -> McEstimate {
        let n = self.count as f64;
        if self.s1 == 0.0 {
            return McEstimate {
                log_p_hat: f64::NEG_INFINITY,
                std_err: f64::INFINITY,
                samples_used: self.count,
                effective_sample_size: 0.0,
            };
        }
        let log_p_hat = self.shift + self.s1.ln() - n.ln();
        let ess = self.s1 * self.s1 / self.s2;
        // Sample variance of f over the squared mean, then divided by n.
        let rel_var = (n / ess - 1.0).max(0.0) / (n - 1.0).max(1.0);
        McEstimate {
            log_p_hat,
            std_err: rel_var.sqrt(),
            samples_used: self.count,
            effective_sample_size: ess.min(n),
        }
    }
}

fn tail_hit(kind: TailKind, llr_sum: f64, threshold_total: f64) -> bool {
    match kind {
        TailKind::LeqThreshold => llr_sum <= threshold_total + MERGE_TOLERANCE,
        TailKind::GeqThreshold => llr_sum >= threshold_total - MERGE_TOLERANCE,
    }
}

/// Tilt actually used for `cfg.tilt`. `Auto` leaves typical events
/// untilted and otherwise moves the tilted mean onto the threshold.
pub fn resolve_tilt(
    hyp: &HypothesisPair,
    under: Hypothesis,
    n: u64,
    kind: TailKind,
    threshold_total: f64,
    tilt: Tilt,
) -> Result<f64> {
    let natural = match under {
        Hypothesis::H1 => 0.0,
        Hypothesis::H2 => 1.0,
    };
    match tilt {
        Tilt::None => Ok(natural),
        Tilt::Manual(t) => Ok(t),
        Tilt::Auto => {
            let prof = llr_profile(hyp);
            let mean = match under {
                Hypothesis::H1 => prof.d12,
                Hypothesis::H2 => -prof.d21,
            };
            let per_symbol = threshold_total / n as f64;
            let typical = match kind {
                TailKind::LeqThreshold => per_symbol >= mean,
                TailKind::GeqThreshold => per_symbol <= mean,
            };
            if typical {
                Ok(natural)
            } else {
                auto_tilt(hyp, per_symbol.clamp(-prof.d21, prof.d12))
            }
        }
    }
}

fn stream_sizes(samples: u64, streams: u32) -> Vec<u64> {
    let s = streams as u64;
    (0..s)
        .map(|i| samples / s + u64::from(i < samples % s))
        .collect()
}

/// Estimates `P(L <= threshold_total)` or `P(L >= threshold_total)` under
/// `under` for block length `n`.
pub fn estimate_tail(
    hyp: &HypothesisPair,
    under: Hypothesis,
    n: u64,
    kind: TailKind,
    threshold_total: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::ParameterOutOfRange(
            "block length must be positive".into(),
        ));
    }
    let t = resolve_tilt(hyp, under, n, kind, threshold_total, cfg.tilt)?;
    let sampler = TiltedSampler::new(hyp, under, t)?;
    let k = hyp.alphabet_size();

    let partials: Vec<WeightSums> = stream_sizes(cfg.samples, cfg.streams)
        .into_par_iter()
        .enumerate()
        .map(|(stream, size)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(stream as u64);
            let mut counts = vec![0u64; k];
            let mut sums = WeightSums::new();
            sums.count = size;
            for _ in 0..size {
                sampler.draw_counts(&mut rng, n, &mut counts);
                if tail_hit(kind, sampler.llr_sum(&counts), threshold_total) {
                    sums.push_log(sampler.log_weight(&counts));
                }
            }
            sums
        })
        .collect();

    let mut total = WeightSums::new();
    for p in &partials {
        total.merge(p);
    }
    Ok(total.estimate())
}
