//! Exact distribution of the LLR sum by enumerating type classes.
//!
//! Every length-`n` sequence with symbol counts `c` has the same probability
//! and the same LLR, so the law of `L(X_1..X_n)` is a finite mixture over the
//! `C(n+k-1, k-1)` compositions of `n`. Masses are carried as natural logs.

use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::hypotest::{
    assemble_probabilities, bind_thresholds, ErrorProbabilities, TailLogProbs, ThresholdPolicy,
};
use crate::types::{Hypothesis, HypothesisPair};

/// LLR sums closer than this are one atom; tail comparisons use the same slack.
pub const MERGE_TOLERANCE: f64 = 1e-9;

/// Allowed drift of the log total mass of an enumerated law.
const NORMALIZATION_SLACK: f64 = 1e-9;

/// Default cap on the number of enumerated type classes.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Upper limit on the number of type classes a single enumeration may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnumerationBudget(pub u64);

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self(DEFAULT_BUDGET)
    }
}

/// Number of compositions of `n` into `k` parts, or `None` past `u128`.
pub fn type_class_count(n: u64, k: usize) -> Option<u128> {
    // C(n + k - 1, k - 1) built up incrementally; each partial product is
    // itself a binomial coefficient so the division is exact.
    let mut acc: u128 = 1;
    for j in 1..k as u128 {
        acc = acc.checked_mul(n as u128 + j)? / j;
    }
    Some(acc)
}

fn check_budget(n: u64, k: usize, budget: EnumerationBudget) -> Result<()> {
    match type_class_count(n, k) {
        Some(c) if c <= budget.0 as u128 => Ok(()),
        other => Err(Error::BudgetExceeded {
            n,
            k,
            required: other.map_or_else(|| "more than 2^128".to_string(), |c| c.to_string()),
            budget: budget.0,
        }),
    }
}

/// Compositions of `n` into `k` nonnegative parts in reverse-lexicographic
/// order, starting from `(n, 0, ..., 0)`.
#[derive(Debug, Clone)]
pub struct Compositions {
    counts: Vec<u64>,
    done: bool,
}

impl Compositions {
    pub fn new(n: u64, k: usize) -> Self {
        let mut counts = vec![0; k];
        if let Some(first) = counts.first_mut() {
            *first = n;
        }
        Self {
            counts,
            done: k == 0,
        }
    }
}

impl Iterator for Compositions {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if self.done {
            return None;
        }
        let out = self.counts.clone();
        let k = self.counts.len();
        // Move one unit from the rightmost nonzero part (excluding the last)
        // to its right neighbour, sweeping the remainder back.
        match (0..k.saturating_sub(1)).rev().find(|&i| self.counts[i] > 0) {
            None => self.done = true,
            Some(i) => {
                let tail = self.counts[k - 1];
                self.counts[k - 1] = 0;
                self.counts[i] -= 1;
                self.counts[i + 1] = tail + 1;
            }
        }
        Some(out)
    }
}

/// One type class with its probability under both hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeClass {
    pub counts: Vec<u64>,
    pub log_weight_h1: f64,
    pub log_weight_h2: f64,
    pub llr_value: f64,
}

impl TypeClass {
    pub fn log_weight(&self, under: Hypothesis) -> f64 {
        match under {
            Hypothesis::H1 => self.log_weight_h1,
            Hypothesis::H2 => self.log_weight_h2,
        }
    }
}

/// Streams every type class of length-`n` sequences.
pub fn enumerate_types(
    hyp: &HypothesisPair,
    n: u64,
    budget: EnumerationBudget,
) -> Result<impl Iterator<Item = TypeClass>> {
    let k = hyp.alphabet_size();
    check_budget(n, k, budget)?;
    let ln_p1: Vec<f64> = hyp.p1().probs().iter().map(|p| p.ln()).collect();
    let ln_p2: Vec<f64> = hyp.p2().probs().iter().map(|p| p.ln()).collect();
    let llr = hyp.llr();
    let ln_fact: Vec<f64> = (0..=n).map(ln_factorial).collect();
    Ok(Compositions::new(n, k).map(move |counts| {
        let mut log_multinomial = ln_fact[n as usize];
        let (mut w1, mut w2, mut l) = (0.0, 0.0, 0.0);
        for (x, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let cf = c as f64;
            log_multinomial -= ln_fact[c as usize];
            w1 += cf * ln_p1[x];
            w2 += cf * ln_p2[x];
            l += cf * llr[x];
        }
        TypeClass {
            counts,
            log_weight_h1: (log_multinomial + w1).min(0.0),
            log_weight_h2: (log_multinomial + w2).min(0.0),
            llr_value: l,
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub llr_value: f64,
    pub log_prob: f64,
}

/// Law of the LLR sum: atoms sorted strictly ascending in value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailDistribution {
    pub atoms: Vec<Atom>,
    pub n: u64,
    pub hypothesis: Hypothesis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TailKind {
    LeqThreshold,
    GeqThreshold,
}

/// Numerically stable `ln sum exp(x_i)`.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64
where
    I::IntoIter: Clone,
{
    let iter = values.into_iter();
    let max = iter.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + iter.map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl TailDistribution {
    pub fn log_total_mass(&self) -> f64 {
        log_sum_exp(self.atoms.iter().map(|a| a.log_prob))
    }

    pub fn mean(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.log_prob.exp() * a.llr_value)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms
            .iter()
            .map(|a| a.log_prob.exp() * (a.llr_value - m).powi(2))
            .sum()
    }
}

/// Both hypotheses' laws from a single enumeration; atom values coincide.
pub fn llr_distributions(
    hyp: &HypothesisPair,
    n: u64,
    budget: EnumerationBudget,
) -> Result<(TailDistribution, TailDistribution)> {
    let mut classes: Vec<(f64, f64, f64)> = enumerate_types(hyp, n, budget)?
        .map(|t| (t.llr_value, t.log_weight_h1, t.log_weight_h2))
        .collect();
    // Stable sort keeps enumeration order among equal values, so coalescing
    // is deterministic.
    classes.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut h1 = Vec::new();
    let mut h2 = Vec::new();
    let mut start = 0;
    while start < classes.len() {
        let anchor = classes[start].0;
        let mut end = start + 1;
        while end < classes.len() && classes[end].0 - anchor <= MERGE_TOLERANCE {
            end += 1;
        }
        let group = &classes[start..end];
        h1.push(Atom {
            llr_value: anchor,
            log_prob: log_sum_exp(group.iter().map(|c| c.1)),
        });
        h2.push(Atom {
            llr_value: anchor,
            log_prob: log_sum_exp(group.iter().map(|c| c.2)),
        });
        start = end;
    }
    for (atoms, label) in [(&h1, "H1"), (&h2, "H2")] {
        let mass = log_sum_exp(atoms.iter().map(|a| a.log_prob));
        if !(mass.abs() <= NORMALIZATION_SLACK) {
            return Err(Error::InvariantViolation(format!(
                "LLR law at n = {n} has total mass exp({mass}) under {label}"
            )));
        }
    }
    Ok((
        TailDistribution {
            atoms: h1,
            n,
            hypothesis: Hypothesis::H1,
        },
        TailDistribution {
            atoms: h2,
            n,
            hypothesis: Hypothesis::H2,
        },
    ))
}

pub fn llr_distribution(
    hyp: &HypothesisPair,
    under: Hypothesis,
    n: u64,
    budget: EnumerationBudget,
) -> Result<TailDistribution> {
    let (h1, h2) = llr_distributions(hyp, n, budget)?;
    Ok(match under {
        Hypothesis::H1 => h1,
        Hypothesis::H2 => h2,
    })
}

/// `ln P(L <= t)` or `ln P(L >= t)`, inclusive up to [`MERGE_TOLERANCE`].
pub fn exact_tail(dist: &TailDistribution, kind: TailKind, threshold_total: f64) -> f64 {
    let atoms = &dist.atoms;
    let selected = match kind {
        TailKind::LeqThreshold => {
            let end = atoms.partition_point(|a| a.llr_value <= threshold_total + MERGE_TOLERANCE);
            &atoms[..end]
        }
        TailKind::GeqThreshold => {
            let start = atoms.partition_point(|a| a.llr_value < threshold_total - MERGE_TOLERANCE);
            &atoms[start..]
        }
    };
    log_sum_exp(selected.iter().map(|a| a.log_prob)).min(0.0)
}

/// Tail log-probabilities for both thresholds at block length `dists.0.n`.
pub fn exact_tails(
    dists: &(TailDistribution, TailDistribution),
    hi_total: f64,
    lo_total: f64,
) -> TailLogProbs {
    let (h1, h2) = dists;
    TailLogProbs {
        alpha1: exact_tail(h1, TailKind::LeqThreshold, hi_total),
        alpha2: exact_tail(h1, TailKind::LeqThreshold, lo_total),
        beta1: exact_tail(h2, TailKind::GeqThreshold, lo_total),
        beta2: exact_tail(h2, TailKind::GeqThreshold, hi_total),
    }
}

pub fn exact_error_probabilities(
    hyp: &HypothesisPair,
    policy: &ThresholdPolicy,
    n: u64,
    budget: EnumerationBudget,
) -> Result<ErrorProbabilities> {
    let thresholds = bind_thresholds(policy, hyp, n)?;
    let dists = llr_distributions(hyp, n, budget)?;
    let tails = exact_tails(&dists, thresholds.hi_total(), thresholds.lo_total());
    assemble_probabilities(&tails, hyp.prior1(), hyp.prior2())
}
