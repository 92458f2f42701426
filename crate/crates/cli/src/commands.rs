use moddev_core::concentration::{
    azuma_bound, expanded_exponent_bound, expanded_scaled_exponent, mdp_exponents, n0_threshold,
    refined_bound, Increments, RefinedParams,
};
use moddev_core::exact::{exact_error_probabilities, exact_tails, llr_distributions, TailKind};
use moddev_core::hypotest::{
    assemble_probabilities, bind_thresholds, ErrorProbabilities, ThresholdPolicy,
};
use moddev_core::montecarlo::{estimate_tail, McConfig, McEstimate};
use moddev_core::types::{llr_profile, Hypothesis, LlrProfile};
use moddev_core::Error as CoreError;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::table::{Cell, Table};

pub const BOUNDS_HEADER: &[&str] = &[
    "n",
    "azuma",
    "refined",
    "expanded",
    "validity",
    "scaled_bound_exp",
    "limit_exp",
];

pub const EXACT_HEADER: &[&str] = &[
    "n",
    "alpha1",
    "alpha2",
    "beta1",
    "beta2",
    "pe1",
    "pe2",
    "refined_alpha1_bound",
    "dominates",
];

pub const SIMULATE_HEADER: &[&str] = &[
    "n",
    "alpha1",
    "alpha2",
    "beta1",
    "beta2",
    "pe1",
    "pe2",
    "refined_alpha1_bound",
    "dominates",
    "est_alpha1",
    "se_alpha1",
    "ess_alpha1",
    "z_alpha1",
    "est_alpha2",
    "se_alpha2",
    "ess_alpha2",
    "z_alpha2",
    "est_beta1",
    "se_beta1",
    "ess_beta1",
    "z_beta1",
    "est_beta2",
    "se_beta2",
    "ess_beta2",
    "z_beta2",
];

pub const MDP_SWEEP_HEADER: &[&str] = &[
    "n",
    "alpha1_exact",
    "scaled_log_alpha1",
    "bound_exponent",
    "azuma_limit",
    "refined_limit",
    "n0_ok",
];

/// Slack on log-probabilities when comparing exact values to bounds and to
/// each other.
const LOG_SLACK: f64 = 1e-12;

/// Odd 64-bit constant spreading per-row seeds apart.
const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Runs `row` over the grid in parallel and keeps grid order. The first
/// failing `n` in grid order determines the error.
fn build_rows<F>(grid: &[u64], row: F) -> Result<Vec<Vec<Cell>>>
where
    F: Fn(u64) -> Result<Vec<Cell>> + Sync,
{
    let results: Vec<Result<Vec<Cell>>> = grid.par_iter().map(|&n| row(n)).collect();
    results.into_iter().collect()
}

fn table_from(headers: &'static [&'static str], rows: Vec<Vec<Cell>>) -> Table {
    let mut table = Table::new(headers);
    rows.into_iter().for_each(|r| table.push(r));
    table
}

/// Per-symbol deviation of the upper threshold below `d12`.
fn upper_deviation(policy: &ThresholdPolicy, prof: &LlrProfile, n: u64) -> f64 {
    match *policy {
        ThresholdPolicy::Moderate { eta, eps1, .. } => eps1 * (n as f64).powf(-(1.0 - eta)),
        ThresholdPolicy::Fixed { lambda_hi, .. } => prof.d12 - lambda_hi,
    }
}

fn refined_alpha1(policy: &ThresholdPolicy, prof: &LlrProfile, n: u64) -> Result<f64> {
    let params = RefinedParams::new(prof.d1, prof.var1, upper_deviation(policy, prof, n))?;
    Ok(refined_bound(n, &params, true).capped_bound.ln())
}

fn check_nesting(n: u64, e: &ErrorProbabilities) -> Result<()> {
    if e.alpha2 > e.alpha1 + LOG_SLACK || e.beta2 > e.beta1 + LOG_SLACK {
        return Err(CliError::Core(CoreError::InvariantViolation(format!(
            "error events not nested at n = {n}: {e:?}"
        ))));
    }
    Ok(())
}

fn exact_cells(e: &ErrorProbabilities, bound: f64) -> Vec<Cell> {
    vec![
        Cell::LogProb(e.alpha1),
        Cell::LogProb(e.alpha2),
        Cell::LogProb(e.beta1),
        Cell::LogProb(e.beta2),
        Cell::LogProb(e.pe1),
        Cell::LogProb(e.pe2),
        Cell::LogProb(bound),
        Cell::Bool(e.alpha1 <= bound + LOG_SLACK),
    ]
}

pub fn cmd_bounds(cfg: &ExperimentConfig) -> Result<Table> {
    let prof = llr_profile(&cfg.hypothesis);
    let rows = build_rows(&cfg.n_grid, |n| {
        let alpha = upper_deviation(&cfg.policy, &prof, n);
        let azuma = azuma_bound(n, &Increments::Uniform(prof.d1), n as f64 * alpha, true)?;
        let refined = refined_bound(n, &RefinedParams::new(prof.d1, prof.var1, alpha)?, true);
        let mut row = vec![
            Cell::Int(n),
            Cell::LogProb(azuma.capped_bound.ln()),
            Cell::LogProb(refined.capped_bound.ln()),
        ];
        match cfg.policy {
            ThresholdPolicy::Moderate { eta, eps1, .. } => {
                let expanded = expanded_exponent_bound(n, eta, eps1, prof.d1, prof.var1)?;
                let scaled = expanded_scaled_exponent(n, eta, eps1, prof.d1, prof.var1)?;
                let limit = mdp_exponents(eps1, prof.d1, prof.var1)?.refined_exp;
                row.extend([
                    Cell::LogProb(expanded.capped_bound.ln()),
                    Cell::Text(expanded.validity.as_str()),
                    Cell::Num(scaled),
                    Cell::Num(limit),
                ]);
            }
            ThresholdPolicy::Fixed { .. } => {
                row.extend([
                    Cell::Empty,
                    Cell::Text(refined.validity.as_str()),
                    Cell::Empty,
                    Cell::Empty,
                ]);
            }
        }
        Ok(row)
    })?;
    Ok(table_from(BOUNDS_HEADER, rows))
}

pub fn cmd_exact(cfg: &ExperimentConfig) -> Result<Table> {
    let prof = llr_profile(&cfg.hypothesis);
    let rows = build_rows(&cfg.n_grid, |n| {
        let e = exact_error_probabilities(&cfg.hypothesis, &cfg.policy, n, cfg.budget)?;
        check_nesting(n, &e)?;
        let mut row = vec![Cell::Int(n)];
        row.extend(exact_cells(&e, refined_alpha1(&cfg.policy, &prof, n)?));
        Ok(row)
    })?;
    Ok(table_from(EXACT_HEADER, rows))
}

/// `|1 - p/p_hat| / relative_se`, the estimate's error in its own standard
/// errors.
pub fn z_score(exact_log: f64, est: &McEstimate) -> f64 {
    if exact_log == est.log_p_hat {
        return 0.0;
    }
    if est.log_p_hat == f64::NEG_INFINITY || est.std_err == 0.0 {
        return f64::INFINITY;
    }
    (1.0 - (exact_log - est.log_p_hat).exp()).abs() / est.std_err
}

fn row_config(mc: &McConfig, n: u64, tail: u64) -> McConfig {
    McConfig {
        seed: mc.seed.wrapping_add(SEED_STRIDE.wrapping_mul(4 * n + tail)),
        ..*mc
    }
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Table> {
    let mc = cfg
        .mc
        .as_ref()
        .ok_or_else(|| CliError::Config("simulate needs an `mc` section".into()))?;
    let prof = llr_profile(&cfg.hypothesis);
    let hyp = &cfg.hypothesis;
    let rows = build_rows(&cfg.n_grid, |n| {
        let t = bind_thresholds(&cfg.policy, hyp, n)?;
        let bound = refined_alpha1(&cfg.policy, &prof, n)?;
        let exact = match llr_distributions(hyp, n, cfg.budget) {
            Ok(dists) => {
                let tails = exact_tails(&dists, t.hi_total(), t.lo_total());
                let e = assemble_probabilities(&tails, hyp.prior1(), hyp.prior2())?;
                check_nesting(n, &e)?;
                Some(e)
            }
            Err(CoreError::BudgetExceeded { .. }) => None,
            Err(err) => return Err(err.into()),
        };

        let mut row = vec![Cell::Int(n)];
        match &exact {
            Some(e) => row.extend(exact_cells(e, bound)),
            None => {
                row.extend(std::iter::repeat_n(Cell::Empty, 6));
                row.extend([Cell::LogProb(bound), Cell::Empty]);
            }
        }
        let targets = [
            (
                Hypothesis::H1,
                TailKind::LeqThreshold,
                t.hi_total(),
                exact.map(|e| e.alpha1),
            ),
            (
                Hypothesis::H1,
                TailKind::LeqThreshold,
                t.lo_total(),
                exact.map(|e| e.alpha2),
            ),
            (
                Hypothesis::H2,
                TailKind::GeqThreshold,
                t.lo_total(),
                exact.map(|e| e.beta1),
            ),
            (
                Hypothesis::H2,
                TailKind::GeqThreshold,
                t.hi_total(),
                exact.map(|e| e.beta2),
            ),
        ];
        for (tail, (under, kind, threshold, exact_log)) in targets.into_iter().enumerate() {
            let est = estimate_tail(
                hyp,
                under,
                n,
                kind,
                threshold,
                &row_config(mc, n, tail as u64),
            )?;
            row.extend([
                Cell::LogProb(est.log_p_hat),
                Cell::Num(est.std_err),
                Cell::Num(est.effective_sample_size),
                exact_log.map_or(Cell::Empty, |x| Cell::Num(z_score(x, &est))),
            ]);
        }
        Ok(row)
    })?;
    Ok(table_from(SIMULATE_HEADER, rows))
}

pub fn cmd_mdp_sweep(cfg: &ExperimentConfig) -> Result<Table> {
    let ThresholdPolicy::Moderate { eta, eps1, .. } = cfg.policy else {
        return Err(CliError::Config(
            "mdp-sweep needs a moderate threshold policy".into(),
        ));
    };
    let prof = llr_profile(&cfg.hypothesis);
    let limits = mdp_exponents(eps1, prof.d1, prof.var1)?;
    let n0 = n0_threshold(eta, eps1, prof.d1)?;
    let rows = build_rows(&cfg.n_grid, |n| {
        let alpha1 = exact_error_probabilities(&cfg.hypothesis, &cfg.policy, n, cfg.budget)?.alpha1;
        let scale = (n as f64).powf(1.0 - 2.0 * eta);
        Ok(vec![
            Cell::Int(n),
            Cell::LogProb(alpha1),
            Cell::Num(scale * alpha1),
            Cell::Num(expanded_scaled_exponent(n, eta, eps1, prof.d1, prof.var1)?),
            Cell::Num(limits.azuma_exp),
            Cell::Num(limits.refined_exp),
            Cell::Bool(n >= n0),
        ])
    })?;
    Ok(table_from(MDP_SWEEP_HEADER, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(log_p_hat: f64, std_err: f64) -> McEstimate {
        McEstimate {
            log_p_hat,
            std_err,
            samples_used: 100,
            effective_sample_size: 50.0,
        }
    }

    #[test]
    fn z_score_edge_cases() {
        assert_eq!(
            z_score(f64::NEG_INFINITY, &est(f64::NEG_INFINITY, f64::INFINITY)),
            0.0
        );
        assert_eq!(
            z_score(-3.0, &est(f64::NEG_INFINITY, f64::INFINITY)),
            f64::INFINITY
        );
        assert_eq!(z_score(-1.0, &est(-1.0, 0.0)), 0.0);
        assert_eq!(z_score(-1.0, &est(-1.1, 0.0)), f64::INFINITY);
        let z = z_score(0.5f64.ln(), &est(0.4f64.ln(), 0.1));
        assert!((z - 2.5).abs() < 1e-12);
    }

    #[test]
    fn row_seeds_differ_per_tail_and_n() {
        let mc = McConfig {
            samples: 10,
            seed: 1,
            streams: 1,
            tilt: moddev_core::montecarlo::Tilt::Auto,
        };
        let mut seeds: Vec<u64> = (1..=5)
            .flat_map(|n| (0..4).map(move |t| (n, t)))
            .map(|(n, t)| row_config(&mc, n, t).seed)
            .collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 20);
    }
}
