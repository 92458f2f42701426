//! End-to-end runs of the `moddev` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BINARY: &str = r#"{
    "schema": 1,
    "hypothesis": {"p1": [0.5, 0.5], "p2": [0.25, 0.75]},
    "policy": {"kind": "moderate", "eta": 0.75, "eps1": 0.1, "eps2": 0.1},
    "n_grid": [1, 10, 100],
    "mc": {"samples": 20000, "seed": 5, "streams": 4}
}"#;

const SKEWED: &str = r#"{
    "schema": 1,
    "hypothesis": {"p1": [0.9, 0.1], "p2": [0.5, 0.5]},
    "policy": {"kind": "moderate", "eta": 0.7, "eps1": 0.2, "eps2": 0.2},
    "n_grid": [4, 16, 64, 256]
}"#;

const FIXED: &str = r#"{
    "schema": 1,
    "hypothesis": {"p1": [0.5, 0.5], "p2": [0.25, 0.75]},
    "policy": {"kind": "fixed", "lambda_hi": 0.05, "lambda_lo": -0.05},
    "n_grid": [5, 50]
}"#;

struct Run {
    dir: TempDir,
}

impl Run {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path
    }

    fn moddev(&self, args: &[&str], config: &Path, env: &[(&str, &str)]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_moddev"));
        cmd.args(args)
            .arg("--config")
            .arg(config)
            .env_remove("MODDEV_BUDGET");
        for (k, v) in env {
            cmd.env(k, v);
        }
        cmd.output().unwrap()
    }

    fn ok(&self, args: &[&str], config_text: &str) -> String {
        let cfg = self.write("cfg.json", config_text);
        let out = self.moddev(args, &cfg, &[]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }
}

fn csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"))
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s:?}"))
}

#[test]
fn headers_are_fixed_per_command() {
    let run = Run::new();
    let first = |cmd: &str| run.ok(&[cmd], BINARY).lines().next().unwrap().to_string();
    assert_eq!(
        first("bounds"),
        "n,azuma,refined,expanded,validity,scaled_bound_exp,limit_exp"
    );
    assert_eq!(
        first("exact"),
        "n,alpha1,alpha2,beta1,beta2,pe1,pe2,refined_alpha1_bound,dominates"
    );
    assert_eq!(
        first("mdp-sweep"),
        "n,alpha1_exact,scaled_log_alpha1,bound_exponent,azuma_limit,refined_limit,n0_ok"
    );
    let sim = first("simulate");
    assert!(sim.starts_with("n,alpha1,alpha2,beta1,beta2,pe1,pe2,refined_alpha1_bound,dominates,"));
    for q in ["alpha1", "alpha2", "beta1", "beta2"] {
        for p in ["est_", "se_", "ess_", "z_"] {
            assert!(sim.split(',').any(|h| h == format!("{p}{q}")), "{p}{q}");
        }
    }
}

#[test]
fn bounds_binary_example() {
    let (h, rows) = csv(&Run::new().ok(&["bounds"], BINARY));
    assert_eq!(rows.len(), 3);
    for (row, n) in rows.iter().zip(["1", "10", "100"]) {
        assert_eq!(row[0], n);
        assert!((num(&row[col(&h, "limit_exp")]) + 0.0165707).abs() < 1e-7);
        assert_eq!(row[col(&h, "validity")], "valid");
        for c in ["azuma", "refined", "expanded"] {
            assert!(num(&row[col(&h, c)]) <= 0.0);
        }
        // The refined bound is never weaker than Azuma's.
        assert!(num(&row[col(&h, "refined")]) <= num(&row[col(&h, "azuma")]));
    }
}

#[test]
fn bounds_fixed_policy_leaves_moderate_columns_empty() {
    let (h, rows) = csv(&Run::new().ok(&["bounds"], FIXED));
    for row in &rows {
        for c in ["expanded", "scaled_bound_exp", "limit_exp"] {
            assert_eq!(row[col(&h, c)], "", "{c}");
        }
        assert!(num(&row[col(&h, "refined")]) < 0.0);
        assert_eq!(row[col(&h, "validity")], "valid");
    }
}

#[test]
fn bounds_below_n0_is_flagged_not_fatal() {
    let cfg = BINARY
        .replace(r#""eta": 0.75, "eps1": 0.1"#, r#""eta": 0.6, "eps1": 1.0"#)
        .replace("[1, 10, 100]", "[1, 2, 3, 4, 5, 50]");
    let (h, rows) = csv(&Run::new().ok(&["bounds"], &cfg));
    let validity: Vec<&str> = rows
        .iter()
        .map(|r| r[col(&h, "validity")].as_str())
        .collect();
    assert_eq!(
        validity,
        ["below_n0", "below_n0", "below_n0", "below_n0", "valid", "valid"]
    );
    assert_eq!(rows[0][col(&h, "refined")], "-inf");
}

#[test]
fn exact_binary_example() {
    let (h, rows) = csv(&Run::new().ok(&["exact"], BINARY));
    assert_eq!(num(&rows[0][col(&h, "alpha1")]), 0.5f64.ln());
    assert_eq!(num(&rows[0][col(&h, "beta1")]), 0.25f64.ln());
    assert!(rows.iter().all(|r| r[col(&h, "dominates")] == "true"));
    for r in &rows {
        for c in ["alpha1", "alpha2", "beta1", "beta2", "pe1", "pe2"] {
            assert!(num(&r[col(&h, c)]) <= 0.0);
        }
    }
}

#[test]
fn exact_and_mdp_sweep_agree_on_alpha1() {
    let run = Run::new();
    for cfg in [BINARY, SKEWED] {
        let (he, exact) = csv(&run.ok(&["exact"], cfg));
        let (hm, sweep) = csv(&run.ok(&["mdp-sweep"], cfg));
        for (e, m) in exact.iter().zip(&sweep) {
            assert_eq!(e[col(&he, "alpha1")], m[col(&hm, "alpha1_exact")]);
        }
    }
}

#[test]
fn mdp_sweep_limits() {
    let run = Run::new();
    let (h, rows) = csv(&run.ok(&["mdp-sweep"], BINARY));
    for r in &rows {
        assert_eq!(r[col(&h, "azuma_limit")], r[col(&h, "refined_limit")]);
    }
    let (h, rows) = csv(&run.ok(&["mdp-sweep"], SKEWED));
    for r in &rows {
        assert!(num(&r[col(&h, "refined_limit")]) < num(&r[col(&h, "azuma_limit")]));
        if r[col(&h, "n0_ok")] == "true" {
            assert!(num(&r[col(&h, "scaled_log_alpha1")]) <= num(&r[col(&h, "bound_exponent")]));
        }
    }
}

#[test]
fn mdp_sweep_rejects_fixed_policy() {
    let run = Run::new();
    let cfg = run.write("fixed.json", FIXED);
    assert_eq!(run.moddev(&["mdp-sweep"], &cfg, &[]).status.code(), Some(2));
}

#[test]
fn config_errors_exit_with_two() {
    let run = Run::new();
    let cases = [
        BINARY.replace("[1, 10, 100]", "[]"),
        BINARY.replace("[1, 10, 100]", "[10, 1]"),
        BINARY.replace("\"schema\": 1", "\"schema\": 1, \"extra\": true"),
        BINARY.replace("[0.25, 0.75]", "[0.25, 0.70]"),
        BINARY.replace("[0.25, 0.75]", "[0.5, 0.5]"),
        "{not json".to_string(),
    ];
    for text in &cases {
        let cfg = run.write("bad.json", text);
        let out = run.moddev(&["exact"], &cfg, &[]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
    let missing = run.dir.path().join("absent.json");
    assert_eq!(
        run.moddev(&["bounds"], &missing, &[]).status.code(),
        Some(2)
    );

    let no_mc = run.write("no_mc.json", SKEWED);
    assert_eq!(
        run.moddev(&["simulate"], &no_mc, &[]).status.code(),
        Some(2)
    );
}

#[test]
fn budget_override_and_exit_code() {
    let run = Run::new();
    let cfg = run.write("cfg.json", BINARY);
    let out = run.moddev(&["exact"], &cfg, &[("MODDEV_BUDGET", "5")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n = 10"));

    let bad = run.moddev(&["exact"], &cfg, &[("MODDEV_BUDGET", "many")]);
    assert_eq!(bad.status.code(), Some(2));

    let capped = BINARY.replace("\"n_grid\"", "\"budget\": 5, \"n_grid\"");
    let cfg = run.write("capped.json", &capped);
    assert_eq!(run.moddev(&["exact"], &cfg, &[]).status.code(), Some(3));
    assert!(run
        .moddev(&["exact"], &cfg, &[("MODDEV_BUDGET", "1000")])
        .status
        .success());
}

#[test]
fn simulate_over_budget_still_estimates() {
    let run = Run::new();
    let cfg = run.write("cfg.json", BINARY);
    let out = run.moddev(&["simulate"], &cfg, &[("MODDEV_BUDGET", "5")]);
    assert!(out.status.success());
    let (h, rows) = csv(&String::from_utf8(out.stdout).unwrap());
    // n = 1 has two type classes and fits; larger n do not.
    assert_ne!(rows[0][col(&h, "z_alpha1")], "");
    for r in &rows[1..] {
        for q in ["alpha1", "alpha2", "beta1", "beta2"] {
            assert_eq!(r[col(&h, &format!("z_{q}"))], "");
            assert_eq!(r[col(&h, q)], "");
            assert!(num(&r[col(&h, &format!("est_{q}"))]) < 0.0);
        }
        assert_ne!(r[col(&h, "refined_alpha1_bound")], "");
    }
}

#[test]
fn simulate_is_byte_reproducible() {
    let run = Run::new();
    let cfg = run.write("cfg.json", BINARY);
    let a = run.moddev(&["simulate"], &cfg, &[("RAYON_NUM_THREADS", "1")]);
    let b = run.moddev(&["simulate"], &cfg, &[("RAYON_NUM_THREADS", "4")]);
    let c = run.moddev(&["simulate"], &cfg, &[]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);

    let reseeded = run.write("seed.json", &BINARY.replace("\"seed\": 5", "\"seed\": 6"));
    assert_ne!(run.moddev(&["simulate"], &reseeded, &[]).stdout, a.stdout);
}

#[test]
fn simulate_z_scores_mostly_within_three() {
    let cfg = r#"{
        "schema": 1,
        "hypothesis": {"p1": [0.2, 0.5, 0.3], "p2": [0.5, 0.2, 0.3], "priors": [0.3, 0.7]},
        "policy": {"kind": "moderate", "eta": 0.8, "eps1": 0.3, "eps2": 0.3},
        "n_grid": [5, 10, 20, 40, 80, 120],
        "mc": {"samples": 20000, "seed": 99, "streams": 4, "tilt": "auto"}
    }"#;
    let (h, rows) = csv(&Run::new().ok(&["simulate"], cfg));
    let zs: Vec<f64> = rows
        .iter()
        .flat_map(|r| {
            ["alpha1", "alpha2", "beta1", "beta2"].map(|q| num(&r[col(&h, &format!("z_{q}"))]))
        })
        .collect();
    let within = zs.iter().filter(|z| z.abs() <= 3.0).count();
    assert!(within as f64 >= 0.95 * zs.len() as f64, "{zs:?}");
}

#[test]
fn json_output_uses_the_csv_field_names() {
    let run = Run::new();
    let text = BINARY.replace("\"n_grid\"", r#""output": {"format": "json"}, "n_grid""#);
    let json: Value = serde_json::from_str(&run.ok(&["exact"], &text)).unwrap();
    let (header, rows) = csv(&run.ok(&["exact"], BINARY));
    let arr = json.as_array().unwrap();
    assert_eq!(arr.len(), rows.len());
    for (obj, row) in arr.iter().zip(&rows) {
        let obj = obj.as_object().unwrap();
        assert_eq!(obj.len(), header.len());
        assert_eq!(obj["n"].to_string(), row[0]);
        assert_eq!(obj["alpha1"].as_f64().unwrap(), num(&row[1]));
        assert_eq!(obj["dominates"], Value::Bool(true));
    }
}

#[test]
fn linear_flag_and_output_paths() {
    let run = Run::new();
    let (h, rows) = csv(&run.ok(&["exact", "--linear"], BINARY));
    assert_eq!(num(&rows[0][col(&h, "alpha1")]), 0.5);
    assert!((num(&rows[0][col(&h, "beta1")]) - 0.25).abs() < 1e-15);
    // Exponents are not probabilities and stay in log scale.
    let (h, rows) = csv(&run.ok(&["bounds", "--linear"], BINARY));
    assert!((num(&rows[0][col(&h, "limit_exp")]) + 0.0165707).abs() < 1e-7);
    assert!(num(&rows[0][col(&h, "azuma")]) > 0.0);

    let from_config = run.dir.path().join("from_config.csv");
    let text = BINARY.replace(
        "\"n_grid\"",
        &format!(
            r#""output": {{"path": {:?}}}, "n_grid""#,
            from_config.to_str().unwrap()
        ),
    );
    let cfg = run.write("paths.json", &text);
    let out = run.moddev(&["exact"], &cfg, &[]);
    assert!(out.status.success() && out.stdout.is_empty());
    let written = std::fs::read_to_string(&from_config).unwrap();
    assert!(written.starts_with("n,alpha1,"));

    let flag = run.dir.path().join("flag.csv");
    let out = run.moddev(&["bounds", "--out", flag.to_str().unwrap()], &cfg, &[]);
    assert!(out.status.success());
    assert!(std::fs::read_to_string(&flag)
        .unwrap()
        .starts_with("n,azuma,"));
    assert_eq!(std::fs::read_to_string(&from_config).unwrap(), written);
}
