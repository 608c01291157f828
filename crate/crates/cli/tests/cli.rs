//! Contract tests for the `epsiplan` binary: exit codes, document shapes,
//! CSV format, and run-to-run stability.

use std::io::Write;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_epsiplan"))
}

fn config_path(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn write_config(body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().expect("temp config");
    f.write_all(body.as_bytes()).expect("write config");
    f
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

#[test]
fn plan_exit_codes_follow_the_outcome() {
    let out = bin().args(["plan", &config_path("movies_plan.json")]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let doc = stdout_json(&out);
    assert_eq!(doc["status"], "feasible");
    assert!(doc["epsilon"].as_f64().unwrap() > 0.0);
    assert!(doc["total_cost"].as_f64().unwrap() <= 3e4);

    let out = bin().args(["plan", &config_path("smoking_plan.json")]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let doc = stdout_json(&out);
    assert_eq!(doc["status"], "infeasible");
    assert!(doc["point"].is_null() || doc["epsilon"].is_null());
    assert_eq!(doc["trace"]["certificate"]["kind"], "asymptotic_separation");
}

#[test]
fn plan_output_is_bit_stable() {
    let run = || {
        bin()
            .args(["plan", &config_path("movies_plan.json")])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn parse_errors_carry_field_paths_and_exit_1() {
    let f = write_config(
        r#"{
            "study": {"kind": "mean_estimation", "target_error": 0.05, "target_failure": 0.05},
            "scenario": "netflix",
            "budget": {"total": 3e4}
        }"#,
    );
    let out = bin().args(["plan", f.path().to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("scenario"), "{err}");

    let out = bin().args(["plan", "/nonexistent/config.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn grid_points_env_override() {
    let out = bin()
        .args(["plan", &config_path("movies_plan.json")])
        .env("EPSIPLAN_GRID_POINTS", "50")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["trace"]["grid_points"], 50);

    let out = bin()
        .args(["plan", &config_path("movies_plan.json")])
        .env("EPSIPLAN_GRID_POINTS", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn region_csv_contract() {
    let out = bin()
        .args(["region", &config_path("movies_plan.json"), "--samples", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,eps_accuracy_min,eps_budget_max");
    assert_eq!(lines.len(), 3, "header plus exactly 2 rows: {text}");
    assert!(!text.contains('\r'));

    // Rows ascend in n and parse as numbers when present.
    let mut prev = 0u64;
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 3);
        let n: u64 = fields[0].parse().unwrap();
        assert!(n > prev);
        prev = n;
        for f in &fields[1..] {
            if !f.is_empty() {
                f.parse::<f64>().unwrap();
            }
        }
    }
}

#[test]
fn region_with_free_participants_leaves_budget_column_empty() {
    let f = write_config(
        r#"{
            "study": {"kind": "mean_estimation", "target_error": 0.05, "target_failure": 0.05},
            "costs": {"base_cost": 0.0, "worst_case": 2500.0},
            "budget": {"total": 3e4},
            "sides": {"n_max": 50000}
        }"#,
    );
    let out = bin()
        .args(["region", f.path().to_str().unwrap(), "--samples", "8"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(1) {
        assert!(line.ends_with(','), "budget field must be empty: {line}");
    }
}

#[test]
fn simulate_flags_and_exit_codes() {
    let cfg = config_path("movies_plan.json");
    let out = bin()
        .args([
            "simulate", &cfg, "--trials", "500", "--seed", "42", "--epsilon", "0.0083333",
            "--n", "20000", "--mu", "0.5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let doc = stdout_json(&out);
    assert_eq!(doc["verdict"], "consistent_with_bound");
    assert_eq!(doc["trials"], 500);

    // The bound is one-sided: a wildly inflated epsilon still passes.
    let out = bin()
        .args([
            "simulate", &cfg, "--trials", "500", "--seed", "42", "--epsilon", "0.83333",
            "--n", "20000",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));

    // Below the trial floor.
    let out = bin()
        .args(["simulate", &cfg, "--trials", "50", "--seed", "42", "--epsilon", "0.01", "--n", "1000"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Half a point is no point.
    let out = bin()
        .args(["simulate", &cfg, "--trials", "500", "--seed", "42", "--epsilon", "0.01"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // MWEM studies cannot be simulated.
    let out = bin()
        .args([
            "simulate", &config_path("mwem_pure_social.json"), "--trials", "500", "--seed", "1",
            "--epsilon", "1.0", "--n", "1000",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_falls_back_to_the_planned_point() {
    // n_max keeps the planned point small enough to simulate quickly.
    let f = write_config(
        r#"{
            "study": {"kind": "mean_estimation", "target_error": 0.05, "target_failure": 0.05},
            "scenario": "movies",
            "budget": {"total": 3e4},
            "sides": {"n_max": 25000}
        }"#,
    );
    let out = bin()
        .args(["simulate", f.path().to_str().unwrap(), "--trials", "200", "--seed", "7"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let doc = stdout_json(&out);
    assert_eq!(doc["n"], 25000);
    assert_eq!(doc["verdict"], "consistent_with_bound");
}

#[test]
fn compare_document_shape() {
    let out = bin().args(["compare", &config_path("movies_plan.json")]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["private_sufficiently_cheaper"], true);
    assert_eq!(doc["verdict"], "private_cheaper");
    assert!((doc["nonprivate_n_bound"].as_f64().unwrap() - 115.129).abs() < 0.01);
    assert!((doc["nonprivate_budget"].as_f64().unwrap() - 575.646).abs() < 0.01);
    assert!(doc["private_min_cost"].as_f64().unwrap() < 575.646);

    // Smoking: the sufficient condition is silent and the solver cannot
    // match the non-private price, which settles the question the other way.
    let out = bin().args(["compare", &config_path("smoking_plan.json")]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["private_sufficiently_cheaper"], false);
    assert_eq!(doc["private_solver_status"], "infeasible");
    assert_eq!(doc["verdict"], "non_private_cheaper");

    let f = write_config(
        r#"{
            "study": {"kind": "mean_estimation", "target_error": 0.05, "target_failure": 0.05},
            "scenario": "social",
            "budget": {"total": 3e4}
        }"#,
    );
    let out = bin().args(["compare", f.path().to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["verdict"], "private_cheaper");

    // Rejected for MWEM configs.
    let out = bin()
        .args(["compare", &config_path("mwem_pure_social.json")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mwem_plans_fit_their_budgets() {
    for name in ["mwem_pure_social.json", "mwem_approx_social.json"] {
        let out = bin().args(["plan", &config_path(name)]).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{name}: {out:?}");
        let doc = stdout_json(&out);
        assert_eq!(doc["status"], "feasible");
        assert!(doc["total_cost"].as_f64().unwrap() <= 2e6);
    }
}
