//! JSON config ingestion with field-path validation.
//!
//! One document describes a planning problem:
//!
//! ```json
//! {
//!   "study":  { "kind": "mean_estimation", "target_error": 0.05, "target_failure": 0.05 },
//!   "scenario": "movies",
//!   "costs":  { "exposure_fraction": 0.002 },
//!   "budget": { "total": 3e4 },
//!   "sides":  { "n_max": 1000, "enforce_group_privacy_floor": true },
//!   "delta":  { "mode": "pure" }
//! }
//! ```
//!
//! All numbers accept scientific notation. Integer fields (`universe_size`,
//! `query_count`, `n_max`) may be written as integral floats. A `scenario`
//! preset fills `base_cost` and `worst_case`; spelling those out alongside a
//! preset is an error. `exposure_fraction` is independent of the preset and
//! defaults to 0.002, the deanonymization success fraction all presets
//! assume.

use serde::Deserialize;
use thiserror::Error;

use epsiplan_core::economics::BudgetPolicy;
use epsiplan_core::feasibility::{BlatantParams, DeltaMode, FeasibilityProblem, SideConstraints};
use epsiplan_core::{CostProfile, StudySpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Field { path: String, message: String },
}

fn field_err<T>(path: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Field {
        path: path.to_string(),
        message: message.into(),
    })
}

/// Built-in cost scenario presets.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioPreset {
    pub name: &'static str,
    pub base_cost: f64,
    pub worst_case: f64,
    pub note: &'static str,
}

/// The four built-in presets: a 20% prior disclosure chance on a 1274
/// insurance-premium rise (smoking), a 1-in-1000 chance of losing 12500 in
/// salary (education), a 1-in-10000 chance of 2500 statutory damages for a
/// published rental history (movies), and a 1-in-100000 chance of a 100000
/// deanonymization loss (social).
pub const SCENARIO_PRESETS: [ScenarioPreset; 4] = [
    ScenarioPreset {
        name: "smoking",
        base_cost: 254.8,
        worst_case: 1274.0,
        note: "insurance premium rise, 20% prior disclosure odds",
    },
    ScenarioPreset {
        name: "education",
        base_cost: 12.5,
        worst_case: 12500.0,
        note: "salary cut from leaked records, 1/1000 prior odds",
    },
    ScenarioPreset {
        name: "movies",
        base_cost: 0.25,
        worst_case: 2500.0,
        note: "statutory damages for published rentals, 1/10000 prior odds",
    },
    ScenarioPreset {
        name: "social",
        base_cost: 1.0,
        worst_case: 100_000.0,
        note: "deanonymized persona, 1/100000 prior odds",
    },
];

pub fn preset(name: &str) -> Option<&'static ScenarioPreset> {
    SCENARIO_PRESETS.iter().find(|p| p.name == name)
}

const DEFAULT_EXPOSURE_FRACTION: f64 = 0.002;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    study: RawStudy,
    #[serde(default)]
    scenario: Option<String>,
    #[serde(default)]
    costs: Option<RawCosts>,
    budget: RawBudget,
    #[serde(default)]
    sides: Option<RawSides>,
    #[serde(default)]
    delta: Option<RawDelta>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStudy {
    kind: String,
    target_error: f64,
    target_failure: f64,
    #[serde(default)]
    universe_size: Option<f64>,
    #[serde(default)]
    query_count: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCosts {
    #[serde(default)]
    base_cost: Option<f64>,
    #[serde(default)]
    worst_case: Option<f64>,
    #[serde(default)]
    exposure_fraction: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBudget {
    #[serde(default)]
    total: Option<f64>,
    #[serde(default)]
    per_person_cap: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSides {
    #[serde(default)]
    n_max: Option<f64>,
    #[serde(default)]
    enforce_group_privacy_floor: Option<bool>,
    #[serde(default)]
    blatant_threshold_params: Option<RawBlatant>,
    #[serde(default)]
    eps_max_override: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlatant {
    universe_size: f64,
    capture_probability: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDelta {
    mode: String,
    #[serde(default)]
    value: Option<f64>,
    #[serde(default)]
    max_delta_n: Option<f64>,
    #[serde(default)]
    grid_min: Option<f64>,
    #[serde(default)]
    grid_max: Option<f64>,
    #[serde(default)]
    grid_points: Option<f64>,
}

/// A validated planning problem plus presentation extras.
#[derive(Debug)]
pub struct PlanConfig {
    pub problem: FeasibilityProblem,
    pub warnings: Vec<String>,
}

pub fn load(path: &str) -> Result<PlanConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_string(),
        source,
    })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<PlanConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text)?;
    build(raw)
}

fn as_count(path: &str, value: f64, min: u64) -> Result<u64, ConfigError> {
    if !(value.is_finite() && value >= min as f64 && value.fract() == 0.0 && value < 2f64.powi(63))
    {
        return field_err(path, format!("must be an integer of at least {min}"));
    }
    Ok(value as u64)
}

fn build(raw: RawConfig) -> Result<PlanConfig, ConfigError> {
    let spec = build_spec(&raw.study)?;
    let (profile, mut warnings) = build_costs(raw.scenario.as_deref(), raw.costs.as_ref())?;
    let policy = BudgetPolicy::new(raw.budget.total, raw.budget.per_person_cap)
        .map_err(|e| ConfigError::Field {
            path: "budget".to_string(),
            message: e.to_string(),
        })?;
    let sides = build_sides(raw.sides.as_ref())?;
    let (delta_mode, max_delta_n) = build_delta(&spec, raw.delta.as_ref())?;

    let problem = FeasibilityProblem::new(spec, profile, policy, sides, delta_mode)
        .map_err(|e| ConfigError::Field {
            path: "delta.mode".to_string(),
            message: e.to_string(),
        })?;
    let problem = match max_delta_n {
        Some(v) => problem.with_delta_n_budget(v),
        None => problem,
    };
    warnings.extend(profile.sanity_warnings());
    Ok(PlanConfig { problem, warnings })
}

fn build_spec(raw: &RawStudy) -> Result<StudySpec, ConfigError> {
    let t = raw.target_error;
    let a = raw.target_failure;
    let map_err = |e: epsiplan_core::accuracy::AccuracyError| ConfigError::Field {
        path: "study".to_string(),
        message: e.to_string(),
    };
    match raw.kind.as_str() {
        "mean_estimation" => {
            if raw.universe_size.is_some() || raw.query_count.is_some() {
                // Ignored by the bound; flag it rather than silently accept.
                return field_err(
                    "study.universe_size",
                    "mean_estimation ignores universe_size/query_count; remove them",
                );
            }
            StudySpec::mean_estimation(t, a).map_err(map_err)
        }
        kind @ ("mwem_pure" | "mwem_approx") => {
            let x = raw
                .universe_size
                .ok_or(())
                .or_else(|_| field_err("study.universe_size", "required for MWEM studies"))?;
            let c = raw
                .query_count
                .ok_or(())
                .or_else(|_| field_err("study.query_count", "required for MWEM studies"))?;
            let x = as_count("study.universe_size", x, 2)?;
            let c = as_count("study.query_count", c, 1)?;
            if kind == "mwem_pure" {
                StudySpec::mwem_pure(t, a, x, c).map_err(map_err)
            } else {
                StudySpec::mwem_approx(t, a, x, c).map_err(map_err)
            }
        }
        other => field_err(
            "study.kind",
            format!("unknown kind {other:?}; expected mean_estimation, mwem_pure, or mwem_approx"),
        ),
    }
}

fn build_costs(
    scenario: Option<&str>,
    costs: Option<&RawCosts>,
) -> Result<(CostProfile, Vec<String>), ConfigError> {
    let mut warnings = Vec::new();
    let exposure = costs
        .and_then(|c| c.exposure_fraction)
        .unwrap_or(DEFAULT_EXPOSURE_FRACTION);
    let (base_cost, worst_case) = match scenario {
        Some(name) => {
            let p = preset(name).ok_or(()).or_else(|_| {
                field_err(
                    "scenario",
                    format!(
                        "unknown preset {name:?}; built-ins are {}",
                        SCENARIO_PRESETS
                            .iter()
                            .map(|p| p.name)
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                )
            })?;
            if let Some(c) = costs {
                if c.base_cost.is_some() || c.worst_case.is_some() {
                    return field_err(
                        "costs",
                        "base_cost/worst_case conflict with the scenario preset; \
                         drop one or the other",
                    );
                }
            }
            warnings.push(format!("scenario {:?}: {}", p.name, p.note));
            (p.base_cost, p.worst_case)
        }
        None => {
            let c = costs.ok_or(()).or_else(|_| {
                field_err("costs", "required unless a scenario preset is given")
            })?;
            let base = c
                .base_cost
                .ok_or(())
                .or_else(|_| field_err("costs.base_cost", "required"))?;
            (base, c.worst_case.unwrap_or(0.0))
        }
    };
    let profile = CostProfile::new(base_cost, worst_case, exposure).map_err(|e| {
        ConfigError::Field {
            path: "costs".to_string(),
            message: e.to_string(),
        }
    })?;
    Ok((profile, warnings))
}

fn build_sides(raw: Option<&RawSides>) -> Result<SideConstraints, ConfigError> {
    let Some(raw) = raw else {
        return Ok(SideConstraints::default());
    };
    let n_max = raw
        .n_max
        .map(|v| as_count("sides.n_max", v, 1))
        .transpose()?;
    let blatant = raw
        .blatant_threshold_params
        .as_ref()
        .map(|b| {
            Ok::<_, ConfigError>(BlatantParams {
                universe_size: as_count("sides.blatant_threshold_params.universe_size", b.universe_size, 2)?,
                capture_probability: b.capture_probability,
            })
        })
        .transpose()?;
    SideConstraints::new(
        n_max,
        raw.enforce_group_privacy_floor.unwrap_or(false),
        blatant,
        raw.eps_max_override,
    )
    .map_err(|e| ConfigError::Field {
        path: "sides".to_string(),
        message: e.to_string(),
    })
}

fn build_delta(
    spec: &StudySpec,
    raw: Option<&RawDelta>,
) -> Result<(DeltaMode, Option<f64>), ConfigError> {
    use epsiplan_core::accuracy::StudyKind;
    let Some(raw) = raw else {
        // Sensible defaults per kind.
        let mode = match spec.kind() {
            StudyKind::MwemApprox => DeltaMode::searched_default(),
            _ => DeltaMode::Pure,
        };
        return Ok((mode, None));
    };
    let mode = match raw.mode.as_str() {
        "pure" => DeltaMode::Pure,
        "fixed" => {
            let v = raw
                .value
                .ok_or(())
                .or_else(|_| field_err("delta.value", "required for fixed delta mode"))?;
            DeltaMode::Fixed(v)
        }
        "searched" => {
            let lo = raw.grid_min.unwrap_or(1e-12);
            let hi = raw.grid_max.unwrap_or(1e-2);
            let points = raw
                .grid_points
                .map(|v| as_count("delta.grid_points", v, 2))
                .transpose()?
                .unwrap_or(11);
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi && hi < 1.0) {
                return field_err("delta.grid_min", "need 0 < grid_min <= grid_max < 1");
            }
            let grid: Vec<f64> = (0..points)
                .map(|i| {
                    let t = if points == 1 {
                        0.0
                    } else {
                        i as f64 / (points - 1) as f64
                    };
                    (lo.ln() + t * (hi.ln() - lo.ln())).exp()
                })
                .collect();
            DeltaMode::Searched { grid }
        }
        other => {
            return field_err(
                "delta.mode",
                format!("unknown mode {other:?}; expected pure, fixed, or searched"),
            )
        }
    };
    if let Some(m) = raw.max_delta_n {
        // NaN fails here too.
        if m.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return field_err("delta.max_delta_n", "must be positive (may be infinite)");
        }
    }
    Ok((mode, raw.max_delta_n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_mean_config_parses() {
        let cfg = parse(
            r#"{
                "study": {"kind": "mean_estimation", "target_error": 0.05, "target_failure": 0.05},
                "scenario": "movies",
                "budget": {"total": 3e4}
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.problem.profile().base_cost(), 0.25);
        assert_eq!(cfg.problem.profile().exposure_fraction(), 0.002);
        assert_eq!(cfg.problem.policy().total(), Some(3e4));
    }

    #[test]
    fn preset_conflicts_with_explicit_costs() {
        let err = parse(
            r#"{
                "study": {"kind": "mean_estimation", "target_error": 0.05, "target_failure": 0.05},
                "scenario": "movies",
                "costs": {"base_cost": 1.0},
                "budget": {"total": 3e4}
            }"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("costs"));
    }

    #[test]
    fn field_paths_in_errors() {
        let err = parse(
            r#"{
                "study": {"kind": "mean_estimation", "target_error": 1.5, "target_failure": 0.05},
                "scenario": "movies",
                "budget": {"total": 3e4}
            }"#,
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("study:"), "{err}");

        let err = parse(
            r#"{
                "study": {"kind": "mwem_pure", "target_error": 0.2, "target_failure": 0.05, "query_count": 100},
                "scenario": "movies",
                "budget": {"total": 3e4}
            }"#,
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("study.universe_size:"), "{err}");
    }

    #[test]
    fn scientific_notation_everywhere() {
        let cfg = parse(
            r#"{
                "study": {"kind": "mwem_approx", "target_error": 5e-2, "target_failure": 5e-2,
                           "universe_size": 3.2768e4, "query_count": 2e5},
                "costs": {"base_cost": 1e0, "worst_case": 1e6},
                "budget": {"total": 2e6},
                "delta": {"mode": "fixed", "value": 1e-8}
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.problem.spec().universe_size(), Some(32_768));
        assert_eq!(cfg.problem.spec().query_count(), Some(200_000));
    }

    #[test]
    fn fractional_count_rejected() {
        let err = parse(
            r#"{
                "study": {"kind": "mwem_pure", "target_error": 0.2, "target_failure": 0.05,
                           "universe_size": 256.5, "query_count": 100},
                "scenario": "movies",
                "budget": {"total": 3e4}
            }"#,
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("study.universe_size:"));
    }

    #[test]
    fn approx_defaults_to_searched_delta() {
        let cfg = parse(
            r#"{
                "study": {"kind": "mwem_approx", "target_error": 0.05, "target_failure": 0.05,
                           "universe_size": 32768, "query_count": 200000},
                "scenario": "social",
                "budget": {"total": 2e6}
            }"#,
        )
        .unwrap();
        match cfg.problem.delta_mode() {
            DeltaMode::Searched { grid } => assert_eq!(grid.len(), 11),
            other => panic!("expected searched default, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = parse(
            r#"{
                "study": {"kind": "mean_estimation", "target_error": 0.05, "target_failure": 0.05},
                "scenario": "movies",
                "budget": {"total": 3e4},
                "typo_section": {}
            }"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("typo_section"));
    }

    #[test]
    fn builtin_presets_are_exact() {
        let expected = [
            ("smoking", 254.8, 1274.0),
            ("education", 12.5, 12500.0),
            ("movies", 0.25, 2500.0),
            ("social", 1.0, 100_000.0),
        ];
        assert_eq!(SCENARIO_PRESETS.len(), expected.len());
        for (name, e, w) in expected {
            let p = preset(name).unwrap();
            assert_eq!(p.base_cost, e);
            assert_eq!(p.worst_case, w);
        }
    }

    #[test]
    fn warning_for_inverted_costs() {
        let cfg = parse(
            r#"{
                "study": {"kind": "mean_estimation", "target_error": 0.05, "target_failure": 0.05},
                "costs": {"base_cost": 10.0, "worst_case": 2.0},
                "budget": {"total": 3e4}
            }"#,
        )
        .unwrap();
        assert!(cfg.warnings.iter().any(|w| w.contains("worst_case")));
    }
}
