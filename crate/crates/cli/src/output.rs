//! Machine-readable output documents (JSON on stdout) and the region CSV.

use serde::Serialize;

use epsiplan_core::feasibility::{
    ConstraintDiagnostic, FeasibilityOutcome, FeasibilityStatus, RegionTable, SearchTrace,
};
use epsiplan_core::simulation::{SimulationConfig, SimulationReport};
use epsiplan_core::ProbabilityBound;

#[derive(Debug, Serialize)]
pub struct PlanDoc {
    pub status: FeasibilityStatus,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub n: Option<u64>,
    pub per_person_payment: Option<f64>,
    pub total_cost: Option<f64>,
    pub diagnostics: Vec<ConstraintDiagnostic>,
    pub trace: SearchTrace,
}

impl PlanDoc {
    pub fn from_outcome(outcome: FeasibilityOutcome) -> Self {
        Self {
            status: outcome.status,
            epsilon: outcome.point.map(|p| p.epsilon),
            delta: outcome.point.map(|p| p.delta),
            n: outcome.point.map(|p| p.n),
            per_person_payment: outcome.per_person_payment,
            total_cost: outcome.total_cost,
            diagnostics: outcome.diagnostics,
            trace: outcome.trace,
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareVerdict {
    PrivateCheaper,
    NonPrivateCheaper,
    Undetermined,
}

#[derive(Debug, Serialize)]
pub struct CompareDoc {
    /// The closed-form sufficient condition fired.
    pub private_sufficiently_cheaper: bool,
    /// Real-valued lower bound on the non-private study size.
    pub nonprivate_n_bound: f64,
    pub nonprivate_participants: u64,
    /// Compensation budget of the non-private study.
    pub nonprivate_budget: f64,
    pub private_solver_status: FeasibilityStatus,
    /// Cheapest private total the solver found under the non-private budget.
    pub private_min_cost: Option<f64>,
    pub verdict: CompareVerdict,
}

#[derive(Debug, Serialize)]
pub struct SimulateDoc {
    pub mu: f64,
    pub n: u64,
    pub epsilon: f64,
    pub target_error: f64,
    pub seed: u64,
    pub failures: u64,
    pub trials: u64,
    pub empirical_rate: f64,
    pub analytic_bound: ProbabilityBound,
    pub stderr: f64,
    pub verdict: epsiplan_core::Verdict,
}

impl SimulateDoc {
    pub fn new(config: &SimulationConfig, report: SimulationReport) -> Self {
        Self {
            mu: config.population_mean,
            n: config.n,
            epsilon: config.epsilon,
            target_error: config.target_error,
            seed: config.seed,
            failures: report.failures,
            trials: report.trials,
            empirical_rate: report.empirical_rate,
            analytic_bound: report.analytic_bound,
            stderr: report.stderr,
            verdict: report.verdict,
        }
    }
}

pub fn emit_json<T: Serialize>(doc: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(doc).expect("output documents serialize")
    );
}

/// CSV contract: `n,eps_accuracy_min,eps_budget_max`, ascending `n`, empty
/// field for absent values, `.` decimal separator, LF line endings.
pub fn region_csv(table: &RegionTable) -> String {
    let mut out = String::from("n,eps_accuracy_min,eps_budget_max\n");
    for row in &table.rows {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{}\n",
            row.n,
            fmt(row.eps_accuracy_min),
            fmt(row.eps_budget_max)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use epsiplan_core::feasibility::RegionRow;

    #[test]
    fn csv_marks_absent_values_with_empty_fields() {
        let table = RegionTable {
            rows: vec![
                RegionRow {
                    n: 10,
                    eps_accuracy_min: None,
                    eps_budget_max: Some(0.5),
                },
                RegionRow {
                    n: 1000,
                    eps_accuracy_min: Some(0.25),
                    eps_budget_max: None,
                },
            ],
        };
        let csv = region_csv(&table);
        assert_eq!(csv, "n,eps_accuracy_min,eps_budget_max\n10,,0.5\n1000,0.25,\n");
    }
}
