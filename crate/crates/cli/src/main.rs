//! `epsiplan` — budget-aware planning of differential-privacy parameters.
//!
//! Subcommands:
//!
//! * `plan <config>` — solve the feasibility problem; JSON result on stdout.
//!   Exit 0 feasible, 2 infeasible, 3 undetermined, 1 error.
//! * `compare <config>` — private vs non-private cost comparison for a mean
//!   study.
//! * `region <config> --samples K` — CSV of the accuracy/budget ε curves
//!   over the size grid.
//! * `simulate <config> --trials T --seed S [--epsilon X --n N --mu M]` —
//!   Monte Carlo check of the analytic bound at a chosen point (defaults to
//!   the planner's). Exit 0 consistent, 2 bound violated, 1 error.
//!
//! JSON goes to stdout; a human-readable summary and warnings go to stderr.
//! `EPSIPLAN_GRID_POINTS` overrides the solver's size-grid density.

mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use epsiplan_core::accuracy::StudyKind;
use epsiplan_core::economics::{self, BudgetPolicy};
use epsiplan_core::feasibility::{self, DeltaMode, FeasibilityProblem, FeasibilityStatus};
use epsiplan_core::simulation::{self, SimulationConfig};
use epsiplan_core::{SideConstraints, Verdict};

use output::{CompareDoc, CompareVerdict, PlanDoc, SimulateDoc};

#[derive(Parser)]
#[command(name = "epsiplan", version, about = "Choose (epsilon, delta, N) for a private study")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the feasibility problem in the config.
    Plan { config: String },
    /// Compare the private study against the non-private alternative.
    Compare { config: String },
    /// Export the accuracy/budget epsilon curves as CSV.
    Region {
        config: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Empirically validate the analytic failure bound.
    Simulate {
        config: String,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        /// Privacy parameter of the simulated point; defaults to the plan's.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Study size of the simulated point; defaults to the plan's.
        #[arg(long)]
        n: Option<u64>,
        /// Population mean of the simulated 0/1 attribute.
        #[arg(long, default_value_t = 0.5)]
        mu: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            1
        }
    };
    ExitCode::from(code)
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Plan { config } => plan(&config),
        Command::Compare { config } => compare(&config),
        Command::Region { config, samples } => region(&config, samples),
        Command::Simulate {
            config,
            trials,
            seed,
            epsilon,
            n,
            mu,
        } => simulate(&config, trials, seed, epsilon, n, mu),
    }
}

fn load_problem(path: &str) -> Result<FeasibilityProblem, String> {
    let cfg = config::load(path).map_err(|e| e.to_string())?;
    for warning in &cfg.warnings {
        eprintln!("note: {warning}");
    }
    let mut problem = cfg.problem;
    if let Some(points) = grid_points_override()? {
        problem = problem.with_grid_points(points);
    }
    Ok(problem)
}

fn grid_points_override() -> Result<Option<usize>, String> {
    match std::env::var("EPSIPLAN_GRID_POINTS") {
        Ok(raw) => {
            let points: usize = raw
                .parse()
                .map_err(|_| format!("EPSIPLAN_GRID_POINTS: not a size: {raw:?}"))?;
            if points < 2 {
                return Err("EPSIPLAN_GRID_POINTS: need at least 2 grid points".to_string());
            }
            Ok(Some(points))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(format!("EPSIPLAN_GRID_POINTS: {e}")),
    }
}

fn plan(path: &str) -> Result<u8, String> {
    let problem = load_problem(path)?;
    let outcome = feasibility::solve(&problem);

    // Defense in depth: never print a feasible point this process has not
    // itself re-checked against the exact constraints.
    if outcome.status == FeasibilityStatus::Feasible {
        let p = outcome.point.expect("feasible outcome has a point");
        let (diags, ok) = feasibility::verify_point(&problem, p.delta, p.n, p.epsilon, 1e-9);
        if !ok {
            eprintln!("solver returned a point that fails re-validation: {diags:?}");
            return Ok(3);
        }
    }

    let code = match outcome.status {
        FeasibilityStatus::Feasible => 0,
        FeasibilityStatus::Infeasible => 2,
        FeasibilityStatus::Undetermined => 3,
    };
    match outcome.status {
        FeasibilityStatus::Feasible => {
            let p = outcome.point.unwrap();
            eprintln!(
                "feasible: epsilon={} delta={} n={} per-person={} total={}",
                p.epsilon,
                p.delta,
                p.n,
                outcome.per_person_payment.unwrap(),
                outcome.total_cost.unwrap()
            );
        }
        FeasibilityStatus::Infeasible => eprintln!(
            "infeasible: no (epsilon, delta, N) satisfies all constraints ({})",
            outcome
                .trace
                .certificate
                .as_ref()
                .map(|c| c.kind.as_str())
                .unwrap_or("scan")
        ),
        FeasibilityStatus::Undetermined => {
            eprintln!("undetermined: numerical evaluation failed during the scan")
        }
    }
    output::emit_json(&PlanDoc::from_outcome(outcome));
    Ok(code)
}

fn compare(path: &str) -> Result<u8, String> {
    let problem = load_problem(path)?;
    let spec = *problem.spec();
    if spec.kind() != StudyKind::MeanEstimation {
        return Err("compare applies to mean_estimation studies only".to_string());
    }
    let profile = *problem.profile();
    if profile.worst_case() <= 0.0 || profile.exposure_fraction() <= 0.0 {
        return Err(
            "compare needs positive costs.worst_case and costs.exposure_fraction".to_string(),
        );
    }

    let sufficient = economics::private_cheaper(&spec, &profile).map_err(|e| e.to_string())?;
    let size = economics::nonprivate_min_n(&spec).map_err(|e| e.to_string())?;
    let nonprivate_budget =
        economics::nonprivate_budget(&spec, &profile).map_err(|e| e.to_string())?;

    // Price the private study under the non-private budget; side constraints
    // stay out of this comparison.
    let policy = BudgetPolicy::total_budget(nonprivate_budget).map_err(|e| e.to_string())?;
    let private = FeasibilityProblem::new(
        spec,
        profile,
        policy,
        SideConstraints::default(),
        DeltaMode::Pure,
    )
    .map_err(|e| e.to_string())?
    .with_grid_points(problem.grid_points());
    let outcome = feasibility::solve(&private);

    let verdict = if sufficient || outcome.status == FeasibilityStatus::Feasible {
        CompareVerdict::PrivateCheaper
    } else if outcome.status == FeasibilityStatus::Infeasible {
        CompareVerdict::NonPrivateCheaper
    } else {
        CompareVerdict::Undetermined
    };

    eprintln!(
        "non-private: N' >= {:.2}, budget {:.2}; private solver: {:?} (min cost {:?})",
        size.bound, nonprivate_budget, outcome.status, outcome.total_cost
    );
    output::emit_json(&CompareDoc {
        private_sufficiently_cheaper: sufficient,
        nonprivate_n_bound: size.bound,
        nonprivate_participants: size.participants,
        nonprivate_budget,
        private_solver_status: outcome.status,
        private_min_cost: outcome.total_cost,
        verdict,
    });
    Ok(0)
}

fn region(path: &str, samples: usize) -> Result<u8, String> {
    let problem = load_problem(path)?;
    let table = feasibility::region_export(&problem, samples).map_err(|e| e.to_string())?;
    print!("{}", output::region_csv(&table));
    Ok(0)
}

fn simulate(
    path: &str,
    trials: u64,
    seed: u64,
    epsilon: Option<f64>,
    n: Option<u64>,
    mu: f64,
) -> Result<u8, String> {
    let problem = load_problem(path)?;
    let spec = *problem.spec();
    if spec.kind() != StudyKind::MeanEstimation {
        return Err("simulate applies to mean_estimation studies only".to_string());
    }

    let (epsilon, n) = match (epsilon, n) {
        (Some(e), Some(n)) => (e, n),
        (None, None) => {
            let outcome = feasibility::solve(&problem);
            match (outcome.status, outcome.point) {
                (FeasibilityStatus::Feasible, Some(p)) => {
                    eprintln!("simulating the planned point: epsilon={} n={}", p.epsilon, p.n);
                    (p.epsilon, p.n)
                }
                _ => {
                    return Err(
                        "config is not feasible; pass --epsilon and --n explicitly".to_string()
                    )
                }
            }
        }
        _ => return Err("--epsilon and --n must be given together".to_string()),
    };

    let config = SimulationConfig::new(mu, n, epsilon, spec.target_error(), trials, seed)
        .map_err(|e| e.to_string())?;
    let draws = (n as u128) * (trials as u128);
    if draws > 5_000_000_000 {
        eprintln!("note: {draws} Bernoulli draws queued (n * trials); this may take a while");
    }
    let report = simulation::run_mean_study(&config);
    eprintln!(
        "{} failures in {} trials (rate {}); bound {}",
        report.failures,
        report.trials,
        report.empirical_rate,
        report.analytic_bound.value()
    );
    let code = match report.verdict {
        Verdict::ConsistentWithBound => 0,
        Verdict::BoundViolated => 2,
    };
    output::emit_json(&SimulateDoc::new(&config, report));
    Ok(code)
}
