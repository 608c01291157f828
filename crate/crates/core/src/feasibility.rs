//! The full constraint system over `(ε, δ, N)` and its deterministic solver.
//!
//! For every candidate study size `N` the constraints carve an ε window:
//! the accuracy bound gives a minimal ε (larger ε means less noise), the
//! budget gives a maximal ε (larger ε means higher compensation), and the
//! side constraints clip both ends:
//!
//! ```text
//! max(ε_acc(N), 1/N) ≤ ε ≤ min(ε_bud(N), ε_ceiling)
//! ```
//!
//! `N` is feasible iff that window is nonempty. The solver scans a
//! log-spaced grid of sizes (outer loop over a log grid of δ when δ is
//! searched), refines the best bracket by integer search, and returns the
//! feasible point of minimal total cost, tie-broken by smaller ε, then
//! smaller N. Returned points are re-verified against every exact
//! constraint, independently of the search path.
//!
//! Infeasibility comes with a certificate. With a hard size cap the window
//! structure is monotone once sizes are rescaled by `N` (N·ε_lo is
//! non-increasing, N·ε_hi non-decreasing in N), so an empty window at the
//! cap certifies emptiness below it. Without a cap the same rescaled limits
//! (`N·ε_acc(N) → accuracy slope`, `N·ε_bud(N) → budget slope`) decide
//! whether any size at all can work.
//!
//! The ε ceiling comes from the record-publication mechanism: releasing a
//! targeted record with probability `p*` (and a random record otherwise) is
//! formally ε-private once `ε ≥ max(ln(p*·|X|), ln((|X|−1)/(|X|·(1−p*))))`,
//! so ε at or above that ceiling buys no meaningful guarantee. The floor
//! `ε ≥ 1/N` comes from group privacy: below it the output distribution is
//! nearly independent of the entire database.

use serde::Serialize;
use thiserror::Error;

use crate::accuracy::{self, PrivacyLevel, StudyKind, StudySpec};
use crate::economics::{self, BudgetPolicy, CostProfile};
use crate::RESIDUAL_TOLERANCE;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Relative width at which ε bisection brackets stop shrinking.
const BISECT_RELATIVE_TOLERANCE: f64 = 1e-10;
/// Iteration cap for all ε bisections.
const BISECT_MAX_ITERATIONS: u32 = 60;
/// Hard upper end of the size scan when nothing bounds `N` and no feasible
/// size is found; beyond it the asymptotic certificate takes over.
const N_SCAN_LIMIT: u64 = 1_000_000_000_000;
/// Cap multiplier applied to the first feasible size found when `N` is
/// otherwise unbounded: total cost keeps creeping toward its large-N limit,
/// so the scan has to cut off somewhere, and three orders of magnitude past
/// the onset of feasibility leaves the objective essentially converged.
const N_CAP_SAFETY_FACTOR: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeasibilityError {
    #[error("universe size must be at least 2, got {0}")]
    UniverseTooSmall(u64),
    #[error("capture probability must lie in (1/universe_size, 1), got {0}")]
    CaptureProbabilityOutOfRange(f64),
    #[error("epsilon ceiling override {override_value} exceeds the derived ceiling {derived}")]
    OverrideAboveDerivedCeiling { override_value: f64, derived: f64 },
    #[error("{field} must be {requirement}")]
    InvalidField {
        field: &'static str,
        requirement: &'static str,
    },
    #[error("{kind} studies require delta mode {required}, got {got}")]
    DeltaModeMismatch {
        kind: StudyKind,
        required: &'static str,
        got: String,
    },
    #[error("region export needs a concrete delta; use pure or fixed delta mode")]
    RegionNeedsConcreteDelta,
    #[error("region export needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

/// Ceiling on ε above which the record-publishing mechanism with capture
/// probability `p*` over a universe of `universe_size` records is formally
/// ε-private: `max(ln(p*·|X|), ln((|X|−1)/(|X|·(1−p*))))`.
pub fn blatant_epsilon_ceiling(
    universe_size: u64,
    capture_probability: f64,
) -> Result<f64, FeasibilityError> {
    if universe_size < 2 {
        return Err(FeasibilityError::UniverseTooSmall(universe_size));
    }
    let x = universe_size as f64;
    if !(capture_probability.is_finite()
        && capture_probability > 1.0 / x
        && capture_probability < 1.0)
    {
        return Err(FeasibilityError::CaptureProbabilityOutOfRange(
            capture_probability,
        ));
    }
    let first = (capture_probability * x).ln();
    let second = ((x - 1.0) / (x * (1.0 - capture_probability))).ln();
    Ok(first.max(second))
}

/// Group-privacy floor `ε ≥ 1/N`: below it, any two same-size databases
/// produce nearly indistinguishable output distributions.
pub fn group_privacy_floor(n: u64) -> f64 {
    1.0 / n as f64
}

/// Parameters of the record-publication mechanism used to derive the ε
/// ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlatantParams {
    pub universe_size: u64,
    pub capture_probability: f64,
}

/// Side constraints beyond accuracy and budget.
#[derive(Debug, Default, Clone, Copy, PartialEq, Serialize)]
pub struct SideConstraints {
    n_max: Option<u64>,
    enforce_group_privacy_floor: bool,
    blatant: Option<BlatantParams>,
    eps_max_override: Option<f64>,
}

impl SideConstraints {
    pub fn new(
        n_max: Option<u64>,
        enforce_group_privacy_floor: bool,
        blatant: Option<BlatantParams>,
        eps_max_override: Option<f64>,
    ) -> Result<Self, FeasibilityError> {
        if n_max == Some(0) {
            return Err(FeasibilityError::InvalidField {
                field: "n_max",
                requirement: "at least 1",
            });
        }
        let derived = blatant
            .map(|b| blatant_epsilon_ceiling(b.universe_size, b.capture_probability))
            .transpose()?;
        if let Some(o) = eps_max_override {
            if !(o.is_finite() && o > 0.0) {
                return Err(FeasibilityError::InvalidField {
                    field: "eps_max_override",
                    requirement: "positive and finite",
                });
            }
            if let Some(d) = derived {
                if o > d {
                    return Err(FeasibilityError::OverrideAboveDerivedCeiling {
                        override_value: o,
                        derived: d,
                    });
                }
            }
        }
        Ok(Self {
            n_max,
            enforce_group_privacy_floor,
            blatant,
            eps_max_override,
        })
    }

    pub fn n_max(&self) -> Option<u64> {
        self.n_max
    }

    pub fn enforce_group_privacy_floor(&self) -> bool {
        self.enforce_group_privacy_floor
    }

    pub fn blatant(&self) -> Option<BlatantParams> {
        self.blatant
    }

    pub fn eps_max_override(&self) -> Option<f64> {
        self.eps_max_override
    }

    /// The binding ε ceiling: the override when present, otherwise the
    /// ceiling derived from the blatant-mechanism parameters.
    pub fn epsilon_ceiling(&self) -> Option<f64> {
        self.eps_max_override.or_else(|| {
            self.blatant.map(|b| {
                blatant_epsilon_ceiling(b.universe_size, b.capture_probability)
                    .expect("validated at construction")
            })
        })
    }
}

/// How δ is chosen.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DeltaMode {
    /// Pure ε-privacy, δ = 0.
    Pure,
    /// A fixed δ value.
    Fixed(f64),
    /// Search δ over a log-spaced grid.
    Searched { grid: Vec<f64> },
}

impl DeltaMode {
    /// The default search grid: 10^−12 … 10^−2, one point per decade.
    pub fn searched_default() -> Self {
        DeltaMode::Searched {
            grid: (-12..=-2).map(|e| 10f64.powi(e)).collect(),
        }
    }

    fn describe(&self) -> String {
        match self {
            DeltaMode::Pure => "pure".to_string(),
            DeltaMode::Fixed(d) => format!("fixed({d})"),
            DeltaMode::Searched { grid } => format!("searched({} points)", grid.len()),
        }
    }
}

/// A fully specified feasibility problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityProblem {
    spec: StudySpec,
    profile: CostProfile,
    policy: BudgetPolicy,
    sides: SideConstraints,
    delta_mode: DeltaMode,
    delta_n_budget: f64,
    grid_points: usize,
}

impl FeasibilityProblem {
    /// Default number of grid points in the size scan.
    pub const DEFAULT_GRID_POINTS: usize = 2000;
    /// Default cap on δ·N, a quantitative reading of "δ must be far below
    /// 1/N" (at δ = 1/N, publishing a random record is already (0, δ)-private).
    pub const DEFAULT_DELTA_N_BUDGET: f64 = 0.01;

    pub fn new(
        spec: StudySpec,
        profile: CostProfile,
        policy: BudgetPolicy,
        sides: SideConstraints,
        delta_mode: DeltaMode,
    ) -> Result<Self, FeasibilityError> {
        match spec.kind() {
            StudyKind::MwemApprox => match &delta_mode {
                DeltaMode::Pure => {
                    return Err(FeasibilityError::DeltaModeMismatch {
                        kind: spec.kind(),
                        required: "fixed delta > 0 or searched",
                        got: delta_mode.describe(),
                    })
                }
                DeltaMode::Fixed(d) if !(d.is_finite() && *d > 0.0 && *d < 1.0) => {
                    return Err(FeasibilityError::DeltaModeMismatch {
                        kind: spec.kind(),
                        required: "fixed delta in (0, 1) or searched",
                        got: delta_mode.describe(),
                    })
                }
                DeltaMode::Searched { grid }
                    if grid.is_empty()
                        || grid.iter().any(|d| !(d.is_finite() && *d > 0.0 && *d < 1.0)) =>
                {
                    return Err(FeasibilityError::DeltaModeMismatch {
                        kind: spec.kind(),
                        required: "a search grid of deltas in (0, 1)",
                        got: delta_mode.describe(),
                    })
                }
                _ => {}
            },
            StudyKind::MeanEstimation | StudyKind::MwemPure => match &delta_mode {
                DeltaMode::Pure | DeltaMode::Fixed(0.0) => {}
                other => {
                    return Err(FeasibilityError::DeltaModeMismatch {
                        kind: spec.kind(),
                        required: "pure (or fixed delta = 0)",
                        got: other.describe(),
                    })
                }
            },
        }
        Ok(Self {
            spec,
            profile,
            policy,
            sides,
            delta_mode,
            delta_n_budget: Self::DEFAULT_DELTA_N_BUDGET,
            grid_points: Self::DEFAULT_GRID_POINTS,
        })
    }

    /// Override the δ·N cap (`f64::INFINITY` disables it).
    pub fn with_delta_n_budget(mut self, budget: f64) -> Self {
        self.delta_n_budget = budget;
        self
    }

    /// Override the size-grid density.
    pub fn with_grid_points(mut self, points: usize) -> Self {
        self.grid_points = points.max(2);
        self
    }

    pub fn spec(&self) -> &StudySpec {
        &self.spec
    }

    pub fn profile(&self) -> &CostProfile {
        &self.profile
    }

    pub fn policy(&self) -> &BudgetPolicy {
        &self.policy
    }

    pub fn sides(&self) -> &SideConstraints {
        &self.sides
    }

    pub fn delta_mode(&self) -> &DeltaMode {
        &self.delta_mode
    }

    pub fn delta_n_budget(&self) -> f64 {
        self.delta_n_budget
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    fn delta_candidates(&self) -> Vec<f64> {
        match &self.delta_mode {
            DeltaMode::Pure | DeltaMode::Fixed(0.0) => vec![0.0],
            DeltaMode::Fixed(d) => vec![*d],
            DeltaMode::Searched { grid } => grid.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
    Undetermined,
}

/// A concrete solution `(ε, δ, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasiblePoint {
    pub epsilon: f64,
    pub delta: f64,
    pub n: u64,
}

/// One constraint evaluated at a concrete point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintDiagnostic {
    pub constraint: String,
    /// The value the constraint compares (clamped for probability bounds).
    pub observed: f64,
    /// Unclamped value when the observed one is a clamped probability.
    pub raw: Option<f64>,
    pub limit: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub satisfied: bool,
}

/// Why the scan concluded no size can work.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfeasibilityCertificate {
    /// `exhaustive_up_to_n_max`, `asymptotic_separation`, `budget_empty`,
    /// `bounded_scan`, or `scan_exhausted`.
    pub kind: String,
    pub detail: String,
    /// Limit of `N·ε_acc(N)` (with the group-privacy floor folded in).
    pub accuracy_slope: Option<f64>,
    /// Limit of `N·ε_bud(N)`.
    pub budget_slope: Option<f64>,
}

/// Summary of the search, for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchTrace {
    pub delta_grid: Vec<f64>,
    pub n_lo: u64,
    pub n_hi: u64,
    pub n_cap_reason: String,
    pub grid_points: usize,
    pub windows_evaluated: usize,
    pub feasible_windows: usize,
    pub certificate: Option<InfeasibilityCertificate>,
}

/// The solver's answer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityOutcome {
    pub status: FeasibilityStatus,
    pub point: Option<FeasiblePoint>,
    pub per_person_payment: Option<f64>,
    pub total_cost: Option<f64>,
    /// Constraint residuals at the returned point (feasible), or at the
    /// least-infeasible scanned point (infeasible).
    pub diagnostics: Vec<ConstraintDiagnostic>,
    pub trace: SearchTrace,
}

/// Minimal ε admitted by the accuracy constraint at a given size.
#[derive(Debug, Clone, Copy, PartialEq)]
enum AccuracyNeed {
    Value(f64),
    /// Sampling error alone exceeds α; no ε can help.
    Unachievable,
}

/// Maximal ε admitted by the budget at a given size.
#[derive(Debug, Clone, Copy, PartialEq)]
enum BudgetRoom {
    Value(f64),
    Unbounded,
    /// Even ε = 0 is over budget.
    Empty,
}

#[derive(Debug, Clone, Copy)]
struct WindowEval {
    n: u64,
    feasible: bool,
    epsilon: f64,
    cost: f64,
    /// Failure-bound value at the most favourable affordable ε, used to
    /// pick a representative point when everything is infeasible.
    best_achievable_failure: f64,
    nan_seen: bool,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    cost: f64,
    epsilon: f64,
    n: u64,
    delta: f64,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        (self.cost, self.epsilon, self.n, self.delta)
            < (other.cost, other.epsilon, other.n, other.delta)
    }
}

/// A limit of a rescaled constraint curve, plus whether finite sizes stay
/// strictly on their side of it.
#[derive(Debug, Clone, Copy)]
struct Slope {
    value: f64,
    strict: bool,
}

/// One row of the region export: the accuracy and budget curves at size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionRow {
    pub n: u64,
    /// Minimal ε meeting the accuracy target, absent when unachievable.
    pub eps_accuracy_min: Option<f64>,
    /// Maximal ε the budget affords, absent when the budget never binds or
    /// cannot be met at any ε.
    pub eps_budget_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionTable {
    pub rows: Vec<RegionRow>,
}

/// Solve the feasibility problem.
pub fn solve(problem: &FeasibilityProblem) -> FeasibilityOutcome {
    let deltas = problem.delta_candidates();
    let mut best: Option<Candidate> = None;
    let mut representative: Option<(f64, u64, f64, f64)> = None; // (delta, n, eps, failure)
    let mut windows_evaluated = 0usize;
    let mut feasible_windows = 0usize;
    let mut nan_seen = false;
    let mut per_delta_notes: Vec<String> = Vec::new();
    let mut trace_n_lo = u64::MAX;
    let mut trace_n_hi = 0u64;
    let mut cap_reasons: Vec<String> = Vec::new();

    for &delta in &deltas {
        let (n_lo, n_hi, cap_reason) = scan_bounds(problem, delta);
        trace_n_lo = trace_n_lo.min(n_lo);
        trace_n_hi = trace_n_hi.max(n_hi);
        if !cap_reasons.contains(&cap_reason) {
            cap_reasons.push(cap_reason.clone());
        }
        if n_lo > n_hi {
            per_delta_notes.push(format!("delta={delta}: no admissible size (e.g. delta*N cap)"));
            continue;
        }

        let grid = log_grid(n_lo, n_hi, problem.grid_points);
        let evals = map_sizes(&grid, |n| window_eval(problem, delta, n));
        windows_evaluated += evals.len();

        let mut delta_best_idx: Option<usize> = None;
        for (i, ev) in evals.iter().enumerate() {
            nan_seen |= ev.nan_seen;
            if ev.feasible {
                feasible_windows += 1;
                let cand = Candidate {
                    cost: ev.cost,
                    epsilon: ev.epsilon,
                    n: ev.n,
                    delta,
                };
                if best.is_none_or(|b| cand.better_than(&b)) {
                    best = Some(cand);
                }
                if delta_best_idx.is_none_or(|j| {
                    (ev.cost, ev.epsilon, ev.n) < (evals[j].cost, evals[j].epsilon, evals[j].n)
                }) {
                    delta_best_idx = Some(i);
                }
            } else if representative.is_none_or(|(_, _, _, f)| ev.best_achievable_failure < f) {
                representative = Some((delta, ev.n, ev.epsilon, ev.best_achievable_failure));
            }
        }

        // Integer refinement of the best bracket for this delta.
        if let Some(i) = delta_best_idx {
            let lo = if i > 0 { grid[i - 1] } else { n_lo };
            let hi = if i + 1 < grid.len() { grid[i + 1] } else { n_hi };
            for ev in refine_bracket(problem, delta, lo, hi) {
                windows_evaluated += 1;
                nan_seen |= ev.nan_seen;
                if ev.feasible {
                    let cand = Candidate {
                        cost: ev.cost,
                        epsilon: ev.epsilon,
                        n: ev.n,
                        delta,
                    };
                    if best.is_none_or(|b| cand.better_than(&b)) {
                        best = Some(cand);
                    }
                }
            }
            per_delta_notes.push(format!("delta={delta}: feasible"));
        } else {
            per_delta_notes.push(format!("delta={delta}: infeasible over [{n_lo}, {n_hi}]"));
        }
    }

    let mut trace = SearchTrace {
        delta_grid: deltas.clone(),
        n_lo: if trace_n_lo == u64::MAX { 1 } else { trace_n_lo },
        n_hi: trace_n_hi.max(1),
        n_cap_reason: cap_reasons.join("; "),
        grid_points: problem.grid_points,
        windows_evaluated,
        feasible_windows,
        certificate: None,
    };

    if let Some(cand) = best {
        let (diagnostics, ok) = verify_point(problem, cand.delta, cand.n, cand.epsilon, 1e-9);
        if !ok {
            // The search produced a point its own constraints reject: a
            // numerical breakdown, not a planning answer.
            return FeasibilityOutcome {
                status: FeasibilityStatus::Undetermined,
                point: None,
                per_person_payment: None,
                total_cost: None,
                diagnostics,
                trace,
            };
        }
        let level = PrivacyLevel::new(cand.epsilon, cand.delta).expect("verified point");
        let payment = economics::marginal_cost(level, problem.profile());
        return FeasibilityOutcome {
            status: FeasibilityStatus::Feasible,
            point: Some(FeasiblePoint {
                epsilon: cand.epsilon,
                delta: cand.delta,
                n: cand.n,
            }),
            per_person_payment: Some(payment),
            total_cost: Some(payment * cand.n as f64),
            diagnostics,
            trace,
        };
    }

    if nan_seen {
        return FeasibilityOutcome {
            status: FeasibilityStatus::Undetermined,
            point: None,
            per_person_payment: None,
            total_cost: None,
            diagnostics: Vec::new(),
            trace,
        };
    }

    trace.certificate = Some(certificate(problem, &deltas, &per_delta_notes));
    let diagnostics = representative
        .map(|(delta, n, eps, _)| verify_point(problem, delta, n, eps, 1e-9).0)
        .unwrap_or_default();

    FeasibilityOutcome {
        status: FeasibilityStatus::Infeasible,
        point: None,
        per_person_payment: None,
        total_cost: None,
        diagnostics,
        trace,
    }
}

/// Export the accuracy and budget curves over the scanned size range.
pub fn region_export(
    problem: &FeasibilityProblem,
    samples: usize,
) -> Result<RegionTable, FeasibilityError> {
    if samples < 2 {
        return Err(FeasibilityError::TooFewSamples(samples));
    }
    let delta = match problem.delta_mode() {
        DeltaMode::Pure => 0.0,
        DeltaMode::Fixed(d) => *d,
        DeltaMode::Searched { .. } => return Err(FeasibilityError::RegionNeedsConcreteDelta),
    };
    let (n_lo, n_hi, _) = scan_bounds(problem, delta);
    let grid = log_grid(n_lo, n_hi.max(n_lo), samples);
    let rows = map_sizes(&grid, |n| {
        let eps_accuracy_min = match accuracy_need(problem, delta, n) {
            AccuracyNeed::Value(e) => Some(e),
            AccuracyNeed::Unachievable => None,
        };
        let eps_budget_max = match budget_room(problem, delta, n) {
            BudgetRoom::Value(e) => Some(e),
            BudgetRoom::Unbounded | BudgetRoom::Empty => None,
        };
        RegionRow {
            n,
            eps_accuracy_min,
            eps_budget_max,
        }
    });
    Ok(RegionTable { rows })
}

/// Evaluate every exact constraint at `(ε, δ, N)` and report residuals.
/// `tolerance` is the absolute slack allowed on each residual.
pub fn verify_point(
    problem: &FeasibilityProblem,
    delta: f64,
    n: u64,
    epsilon: f64,
    tolerance: f64,
) -> (Vec<ConstraintDiagnostic>, bool) {
    let mut out = Vec::new();
    let spec = problem.spec();
    let alpha = spec.target_failure();
    let level = PrivacyLevel::new(epsilon, delta);

    match level {
        Ok(level) => {
            if spec.kind() == StudyKind::MeanEstimation {
                let sampling = accuracy::mean_sampling_term(n, spec);
                out.push(ConstraintDiagnostic {
                    constraint: "sampling_error_bound".to_string(),
                    observed: sampling.value(),
                    raw: Some(sampling.raw()),
                    limit: alpha,
                    relation: "<=",
                    satisfied: sampling.value() <= alpha + tolerance,
                });
            }
            match accuracy::failure_bound(level, n, spec) {
                Ok(bound) => out.push(ConstraintDiagnostic {
                    constraint: "accuracy_failure_bound".to_string(),
                    observed: bound.value(),
                    raw: Some(bound.raw()),
                    limit: alpha,
                    relation: "<=",
                    satisfied: bound.value() <= alpha + tolerance,
                }),
                Err(_) => out.push(ConstraintDiagnostic {
                    constraint: "accuracy_failure_bound".to_string(),
                    observed: f64::NAN,
                    raw: None,
                    limit: alpha,
                    relation: "<=",
                    satisfied: false,
                }),
            }

            let check =
                economics::budget_satisfied(level, n, problem.profile(), problem.policy());
            if let Some(total) = problem.policy().total() {
                out.push(ConstraintDiagnostic {
                    constraint: "total_cost".to_string(),
                    observed: check.total_cost,
                    raw: None,
                    limit: total,
                    relation: "<=",
                    satisfied: check.total_cost <= total + tolerance.max(total * 1e-12),
                });
            }
            if let Some(cap) = problem.policy().per_person_cap() {
                out.push(ConstraintDiagnostic {
                    constraint: "per_person_payment".to_string(),
                    observed: check.per_person_payment,
                    raw: None,
                    limit: cap,
                    relation: "<=",
                    satisfied: check.per_person_payment <= cap + tolerance.max(cap * 1e-12),
                });
            }
        }
        Err(_) => out.push(ConstraintDiagnostic {
            constraint: "privacy_level".to_string(),
            observed: epsilon,
            raw: None,
            limit: 0.0,
            relation: ">=",
            satisfied: false,
        }),
    }

    if problem.sides().enforce_group_privacy_floor() {
        let floor = group_privacy_floor(n);
        out.push(ConstraintDiagnostic {
            constraint: "group_privacy_floor".to_string(),
            observed: epsilon,
            raw: None,
            limit: floor,
            relation: ">=",
            satisfied: epsilon >= floor - tolerance,
        });
    }
    if let Some(ceiling) = problem.sides().epsilon_ceiling() {
        out.push(ConstraintDiagnostic {
            constraint: "epsilon_ceiling".to_string(),
            observed: epsilon,
            raw: None,
            limit: ceiling,
            relation: "<=",
            satisfied: epsilon <= ceiling + tolerance,
        });
    }
    if let Some(n_max) = problem.sides().n_max() {
        out.push(ConstraintDiagnostic {
            constraint: "n_max".to_string(),
            observed: n as f64,
            raw: None,
            limit: n_max as f64,
            relation: "<=",
            satisfied: n <= n_max,
        });
    }
    if delta > 0.0 && problem.delta_n_budget().is_finite() {
        out.push(ConstraintDiagnostic {
            constraint: "delta_n".to_string(),
            observed: delta * n as f64,
            raw: None,
            limit: problem.delta_n_budget(),
            relation: "<=",
            satisfied: delta * n as f64 <= problem.delta_n_budget() + tolerance,
        });
    }

    let ok = out.iter().all(|d| d.satisfied);
    (out, ok)
}

fn map_sizes<T: Send>(sizes: &[u64], f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        sizes.par_iter().map(|&n| f(n)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        sizes.iter().map(|&n| f(n)).collect()
    }
}

/// Log-spaced integer grid over `[lo, hi]`, both endpoints included,
/// strictly increasing (duplicates collapse, so at most `points` entries).
fn log_grid(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    debug_assert!(lo >= 1 && points >= 2);
    if lo >= hi {
        return vec![lo];
    }
    let (ln_lo, ln_hi) = ((lo as f64).ln(), (hi as f64).ln());
    let mut grid = Vec::with_capacity(points);
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        let n = (ln_lo + t * (ln_hi - ln_lo)).exp().round() as u64;
        let n = n.clamp(lo, hi);
        if grid.last() != Some(&n) {
            grid.push(n);
        }
    }
    grid
}

/// The size range the scan covers for a given δ, plus how the upper end was
/// chosen.
fn scan_bounds(problem: &FeasibilityProblem, delta: f64) -> (u64, u64, String) {
    let n_lo = 1u64;
    let mut candidates: Vec<(u64, String)> = Vec::new();
    if let Some(n_max) = problem.sides().n_max() {
        candidates.push((n_max, "n_max".to_string()));
    }
    if delta > 0.0 {
        let dw = delta * problem.profile().worst_case();
        if let Some(b) = problem.policy().total() {
            if dw > 0.0 {
                let cap = (b / dw).floor();
                let cap = if cap >= 1.0 { cap as u64 } else { 0 };
                candidates.push((cap, "delta disclosure cost exhausts the total budget".to_string()));
            }
        }
        if problem.delta_n_budget().is_finite() {
            let cap = (problem.delta_n_budget() / delta).floor();
            let cap = if cap >= 1.0 { cap as u64 } else { 0 };
            candidates.push((cap, "delta*N cap".to_string()));
        }
    }
    if let Some((cap, reason)) = candidates.into_iter().min_by_key(|(n, _)| *n) {
        return (n_lo, cap, reason);
    }

    // Nothing bounds N. Total cost at the minimal feasible epsilon keeps
    // decreasing toward its large-N limit, so pick the cap relative to where
    // feasibility first shows up.
    let mut n = n_lo;
    loop {
        if window_eval(problem, delta, n).feasible {
            let cap = n.saturating_mul(N_CAP_SAFETY_FACTOR).min(N_SCAN_LIMIT);
            return (
                n_lo,
                cap,
                format!("{N_CAP_SAFETY_FACTOR}x the first feasible size {n}"),
            );
        }
        if n >= N_SCAN_LIMIT {
            return (
                n_lo,
                N_SCAN_LIMIT,
                "hard scan limit; no feasible size found while doubling".to_string(),
            );
        }
        n = n.saturating_mul(2).min(N_SCAN_LIMIT);
    }
}

fn window_eval(problem: &FeasibilityProblem, delta: f64, n: u64) -> WindowEval {
    let acc = accuracy_need(problem, delta, n);
    let bud = budget_room(problem, delta, n);
    let floor = if problem.sides().enforce_group_privacy_floor() {
        group_privacy_floor(n)
    } else {
        0.0
    };
    let ceiling = problem.sides().epsilon_ceiling().unwrap_or(f64::INFINITY);

    let eps_lo = match acc {
        AccuracyNeed::Value(e) => e.max(floor),
        AccuracyNeed::Unachievable => f64::INFINITY,
    };
    let eps_hi = match bud {
        BudgetRoom::Value(e) => e.min(ceiling),
        BudgetRoom::Unbounded => ceiling,
        BudgetRoom::Empty => f64::NEG_INFINITY,
    };

    let nan_seen = eps_lo.is_nan() || eps_hi.is_nan();
    let feasible = !nan_seen && eps_lo <= eps_hi + RESIDUAL_TOLERANCE && eps_lo.is_finite();

    // Representative epsilon when the window is empty: the affordable end,
    // since that is where accuracy comes closest to attainable.
    let rep_eps = if eps_hi.is_finite() && eps_hi >= 0.0 {
        eps_hi
    } else if eps_lo.is_finite() {
        eps_lo
    } else {
        floor.max(1.0)
    };
    let chosen_eps = if feasible { eps_lo } else { rep_eps };

    let level = PrivacyLevel::new(chosen_eps.max(0.0), delta);
    let (cost, failure) = match level {
        Ok(level) => {
            let payment = economics::marginal_cost(level, problem.profile());
            // Raw, not clamped: vacuous bounds all clamp to 1, and the raw
            // value still orders how far from feasible each size is.
            let failure = accuracy::failure_bound(level, n, problem.spec())
                .map(|b| b.raw())
                .unwrap_or(f64::NAN);
            (payment * n as f64, failure)
        }
        Err(_) => (f64::NAN, f64::NAN),
    };

    WindowEval {
        n,
        feasible,
        epsilon: chosen_eps.max(0.0),
        cost,
        best_achievable_failure: failure,
        nan_seen: nan_seen || cost.is_nan(),
    }
}

/// Minimal ε meeting the accuracy constraint at size `n`: closed-form
/// inversion for mean estimation, bisection on the published bound for the
/// MWEM kinds.
fn accuracy_need(problem: &FeasibilityProblem, delta: f64, n: u64) -> AccuracyNeed {
    let spec = problem.spec();
    let alpha = spec.target_failure();
    match spec.kind() {
        StudyKind::MeanEstimation => match accuracy::mean_epsilon_at_n(spec, n) {
            Ok(Some(e)) => AccuracyNeed::Value(e),
            Ok(None) => AccuracyNeed::Unachievable,
            Err(_) => AccuracyNeed::Unachievable,
        },
        StudyKind::MwemPure | StudyKind::MwemApprox => {
            let beta = |eps: f64| -> f64 {
                let level = PrivacyLevel::new(eps, delta).expect("bracket epsilon");
                accuracy::failure_bound(level, n, spec)
                    .map(|b| b.value())
                    .unwrap_or(f64::NAN)
            };
            if beta(0.0) <= alpha {
                return AccuracyNeed::Value(0.0);
            }
            // Bracket: double until the bound drops below alpha. The bound
            // decays like exp(-k*eps), so this terminates fast.
            let mut hi = 1.0;
            let mut guard = 0;
            while beta(hi) > alpha {
                hi *= 2.0;
                guard += 1;
                if guard > 200 {
                    return AccuracyNeed::Unachievable;
                }
            }
            AccuracyNeed::Value(bisect_decreasing(beta, alpha, 0.0, hi))
        }
    }
}

/// Maximal ε the budget affords at size `n`, via bisection on the strictly
/// increasing marginal cost. The tightest of the present constraints wins.
fn budget_room(problem: &FeasibilityProblem, delta: f64, n: u64) -> BudgetRoom {
    let profile = problem.profile();
    let payment = |eps: f64| -> f64 {
        let level = PrivacyLevel::new(eps, delta).expect("bracket epsilon");
        economics::marginal_cost(level, profile)
    };

    let mut room = BudgetRoom::Unbounded;
    let mut targets = Vec::new();
    if let Some(b) = problem.policy().total() {
        targets.push(b / n as f64);
    }
    if let Some(cap) = problem.policy().per_person_cap() {
        targets.push(cap);
    }
    for target in targets {
        let this = if payment(0.0) > target + RESIDUAL_TOLERANCE {
            BudgetRoom::Empty
        } else if profile.base_cost() == 0.0 {
            // Payment does not grow with epsilon; the target never binds.
            BudgetRoom::Unbounded
        } else {
            let mut hi = 1.0;
            let mut guard = 0;
            while payment(hi) <= target {
                hi *= 2.0;
                guard += 1;
                if guard > 200 {
                    break;
                }
            }
            if payment(hi) <= target {
                BudgetRoom::Unbounded
            } else {
                BudgetRoom::Value(bisect_increasing(payment, target, 0.0, hi))
            }
        };
        room = match (room, this) {
            (BudgetRoom::Empty, _) | (_, BudgetRoom::Empty) => BudgetRoom::Empty,
            (BudgetRoom::Unbounded, x) | (x, BudgetRoom::Unbounded) => x,
            (BudgetRoom::Value(a), BudgetRoom::Value(b)) => BudgetRoom::Value(a.min(b)),
        };
    }
    room
}

/// Largest `x` in `[lo, hi]` with `f(x) ≤ target`, for increasing `f` with
/// `f(lo) ≤ target < f(hi)`. Returns the below-target end of the final
/// bracket, so the result always satisfies the constraint.
fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..BISECT_MAX_ITERATIONS {
        if hi - lo <= BISECT_RELATIVE_TOLERANCE * hi.abs() {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Smallest `x` in `[lo, hi]` with `f(x) ≤ target`, for decreasing `f` with
/// `f(lo) > target ≥ f(hi)`. Returns the below-target end of the final
/// bracket.
fn bisect_decreasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..BISECT_MAX_ITERATIONS {
        if hi - lo <= BISECT_RELATIVE_TOLERANCE * hi.abs() {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Integer search between grid neighbours of the best point: repeatedly
/// shrink toward the cheaper third, keeping every feasible point seen. The
/// cost curve is smooth in `N`, so this converges to the local optimum; the
/// caller keeps the best point seen either way.
fn refine_bracket(
    problem: &FeasibilityProblem,
    delta: f64,
    mut lo: u64,
    mut hi: u64,
) -> Vec<WindowEval> {
    let mut out = Vec::new();
    let mut guard = 0;
    while hi - lo > 2 && guard < 200 {
        guard += 1;
        let third = (hi - lo) / 3;
        let m1 = lo + third;
        let m2 = hi - third;
        let e1 = window_eval(problem, delta, m1);
        let e2 = window_eval(problem, delta, m2);
        let k1 = if e1.feasible { e1.cost } else { f64::INFINITY };
        let k2 = if e2.feasible { e2.cost } else { f64::INFINITY };
        out.push(e1);
        out.push(e2);
        if k1 <= k2 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    for n in lo..=hi {
        out.push(window_eval(problem, delta, n));
    }
    out
}

/// Limit of `N·ε_lo(N)` as sizes grow, folding in the group-privacy floor.
fn accuracy_slope(problem: &FeasibilityProblem, delta: f64) -> Slope {
    let spec = problem.spec();
    let alpha = spec.target_failure();
    let t = spec.target_error();
    let (raw, strict) = match spec.kind() {
        StudyKind::MeanEstimation => ((2.0 / t) * (1.0 / alpha).ln(), true),
        StudyKind::MwemPure | StudyKind::MwemApprox => {
            let ln_x = (spec.universe_size().expect("mwem spec") as f64).ln();
            let pref =
                32.0 * spec.query_count().expect("mwem spec") as f64 * ln_x / (t * t);
            if pref <= alpha {
                (0.0, false)
            } else {
                let k = match spec.kind() {
                    StudyKind::MwemPure => 128.0 * ln_x / (t * t * t),
                    _ => 8.0 * (ln_x * (1.0 / delta).ln()).sqrt() / (t * t),
                };
                (k * (pref / alpha).ln(), false)
            }
        }
    };
    if problem.sides().enforce_group_privacy_floor() && raw < 1.0 {
        // The floor contributes N*(1/N) = 1 exactly.
        Slope {
            value: 1.0,
            strict: false,
        }
    } else {
        Slope { value: raw, strict }
    }
}

/// Limit of `N·ε_hi(N)`: the total budget contributes `B/E`; per-person caps
/// and the ε ceiling grow without bound once rescaled.
fn budget_slope(problem: &FeasibilityProblem, delta: f64) -> Slope {
    let e = problem.profile().base_cost();
    let dw = delta * problem.profile().worst_case();
    if let Some(cap) = problem.policy().per_person_cap() {
        if dw > cap {
            return Slope {
                value: 0.0,
                strict: false,
            };
        }
        if e > 0.0 && dw == cap {
            return Slope {
                value: 0.0,
                strict: false,
            };
        }
    }
    match problem.policy().total() {
        Some(b) if e > 0.0 && dw == 0.0 => Slope {
            value: b / e,
            strict: true,
        },
        // delta*W > 0 bounds the range elsewhere; the asymptote is moot.
        _ => Slope {
            value: f64::INFINITY,
            strict: false,
        },
    }
}

fn certificate(
    problem: &FeasibilityProblem,
    deltas: &[f64],
    notes: &[String],
) -> InfeasibilityCertificate {
    // A single delta with a hard size cap: the rescaled window curves are
    // monotone for delta = 0, so emptiness at n_max certifies [1, n_max].
    if deltas == [0.0] {
        if let Some(n_max) = problem.sides().n_max() {
            return InfeasibilityCertificate {
                kind: "exhaustive_up_to_n_max".to_string(),
                detail: format!(
                    "window empty at every scanned size; by window monotonicity in N, \
                     emptiness at N = {n_max} covers all smaller sizes"
                ),
                accuracy_slope: None,
                budget_slope: None,
            };
        }
        let lo = accuracy_slope(problem, 0.0);
        let hi = budget_slope(problem, 0.0);
        if lo.value > hi.value || (lo.value == hi.value && (lo.strict || hi.strict)) {
            return InfeasibilityCertificate {
                kind: "asymptotic_separation".to_string(),
                detail: format!(
                    "N*eps_accuracy(N) stays above {} while N*eps_budget(N) stays below {}; \
                     no size admits a window",
                    lo.value, hi.value
                ),
                accuracy_slope: Some(lo.value),
                budget_slope: Some(hi.value),
            };
        }
        return InfeasibilityCertificate {
            kind: "scan_exhausted".to_string(),
            detail: format!(
                "no feasible size up to the scan limit; the rescaled curves do not separate \
                 (accuracy slope {}, budget slope {}), so feasibility beyond the limit is \
                 not ruled out",
                lo.value, hi.value
            ),
            accuracy_slope: Some(lo.value),
            budget_slope: Some(hi.value),
        };
    }
    InfeasibilityCertificate {
        kind: "bounded_scan".to_string(),
        detail: notes.join("; "),
        accuracy_slope: None,
        budget_slope: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_spec() -> StudySpec {
        StudySpec::mean_estimation(0.05, 0.05).unwrap()
    }

    fn profile(e: f64, w: f64) -> CostProfile {
        CostProfile::new(e, w, 0.002).unwrap()
    }

    fn mean_problem(e: f64, w: f64, budget: f64) -> FeasibilityProblem {
        FeasibilityProblem::new(
            mean_spec(),
            profile(e, w),
            BudgetPolicy::total_budget(budget).unwrap(),
            SideConstraints::default(),
            DeltaMode::Pure,
        )
        .unwrap()
    }

    #[test]
    fn blatant_ceiling_known_points() {
        let c = blatant_epsilon_ceiling(1_000_000, 0.99).unwrap();
        assert!((c - 13.8054602).abs() < 1e-6);
        assert_eq!(c.ceil(), 14.0);

        let c = blatant_epsilon_ceiling(8000, 0.1).unwrap();
        assert!((c - 6.6846117).abs() < 1e-6);

        // Barely above uniform output: both logs go small.
        let c = blatant_epsilon_ceiling(1000, 1.0 / 1000.0 + 1e-6).unwrap();
        assert!(c < 0.01);

        assert!(blatant_epsilon_ceiling(1, 0.5).is_err());
        assert!(blatant_epsilon_ceiling(1000, 1e-4).is_err());
        assert!(blatant_epsilon_ceiling(1000, 1.0).is_err());
    }

    #[test]
    fn group_floor_values() {
        assert_eq!(group_privacy_floor(1000), 0.001);
        assert_eq!(group_privacy_floor(1), 1.0);
        assert_eq!(group_privacy_floor(20_000), 5e-5);
    }

    #[test]
    fn side_constraints_validate_override() {
        let blatant = BlatantParams {
            universe_size: 8000,
            capture_probability: 0.1,
        };
        assert!(SideConstraints::new(None, false, Some(blatant), Some(7.0)).is_err());
        let s = SideConstraints::new(None, false, Some(blatant), Some(1.0)).unwrap();
        assert_eq!(s.epsilon_ceiling(), Some(1.0));
        let s = SideConstraints::new(None, false, Some(blatant), None).unwrap();
        assert!((s.epsilon_ceiling().unwrap() - 6.6846117).abs() < 1e-6);
    }

    #[test]
    fn delta_mode_validation() {
        let approx = StudySpec::mwem_approx(0.05, 0.05, 1 << 15, 200_000).unwrap();
        let p = profile(1.0, 1e6);
        let policy = BudgetPolicy::total_budget(2e6).unwrap();
        assert!(FeasibilityProblem::new(
            approx,
            p,
            policy,
            SideConstraints::default(),
            DeltaMode::Pure
        )
        .is_err());
        assert!(FeasibilityProblem::new(
            mean_spec(),
            p,
            policy,
            SideConstraints::default(),
            DeltaMode::Fixed(1e-8)
        )
        .is_err());
        assert!(FeasibilityProblem::new(
            mean_spec(),
            p,
            policy,
            SideConstraints::default(),
            DeltaMode::Fixed(0.0)
        )
        .is_ok());
    }

    #[test]
    fn scenario_gate_under_the_shared_budget() {
        // T = alpha = 0.05, B = 3e4: three scenarios go through, smoking
        // does not.
        for (e, w) in [(12.5, 12_500.0), (0.25, 2500.0), (1.0, 1e5)] {
            let outcome = solve(&mean_problem(e, w, 3e4));
            assert_eq!(
                outcome.status,
                FeasibilityStatus::Feasible,
                "E={e} should be feasible"
            );
            let point = outcome.point.unwrap();
            let (_, ok) = verify_point(
                &mean_problem(e, w, 3e4),
                point.delta,
                point.n,
                point.epsilon,
                1e-9,
            );
            assert!(ok);
        }
        let outcome = solve(&mean_problem(254.8, 1274.0, 3e4));
        assert_eq!(outcome.status, FeasibilityStatus::Infeasible);
        let cert = outcome.trace.certificate.expect("certificate");
        assert_eq!(cert.kind, "asymptotic_separation");
        assert!(cert.accuracy_slope.unwrap() > cert.budget_slope.unwrap());
    }

    #[test]
    fn worked_point_is_feasible_even_if_not_optimal() {
        let problem = mean_problem(0.25, 2500.0, 3e4);
        let (_, ok) = verify_point(&problem, 0.0, 19_653, 0.0083333334, 1e-9);
        assert!(ok);
        // The optimizer may well return something cheaper.
        let outcome = solve(&problem);
        assert!(outcome.total_cost.unwrap() <= 41.85);
    }

    #[test]
    fn capped_education_study_is_infeasible() {
        let sides = SideConstraints::new(
            Some(1000),
            true,
            Some(BlatantParams {
                universe_size: 8000,
                capture_probability: 0.1,
            }),
            None,
        )
        .unwrap();
        let problem = FeasibilityProblem::new(
            mean_spec(),
            profile(12.5, 12_500.0),
            BudgetPolicy::per_person(10.0).unwrap(),
            sides,
            DeltaMode::Pure,
        )
        .unwrap();
        let outcome = solve(&problem);
        assert_eq!(outcome.status, FeasibilityStatus::Infeasible);
        assert_eq!(
            outcome.trace.certificate.as_ref().unwrap().kind,
            "exhaustive_up_to_n_max"
        );
        // Diagnostics surface the sampling term that sinks it: at N = 1000
        // the raw value is 1.624, clamped to 1, far above alpha.
        let sampling = outcome
            .diagnostics
            .iter()
            .find(|d| d.constraint == "sampling_error_bound")
            .expect("sampling diagnostic");
        assert!((sampling.raw.unwrap() - 1.6238727).abs() < 1e-4);
        assert_eq!(sampling.observed, 1.0);
        assert!(!sampling.satisfied);
    }

    #[test]
    fn solver_is_deterministic() {
        let problem = mean_problem(0.25, 2500.0, 3e4);
        let a = solve(&problem);
        let b = solve(&problem);
        assert_eq!(a, b);
    }

    #[test]
    fn sufficient_window_implies_feasible() {
        for e in [0.25, 1.0, 12.5, 100.0, 182.0] {
            let window = accuracy::mean_epsilon_window(&mean_spec(), 3e4, e).unwrap();
            if window.is_some() {
                let outcome = solve(&mean_problem(e, 10.0 * e, 3e4));
                assert_eq!(
                    outcome.status,
                    FeasibilityStatus::Feasible,
                    "window nonempty at E={e} must imply solver feasibility"
                );
            }
        }
    }

    #[test]
    fn mwem_pure_social_profile_fits_the_budget() {
        let spec = StudySpec::mwem_pure(0.2, 0.05, 256, 10_000).unwrap();
        let problem = FeasibilityProblem::new(
            spec,
            profile(1.0, 1e5),
            BudgetPolicy::total_budget(2e6).unwrap(),
            SideConstraints::default(),
            DeltaMode::Pure,
        )
        .unwrap();
        let outcome = solve(&problem);
        assert_eq!(outcome.status, FeasibilityStatus::Feasible);
        assert!(outcome.total_cost.unwrap() <= 2e6);
    }

    #[test]
    fn mwem_approx_searched_delta_fits_the_budget() {
        let spec = StudySpec::mwem_approx(0.05, 0.05, 1 << 15, 200_000).unwrap();
        let problem = FeasibilityProblem::new(
            spec,
            profile(1.0, 1e6),
            BudgetPolicy::total_budget(2e6).unwrap(),
            SideConstraints::default(),
            DeltaMode::searched_default(),
        )
        .unwrap();
        let outcome = solve(&problem);
        assert_eq!(outcome.status, FeasibilityStatus::Feasible);
        let point = outcome.point.unwrap();
        assert!(point.delta > 0.0);
        assert!(outcome.total_cost.unwrap() <= 2e6);
        // The delta*N default cap holds at the returned point.
        assert!(point.delta * point.n as f64 <= 0.01 + 1e-9);
    }

    #[test]
    fn monotone_window_structure() {
        let problem = mean_problem(0.25, 2500.0, 3e4);
        let mut prev_acc = f64::INFINITY;
        let mut prev_bud = f64::INFINITY;
        for n in [18_000u64, 20_000, 40_000, 100_000, 500_000] {
            let acc = match accuracy_need(&problem, 0.0, n) {
                AccuracyNeed::Value(e) => e,
                AccuracyNeed::Unachievable => f64::INFINITY,
            };
            let bud = match budget_room(&problem, 0.0, n) {
                BudgetRoom::Value(e) => e,
                BudgetRoom::Unbounded => f64::INFINITY,
                BudgetRoom::Empty => f64::NEG_INFINITY,
            };
            assert!(acc <= prev_acc);
            assert!(bud <= prev_bud);
            prev_acc = acc;
            prev_bud = bud;
        }
    }

    #[test]
    fn budget_room_matches_closed_form() {
        // Bisection against ln(1 + B/(E*N)) for the total-budget bound.
        let problem = mean_problem(0.25, 2500.0, 3e4);
        for n in [1000u64, 19_653, 100_000] {
            let expect = (1.0 + 3e4 / (0.25 * n as f64)).ln();
            match budget_room(&problem, 0.0, n) {
                BudgetRoom::Value(e) => {
                    assert!((e - expect).abs() <= 1e-9 * expect.max(1.0));
                    // The returned end satisfies the constraint.
                    let level = PrivacyLevel::pure(e).unwrap();
                    assert!(
                        economics::marginal_cost(level, problem.profile()) * n as f64
                            <= 3e4 + 1e-6
                    );
                }
                other => panic!("expected a finite bound, got {other:?}"),
            }
        }
    }

    #[test]
    fn region_export_contract() {
        let problem = mean_problem(0.25, 2500.0, 3e4).with_grid_points(64);
        let table = region_export(&problem, 64).unwrap();
        assert!(table.rows.len() >= 2);
        // Strictly increasing sizes.
        for w in table.rows.windows(2) {
            assert!(w[0].n < w[1].n);
        }
        // Feasible problem: some row has acc <= bud.
        assert!(table
            .rows
            .iter()
            .any(|r| match (r.eps_accuracy_min, r.eps_budget_max) {
                (Some(a), Some(b)) => a <= b,
                _ => false,
            }));

        // Two samples: exactly the endpoints.
        let table = region_export(&problem, 2).unwrap();
        assert_eq!(table.rows.len(), 2);

        assert!(region_export(&problem, 1).is_err());
    }

    #[test]
    fn region_export_free_participants_has_no_budget_curve() {
        let problem = FeasibilityProblem::new(
            mean_spec(),
            CostProfile::new(0.0, 2500.0, 0.002).unwrap(),
            BudgetPolicy::total_budget(3e4).unwrap(),
            SideConstraints::new(Some(100_000), false, None, None).unwrap(),
            DeltaMode::Pure,
        )
        .unwrap();
        let table = region_export(&problem, 16).unwrap();
        assert!(table.rows.iter().all(|r| r.eps_budget_max.is_none()));
    }

    #[test]
    fn region_infeasible_curves_never_cross() {
        let sides = SideConstraints::new(
            Some(1000),
            true,
            Some(BlatantParams {
                universe_size: 8000,
                capture_probability: 0.1,
            }),
            None,
        )
        .unwrap();
        let problem = FeasibilityProblem::new(
            mean_spec(),
            profile(12.5, 12_500.0),
            BudgetPolicy::per_person(10.0).unwrap(),
            sides,
            DeltaMode::Pure,
        )
        .unwrap();
        let table = region_export(&problem, 128).unwrap();
        assert!(table.rows.iter().all(|r| r.n <= 1000));
        for row in &table.rows {
            if let (Some(a), Some(b)) = (row.eps_accuracy_min, row.eps_budget_max) {
                assert!(a > b, "no exported size may admit a window");
            }
        }
        // In this instance the accuracy curve is absent everywhere: sampling
        // error alone exceeds alpha for every N <= 1000.
        assert!(table.rows.iter().all(|r| r.eps_accuracy_min.is_none()));
    }

    #[test]
    fn returned_point_beats_hand_picked_points() {
        // Optimizer cost is no worse than hand-picked feasible points.
        let outcome = solve(&mean_problem(0.25, 2500.0, 3e4));
        assert!(outcome.total_cost.unwrap() <= 41.8406);

        let spec = StudySpec::mwem_pure(0.2, 0.05, 256, 10_000).unwrap();
        let problem = FeasibilityProblem::new(
            spec,
            profile(0.25, 2500.0),
            BudgetPolicy::total_budget(2e6).unwrap(),
            SideConstraints::default(),
            DeltaMode::Pure,
        )
        .unwrap();
        let outcome = solve(&problem);
        assert_eq!(outcome.status, FeasibilityStatus::Feasible);
        assert!(outcome.total_cost.unwrap() <= 1_951_885.0);
    }
}
