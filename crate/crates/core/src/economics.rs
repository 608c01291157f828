//! Participant-side cost model and analyst budget arithmetic.
//!
//! A rational participant whose expected cost from the study running without
//! them is `E` (the base cost) sees their expected cost multiply by at most
//! `e^ε` when they join an ε-private study, so the compensation owed is the
//! marginal increase `(e^ε − 1)·E`. Under (ε, δ)-privacy the mechanism may
//! additionally disclose a record outright with probability `δ`, adding
//! `δ·W` for a worst-case disclosure cost `W`:
//!
//! ```text
//! marginal_cost(ε, δ) = (e^ε − 1)·E + δ·W
//! ```
//!
//! The non-private alternative is priced by assuming up to a `φ` fraction of
//! participants get exposed and each is compensated `φ·W`. Comparing the two
//! study designs at equal accuracy yields a sufficient condition for the
//! private study being cheaper.

use serde::Serialize;
use thiserror::Error;

use crate::accuracy::{PrivacyLevel, StudyKind, StudySpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EconomicsError {
    #[error("{field} must be {requirement}, got {value}")]
    InvalidField {
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("a budget policy needs a total budget, a per-person cap, or both")]
    EmptyBudgetPolicy,
    #[error("expected-cost envelope is a pure-privacy statement; delta must be 0, got {0}")]
    DeltaNotAllowed(f64),
    #[error("{op} requires a mean_estimation study, got {got}")]
    WrongKind { op: &'static str, got: StudyKind },
    #[error("{op} requires a positive base cost")]
    ZeroBaseCost { op: &'static str },
}

/// Participant economics: base cost `E`, worst-case disclosure cost `W`, and
/// the exposure fraction `φ` assumed for a non-private study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostProfile {
    base_cost: f64,
    worst_case: f64,
    exposure_fraction: f64,
}

impl CostProfile {
    pub fn new(base_cost: f64, worst_case: f64, exposure_fraction: f64) -> Result<Self, EconomicsError> {
        if !(base_cost.is_finite() && base_cost >= 0.0) {
            return Err(EconomicsError::InvalidField {
                field: "base_cost",
                requirement: "nonnegative and finite",
                value: base_cost,
            });
        }
        if !(worst_case.is_finite() && worst_case >= 0.0) {
            return Err(EconomicsError::InvalidField {
                field: "worst_case",
                requirement: "nonnegative and finite",
                value: worst_case,
            });
        }
        if !(exposure_fraction.is_finite() && (0.0..=1.0).contains(&exposure_fraction)) {
            return Err(EconomicsError::InvalidField {
                field: "exposure_fraction",
                requirement: "in [0, 1]",
                value: exposure_fraction,
            });
        }
        Ok(Self {
            base_cost,
            worst_case,
            exposure_fraction,
        })
    }

    pub fn base_cost(&self) -> f64 {
        self.base_cost
    }

    pub fn worst_case(&self) -> f64 {
        self.worst_case
    }

    pub fn exposure_fraction(&self) -> f64 {
        self.exposure_fraction
    }

    /// Soft sanity notes that do not invalidate the profile. `W < E` is
    /// suspicious because the worst case is meant to dominate the expected
    /// cost of full disclosure.
    pub fn sanity_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        if self.worst_case < self.base_cost {
            warnings.push(format!(
                "worst_case ({}) is below base_cost ({}); the delta*W term assumes \
                 full disclosure costs at least the base cost",
                self.worst_case, self.base_cost
            ));
        }
        warnings
    }
}

/// Analyst budget: a total `B`, a per-person cap `B₀`, or both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetPolicy {
    total: Option<f64>,
    per_person_cap: Option<f64>,
}

impl BudgetPolicy {
    pub fn new(total: Option<f64>, per_person_cap: Option<f64>) -> Result<Self, EconomicsError> {
        if total.is_none() && per_person_cap.is_none() {
            return Err(EconomicsError::EmptyBudgetPolicy);
        }
        for (field, value) in [("total", total), ("per_person_cap", per_person_cap)] {
            if let Some(v) = value {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(EconomicsError::InvalidField {
                        field,
                        requirement: "nonnegative and finite",
                        value: v,
                    });
                }
            }
        }
        Ok(Self {
            total,
            per_person_cap,
        })
    }

    pub fn total_budget(total: f64) -> Result<Self, EconomicsError> {
        Self::new(Some(total), None)
    }

    pub fn per_person(cap: f64) -> Result<Self, EconomicsError> {
        Self::new(None, Some(cap))
    }

    pub fn total(&self) -> Option<f64> {
        self.total
    }

    pub fn per_person_cap(&self) -> Option<f64> {
        self.per_person_cap
    }
}

/// Compensation owed to each participant: `(e^ε − 1)·E + δ·W`.
pub fn marginal_cost(level: PrivacyLevel, profile: &CostProfile) -> f64 {
    (level.epsilon().exp_m1()) * profile.base_cost() + level.delta() * profile.worst_case()
}

/// The participation-cost envelope `[e^{−ε}·E, e^{ε}·E]` around the base
/// cost under pure ε-privacy.
pub fn expected_cost_bounds(level: PrivacyLevel, base_cost: f64) -> Result<(f64, f64), EconomicsError> {
    if !level.is_pure() {
        return Err(EconomicsError::DeltaNotAllowed(level.delta()));
    }
    let eps = level.epsilon();
    Ok(((-eps).exp() * base_cost, eps.exp() * base_cost))
}

/// Outcome of checking the budget constraints at a concrete `(ε, δ, N)`.
///
/// Residuals are slack: `limit − spent`, one per constraint present in the
/// policy. Negative slack means the constraint is violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetCheck {
    pub satisfied: bool,
    pub per_person_payment: f64,
    pub total_cost: f64,
    pub total_slack: Option<f64>,
    pub per_person_slack: Option<f64>,
}

/// `true` iff `marginal_cost·N ≤ B` (when a total is set) and
/// `marginal_cost ≤ B₀` (when a cap is set).
pub fn budget_satisfied(
    level: PrivacyLevel,
    n: u64,
    profile: &CostProfile,
    policy: &BudgetPolicy,
) -> BudgetCheck {
    let per_person = marginal_cost(level, profile);
    let total_cost = per_person * n as f64;
    let total_slack = policy.total().map(|b| b - total_cost);
    let per_person_slack = policy.per_person_cap().map(|b| b - per_person);
    let satisfied = total_slack.is_none_or(|s| s >= 0.0) && per_person_slack.is_none_or(|s| s >= 0.0);
    BudgetCheck {
        satisfied,
        per_person_payment: per_person,
        total_cost,
        total_slack,
        per_person_slack,
    }
}

/// Size requirement of the equally accurate non-private study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonPrivateSize {
    /// The real-valued lower bound `(1/(8T²))·ln(1/(2α))`.
    pub bound: f64,
    /// The bound rounded up to whole participants, at least 1.
    pub participants: u64,
}

/// Minimum size of a non-private mean study reaching the same accuracy:
/// `N' ≥ (1/(8T²))·ln(1/(2α))`.
///
/// Both the real bound and its ceiling are reported: the real bound feeds
/// the budget arithmetic, the ceiling instantiates an actual study.
pub fn nonprivate_min_n(spec: &StudySpec) -> Result<NonPrivateSize, EconomicsError> {
    expect_mean(spec, "nonprivate_min_n")?;
    let t = spec.target_error();
    let bound = (1.0 / (8.0 * t * t)) * (1.0 / (2.0 * spec.target_failure())).ln();
    let bound = bound.max(0.0);
    Ok(NonPrivateSize {
        bound,
        participants: (bound.ceil() as u64).max(1),
    })
}

/// Minimum compensation budget of the non-private study: `φ·W·N'` with the
/// real-valued `N'` bound.
pub fn nonprivate_budget(spec: &StudySpec, profile: &CostProfile) -> Result<f64, EconomicsError> {
    let n = nonprivate_min_n(spec)?;
    Ok(profile.exposure_fraction() * profile.worst_case() * n.bound)
}

/// Sufficient condition for the private mean study being cheaper than the
/// non-private one:
///
/// ```text
/// T/6 ≤ ln(1 + φ·W·ln(1/(2α)) / (96·E·ln(3/α)))
/// ```
///
/// `true` means cheaper; `false` is inconclusive (the condition is
/// sufficient, not necessary).
pub fn private_cheaper(spec: &StudySpec, profile: &CostProfile) -> Result<bool, EconomicsError> {
    expect_mean(spec, "private_cheaper")?;
    if profile.base_cost() <= 0.0 {
        return Err(EconomicsError::ZeroBaseCost {
            op: "private_cheaper",
        });
    }
    let t = spec.target_error();
    let alpha = spec.target_failure();
    let rhs = (1.0
        + profile.exposure_fraction() * profile.worst_case() * (1.0 / (2.0 * alpha)).ln()
            / (96.0 * profile.base_cost() * (3.0 / alpha).ln()))
    .ln();
    Ok(t / 6.0 <= rhs)
}

fn expect_mean(spec: &StudySpec, op: &'static str) -> Result<(), EconomicsError> {
    if spec.kind() != StudyKind::MeanEstimation {
        return Err(EconomicsError::WrongKind {
            op,
            got: spec.kind(),
        });
    }
    Ok(())
}
