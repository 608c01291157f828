//! Analyst-side accuracy: the failure bound `A(ε, δ, N)` for each study kind,
//! plus the closed forms the mean-estimation constraint admits.
//!
//! For mean estimation the mechanism releases the sample proportion with
//! Laplace noise of scale `1/(Nε)`, and the failure probability (missing the
//! population mean by more than `T`) is bounded by
//!
//! ```text
//! A(ε, N) = 2·exp(−N·T²/12) + exp(−T·N·ε/2)
//! ```
//!
//! The first term is sampling error at deviation `T/2`, the second the
//! Laplace tail at `T/2`. Solving `3·exp(−N·T²/12) ≤ α` (valid once
//! `ε ≥ T/6`, where the noise term is dominated) gives the sufficient
//! condition `N ≥ (12/T²)·ln(3/α)` and, under a budget `B` with base cost
//! `E`, the epsilon window `T/6 ≤ ε ≤ ln(1 + B·T²/(12·E·ln(3/α)))`.
//!
//! The two MWEM kinds use published accuracy certificates for answering
//! `|C|` counting queries over a record universe of size `|X|`; they are
//! evaluated exactly as stated, with no re-derivation.

use serde::Serialize;
use thiserror::Error;

use crate::dp::{self, LaplaceScale, ProbabilityBound};

/// What the study measures, which picks the accuracy certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StudyKind {
    /// Release one population proportion via the Laplace mechanism.
    MeanEstimation,
    /// Answer many counting queries with the pure ε-private MWEM.
    MwemPure,
    /// Answer many counting queries with the (ε, δ)-private MWEM.
    MwemApprox,
}

impl std::fmt::Display for StudyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StudyKind::MeanEstimation => write!(f, "mean_estimation"),
            StudyKind::MwemPure => write!(f, "mwem_pure"),
            StudyKind::MwemApprox => write!(f, "mwem_approx"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AccuracyError {
    #[error("{op} requires a {expected} study, got {got}")]
    WrongKind {
        op: &'static str,
        expected: &'static str,
        got: StudyKind,
    },
    #[error("{op} is a pure-privacy bound; delta must be 0, got {delta}")]
    DeltaNotAllowed { op: &'static str, delta: f64 },
    #[error("{op} requires delta > 0, got 0")]
    DeltaRequired { op: &'static str },
    #[error("study size must be at least 1")]
    ZeroParticipants,
    #[error("{field} must be {requirement}, got {value}")]
    InvalidField {
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("{kind} studies require universe_size >= 2 and query_count >= 1")]
    MissingMwemFields { kind: StudyKind },
}

fn check_unit_open(field: &'static str, value: f64) -> Result<(), AccuracyError> {
    if !(value.is_finite() && value > 0.0 && value < 1.0) {
        return Err(AccuracyError::InvalidField {
            field,
            requirement: "in (0, 1)",
            value,
        });
    }
    Ok(())
}

/// The accuracy target: error `T`, failure probability `α`, and for the MWEM
/// kinds the universe size `|X|` and query count `|C|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudySpec {
    kind: StudyKind,
    target_error: f64,
    target_failure: f64,
    universe_size: Option<u64>,
    query_count: Option<u64>,
}

impl StudySpec {
    pub fn mean_estimation(target_error: f64, target_failure: f64) -> Result<Self, AccuracyError> {
        check_unit_open("target_error", target_error)?;
        check_unit_open("target_failure", target_failure)?;
        Ok(Self {
            kind: StudyKind::MeanEstimation,
            target_error,
            target_failure,
            universe_size: None,
            query_count: None,
        })
    }

    pub fn mwem_pure(
        target_error: f64,
        target_failure: f64,
        universe_size: u64,
        query_count: u64,
    ) -> Result<Self, AccuracyError> {
        Self::mwem(StudyKind::MwemPure, target_error, target_failure, universe_size, query_count)
    }

    pub fn mwem_approx(
        target_error: f64,
        target_failure: f64,
        universe_size: u64,
        query_count: u64,
    ) -> Result<Self, AccuracyError> {
        Self::mwem(StudyKind::MwemApprox, target_error, target_failure, universe_size, query_count)
    }

    fn mwem(
        kind: StudyKind,
        target_error: f64,
        target_failure: f64,
        universe_size: u64,
        query_count: u64,
    ) -> Result<Self, AccuracyError> {
        check_unit_open("target_error", target_error)?;
        check_unit_open("target_failure", target_failure)?;
        if universe_size < 2 || query_count < 1 {
            return Err(AccuracyError::MissingMwemFields { kind });
        }
        Ok(Self {
            kind,
            target_error,
            target_failure,
            universe_size: Some(universe_size),
            query_count: Some(query_count),
        })
    }

    pub fn kind(&self) -> StudyKind {
        self.kind
    }

    pub fn target_error(&self) -> f64 {
        self.target_error
    }

    pub fn target_failure(&self) -> f64 {
        self.target_failure
    }

    pub fn universe_size(&self) -> Option<u64> {
        self.universe_size
    }

    pub fn query_count(&self) -> Option<u64> {
        self.query_count
    }

    fn expect_kind(&self, op: &'static str, kind: StudyKind) -> Result<(), AccuracyError> {
        if self.kind != kind {
            let expected = match kind {
                StudyKind::MeanEstimation => "mean_estimation",
                StudyKind::MwemPure => "mwem_pure",
                StudyKind::MwemApprox => "mwem_approx",
            };
            return Err(AccuracyError::WrongKind {
                op,
                expected,
                got: self.kind,
            });
        }
        Ok(())
    }

    /// `32·|C|·ln|X| / T²`, the prefactor both MWEM bounds share.
    fn mwem_prefactor(&self) -> f64 {
        let x = self.universe_size.expect("mwem spec") as f64;
        let c = self.query_count.expect("mwem spec") as f64;
        32.0 * c * x.ln() / (self.target_error * self.target_error)
    }
}

/// The privacy level being purchased: `δ = 0` is pure ε-privacy, `δ > 0` the
/// (ε, δ) relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrivacyLevel {
    epsilon: f64,
    delta: f64,
}

impl PrivacyLevel {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self, AccuracyError> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(AccuracyError::InvalidField {
                field: "epsilon",
                requirement: "nonnegative and finite",
                value: epsilon,
            });
        }
        if !(delta.is_finite() && (0.0..1.0).contains(&delta)) {
            return Err(AccuracyError::InvalidField {
                field: "delta",
                requirement: "in [0, 1)",
                value: delta,
            });
        }
        Ok(Self { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self, AccuracyError> {
        Self::new(epsilon, 0.0)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_pure(&self) -> bool {
        self.delta == 0.0
    }
}

/// A closed interval of feasible ε values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonWindow {
    pub lo: f64,
    pub hi: f64,
}

impl EpsilonWindow {
    pub fn contains(&self, epsilon: f64) -> bool {
        self.lo <= epsilon && epsilon <= self.hi
    }
}

/// Failure bound for the mean-estimation study:
/// `2·exp(−N·T²/12) + exp(−T·N·ε/2)`, clamped once after summing.
pub fn mean_failure_bound(
    level: PrivacyLevel,
    n: u64,
    spec: &StudySpec,
) -> Result<ProbabilityBound, AccuracyError> {
    spec.expect_kind("mean_failure_bound", StudyKind::MeanEstimation)?;
    if !level.is_pure() {
        return Err(AccuracyError::DeltaNotAllowed {
            op: "mean_failure_bound",
            delta: level.delta(),
        });
    }
    if n == 0 {
        return Err(AccuracyError::ZeroParticipants);
    }
    Ok(ProbabilityBound::from_raw(
        mean_sampling_term(n, spec).raw() + mean_noise_term(level.epsilon(), n, spec).raw(),
    ))
}

/// Sampling-error half of the mean bound: the Chernoff bound at deviation
/// `T/2` with `μ ≤ 1`.
pub fn mean_sampling_term(n: u64, spec: &StudySpec) -> ProbabilityBound {
    dp::chernoff_upper(n, spec.target_error / 2.0, 1.0).expect("valid spec parameters")
}

/// Noise half of the mean bound: the Laplace tail at `T/2` for scale
/// `1/(Nε)`. At `ε = 0` the tail is vacuous (raw 1).
pub fn mean_noise_term(epsilon: f64, n: u64, spec: &StudySpec) -> ProbabilityBound {
    if epsilon == 0.0 {
        return ProbabilityBound::from_raw(1.0);
    }
    let scale = LaplaceScale::for_proportion(n, epsilon).expect("validated epsilon");
    dp::laplace_tail(spec.target_error / 2.0, &scale)
}

/// Smallest study size for which the sufficient condition
/// `3·exp(−N·T²/12) ≤ α` holds: `ceil((12/T²)·ln(3/α))`.
pub fn mean_min_n(spec: &StudySpec) -> Result<u64, AccuracyError> {
    spec.expect_kind("mean_min_n", StudyKind::MeanEstimation)?;
    let t = spec.target_error;
    let bound = 12.0 / (t * t) * (3.0 / spec.target_failure).ln();
    Ok(bound.ceil().max(1.0) as u64)
}

/// The sufficient ε window `[T/6, ln(1 + B·T²/(12·E·ln(3/α)))]`, or `None`
/// when the upper end falls below `T/6`.
///
/// An empty window means the sufficient condition fails; it is *not* proof of
/// infeasibility — only the exact-constraint solver may declare that.
pub fn mean_epsilon_window(
    spec: &StudySpec,
    budget: f64,
    base_cost: f64,
) -> Result<Option<EpsilonWindow>, AccuracyError> {
    spec.expect_kind("mean_epsilon_window", StudyKind::MeanEstimation)?;
    if !(budget.is_finite() && budget > 0.0) {
        return Err(AccuracyError::InvalidField {
            field: "budget",
            requirement: "positive and finite",
            value: budget,
        });
    }
    if !(base_cost.is_finite() && base_cost > 0.0) {
        return Err(AccuracyError::InvalidField {
            field: "base_cost",
            requirement: "positive and finite",
            value: base_cost,
        });
    }
    let t = spec.target_error;
    let lo = t / 6.0;
    let hi = (1.0 + budget * t * t / (12.0 * base_cost * (3.0 / spec.target_failure).ln())).ln();
    Ok((hi >= lo).then_some(EpsilonWindow { lo, hi }))
}

/// Minimal ε meeting the exact mean accuracy constraint at this `n`:
/// `(2/(T·n))·ln(1/(α − 2·exp(−n·T²/12)))`, or `None` when sampling error
/// alone already exceeds `α` (no ε can help).
pub fn mean_epsilon_at_n(spec: &StudySpec, n: u64) -> Result<Option<f64>, AccuracyError> {
    spec.expect_kind("mean_epsilon_at_n", StudyKind::MeanEstimation)?;
    if n == 0 {
        return Err(AccuracyError::ZeroParticipants);
    }
    let slack = spec.target_failure - mean_sampling_term(n, spec).raw();
    if slack <= 0.0 {
        return Ok(None);
    }
    Ok(Some(2.0 / (spec.target_error * n as f64) * (1.0 / slack).ln()))
}

/// Failure bound for the pure ε-private MWEM:
/// `(32·|C|·ln|X|/T²)·exp(−ε·N·T³/(128·ln|X|))`, clamped.
pub fn mwem_pure_failure(
    level: PrivacyLevel,
    n: u64,
    spec: &StudySpec,
) -> Result<ProbabilityBound, AccuracyError> {
    spec.expect_kind("mwem_pure_failure", StudyKind::MwemPure)?;
    if !level.is_pure() {
        return Err(AccuracyError::DeltaNotAllowed {
            op: "mwem_pure_failure",
            delta: level.delta(),
        });
    }
    if n == 0 {
        return Err(AccuracyError::ZeroParticipants);
    }
    let t = spec.target_error;
    let ln_x = (spec.universe_size.expect("mwem spec") as f64).ln();
    let exponent = level.epsilon() * n as f64 * t * t * t / (128.0 * ln_x);
    Ok(ProbabilityBound::from_raw(
        spec.mwem_prefactor() * (-exponent).exp(),
    ))
}

/// Failure bound for the (ε, δ)-private MWEM:
/// `(32·|C|·ln|X|/T²)·exp(−ε·N·T²/(8·√(ln|X|·ln(1/δ))))`, clamped.
pub fn mwem_approx_failure(
    level: PrivacyLevel,
    n: u64,
    spec: &StudySpec,
) -> Result<ProbabilityBound, AccuracyError> {
    spec.expect_kind("mwem_approx_failure", StudyKind::MwemApprox)?;
    if level.delta() <= 0.0 {
        return Err(AccuracyError::DeltaRequired {
            op: "mwem_approx_failure",
        });
    }
    if n == 0 {
        return Err(AccuracyError::ZeroParticipants);
    }
    let t = spec.target_error;
    let ln_x = (spec.universe_size.expect("mwem spec") as f64).ln();
    let denominator = 8.0 * (ln_x * (1.0 / level.delta()).ln()).sqrt();
    let exponent = level.epsilon() * n as f64 * t * t / denominator;
    Ok(ProbabilityBound::from_raw(
        spec.mwem_prefactor() * (-exponent).exp(),
    ))
}

/// Failure bound dispatched on the study kind. `level.delta` must match the
/// kind (0 for mean estimation and pure MWEM, positive for approx MWEM).
pub fn failure_bound(
    level: PrivacyLevel,
    n: u64,
    spec: &StudySpec,
) -> Result<ProbabilityBound, AccuracyError> {
    match spec.kind() {
        StudyKind::MeanEstimation => mean_failure_bound(level, n, spec),
        StudyKind::MwemPure => mwem_pure_failure(level, n, spec),
        StudyKind::MwemApprox => mwem_approx_failure(level, n, spec),
    }
}
