//! Planning toolkit for differentially private studies.
//!
//! A study is described by three ingredients: an accuracy target (estimate a
//! population statistic to within an error `T`, failing with probability at
//! most `α`), a participant cost model (base cost `E`, worst-case disclosure
//! cost `W`, exposure fraction `φ`), and an analyst budget (total `B` and/or a
//! per-person cap `B₀`). The privacy parameters `(ε, δ)` and the study size
//! `N` then have to satisfy
//!
//! ```text
//! A(ε, δ, N) ≤ α            (accuracy)
//! ((e^ε − 1)·E + δ·W)·N ≤ B  (budget)
//! ```
//!
//! plus optional side constraints (a cap on `N`, the group-privacy floor
//! `ε ≥ 1/N`, and a ceiling on `ε` below which record publication would still
//! count as private).
//!
//! The crate is organised as:
//!
//! * [`dp`] — Laplace noise, its tail bound, and Chernoff concentration
//!   bounds.
//! * [`accuracy`] — analyst-side failure bounds `A(ε, δ, N)` per study kind
//!   and their closed-form inversions.
//! * [`economics`] — participant compensation and the private-vs-non-private
//!   cost comparison.
//! * [`feasibility`] — the constraint system over `(ε, δ, N)`, a
//!   deterministic solver, and region-curve export.
//! * [`simulation`] — a seeded Monte Carlo oracle that validates the analytic
//!   bounds empirically.
//!
//! With the default `parallel` feature the simulation trials and the solver's
//! grid scan run on rayon; results are bit-identical to the sequential
//! fallback (`--no-default-features`).

pub mod accuracy;
pub mod dp;
pub mod economics;
pub mod feasibility;
pub mod simulation;

pub use accuracy::{PrivacyLevel, StudyKind, StudySpec};
pub use dp::{LaplaceScale, ProbabilityBound};
pub use economics::{BudgetCheck, BudgetPolicy, CostProfile};
pub use feasibility::{
    DeltaMode, FeasibilityOutcome, FeasibilityProblem, FeasibilityStatus, FeasiblePoint,
    SideConstraints,
};
pub use simulation::{SimulationConfig, SimulationReport, Verdict};

/// Absolute tolerance on constraint residuals.
///
/// All constraint functions are smooth exponentials, well conditioned at the
/// scales the model works with, so a fixed absolute slack on the residual is
/// enough to absorb round-off when comparing against a threshold.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;
