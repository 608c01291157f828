//! Monte Carlo oracle for the mean-estimation mechanism.
//!
//! Each trial draws `n` independent 0/1 values with mean `μ`, releases the
//! sample proportion plus `Lap(1/(nε))` noise, and counts a failure when the
//! output misses `μ` by at least `T`. The empirical failure rate is then
//! compared against the analytic bound `2·exp(−nT²/12) + exp(−Tnε/2)`; the
//! bound is one-sided, so the verdict flags only rates that exceed it by
//! more than four binomial standard errors (a ≈ 99.99% one-sided band).
//!
//! Reproducibility: every trial owns its own generator, seeded by mixing the
//! trial index into the run seed with a SplitMix64 finalizer. Trials are
//! therefore independent of execution order, and the parallel and sequential
//! paths produce identical reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::accuracy::{self, PrivacyLevel, StudySpec};
use crate::dp::{self, LaplaceScale, ProbabilityBound};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("population mean must lie in [0, 1], got {0}")]
    InvalidMean(f64),
    #[error("study size must be at least 1")]
    ZeroParticipants,
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("target error must lie in (0, 1), got {0}")]
    InvalidTargetError(f64),
    #[error("need at least {min} trials for the binomial error bars, got {got}")]
    TooFewTrials { min: u64, got: u64 },
    #[error("need at least {min} draws for the moment checks, got {got}")]
    TooFewDraws { min: u64, got: u64 },
}

/// Parameters of one simulated study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub population_mean: f64,
    pub n: u64,
    pub epsilon: f64,
    pub target_error: f64,
    pub trials: u64,
    pub seed: u64,
}

impl SimulationConfig {
    pub const MIN_TRIALS: u64 = 100;

    pub fn new(
        population_mean: f64,
        n: u64,
        epsilon: f64,
        target_error: f64,
        trials: u64,
        seed: u64,
    ) -> Result<Self, SimulationError> {
        if !(population_mean.is_finite() && (0.0..=1.0).contains(&population_mean)) {
            return Err(SimulationError::InvalidMean(population_mean));
        }
        if n == 0 {
            return Err(SimulationError::ZeroParticipants);
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(SimulationError::InvalidEpsilon(epsilon));
        }
        if !(target_error.is_finite() && target_error > 0.0 && target_error < 1.0) {
            return Err(SimulationError::InvalidTargetError(target_error));
        }
        if trials < Self::MIN_TRIALS {
            return Err(SimulationError::TooFewTrials {
                min: Self::MIN_TRIALS,
                got: trials,
            });
        }
        Ok(Self {
            population_mean,
            n,
            epsilon,
            target_error,
            trials,
            seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ConsistentWithBound,
    BoundViolated,
}

/// Measured failure rate against the analytic bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationReport {
    pub failures: u64,
    pub trials: u64,
    pub empirical_rate: f64,
    pub analytic_bound: ProbabilityBound,
    pub stderr: f64,
    pub verdict: Verdict,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Stream splitting: the run seed and the trial index mix into one 64-bit
/// seed per trial, so trials can execute in any order.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ trial.wrapping_mul(0x9E3779B97F4A7C15)))
}

fn trial_fails(config: &SimulationConfig, scale: &LaplaceScale, trial: u64) -> bool {
    let mut rng = trial_rng(config.seed, trial);
    let mut successes = 0u64;
    for _ in 0..config.n {
        if rng.random::<f64>() < config.population_mean {
            successes += 1;
        }
    }
    let sample_mean = successes as f64 / config.n as f64;
    let output = sample_mean + dp::laplace_sample(scale, &mut rng);
    (output - config.population_mean).abs() >= config.target_error
}

fn report_from_failures(config: &SimulationConfig, failures: u64) -> SimulationReport {
    let trials = config.trials;
    let empirical_rate = failures as f64 / trials as f64;
    // The target_failure slot does not enter the bound formula.
    let spec = StudySpec::mean_estimation(config.target_error, 0.5).expect("validated config");
    let level = PrivacyLevel::pure(config.epsilon).expect("validated config");
    let analytic_bound =
        accuracy::mean_failure_bound(level, config.n, &spec).expect("validated config");
    let stderr = (empirical_rate * (1.0 - empirical_rate) / trials as f64).sqrt();
    let verdict = if empirical_rate > analytic_bound.value() + 4.0 * stderr {
        Verdict::BoundViolated
    } else {
        Verdict::ConsistentWithBound
    };
    SimulationReport {
        failures,
        trials,
        empirical_rate,
        analytic_bound,
        stderr,
        verdict,
    }
}

/// Run the simulated study; trials run in parallel when the `parallel`
/// feature is enabled. The report is identical to the sequential path.
pub fn run_mean_study(config: &SimulationConfig) -> SimulationReport {
    let scale = LaplaceScale::for_proportion(config.n, config.epsilon).expect("validated config");
    #[cfg(feature = "parallel")]
    let failures = (0..config.trials)
        .into_par_iter()
        .filter(|&t| trial_fails(config, &scale, t))
        .count() as u64;
    #[cfg(not(feature = "parallel"))]
    let failures = (0..config.trials)
        .filter(|&t| trial_fails(config, &scale, t))
        .count() as u64;
    report_from_failures(config, failures)
}

/// Single-threaded reference path; always available for determinism checks
/// and benchmarking against the parallel path.
pub fn run_mean_study_sequential(config: &SimulationConfig) -> SimulationReport {
    let scale = LaplaceScale::for_proportion(config.n, config.epsilon).expect("validated config");
    let failures = (0..config.trials)
        .filter(|&t| trial_fails(config, &scale, t))
        .count() as u64;
    report_from_failures(config, failures)
}

/// Sample-moment check of the Laplace sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceMomentReport {
    pub draws: u64,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub expected_variance: f64,
    /// Four standard errors of the mean.
    pub mean_tolerance: f64,
    /// Four standard errors of the sample variance.
    pub variance_tolerance: f64,
    pub mean_ok: bool,
    pub variance_ok: bool,
}

impl LaplaceMomentReport {
    pub fn within_tolerance(&self) -> bool {
        self.mean_ok && self.variance_ok
    }
}

/// Check that `draws` samples have mean ≈ 0 and variance ≈ 2·scale² within
/// four standard errors.
pub fn verify_laplace_moments(
    scale: &LaplaceScale,
    draws: u64,
    seed: u64,
) -> Result<LaplaceMomentReport, SimulationError> {
    const MIN_DRAWS: u64 = 100_000;
    if draws < MIN_DRAWS {
        return Err(SimulationError::TooFewDraws {
            min: MIN_DRAWS,
            got: draws,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0f64;
    let mut sumsq = 0.0f64;
    for _ in 0..draws {
        let x = dp::laplace_sample(scale, &mut rng);
        sum += x;
        sumsq += x * x;
    }
    let nf = draws as f64;
    let sample_mean = sum / nf;
    let sample_variance = (sumsq - nf * sample_mean * sample_mean) / (nf - 1.0);
    let s2 = scale.scale() * scale.scale();
    let expected_variance = 2.0 * s2;
    // sd of the mean is sqrt(2/n)*scale; Var(s^2) = (mu4 - sigma^4)/n with
    // mu4 = 24*scale^4 for the Laplace distribution.
    let mean_tolerance = 4.0 * (expected_variance / nf).sqrt();
    let variance_tolerance = 4.0 * s2 * (20.0 / nf).sqrt();
    let mean_ok = sample_mean.abs() <= mean_tolerance;
    let variance_ok = (sample_variance - expected_variance).abs() <= variance_tolerance;
    Ok(LaplaceMomentReport {
        draws,
        sample_mean,
        sample_variance,
        expected_variance,
        mean_tolerance,
        variance_tolerance,
        mean_ok,
        variance_ok,
    })
}

/// The default validation grid: μ ∈ {0.1, 0.5}, n ∈ {10³, 2·10⁴},
/// ε ∈ {0.01, 0.1, 1}, T ∈ {0.02, 0.05}, 10⁴ trials per cell.
pub fn default_validation_grid(seed: u64) -> Vec<SimulationConfig> {
    let mut grid = Vec::new();
    for &population_mean in &[0.1, 0.5] {
        for &n in &[1000u64, 20_000] {
            for &epsilon in &[0.01, 0.1, 1.0] {
                for &target_error in &[0.02, 0.05] {
                    grid.push(
                        SimulationConfig::new(population_mean, n, epsilon, target_error, 10_000, seed)
                            .expect("grid parameters are valid"),
                    );
                }
            }
        }
    }
    grid
}
