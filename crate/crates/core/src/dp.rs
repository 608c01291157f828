//! Elementary differential-privacy mathematics shared by the other modules:
//! Laplace noise, its tail bound, and Chernoff concentration bounds.
//!
//! A `c`-sensitive statistic released with Laplace noise of scale `ρ = c/ε`
//! is ε-differentially private. The two concentration results used by the
//! planner are
//!
//! ```text
//! Pr[|ν| ≥ t]     ≤ exp(−t/ρ)              ν ~ Lap(ρ)
//! Pr[|Y − μ| ≥ t] ≤ 2·exp(−n·t²/(3μ))      Y mean of n iid 0/1 vars
//! Pr[|Y − μ| ≥ t] ≥ (1/2)·exp(−2·n·t²/μ)   same, μ ≤ 1/4 (lower bound)
//! ```
//!
//! Raw bound expressions may exceed 1; every bound is stored as a
//! [`ProbabilityBound`], which clamps to `[0, 1]` and remembers both the raw
//! value and whether clamping happened.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

/// Errors from constructing or evaluating the primitives in this module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DpError {
    #[error("sensitivity must be positive and finite, got {0}")]
    InvalidSensitivity(f64),
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("deviation must lie in [0, 1], got {0}")]
    InvalidDeviation(f64),
    #[error("mean must lie in (0, {max}], got {value}")]
    InvalidMean { value: f64, max: f64 },
}

/// Scale parameter of the Laplace mechanism for a `sensitivity`-sensitive
/// statistic released at privacy level `epsilon`.
///
/// The invariant `scale == sensitivity / epsilon` holds exactly; no rounding
/// is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceScale {
    sensitivity: f64,
    epsilon: f64,
    scale: f64,
}

impl LaplaceScale {
    pub fn new(sensitivity: f64, epsilon: f64) -> Result<Self, DpError> {
        if !(sensitivity.is_finite() && sensitivity > 0.0) {
            return Err(DpError::InvalidSensitivity(sensitivity));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(DpError::InvalidEpsilon(epsilon));
        }
        Ok(Self {
            sensitivity,
            epsilon,
            scale: sensitivity / epsilon,
        })
    }

    /// Scale for releasing a proportion over `n` records: sensitivity `1/n`.
    pub fn for_proportion(n: u64, epsilon: f64) -> Result<Self, DpError> {
        if n == 0 {
            return Err(DpError::ZeroSamples);
        }
        Self::new(1.0 / n as f64, epsilon)
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// A probability bound clamped to `[0, 1]`.
///
/// `raw` keeps the unclamped analytic expression so diagnostics can show how
/// vacuous a bound was before clamping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbabilityBound {
    value: f64,
    raw: f64,
    clamped: bool,
}

impl ProbabilityBound {
    /// Clamp a raw analytic expression into `[0, 1]`.
    ///
    /// A NaN input (impossible for in-domain bound formulas) maps to the
    /// vacuous bound 1 so that downstream constraint checks stay
    /// conservative.
    pub fn from_raw(raw: f64) -> Self {
        if raw.is_nan() {
            return Self {
                value: 1.0,
                raw,
                clamped: true,
            };
        }
        let value = raw.clamp(0.0, 1.0);
        Self {
            value,
            raw,
            clamped: value != raw,
        }
    }

    /// The clamped value in `[0, 1]`.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// The analytic expression before clamping.
    pub fn raw(&self) -> f64 {
        self.raw
    }

    pub fn was_clamped(&self) -> bool {
        self.clamped
    }
}

/// Draw from `Lap(scale)` by inverse-CDF transform of a uniform draw.
///
/// With `u` uniform on `(-1/2, 1/2)` the value `−ρ·sgn(u)·ln(1 − 2|u|)` has
/// the Laplace distribution of scale `ρ`. Identical generators produce
/// bit-identical streams; alternate samplers reproduce the distributional
/// tests, not the streams.
pub fn laplace_sample<R: Rng + ?Sized>(scale: &LaplaceScale, rng: &mut R) -> f64 {
    // random() yields [0, 1); shifting gives [-1/2, 1/2) and 1 - 2|u| stays
    // positive, so ln never sees zero from the u = -1/2 endpoint.
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale.scale() * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Tail bound `Pr[|ν| ≥ threshold] ≤ exp(−threshold/ρ)` for `ν ~ Lap(ρ)`.
///
/// For `threshold < 0` the raw expression exceeds 1 and clamps, which is the
/// correct vacuous reading of the bound.
pub fn laplace_tail(threshold: f64, scale: &LaplaceScale) -> ProbabilityBound {
    ProbabilityBound::from_raw((-threshold / scale.scale()).exp())
}

/// Chernoff upper bound `2·exp(−n·deviation²/(3·mu))` on the probability that
/// the mean of `n` iid 0/1 variables with mean `mu` deviates from `mu` by at
/// least `deviation`.
pub fn chernoff_upper(n: u64, deviation: f64, mu: f64) -> Result<ProbabilityBound, DpError> {
    if n == 0 {
        return Err(DpError::ZeroSamples);
    }
    if !(deviation.is_finite() && (0.0..=1.0).contains(&deviation)) {
        return Err(DpError::InvalidDeviation(deviation));
    }
    if !(mu.is_finite() && mu > 0.0 && mu <= 1.0) {
        return Err(DpError::InvalidMean {
            value: mu,
            max: 1.0,
        });
    }
    let raw = 2.0 * (-(n as f64) * deviation * deviation / (3.0 * mu)).exp();
    Ok(ProbabilityBound::from_raw(raw))
}

/// Chernoff lower bound `(1/2)·exp(−2·n·deviation²/mu)`: the deviation
/// probability is at least this much. Requires `mu ≤ 1/4`.
pub fn chernoff_lower(n: u64, deviation: f64, mu: f64) -> Result<ProbabilityBound, DpError> {
    if n == 0 {
        return Err(DpError::ZeroSamples);
    }
    if !(deviation.is_finite() && (0.0..=1.0).contains(&deviation)) {
        return Err(DpError::InvalidDeviation(deviation));
    }
    if !(mu.is_finite() && mu > 0.0 && mu <= 0.25) {
        return Err(DpError::InvalidMean {
            value: mu,
            max: 0.25,
        });
    }
    let raw = 0.5 * (-2.0 * n as f64 * deviation * deviation / mu).exp();
    Ok(ProbabilityBound::from_raw(raw))
}
