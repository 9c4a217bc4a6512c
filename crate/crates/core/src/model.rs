//! Model parameters: attachment rule, normalised profile and the phase
//! classification of robustness.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// Default pre-normalisation profile amplitude.
pub const DEFAULT_AMPLITUDE: f64 = 0.5;

/// Parameters of the spatial preferential attachment model.
///
/// The attachment rule is `f(k) = gamma * k + beta` and the profile is
/// `phi(u) = phi0(mu * u)` with `phi0(u) = a (1 + u)^{-delta}`, or
/// `phi0(u) = a e^{-u}` when `delta` is infinite. `mu` is chosen so that
/// `phi(|x|^d)` integrates to one over `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    d: usize,
    gamma: f64,
    beta: f64,
    delta: f64,
    a: f64,
    mu: f64,
}

impl ModelParams {
    pub fn new(d: usize, gamma: f64, beta: f64, delta: f64, a: f64) -> Result<Self> {
        if d == 0 {
            return Err(contract("dimension must be at least 1"));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(contract(format!("gamma must lie in (0,1), got {gamma}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(contract(format!("beta must be positive, got {beta}")));
        }
        if !(delta > 1.0) {
            return Err(contract(format!("delta must exceed 1, got {delta}")));
        }
        if !(a > 0.0 && a < 1.0) {
            return Err(contract(format!("a must lie in (0,1), got {a}")));
        }
        let mu = if delta.is_infinite() {
            unit_ball_volume(d) * a
        } else {
            unit_ball_volume(d) * a / (delta - 1.0)
        };
        Ok(Self {
            d,
            gamma,
            beta,
            delta,
            a,
            mu,
        })
    }

    /// Parameters with `beta = 1 - gamma` and the default amplitude.
    pub fn with_defaults(d: usize, gamma: f64, delta: f64) -> Result<Self> {
        Self::new(d, gamma, 1.0 - gamma, delta, DEFAULT_AMPLITUDE)
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn a(&self) -> f64 {
        self.a
    }

    /// `f(k) = gamma k + beta`.
    #[inline]
    pub fn attachment_value(&self, k: u64) -> f64 {
        self.gamma * k as f64 + self.beta
    }

    /// The normalisation factor folded into the profile argument.
    pub fn normalization_constant(&self) -> f64 {
        self.mu
    }

    /// Normalised profile `phi(u)`.
    #[inline]
    pub fn profile_value(&self, u: f64) -> f64 {
        let x = self.mu * u;
        if self.delta.is_infinite() {
            self.a * (-x).exp()
        } else {
            self.a * (1.0 + x).powf(-self.delta)
        }
    }

    /// Probability that a vertex born at `younger_birth` attaches to an
    /// older vertex at distance `dist` currently holding `indegree` edges.
    #[inline]
    pub fn connection_probability(&self, younger_birth: f64, dist: f64, indegree: u64) -> f64 {
        self.profile_value(younger_birth * dist.powi(self.d as i32) / self.attachment_value(indegree))
    }

    /// Power-law exponent of the degree distribution, `1 + 1/gamma`.
    pub fn tau(&self) -> f64 {
        1.0 + 1.0 / self.gamma
    }

    pub fn classify_phase(&self) -> PhaseVerdict {
        classify(self.d, self.gamma, self.delta)
    }
}

/// Volume of the Euclidean unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Robust,
    NonRobust,
    Unknown,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Robust => "robust",
            Phase::NonRobust => "non-robust",
            Phase::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

/// Phase together with the criterion that decided it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseVerdict {
    pub phase: Phase,
    pub criterion: String,
}

fn classify(d: usize, gamma: f64, delta: f64) -> PhaseVerdict {
    let robust_cut = if delta.is_infinite() { 1.0 } else { delta / (1.0 + delta) };
    let one_dim_cut = if delta.is_infinite() { 1.0 } else { (delta - 1.0) / delta };
    let verdict = |phase, criterion: &str| PhaseVerdict {
        phase,
        criterion: criterion.to_string(),
    };
    if gamma > robust_cut {
        return verdict(Phase::Robust, "gamma > delta/(1+delta)");
    }
    let small_gamma = gamma < 0.5;
    let one_dim = d == 1 && gamma < one_dim_cut;
    match (small_gamma, one_dim) {
        (true, true) => verdict(Phase::NonRobust, "gamma < 1/2 and d = 1 with gamma < (delta-1)/delta"),
        (true, false) => verdict(Phase::NonRobust, "gamma < 1/2"),
        (false, true) => verdict(Phase::NonRobust, "d = 1 and gamma < (delta-1)/delta"),
        (false, false) => verdict(Phase::Unknown, "no criterion applies"),
    }
}
