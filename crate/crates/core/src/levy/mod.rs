//! Lévy processes: models, samplers, Laplace-exponent constants, and the
//! path-regularity facts that decide whether pathwise integrals exist.

mod sample;
mod stable;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fbm::HurstIndex;
use crate::path::{PathError, SamplePath};
use crate::quad::{integrate, QuadOptions};
use crate::specfun::gamma;

pub use sample::{draw_jumps, extend_two_sided, sample_levy, sample_on_grid, Jump, MAX_GRID_POINTS};
pub use stable::{stable_increment, stable_parameters, StableParameters};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LevyError {
    #[error("invalid Lévy model: {0}")]
    Invalid(String),
    #[error("E[exp(-{theta} xi_1)] is infinite: {reason}")]
    NoExponentialMoment { theta: f64, reason: String },
    #[error("theta2 = {theta2} > 0 but theta1 = {theta1} <= 0, which convexity of the Laplace exponent forbids")]
    Inconsistent { theta1: f64, theta2: f64 },
    #[error("grid of {points} points exceeds the sampler cap of {cap}")]
    TooLarge { points: usize, cap: usize },
    #[error("{0}")]
    Grid(String),
}

impl From<PathError> for LevyError {
    fn from(e: PathError) -> Self {
        LevyError::Grid(e.to_string())
    }
}

/// Law of a single compound-Poisson jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLaw {
    Constant { size: f64 },
    Normal { mean: f64, sd: f64 },
    /// Positive jumps with the given rate (mean `1/rate`).
    Exponential { rate: f64 },
    Uniform { low: f64, high: f64 },
}

impl JumpLaw {
    fn validate(&self) -> Result<(), LevyError> {
        let ok = match *self {
            JumpLaw::Constant { size } => size.is_finite() && size != 0.0,
            JumpLaw::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            JumpLaw::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            JumpLaw::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
        };
        if ok {
            Ok(())
        } else {
            Err(LevyError::Invalid(format!("bad jump law {self:?}")))
        }
    }

    /// `E[exp(-θ J)]`, `None` when infinite.
    pub fn laplace(&self, theta: f64) -> Option<f64> {
        match *self {
            JumpLaw::Constant { size } => Some((-theta * size).exp()),
            JumpLaw::Normal { mean, sd } => Some((-theta * mean + 0.5 * theta * theta * sd * sd).exp()),
            JumpLaw::Exponential { rate } => (theta > -rate).then(|| rate / (rate + theta)),
            JumpLaw::Uniform { low, high } => {
                if theta == 0.0 {
                    Some(1.0)
                } else {
                    Some(((-theta * low).exp() - (-theta * high).exp()) / (theta * (high - low)))
                }
            }
        }
    }

    /// Infimum of the support (`-inf` when unbounded below).
    pub fn support_min(&self) -> f64 {
        match *self {
            JumpLaw::Constant { size } => size,
            JumpLaw::Normal { .. } => f64::NEG_INFINITY,
            JumpLaw::Exponential { .. } => 0.0,
            JumpLaw::Uniform { low, .. } => low,
        }
    }

    /// `E[J 1{|J| <= 1}]`, the truncated mean entering the triplet drift.
    fn truncated_mean(&self) -> f64 {
        match *self {
            JumpLaw::Constant { size } => {
                if size.abs() <= 1.0 {
                    size
                } else {
                    0.0
                }
            }
            JumpLaw::Exponential { rate } => {
                // ∫_0^1 x λ e^{-λx} dx
                (1.0 - (1.0 + rate) * (-rate).exp()) / rate
            }
            JumpLaw::Uniform { low, high } => {
                let (a, b) = (low.max(-1.0), high.min(1.0));
                if a >= b {
                    0.0
                } else {
                    0.5 * (b * b - a * a) / (high - low)
                }
            }
            JumpLaw::Normal { mean, sd } => {
                let dens = |x: f64| {
                    let z = (x - mean) / sd;
                    x * (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
                };
                integrate(dens, -1.0, 1.0, QuadOptions::rel(1e-12))
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN)
            }
        }
    }
}

/// Jump part of a Lévy model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpComponent {
    CompoundPoisson { rate: f64, law: JumpLaw },
    /// Lévy measure `c1 x^{-1-α} dx` on `x > 0` and `c2 |x|^{-1-α} dx` on
    /// `x < 0`, with zero triplet drift.
    Stable { alpha: f64, c1: f64, c2: f64 },
}

/// A Lévy process `ξ_t = drift·t + sqrt(a) W_t + (jump components)`.
///
/// `drift` is the linear coefficient of the path itself. Stable components
/// are the processes with generating triplet `(0, ν, 0)` for the usual
/// truncation `1{|x| <= 1}`; compound-Poisson components are plain sums of
/// their jumps. [`LevyModel::triplet_gamma`] converts to the triplet drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyModel {
    #[serde(default)]
    pub gaussian_a: f64,
    #[serde(default)]
    pub drift: f64,
    #[serde(default)]
    pub jumps: Vec<JumpComponent>,
}

/// The two Laplace-exponent constants of the stationary theory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaConstants {
    pub theta1: f64,
    pub theta2: f64,
    pub valid_for_stationary: bool,
}

impl ThetaConstants {
    /// Checks finiteness and that `θ2 > 0` forces `θ1 > 0`.
    pub fn new(theta1: f64, theta2: f64) -> Result<Self, LevyError> {
        if !theta1.is_finite() || !theta2.is_finite() {
            return Err(LevyError::Invalid(format!(
                "non-finite constants theta1 = {theta1}, theta2 = {theta2}"
            )));
        }
        if theta2 > 0.0 && theta1 <= 0.0 {
            return Err(LevyError::Inconsistent { theta1, theta2 });
        }
        Ok(Self {
            theta1,
            theta2,
            valid_for_stationary: theta2 > 0.0,
        })
    }
}

/// Almost-sure verdict on `v_p(ξ) < ∞` over a finite interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PVariation {
    Finite,
    Infinite,
    Unknown,
}

impl LevyModel {
    pub fn brownian(drift: f64, sigma: f64) -> Self {
        Self {
            gaussian_a: sigma * sigma,
            drift,
            jumps: Vec::new(),
        }
    }

    pub fn pure_drift(drift: f64) -> Self {
        Self::brownian(drift, 0.0)
    }

    pub fn stable(alpha: f64, c1: f64, c2: f64) -> Self {
        Self {
            gaussian_a: 0.0,
            drift: 0.0,
            jumps: vec![JumpComponent::Stable { alpha, c1, c2 }],
        }
    }

    pub fn compound_poisson(drift: f64, rate: f64, law: JumpLaw) -> Self {
        Self {
            gaussian_a: 0.0,
            drift,
            jumps: vec![JumpComponent::CompoundPoisson { rate, law }],
        }
    }

    pub fn with_gaussian(mut self, a: f64) -> Self {
        self.gaussian_a = a;
        self
    }

    pub fn with_jump(mut self, jump: JumpComponent) -> Self {
        self.jumps.push(jump);
        self
    }

    pub fn validate(&self) -> Result<(), LevyError> {
        if !(self.gaussian_a >= 0.0) || !self.gaussian_a.is_finite() {
            return Err(LevyError::Invalid(format!(
                "gaussian_a = {} must be finite and >= 0",
                self.gaussian_a
            )));
        }
        if !self.drift.is_finite() {
            return Err(LevyError::Invalid("drift must be finite".into()));
        }
        for j in &self.jumps {
            match *j {
                JumpComponent::CompoundPoisson { rate, law } => {
                    if !(rate > 0.0) || !rate.is_finite() {
                        return Err(LevyError::Invalid(format!("compound Poisson rate {rate} must be > 0")));
                    }
                    law.validate()?;
                }
                JumpComponent::Stable { alpha, c1, c2 } => {
                    if !(alpha > 0.0 && alpha < 2.0) {
                        return Err(LevyError::Invalid(format!("stable index {alpha} outside (0, 2)")));
                    }
                    if !(c1 >= 0.0 && c2 >= 0.0) || !(c1 + c2 > 0.0) || !(c1 + c2).is_finite() {
                        return Err(LevyError::Invalid(format!(
                            "stable weights c1 = {c1}, c2 = {c2} must be >= 0 with positive sum"
                        )));
                    }
                    if alpha == 1.0 && c1 != c2 {
                        return Err(LevyError::Invalid(
                            "asymmetric 1-stable components are not supported".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn has_stable(&self) -> bool {
        self.jumps.iter().any(|j| matches!(j, JumpComponent::Stable { .. }))
    }

    /// Generating-triplet drift `γ` for truncation `1{|x| <= 1}`.
    pub fn triplet_gamma(&self) -> f64 {
        let cp: f64 = self
            .jumps
            .iter()
            .map(|j| match *j {
                JumpComponent::CompoundPoisson { rate, law } => rate * law.truncated_mean(),
                JumpComponent::Stable { .. } => 0.0,
            })
            .sum();
        self.drift + cp
    }

    /// Blumenthal–Getoor index: 0 for finite activity, α for stable parts.
    pub fn bg_index(&self) -> f64 {
        self.jumps
            .iter()
            .map(|j| match *j {
                JumpComponent::CompoundPoisson { .. } => 0.0,
                JumpComponent::Stable { alpha, .. } => alpha,
            })
            .fold(0.0, f64::max)
    }

    /// Linear coefficient of the path when it has bounded variation: the
    /// drift plus the compensation built into stable parts with `α < 1`.
    pub fn effective_path_drift(&self) -> f64 {
        self.drift
            + self
                .jumps
                .iter()
                .map(|j| match *j {
                    JumpComponent::Stable { alpha, c1, c2 } if alpha < 1.0 => -(c1 - c2) / (1.0 - alpha),
                    _ => 0.0,
                })
                .sum::<f64>()
    }

    /// `ψ(θ) = log E[exp(-θ ξ_1)]`.
    pub fn laplace_psi(&self, theta: f64) -> Result<f64, LevyError> {
        let mut psi = 0.5 * self.gaussian_a * theta * theta - self.drift * theta;
        for j in &self.jumps {
            psi += match *j {
                JumpComponent::CompoundPoisson { rate, law } => {
                    let l = law.laplace(theta).ok_or_else(|| LevyError::NoExponentialMoment {
                        theta,
                        reason: format!("jump law {law:?} has no exponential moment of this order"),
                    })?;
                    rate * (l - 1.0)
                }
                JumpComponent::Stable { alpha, c1, c2 } => stable::stable_psi(alpha, c1, c2, theta)?,
            };
        }
        Ok(psi)
    }

    /// `θ1 = -ψ(1)`, `θ2 = -ψ(2)`.
    pub fn theta_constants(&self) -> Result<ThetaConstants, LevyError> {
        self.validate()?;
        ThetaConstants::new(-self.laplace_psi(1.0)?, -self.laplace_psi(2.0)?)
    }

    /// The almost-sure p-variation verdict on a finite interval.
    pub fn classify_p_variation(&self, p: f64) -> PVariation {
        if !(p > 0.0) {
            return PVariation::Unknown;
        }
        // Every Lévy process has finite p-variation for p >= 2.
        if p >= 2.0 {
            return PVariation::Finite;
        }
        if self.gaussian_a > 0.0 {
            return PVariation::Infinite;
        }
        let stable_ok = |q: f64| {
            self.jumps.iter().all(|j| match *j {
                JumpComponent::Stable { alpha, .. } => q > alpha,
                JumpComponent::CompoundPoisson { .. } => true,
            })
        };
        if p == 1.0 {
            // Bounded variation iff ∫(1 ∧ |x|) ν(dx) < ∞.
            return if stable_ok(1.0) {
                PVariation::Finite
            } else {
                PVariation::Infinite
            };
        }
        if p < 1.0 {
            // A linear part alone already has infinite p-variation for p < 1.
            if !stable_ok(1.0) || self.effective_path_drift() != 0.0 {
                return PVariation::Infinite;
            }
            return if stable_ok(p) {
                PVariation::Finite
            } else {
                PVariation::Infinite
            };
        }
        // 1 < p < 2, no Gaussian part: finite iff ∫(1 ∧ |x|^p) ν(dx) < ∞,
        // which for stable parts is p > α.
        if stable_ok(p) {
            return PVariation::Finite;
        }
        let beta = self.bg_index();
        if p < beta {
            PVariation::Infinite
        } else if p > beta {
            PVariation::Finite
        } else if self.has_stable() {
            PVariation::Infinite
        } else {
            PVariation::Unknown
        }
    }
}

/// Result of the drift-to-infinity diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftCheck {
    pub t0: Option<f64>,
    pub holds: bool,
}

/// Smallest positive grid time `t0` with `ξ_t > δ t` at every grid time in
/// `[t0, T]`.
pub fn check_drift_to_infinity(path: &SamplePath, delta: f64) -> DriftCheck {
    let mut t0 = None;
    for (&t, &v) in path.times().iter().zip(path.values()).rev() {
        if t <= 0.0 {
            break;
        }
        if v > delta * t {
            t0 = Some(t);
        } else {
            break;
        }
    }
    DriftCheck {
        t0,
        holds: t0.is_some(),
    }
}

/// Verdict of the pathwise existence check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateVerdict {
    pub ok: bool,
    /// Smallest p found with finite p-variation and `1/p + H > 1`.
    pub witness_p: Option<f64>,
    /// `1/(1 - H)`: admissible p must lie below this.
    pub p_bound: f64,
    pub reason: String,
}

/// Does `∫ e^{ξ_{s-}} dB^H_s` exist pathwise? It does when some p with
/// `v_p(ξ) < ∞` has `1/p + H > 1`.
pub fn gfou_existence_gate(model: &LevyModel, h: HurstIndex) -> GateVerdict {
    let bound = 1.0 / (1.0 - h.h());
    let finite = |p: f64| model.classify_p_variation(p) == PVariation::Finite;
    // Monotone in p: locate the finite region's lower edge by bisection.
    let edge = |hi: f64| {
        let (mut lo, mut hi) = (0.0, hi);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if finite(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let probe = bound * (1.0 - 1e-12);
    if finite(probe) {
        let p = edge(probe);
        GateVerdict {
            ok: true,
            witness_p: Some(p),
            p_bound: bound,
            reason: format!(
                "pathwise integral exists: v_p(xi) < inf for p = {p:.6} and 1/p + H = {:.6} > 1",
                1.0 / p + h.h()
            ),
        }
    } else {
        let p = edge(2.0);
        GateVerdict {
            ok: false,
            witness_p: None,
            p_bound: bound,
            reason: format!(
                "pathwise existence fails: need v_p(xi) < inf for some p < 1/(1-H) = {bound:.6}, \
                 but v_p(xi) is infinite for every p <= {p:.6}"
            ),
        }
    }
}

/// Laplace exponent via the Gamma function for stable parts (shared with
/// the sampler's parameter conversion).
pub(crate) fn gamma_neg(alpha: f64) -> f64 {
    // Γ(-α) = Γ(2-α) / (α (α - 1)) for α in (0, 2) \ {1}.
    gamma(2.0 - alpha).expect("2 - alpha lies in (0, 2)").value / (alpha * (alpha - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_constants_brownian() {
        let m = LevyModel::brownian(1.5, 1.0);
        let t = m.theta_constants().unwrap();
        assert!((t.theta1 - 1.0).abs() < 1e-15 && (t.theta2 - 1.0).abs() < 1e-15);
        assert!(t.valid_for_stationary);
    }

    #[test]
    fn stable_with_negative_jumps_has_no_moment() {
        let m = LevyModel::stable(1.5, 1.0, 1.0);
        assert!(matches!(m.theta_constants(), Err(LevyError::NoExponentialMoment { .. })));
    }

    #[test]
    fn inconsistent_constants_rejected() {
        assert!(matches!(ThetaConstants::new(-0.1, 0.5), Err(LevyError::Inconsistent { .. })));
        assert!(!ThetaConstants::new(0.1, -0.5).unwrap().valid_for_stationary);
    }

    #[test]
    fn validation() {
        assert!(LevyModel::stable(2.0, 1.0, 0.0).validate().is_err());
        assert!(LevyModel::stable(1.0, 1.0, 0.5).validate().is_err());
        assert!(LevyModel::stable(1.0, 1.0, 1.0).validate().is_ok());
        assert!(LevyModel::brownian(0.0, 1.0).with_gaussian(-1.0).validate().is_err());
        assert!(LevyModel::compound_poisson(0.0, 0.0, JumpLaw::Constant { size: 1.0 })
            .validate()
            .is_err());
    }

    #[test]
    fn triplet_gamma_adds_small_jump_mean() {
        let m = LevyModel::compound_poisson(0.2, 3.0, JumpLaw::Constant { size: 0.5 });
        assert!((m.triplet_gamma() - 1.7).abs() < 1e-15);
        let m = LevyModel::compound_poisson(0.2, 3.0, JumpLaw::Constant { size: 1.5 });
        assert!((m.triplet_gamma() - 0.2).abs() < 1e-15);
    }
}
