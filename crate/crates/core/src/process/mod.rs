//! The OU family: FOU, GOU, GFOU (including the stationary version built
//! from a truncated improper integral), the single-FBM process W, and the
//! Euler scheme for the linear SDE driven by a Lévy process and FBM.

mod sde;
mod w;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fbm::{condition_on_uniform, uniform_lattice, FbmError, FbmMethod, FbmSampler, HurstIndex};
use crate::levy::{
    draw_jumps, extend_two_sided, gfou_existence_gate, sample_levy, sample_on_grid, GateVerdict, LevyError,
    LevyModel, ThetaConstants,
};
use crate::path::{merge_grids, PathError, SamplePath};
use crate::quad::{integrate_to_inf, QuadError, QuadOptions};

pub use sde::{
    euler_from_paths, euler_sde, levy_measure_xi_from_u, small_jump_equivalence, xi_from_u, SdeSpec, SharedNoise,
    SmallJumpVerdict, XiTails,
};
pub use w::{simulate_w, w_paths_from, WPaths};

/// Above this `|Y|` the Euler scheme gives up.
pub const OVERFLOW_GUARD: f64 = 1e300;

#[derive(Debug, Error)]
pub enum ProcessError {
    #[error("existence gate failed: {}", .0.reason)]
    ExistenceGate(GateVerdict),
    #[error("stationarity gate failed: {0}")]
    StationarityGate(String),
    #[error("invalid specification: {0}")]
    Spec(String),
    #[error("jump {jump} of U at t = {t} is <= -1")]
    JumpTooSmall { jump: f64, t: f64 },
    #[error("|Y| exceeded {OVERFLOW_GUARD:e} at t = {t}")]
    Overflow { t: f64 },
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Fbm(#[from] FbmError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Law of a scalar initial value (independent of everything else).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueLaw {
    Constant { value: f64 },
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
}

impl ValueLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ValueLaw::Constant { value } => value,
            ValueLaw::Normal { mean, sd } => Normal::new(mean, sd).expect("validated").sample(rng),
            ValueLaw::Uniform { low, high } => Uniform::new(low, high).expect("validated").sample(rng),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ValueLaw::Constant { value } => value,
            ValueLaw::Normal { mean, .. } => mean,
            ValueLaw::Uniform { low, high } => 0.5 * (low + high),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            ValueLaw::Constant { .. } => 0.0,
            ValueLaw::Normal { sd, .. } => sd * sd,
            ValueLaw::Uniform { low, high } => (high - low).powi(2) / 12.0,
        }
    }

    pub fn validate(&self) -> Result<(), ProcessError> {
        let ok = match *self {
            ValueLaw::Constant { value } => value.is_finite(),
            ValueLaw::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            ValueLaw::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
        };
        if ok {
            Ok(())
        } else {
            Err(ProcessError::Spec(format!("bad initial law {self:?}")))
        }
    }
}

/// How `Y_0` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    /// Independent draw from a law (a constant is a degenerate law).
    Law { law: ValueLaw },
    /// `Y_0 = ∫_{-T}^0 e^{ξ_{s-}} dB_s`, truncated at `T` (default `20/θ2`).
    Stationary {
        #[serde(default)]
        truncation: Option<f64>,
    },
}

impl Initial {
    pub fn constant(value: f64) -> Self {
        Initial::Law {
            law: ValueLaw::Constant { value },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GfouSpec {
    pub levy: LevyModel,
    pub hurst: f64,
    pub initial: Initial,
    pub horizon: f64,
    /// Grid spacing; the grid is `k·mesh`, plus any jump times.
    pub mesh: f64,
}

/// `Y_k = e^{-ξ_k}(y0 + Σ_{i<k} e^{ξ_i}(B_{i+1} - B_i))` on a common grid.
///
/// `ξ_i` is the right-continuous value at the left end of cell `i`, i.e.
/// the left limit of `s ↦ e^{ξ_{s-}}` over that cell. Evaluated as
/// `Y_k = e^{-(ξ_k - ξ_{k-1})}(Y_{k-1} + ΔB)` so that `e^{ξ}` itself, which
/// overflows on long horizons, is never formed.
pub fn gfou_values(xi: &[f64], b: &[f64], y0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(b.len());
    let mut y = (-xi[0]).exp() * y0;
    out.push(y);
    for i in 1..b.len() {
        y = (xi[i - 1] - xi[i]).exp() * (y + (b[i] - b[i - 1]));
        out.push(y);
    }
    out
}

/// The GFOU path from given `ξ` and `B` paths on the same grid; jumps of
/// `ξ` carry over to `Y` multiplicatively.
pub fn gfou_from_paths(xi: &SamplePath, b: &SamplePath, y0: f64) -> Result<SamplePath, ProcessError> {
    if xi.times() != b.times() {
        return Err(ProcessError::Spec("xi and B grids differ".into()));
    }
    let y = gfou_values(xi.values(), b.values(), y0);
    let jumps = (0..y.len())
        .map(|i| {
            let j = xi.jumps()[i];
            if j == 0.0 {
                0.0
            } else {
                // Y_{t-} = e^{-ξ_{t-}} × (same integral).
                y[i] - y[i] * j.exp()
            }
        })
        .collect();
    Ok(SamplePath::with_jumps(xi.times().to_vec(), y, jumps)?)
}

/// Fractional OU: `X_t = e^{-λt}(x0 + ∫_0^t e^{λs} dB^H_s)` with left sums.
pub fn simulate_fou<R: Rng + ?Sized>(
    lambda: f64,
    h: HurstIndex,
    x0: f64,
    times: &[f64],
    rng: &mut R,
) -> Result<SamplePath, ProcessError> {
    if !(lambda > 0.0) {
        return Err(ProcessError::Spec(format!("lambda = {lambda} must be > 0")));
    }
    if times.first() != Some(&0.0) {
        return Err(ProcessError::Spec("grid must start at 0".into()));
    }
    let b = FbmSampler::new(h, times, FbmMethod::Auto)?.sample_values(rng);
    let xi: Vec<f64> = times.iter().map(|t| lambda * t).collect();
    Ok(SamplePath::new(times.to_vec(), gfou_values(&xi, &b, x0))?)
}

/// Generalized OU: `V_t = e^{-ξ_t}(V_0 + ∫_0^t e^{ξ_{s-}} dη_s)` with
/// independent Lévy `ξ`, `η`, both sets of compound-Poisson jump times
/// inserted into the grid.
pub fn simulate_gou<R: Rng + ?Sized>(
    xi: &LevyModel,
    eta: &LevyModel,
    v0: ValueLaw,
    times: &[f64],
    rng: &mut R,
) -> Result<SamplePath, ProcessError> {
    xi.validate()?;
    eta.validate()?;
    v0.validate()?;
    let t_end = *times.last().ok_or(PathError::Empty)?;
    let jx = draw_jumps(xi, t_end, rng);
    let je = draw_jumps(eta, t_end, rng);
    let extra: Vec<f64> = jx.iter().chain(&je).map(|j| j.time).collect();
    let grid = merge_grids(times, &extra, 0.0);
    let xp = sample_on_grid(xi, &grid, &jx, rng)?;
    let ep = sample_on_grid(eta, &grid, &je, rng)?;
    let start = v0.sample(rng);
    gfou_from_paths(&xp, &ep, start)
}

/// Mean-square size of the neglected tail `∫_{-∞}^{-T} e^{-ξ_0+ξ_{s-}} dB_s`
/// of the stationary initial value:
/// `2 c_H ∫∫_{v<u<-T} e^{θ2 u - θ1 (u-v)} (u-v)^{2H-2} du dv`,
/// by nested quadrature over `a = -T - u` and `x = u - v`.
pub fn stationary_truncation_error(theta: ThetaConstants, h: HurstIndex, t_trunc: f64) -> Result<f64, ProcessError> {
    let c_h = h
        .c_h()
        .filter(|_| h.h() > 0.5)
        .ok_or_else(|| ProcessError::Spec("stationary theory needs H > 1/2".into()))?;
    if !theta.valid_for_stationary {
        return Err(ProcessError::StationarityGate(format!("theta2 = {} <= 0", theta.theta2)));
    }
    let opts = QuadOptions::rel(1e-10);
    let kernel = |x: f64| (-theta.theta1 * x).exp() * x.powf(2.0 * h.h() - 2.0);
    let outer = |a: f64| {
        let inner = integrate_to_inf(kernel, 0.0, opts).map(|r| r.value).unwrap_or(f64::NAN);
        (-theta.theta2 * (t_trunc + a)).exp() * inner
    };
    Ok(2.0 * c_h * integrate_to_inf(outer, 0.0, opts)?.value)
}

/// Checks shared by every GFOU construction: Lévy validity, the pathwise
/// existence gate, and for the stationary version `θ2 > 0` and `H > 1/2`.
pub fn check_gfou_gates(
    levy: &LevyModel,
    h: HurstIndex,
    stationary: bool,
) -> Result<Option<ThetaConstants>, ProcessError> {
    levy.validate()?;
    let verdict = gfou_existence_gate(levy, h);
    if !verdict.ok {
        return Err(ProcessError::ExistenceGate(verdict));
    }
    if !stationary {
        return Ok(levy.theta_constants().ok());
    }
    if h.h() <= 0.5 {
        return Err(ProcessError::StationarityGate(format!(
            "the stationary version needs H > 1/2, got H = {}",
            h.h()
        )));
    }
    let theta = levy
        .theta_constants()
        .map_err(|e| ProcessError::StationarityGate(format!("theta constants unavailable: {e}")))?;
    if !theta.valid_for_stationary {
        return Err(ProcessError::StationarityGate(format!(
            "need theta2 = -log E[exp(-2 xi_1)] > 0, got theta2 = {}",
            theta.theta2
        )));
    }
    Ok(Some(theta))
}

/// A GFOU sampler with its grid and FBM factorization prepared once.
#[derive(Debug)]
pub struct GfouSimulator {
    levy: LevyModel,
    h: HurstIndex,
    initial: Initial,
    theta: Option<ThetaConstants>,
    lattice: Vec<f64>,
    pos_times: Vec<f64>,
    neg_times: Option<Vec<f64>>,
    fbm: FbmSampler,
    truncation: Option<f64>,
    warnings: Vec<String>,
}

impl GfouSimulator {
    pub fn new(spec: &GfouSpec) -> Result<Self, ProcessError> {
        let h = HurstIndex::new(spec.hurst)?;
        if !(spec.horizon > 0.0) || !(spec.mesh > 0.0) || spec.mesh > spec.horizon {
            return Err(ProcessError::Spec(format!(
                "need 0 < mesh <= horizon, got mesh = {}, horizon = {}",
                spec.mesh, spec.horizon
            )));
        }
        let stationary = matches!(spec.initial, Initial::Stationary { .. });
        let theta = check_gfou_gates(&spec.levy, h, stationary)?;
        if let Initial::Law { law } = spec.initial {
            law.validate()?;
        }
        let dt = spec.mesh;
        let n_pos = (spec.horizon / dt).ceil() as usize;
        let pos_times: Vec<f64> = (0..=n_pos).map(|k| k as f64 * dt).collect();
        let mut warnings = Vec::new();
        let (neg_times, truncation) = match spec.initial {
            Initial::Stationary { truncation } => {
                let th = theta.expect("checked by the gate");
                let t = truncation.unwrap_or(20.0 / th.theta2);
                if !(t > 0.0) {
                    return Err(ProcessError::Spec(format!("truncation {t} must be > 0")));
                }
                let n_neg = (t / dt).ceil() as usize;
                let t = n_neg as f64 * dt;
                let tail = (-th.theta1 * t).exp();
                if tail > 1e-3 {
                    warnings.push(format!(
                        "truncation T = {t} leaves exp(-theta1 T) = {tail:.3e} > 1e-3; the neglected tail is not negligible"
                    ));
                }
                (Some((0..=n_neg).map(|k| k as f64 * dt).collect::<Vec<_>>()), Some(t))
            }
            Initial::Law { .. } => (None, None),
        };
        let lattice: Vec<f64> = match &neg_times {
            Some(neg) => neg.iter().rev().map(|t| -t).chain(pos_times[1..].iter().copied()).collect(),
            None => pos_times.clone(),
        };
        let fbm = FbmSampler::new(h, &lattice, FbmMethod::Auto)?;
        Ok(Self {
            levy: spec.levy.clone(),
            h,
            initial: spec.initial,
            theta,
            lattice,
            pos_times,
            neg_times,
            fbm,
            truncation,
            warnings,
        })
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn theta(&self) -> Option<ThetaConstants> {
        self.theta
    }

    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    pub fn hurst(&self) -> HurstIndex {
        self.h
    }

    /// The `ξ` and `B` paths of one replication on the full simulation grid
    /// (including the negative window in stationary mode).
    pub fn sample_drivers<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(SamplePath, SamplePath), ProcessError> {
        let xi = match &self.neg_times {
            Some(neg) => {
                let pos = sample_levy(&self.levy, &self.pos_times, rng)?;
                let neg = sample_levy(&self.levy, neg, rng)?;
                extend_two_sided(&pos, &neg)?
            }
            None => sample_levy(&self.levy, &self.pos_times, rng)?,
        };
        let base = self.fbm.sample_values(rng);
        let b = if xi.len() == self.lattice.len() {
            base
        } else {
            fbm_with_extras(self.h, &self.lattice, &base, xi.times(), rng)?
        };
        let b = SamplePath::new(xi.times().to_vec(), b)?;
        Ok((xi, b))
    }

    /// One GFOU path on `[0, horizon]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SamplePath, ProcessError> {
        let (xi, b) = self.sample_drivers(rng)?;
        let y0 = match self.initial {
            Initial::Law { law } => law.sample(rng),
            Initial::Stationary { .. } => 0.0,
        };
        let full = gfou_from_paths(&xi, &b, y0)?;
        if self.neg_times.is_none() {
            return Ok(full);
        }
        let first = full.index_of(0.0).expect("lattice contains 0");
        let idx: Vec<usize> = (first..full.len()).collect();
        Ok(full.select(&idx)?)
    }
}

/// FBM on `times`, a superset of the uniform `lattice` whose values are
/// given: the extra points are drawn conditionally on the whole lattice.
pub fn fbm_with_extras<R: Rng + ?Sized>(
    h: HurstIndex,
    lattice: &[f64],
    lattice_values: &[f64],
    times: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>, ProcessError> {
    if uniform_lattice(lattice).is_none() {
        return Err(ProcessError::Spec("base grid must be a uniform lattice".into()));
    }
    let mut out = vec![0.0; times.len()];
    let mut extra_idx = Vec::new();
    let mut j = 0;
    for (i, &t) in times.iter().enumerate() {
        while j < lattice.len() && lattice[j] < t {
            j += 1;
        }
        if j < lattice.len() && lattice[j] == t {
            out[i] = lattice_values[j];
        } else {
            extra_idx.push(i);
        }
    }
    let extra_t: Vec<f64> = extra_idx.iter().map(|&i| times[i]).collect();
    let vals = condition_on_uniform(h, lattice, lattice_values, &extra_t, rng)?;
    for (i, v) in extra_idx.into_iter().zip(vals) {
        out[i] = v;
    }
    Ok(out)
}

/// Convenience wrapper: build the simulator and draw one path.
pub fn simulate_gfou<R: Rng + ?Sized>(spec: &GfouSpec, rng: &mut R) -> Result<SamplePath, ProcessError> {
    GfouSimulator::new(spec)?.sample(rng)
}

/// `2 c_H Γ(2H-1) / (θ2 θ1^{2H-1})`, written as `2 H Γ(2H)/(θ2 θ1^{2H-1})`
/// so that it stays finite as `H ↓ 1/2`.
pub fn stationary_variance(theta: ThetaConstants, h: HurstIndex) -> f64 {
    let hh = h.h();
    let g = crate::specfun::gamma(2.0 * hh).expect("2H > 0").value;
    2.0 * hh * g / (theta.theta2 * theta.theta1.powf(2.0 * hh - 1.0))
}
