//! `dY = Y_- dU + dB^H`: the Doléans-Dade link `E(U) = e^{-ξ}`, the Euler
//! scheme, and the induced Lévy measure of `ξ`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{fbm_with_extras, gfou_from_paths, ProcessError, ValueLaw, OVERFLOW_GUARD};
use crate::fbm::{FbmMethod, FbmSampler, HurstIndex};
use crate::levy::{draw_jumps, sample_on_grid, JumpComponent, JumpLaw, LevyModel};
use crate::path::{merge_grids, SamplePath};
use crate::specfun::normal_cdf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeSpec {
    pub u_model: LevyModel,
    pub hurst: f64,
    pub y0: ValueLaw,
    pub horizon: f64,
    pub mesh: f64,
}

/// U must put no mass on `(-∞, -1]`; stable drivers are not simulated.
fn check_driver(u: &LevyModel) -> Result<(), ProcessError> {
    u.validate()?;
    for j in &u.jumps {
        match j {
            JumpComponent::Stable { .. } => {
                return Err(ProcessError::Spec(
                    "stable drivers put mass on (-inf, -1] and are not simulated by the Euler scheme".into(),
                ))
            }
            JumpComponent::CompoundPoisson { law, .. } => {
                if !(law.support_min() > -1.0) {
                    return Err(ProcessError::Spec(format!(
                        "jump law {law:?} reaches (-inf, -1]; jumps of U must exceed -1"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// `ξ_t = -U_t + (a/2) t - Σ_{s<=t} (log(1 + ΔU_s) - ΔU_s)`, so that
/// `e^{-Δξ} = 1 + ΔU` at every jump.
pub fn xi_from_u(u: &SamplePath, gaussian_a: f64) -> Result<SamplePath, ProcessError> {
    let mut correction = 0.0;
    let mut values = Vec::with_capacity(u.len());
    let mut jumps = Vec::with_capacity(u.len());
    for i in 0..u.len() {
        let du = u.jumps()[i];
        if du != 0.0 {
            if !(du > -1.0) {
                return Err(ProcessError::JumpTooSmall {
                    jump: du,
                    t: u.times()[i],
                });
            }
            correction += du.ln_1p() - du;
            jumps.push(-du.ln_1p());
        } else {
            jumps.push(0.0);
        }
        values.push(-u.values()[i] + 0.5 * gaussian_a * u.times()[i] - correction);
    }
    Ok(SamplePath::with_jumps(u.times().to_vec(), values, jumps)?)
}

/// Left-point Euler `Y_{k+1} = Y_k + Y_k ΔU_k + ΔB_k` on the common grid.
pub fn euler_from_paths(u: &SamplePath, b: &SamplePath, y0: f64) -> Result<SamplePath, ProcessError> {
    if u.times() != b.times() {
        return Err(ProcessError::Spec("U and B grids differ".into()));
    }
    let (uv, bv) = (u.values(), b.values());
    let mut y = Vec::with_capacity(uv.len());
    let mut jumps = Vec::with_capacity(uv.len());
    y.push(y0);
    jumps.push(0.0);
    for k in 1..uv.len() {
        let du = u.jumps()[k];
        if du != 0.0 && !(du > -1.0) {
            return Err(ProcessError::JumpTooSmall { jump: du, t: u.times()[k] });
        }
        let prev = y[k - 1];
        let next = prev + prev * (uv[k] - uv[k - 1]) + (bv[k] - bv[k - 1]);
        if !(next.abs() <= OVERFLOW_GUARD) {
            return Err(ProcessError::Overflow { t: u.times()[k] });
        }
        y.push(next);
        jumps.push(prev * du);
    }
    Ok(SamplePath::with_jumps(u.times().to_vec(), y, jumps)?)
}

/// One Euler path on the spec's grid, jump times of U inserted.
pub fn euler_sde<R: Rng + ?Sized>(spec: &SdeSpec, rng: &mut R) -> Result<SamplePath, ProcessError> {
    check_driver(&spec.u_model)?;
    spec.y0.validate()?;
    if !(spec.horizon > 0.0 && spec.mesh > 0.0 && spec.mesh <= spec.horizon) {
        return Err(ProcessError::Spec("need 0 < mesh <= horizon".into()));
    }
    let n = (spec.horizon / spec.mesh).ceil() as usize;
    let level = n.next_power_of_two().trailing_zeros() as usize;
    let noise = SharedNoise::draw(&spec.u_model, HurstIndex::new(spec.hurst)?, spec.horizon, level, rng)?;
    let y0 = spec.y0.sample(rng);
    noise.euler(level, y0)
}

/// U and `B^H` drawn once on the finest dyadic grid of `[0, T]` plus the jump
/// times of U, then read at coarser levels. Jump times are kept at every
/// level, so jumps are resolved exactly on all meshes.
#[derive(Debug, Clone)]
pub struct SharedNoise {
    u: SamplePath,
    b: SamplePath,
    gaussian_a: f64,
    max_level: usize,
    // Lattice index of each grid point, None for jump times.
    lattice_index: Vec<Option<usize>>,
}

impl SharedNoise {
    pub fn draw<R: Rng + ?Sized>(
        u_model: &LevyModel,
        h: HurstIndex,
        horizon: f64,
        max_level: usize,
        rng: &mut R,
    ) -> Result<Self, ProcessError> {
        check_driver(u_model)?;
        let n = 1usize << max_level;
        let dt = horizon / n as f64;
        let lattice: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        let jumps = draw_jumps(u_model, horizon, rng);
        let jt: Vec<f64> = jumps.iter().map(|j| j.time).collect();
        let grid = merge_grids(&lattice, &jt, 0.0);
        let u = sample_on_grid(u_model, &grid, &jumps, rng)?;
        let base = FbmSampler::new(h, &lattice, FbmMethod::Auto)?.sample_values(rng);
        let bv = if grid.len() == lattice.len() {
            base
        } else {
            fbm_with_extras(h, &lattice, &base, &grid, rng)?
        };
        let mut j = 0;
        let lattice_index = grid
            .iter()
            .map(|&t| {
                while j < lattice.len() && lattice[j] < t {
                    j += 1;
                }
                (j < lattice.len() && lattice[j] == t).then_some(j)
            })
            .collect();
        Ok(Self {
            b: SamplePath::new(grid, bv)?,
            u,
            gaussian_a: u_model.gaussian_a,
            max_level,
            lattice_index,
        })
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    /// `(U, B)` on the level-`k` lattice plus the jump times.
    pub fn at_level(&self, k: usize) -> Result<(SamplePath, SamplePath), ProcessError> {
        if k > self.max_level {
            return Err(ProcessError::Spec(format!("level {k} beyond {}", self.max_level)));
        }
        let stride = 1usize << (self.max_level - k);
        let idx: Vec<usize> = self
            .lattice_index
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_none_or(|l| l % stride == 0))
            .map(|(i, _)| i)
            .collect();
        Ok((self.u.select(&idx)?, self.b.select(&idx)?))
    }

    pub fn euler(&self, k: usize, y0: f64) -> Result<SamplePath, ProcessError> {
        let (u, b) = self.at_level(k)?;
        euler_from_paths(&u, &b, y0)
    }

    /// The GFOU representation with `ξ` from the Doléans-Dade link.
    pub fn closed_form(&self, k: usize, y0: f64) -> Result<SamplePath, ProcessError> {
        let (u, b) = self.at_level(k)?;
        let xi = xi_from_u(&u, self.gaussian_a)?;
        gfou_from_paths(&xi, &b, y0)
    }
}

/// Tails of the Lévy measure of `ξ` induced by that of U.
///
/// For stable U the negative half of the measure is taken on `(-1, 0)`:
/// mass below -1 would make `1 + ΔU <= 0`.
#[derive(Debug, Clone)]
pub struct XiTails {
    u: LevyModel,
}

fn law_below(law: &JumpLaw, y: f64) -> f64 {
    match *law {
        JumpLaw::Constant { size } => f64::from(u8::from(size < y)),
        JumpLaw::Normal { mean, sd } => normal_cdf((y - mean) / sd),
        JumpLaw::Exponential { rate } => {
            if y <= 0.0 {
                0.0
            } else {
                -(-rate * y).exp_m1()
            }
        }
        JumpLaw::Uniform { low, high } => ((y - low) / (high - low)).clamp(0.0, 1.0),
    }
}

fn law_above(law: &JumpLaw, y: f64) -> f64 {
    match *law {
        JumpLaw::Constant { size } => f64::from(u8::from(size > y)),
        _ => 1.0 - law_below(law, y),
    }
}

impl XiTails {
    /// `ν_ξ((x, ∞)) = ν_U((-1, e^{-x} - 1))`, `x > 0`.
    pub fn upper(&self, x: f64) -> f64 {
        let y = (-x).exp_m1();
        self.u
            .jumps
            .iter()
            .map(|j| match *j {
                JumpComponent::CompoundPoisson { rate, law } => rate * law_below(&law, y),
                JumpComponent::Stable { alpha, c2, .. } => c2 / alpha * ((-y).powf(-alpha) - 1.0),
            })
            .sum()
    }

    /// `ν_ξ((-∞, -x)) = ν_U((e^x - 1, ∞))`, `x > 0`.
    pub fn lower(&self, x: f64) -> f64 {
        let y = x.exp_m1();
        self.u
            .jumps
            .iter()
            .map(|j| match *j {
                JumpComponent::CompoundPoisson { rate, law } => rate * law_above(&law, y),
                JumpComponent::Stable { alpha, c1, .. } => c1 / alpha * y.powf(-alpha),
            })
            .sum()
    }

    /// Local power index `κ` of `x ↦ ν_ξ(|·| > x)` near 0: `ν_ξ(|·| > x) ~ x^{-κ}`.
    pub fn small_jump_index(&self) -> f64 {
        let (e1, e2) = (1e-4, 1e-7);
        let t1 = self.upper(e1) + self.lower(e1);
        let t2 = self.upper(e2) + self.lower(e2);
        if !(t2 > 0.0) || !(t1 > 0.0) {
            return 0.0;
        }
        ((t2 / t1).ln() / (e1 / e2).ln()).max(0.0)
    }
}

pub fn levy_measure_xi_from_u(u_model: &LevyModel) -> Result<XiTails, ProcessError> {
    u_model.validate()?;
    for j in &u_model.jumps {
        if let JumpComponent::CompoundPoisson { law, .. } = j {
            if !(law.support_min() > -1.0) {
                return Err(ProcessError::Spec(format!("jump law {law:?} reaches (-inf, -1]")));
            }
        }
    }
    Ok(XiTails { u: u_model.clone() })
}

/// Finiteness of `∫_{|x|<1} |x|^δ ν(dx)` for U (from its family) and for `ξ`
/// (from the transformed tails).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallJumpVerdict {
    pub u_integral_finite: bool,
    pub xi_integral_finite: bool,
    pub xi_tail_index: f64,
}

pub fn small_jump_equivalence(u_model: &LevyModel, delta: f64) -> Result<SmallJumpVerdict, ProcessError> {
    if !(delta > 0.0 && delta < 2.0) {
        return Err(ProcessError::Spec(format!("delta = {delta} outside (0, 2)")));
    }
    let tails = levy_measure_xi_from_u(u_model)?;
    let u_finite = u_model.jumps.iter().all(|j| match *j {
        JumpComponent::CompoundPoisson { .. } => true,
        JumpComponent::Stable { alpha, .. } => delta > alpha,
    });
    let kappa = tails.small_jump_index();
    Ok(SmallJumpVerdict {
        u_integral_finite: u_finite,
        // A tail ~ x^{-κ} integrates |x|^δ finitely iff δ > κ; the estimate
        // of κ carries ~1e-5 bias, hence the margin.
        xi_integral_finite: delta > kappa + 1e-3,
        xi_tail_index: kappa,
    })
}
