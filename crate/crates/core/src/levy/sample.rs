//! Path sampling on grids.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Uniform};

use super::stable::{stable_increment, stable_parameters, StableParameters};
use super::{JumpComponent, JumpLaw, LevyError, LevyModel};
use crate::fbm::standard_normal;
use crate::path::{merge_grids, validate_grid, SamplePath};

/// Largest grid a single path may use.
pub const MAX_GRID_POINTS: usize = 1 << 20;

/// A compound-Poisson jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
}

fn draw_size<R: Rng + ?Sized>(law: &JumpLaw, rng: &mut R) -> f64 {
    match *law {
        JumpLaw::Constant { size } => size,
        JumpLaw::Normal { mean, sd } => Normal::new(mean, sd).expect("validated").sample(rng),
        JumpLaw::Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
        JumpLaw::Uniform { low, high } => Uniform::new(low, high).expect("validated").sample(rng),
    }
}

/// All compound-Poisson jumps in `(0, t_end]`, sorted by time.
pub fn draw_jumps<R: Rng + ?Sized>(model: &LevyModel, t_end: f64, rng: &mut R) -> Vec<Jump> {
    let mut out = Vec::new();
    for comp in &model.jumps {
        if let JumpComponent::CompoundPoisson { rate, law } = comp {
            let gap = Exp::new(*rate).expect("validated");
            let mut t = 0.0;
            loop {
                t += gap.sample(rng);
                if t > t_end {
                    break;
                }
                out.push(Jump {
                    time: t,
                    size: draw_size(law, rng),
                });
            }
        }
    }
    out.sort_by(|a, b| a.time.total_cmp(&b.time));
    out
}

/// Sample the path on `times` (which must start at 0 and contain every jump
/// time), placing the given jumps.
pub fn sample_on_grid<R: Rng + ?Sized>(
    model: &LevyModel,
    times: &[f64],
    jumps: &[Jump],
    rng: &mut R,
) -> Result<SamplePath, LevyError> {
    model.validate()?;
    validate_grid(times)?;
    if times[0] != 0.0 {
        return Err(LevyError::Grid(format!("grid must start at 0, got {}", times[0])));
    }
    if times.len() > MAX_GRID_POINTS {
        return Err(LevyError::TooLarge {
            points: times.len(),
            cap: MAX_GRID_POINTS,
        });
    }
    let stables: Vec<StableParameters> = model
        .jumps
        .iter()
        .filter_map(|j| match *j {
            JumpComponent::Stable { alpha, c1, c2 } => Some(stable_parameters(alpha, c1, c2)),
            _ => None,
        })
        .collect();
    let n = times.len();
    let mut jump_at = vec![0.0; n];
    for j in jumps {
        let i = times
            .binary_search_by(|s| s.total_cmp(&j.time))
            .map_err(|_| LevyError::Grid(format!("jump time {} is not a grid point", j.time)))?;
        jump_at[i] += j.size;
    }
    let sd = model.gaussian_a.sqrt();
    let mut values = Vec::with_capacity(n);
    values.push(jump_at[0]);
    let mut x = jump_at[0];
    for i in 1..n {
        let dt = times[i] - times[i - 1];
        let mut dx = model.drift * dt;
        if sd > 0.0 {
            dx += sd * dt.sqrt() * standard_normal(rng);
        }
        for p in &stables {
            dx += stable_increment(p, dt, rng);
        }
        x += dx + jump_at[i];
        values.push(x);
    }
    Ok(SamplePath::with_jumps(times.to_vec(), values, jump_at)?)
}

/// Sample on `times` (starting at 0), with the compound-Poisson jump times
/// merged into the grid.
pub fn sample_levy<R: Rng + ?Sized>(model: &LevyModel, times: &[f64], rng: &mut R) -> Result<SamplePath, LevyError> {
    model.validate()?;
    validate_grid(times)?;
    let jumps = draw_jumps(model, times[times.len() - 1], rng);
    let jt: Vec<f64> = jumps.iter().map(|j| j.time).collect();
    let grid = if jt.is_empty() {
        times.to_vec()
    } else {
        merge_grids(times, &jt, 0.0)
    };
    sample_on_grid(model, &grid, &jumps, rng)
}

/// Two-sided path `ξ_t = ξ¹_t` for `t >= 0` and `ξ_t = -ξ²_{(-t)-}` for
/// `t < 0`, from two independent one-sided paths starting at 0.
pub fn extend_two_sided(pos: &SamplePath, neg: &SamplePath) -> Result<SamplePath, LevyError> {
    if pos.first_time() != 0.0 || neg.first_time() != 0.0 {
        return Err(LevyError::Grid("both one-sided paths must start at time 0".into()));
    }
    let m = neg.len() - 1;
    let mut times = Vec::with_capacity(m + pos.len());
    let mut values = Vec::with_capacity(m + pos.len());
    let mut jumps = Vec::with_capacity(m + pos.len());
    for i in (1..=m).rev() {
        times.push(-neg.times()[i]);
        values.push(-neg.left_limit(i));
        // The jump of ξ² at s reappears, same sign, at -s.
        jumps.push(neg.jumps()[i]);
    }
    times.extend_from_slice(pos.times());
    values.extend_from_slice(pos.values());
    jumps.extend_from_slice(pos.jumps());
    Ok(SamplePath::with_jumps(times, values, jumps)?)
}
