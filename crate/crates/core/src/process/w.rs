//! `W_t = e^{-B_t}(X + ∫_0^t e^{B_u} dB_u)`, which the chain rule for
//! `H > 1/2` collapses to `1 + e^{-B_t}(X - 1)`.

use rand::Rng;

use super::{gfou_values, ProcessError, ValueLaw};
use crate::fbm::{FbmMethod, FbmSampler, HurstIndex};
use crate::path::SamplePath;

/// Closed-form and Riemann–Stieltjes versions of the same realization.
#[derive(Debug, Clone, PartialEq)]
pub struct WPaths {
    pub closed: SamplePath,
    pub rs: SamplePath,
    /// `1 + (X - 1) e^{-(B_t + a t)}` when a drift `a` was requested.
    pub drifted: Option<SamplePath>,
    pub x: f64,
}

impl WPaths {
    /// `sup_t |rs - closed|` over the grid.
    pub fn sup_gap(&self) -> f64 {
        self.closed
            .values()
            .iter()
            .zip(self.rs.values())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Build both versions from a given FBM path starting at time 0.
pub fn w_paths_from(b: &SamplePath, x: f64, drift: Option<f64>) -> Result<WPaths, ProcessError> {
    if b.first_time() != 0.0 {
        return Err(ProcessError::Spec("W is defined from time 0".into()));
    }
    let times = b.times().to_vec();
    let closed = SamplePath::new(times.clone(), b.values().iter().map(|v| 1.0 + (-v).exp() * (x - 1.0)).collect())?;
    let rs = SamplePath::new(times.clone(), gfou_values(b.values(), b.values(), x))?;
    let drifted = match drift {
        Some(a) => {
            if !(a > 0.0) {
                return Err(ProcessError::Spec(format!("drift a = {a} must be > 0")));
            }
            let v = times
                .iter()
                .zip(b.values())
                .map(|(t, v)| 1.0 + (x - 1.0) * (-(v + a * t)).exp())
                .collect();
            Some(SamplePath::new(times, v)?)
        }
        None => None,
    };
    Ok(WPaths { closed, rs, drifted, x })
}

/// Draw `X` and `B^H` independently and return both versions of `W`.
pub fn simulate_w<R: Rng + ?Sized>(
    h: HurstIndex,
    x_law: ValueLaw,
    drift: Option<f64>,
    times: &[f64],
    rng: &mut R,
) -> Result<WPaths, ProcessError> {
    if h.h() <= 0.5 {
        return Err(ProcessError::Spec(format!(
            "the chain rule behind W needs H > 1/2, got H = {}",
            h.h()
        )));
    }
    x_law.validate()?;
    let b = FbmSampler::new(h, times, FbmMethod::Auto)?.sample(rng);
    let x = x_law.sample(rng);
    w_paths_from(&b, x, drift)
}
