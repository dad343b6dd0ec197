//! Strictly α-stable pieces: Laplace exponent and the Chambers–Mallows–Stuck
//! sampler.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, Uniform};

use super::{gamma_neg, LevyError};

/// Parameters `(α, β, σ, μ)` of `ξ_1` in the `S_α(σ, β, μ)` convention,
/// where `E exp(iuX) = exp(-σ^α |u|^α (1 - iβ sign(u) tan(πα/2)) + iμu)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParameters {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub mu: f64,
}

/// Convert Lévy-measure weights (triplet drift zero) to `S_α(σ, β, μ)`.
pub fn stable_parameters(alpha: f64, c1: f64, c2: f64) -> StableParameters {
    let c = c1 + c2;
    if alpha == 1.0 {
        // Symmetric Cauchy: exponent -cπ|u| with c = c1 = c2.
        return StableParameters {
            alpha,
            beta: 0.0,
            sigma: 0.5 * c * PI,
            mu: 0.0,
        };
    }
    let sigma = (-c * gamma_neg(alpha) * (FRAC_PI_2 * alpha).cos()).powf(1.0 / alpha);
    let mu = if alpha < 1.0 {
        -(c1 - c2) / (1.0 - alpha)
    } else {
        (c1 - c2) / (alpha - 1.0)
    };
    StableParameters {
        alpha,
        beta: (c1 - c2) / c,
        sigma,
        mu,
    }
}

/// One draw of the increment over a time step `dt`.
pub fn stable_increment<R: Rng + ?Sized>(p: &StableParameters, dt: f64, rng: &mut R) -> f64 {
    let v = Uniform::new(-FRAC_PI_2, FRAC_PI_2).expect("finite bounds").sample(rng);
    let w: f64 = Exp1.sample(rng);
    let a = p.alpha;
    let x = if a == 1.0 {
        v.tan()
    } else {
        let t = p.beta * (FRAC_PI_2 * a).tan();
        let b = t.atan() / a;
        let s = (1.0 + t * t).powf(0.5 / a);
        s * (a * (v + b)).sin() / v.cos().powf(1.0 / a) * ((v - a * (v + b)).cos() / w).powf((1.0 - a) / a)
    };
    let scale = if a == 1.0 { dt } else { dt.powf(1.0 / a) };
    p.sigma * scale * x + p.mu * dt
}

/// Laplace exponent `log E exp(-θ S_1)` of the stable part.
pub(crate) fn stable_psi(alpha: f64, c1: f64, c2: f64, theta: f64) -> Result<f64, LevyError> {
    if theta == 0.0 {
        return Ok(0.0);
    }
    // Exponential moments exist only on the side without heavy jumps.
    let (c, th) = if theta > 0.0 { (c1, theta) } else { (c2, -theta) };
    let blocking = if theta > 0.0 { c2 } else { c1 };
    if blocking > 0.0 || alpha == 1.0 {
        return Err(LevyError::NoExponentialMoment {
            theta,
            reason: format!(
                "the {alpha}-stable component has a power tail in the direction that exp(-theta x) weighs"
            ),
        });
    }
    let lin = if alpha < 1.0 {
        c / (1.0 - alpha)
    } else {
        -c / (alpha - 1.0)
    };
    Ok(c * gamma_neg(alpha) * th.powf(alpha) + th * lin)
}
