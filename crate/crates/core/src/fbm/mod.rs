//! Fractional Brownian motion: covariance, increment autocovariance and
//! exact-in-law path sampling.

mod cholesky;
mod circulant;
mod refine;

use rand::Rng;
use thiserror::Error;

use crate::path::{validate_grid, PathError, SamplePath};

pub use cholesky::PackedCholesky;
pub use circulant::CirculantFgn;
pub use refine::{
    condition_on_uniform, levinson_solve, ConditionalMidpointRefiner, MidpointPlan, PathRefiner,
    PreDrawnRefiner,
};

/// Largest grid the dense factorization accepts.
pub const CHOLESKY_CAP: usize = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FbmError {
    #[error("Hurst index must lie in (0, 1), got {0}")]
    Hurst(f64),
    #[error("{0}")]
    Domain(String),
    #[error("covariance matrix is not positive definite at row {row} even after jitter")]
    NotPositiveDefinite { row: usize },
    #[error("grid of {points} points exceeds the dense factorization cap of {cap}")]
    TooLarge { points: usize, cap: usize },
    #[error("circulant embedding has a negative eigenvalue {value:e}")]
    Embedding { value: f64 },
    #[error(transparent)]
    Grid(#[from] PathError),
}

/// Validated Hurst index with the constant `c_H = H(2H - 1)` when `H > 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurstIndex {
    h: f64,
    c_h: Option<f64>,
}

impl HurstIndex {
    pub fn new(h: f64) -> Result<Self, FbmError> {
        if !(h > 0.0 && h < 1.0) {
            return Err(FbmError::Hurst(h));
        }
        let c_h = (h > 0.5).then_some(h * (2.0 * h - 1.0));
        Ok(Self { h, c_h })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn c_h(&self) -> Option<f64> {
        self.c_h
    }

    /// `c_H`, or a domain error for `H <= 1/2`.
    pub fn require_long_memory(&self) -> Result<f64, FbmError> {
        self.c_h.ok_or_else(|| {
            FbmError::Domain(format!(
                "this quantity needs H > 1/2, got H = {}",
                self.h
            ))
        })
    }
}

/// `Cov(B_t, B_s) = (|t|^{2H} + |s|^{2H} - |t - s|^{2H}) / 2`.
pub fn fbm_cov(h: HurstIndex, t: f64, s: f64) -> f64 {
    let two_h = 2.0 * h.h;
    0.5 * (t.abs().powf(two_h) + s.abs().powf(two_h) - (t - s).abs().powf(two_h))
}

/// Autocovariance of width-`w` increments at lag `s`,
/// `((s+w)^{2H} + (s-w)^{2H} - 2 s^{2H}) / 2`, for `0 < w < s`.
pub fn increment_autocov(h: HurstIndex, lag_s: f64, width: f64) -> Result<f64, FbmError> {
    check_lag(lag_s, width)?;
    let two_h = 2.0 * h.h;
    let u = width / lag_s;
    let scale = lag_s.powf(two_h);
    if u < 0.2 {
        // The three powers cancel to O(u^2); sum the even binomial series
        // Σ_k C(2H, 2k) u^{2k} instead, which converges fast here.
        let mut coef = 1.0;
        let mut sum = 0.0;
        let mut upow = 1.0;
        for k in 1..200 {
            let (a, b) = ((2 * k - 2) as f64, (2 * k - 1) as f64);
            coef *= (two_h - a) * (two_h - b) / ((a + 1.0) * (b + 1.0));
            upow *= u * u;
            let term = coef * upow;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        return Ok(scale * sum);
    }
    let up = (two_h * u.ln_1p()).exp_m1();
    let down = (two_h * (-u).ln_1p()).exp_m1();
    Ok(0.5 * scale * (up + down))
}

/// Partial sum `Σ_{n=1}^{N} w^{2n}/(2n)! ∏_{k=0}^{2n-1}(2H-k) s^{2H-2n}` of
/// the large-lag expansion of [`increment_autocov`].
pub fn increment_autocov_series(
    h: HurstIndex,
    lag_s: f64,
    width: f64,
    n_terms: usize,
) -> Result<f64, FbmError> {
    check_lag(lag_s, width)?;
    if n_terms == 0 {
        return Err(FbmError::Domain("n_terms must be at least 1".into()));
    }
    let two_h = 2.0 * h.h;
    let mut falling = 1.0;
    let mut fact = 1.0;
    let mut sum = 0.0;
    for n in 1..=n_terms {
        for k in [2 * n - 2, 2 * n - 1] {
            falling *= two_h - k as f64;
            fact *= (k + 1) as f64;
        }
        let m = 2 * n as i32;
        sum += width.powi(m) / fact * falling * lag_s.powf(two_h - m as f64);
    }
    Ok(sum)
}

fn check_lag(lag_s: f64, width: f64) -> Result<(), FbmError> {
    if !(width > 0.0 && width < lag_s) {
        return Err(FbmError::Domain(format!(
            "need 0 < width < lag, got width = {width}, lag = {lag_s}"
        )));
    }
    Ok(())
}

/// Which factorization [`FbmSampler`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FbmMethod {
    /// Circulant embedding on uniform grids that contain (or extend to) 0,
    /// dense Cholesky otherwise.
    #[default]
    Auto,
    Cholesky,
    Circulant,
}

#[derive(Debug, Clone)]
enum Kind {
    Circulant {
        fgn: CirculantFgn,
        dt_pow_h: f64,
        // Index of times[0] and of 0 within the increment range.
        first: usize,
        zero: usize,
    },
    Cholesky {
        factor: PackedCholesky,
        // Position of each grid point among the nonzero times, None at t = 0.
        slots: Vec<Option<usize>>,
    },
}

/// Reusable exact sampler of `B^H` on a fixed grid.
///
/// Building the sampler does all the expensive work (factorization or
/// circulant eigenvalues); each draw afterwards is cheap, so one sampler is
/// shared by every Monte Carlo replication on the same grid.
#[derive(Debug, Clone)]
pub struct FbmSampler {
    h: HurstIndex,
    times: Vec<f64>,
    kind: Kind,
}

/// `Some((dt, k0))` when `times[i] = (k0 + i) dt` for all `i`.
pub(crate) fn uniform_lattice(times: &[f64]) -> Option<(f64, i64)> {
    if times.len() < 2 {
        return None;
    }
    let n = times.len() - 1;
    let dt = (times[n] - times[0]) / n as f64;
    let scale = times[0].abs().max(times[n].abs()).max(dt);
    for (i, t) in times.iter().enumerate() {
        if (t - (times[0] + dt * i as f64)).abs() > 1e-9 * scale {
            return None;
        }
    }
    let k0 = times[0] / dt;
    if (k0 - k0.round()).abs() > 1e-6 {
        return None;
    }
    Some((dt, k0.round() as i64))
}

impl FbmSampler {
    pub fn new(h: HurstIndex, times: &[f64], method: FbmMethod) -> Result<Self, FbmError> {
        validate_grid(times)?;
        let lattice = uniform_lattice(times);
        let use_circulant = match method {
            FbmMethod::Auto => lattice.is_some(),
            FbmMethod::Circulant => {
                if lattice.is_none() {
                    return Err(FbmError::Domain(
                        "circulant sampling needs a uniform grid aligned with 0".into(),
                    ));
                }
                true
            }
            FbmMethod::Cholesky => false,
        };
        let kind = if use_circulant {
            let (dt, k0) = lattice.expect("checked above");
            let last = k0 + times.len() as i64 - 1;
            let lo = k0.min(0);
            let hi = last.max(0);
            let n_incr = (hi - lo) as usize;
            Kind::Circulant {
                fgn: CirculantFgn::new(h, n_incr.max(1))?,
                dt_pow_h: dt.powf(h.h),
                first: (k0 - lo) as usize,
                zero: (-lo) as usize,
            }
        } else {
            let nonzero: Vec<f64> = times.iter().copied().filter(|&t| t != 0.0).collect();
            if nonzero.len() > CHOLESKY_CAP {
                return Err(FbmError::TooLarge {
                    points: nonzero.len(),
                    cap: CHOLESKY_CAP,
                });
            }
            let factor = PackedCholesky::factor(nonzero.len(), |i, j| fbm_cov(h, nonzero[i], nonzero[j]))?;
            let mut next = 0;
            let slots = times
                .iter()
                .map(|&t| {
                    if t == 0.0 {
                        None
                    } else {
                        next += 1;
                        Some(next - 1)
                    }
                })
                .collect();
            Kind::Cholesky { factor, slots }
        };
        Ok(Self {
            h,
            times: times.to_vec(),
            kind,
        })
    }

    pub fn hurst(&self) -> HurstIndex {
        self.h
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn method(&self) -> FbmMethod {
        match self.kind {
            Kind::Circulant { .. } => FbmMethod::Circulant,
            Kind::Cholesky { .. } => FbmMethod::Cholesky,
        }
    }

    /// One draw of `(B_{t_0}, ..., B_{t_n})`.
    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.kind {
            Kind::Circulant {
                fgn,
                dt_pow_h,
                first,
                zero,
            } => {
                let incr = fgn.sample(rng);
                let mut cum = Vec::with_capacity(incr.len() + 1);
                let mut acc = 0.0;
                cum.push(0.0);
                for x in &incr {
                    acc += x;
                    cum.push(acc);
                }
                let base = cum[*zero];
                (0..self.times.len())
                    .map(|i| (cum[first + i] - base) * dt_pow_h)
                    .collect()
            }
            Kind::Cholesky { factor, slots } => {
                let z: Vec<f64> = (0..factor.dim()).map(|_| standard_normal(rng)).collect();
                let x = factor.mul_vec(&z);
                slots.iter().map(|s| s.map_or(0.0, |k| x[k])).collect()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SamplePath {
        let values = self.sample_values(rng);
        SamplePath::new(self.times.clone(), values).expect("sampler grid was validated")
    }
}

/// Draw one FBM path on `times` (which may extend to negative times; the
/// path is pinned to 0 at time 0 whether or not 0 is a grid point).
pub fn sample_fbm<R: Rng + ?Sized>(h: HurstIndex, times: &[f64], rng: &mut R) -> Result<SamplePath, FbmError> {
    Ok(FbmSampler::new(h, times, FbmMethod::Auto)?.sample(rng))
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}
