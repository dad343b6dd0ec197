//! Consistent refinement of a single FBM realization.
//!
//! Pathwise limits (Riemann–Stieltjes sums, mesh studies) must be taken
//! along one path. Two ways of revealing that path level by level:
//! exact conditional insertion of dyadic midpoints, and subsampling a path
//! drawn once on the finest grid. Both give the same joint law.

use std::sync::Arc;

use rand::Rng;

use super::{fbm_cov, standard_normal, uniform_lattice, FbmError, FbmSampler, HurstIndex, PackedCholesky};
use crate::fbm::circulant::fgn_autocov;
use crate::path::SamplePath;

/// A single realization that can be read on dyadic grids of `[a, b]`.
pub trait PathRefiner {
    /// Finest available level; level `k` has `2^k` cells.
    fn max_level(&self) -> usize;

    /// The path on the level-`k` grid, consistent with every other level.
    fn level(&mut self, k: usize) -> Result<SamplePath, FbmError>;
}

fn dyadic_grid(a: f64, b: f64, k: usize) -> Vec<f64> {
    let n = 1usize << k;
    let dt = (b - a) / n as f64;
    (0..=n)
        .map(|i| if i == n { b } else { a + dt * i as f64 })
        .collect()
}

fn check_level(k: usize, max: usize) -> Result<(), FbmError> {
    if k > max {
        return Err(FbmError::Domain(format!(
            "refinement level {k} is beyond the finest level {max}"
        )));
    }
    Ok(())
}

/// Factorization shared by all [`ConditionalMidpointRefiner`]s on the same
/// interval and depth.
///
/// Points are ordered coarse to fine (both endpoints, then the level-1
/// midpoint, then the level-2 midpoints, ...). In that order, the rows of the
/// Cholesky factor belonging to a level produce exactly the conditional law
/// of the new midpoints given everything coarser.
#[derive(Debug)]
pub struct MidpointPlan {
    a: f64,
    b: f64,
    max_level: usize,
    factor: PackedCholesky,
    // Factor row for each point in hierarchical order; None where t = 0.
    slots: Vec<Option<usize>>,
}

impl MidpointPlan {
    pub fn new(h: HurstIndex, a: f64, b: f64, max_level: usize) -> Result<Arc<Self>, FbmError> {
        if !(b > a) {
            return Err(FbmError::Domain(format!("empty interval [{a}, {b}]")));
        }
        let points = (1usize << max_level) + 1;
        if points > super::CHOLESKY_CAP {
            return Err(FbmError::TooLarge {
                points,
                cap: super::CHOLESKY_CAP,
            });
        }
        let mut order = vec![a, b];
        for level in 1..=max_level {
            let n = 1usize << level;
            let dt = (b - a) / n as f64;
            order.extend((1..n).step_by(2).map(|i| a + dt * i as f64));
        }
        let nonzero: Vec<f64> = order.iter().copied().filter(|&t| t != 0.0).collect();
        let factor = PackedCholesky::factor(nonzero.len(), |i, j| fbm_cov(h, nonzero[i], nonzero[j]))?;
        let mut next = 0;
        let slots = order
            .iter()
            .map(|&t| {
                (t != 0.0).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        Ok(Arc::new(Self {
            a,
            b,
            max_level,
            factor,
            slots,
        }))
    }

    /// Position in hierarchical order of grid point `i` at level `k`.
    fn order_index(&self, i: usize, k: usize) -> usize {
        let n = 1usize << k;
        if i == 0 {
            return 0;
        }
        if i == n {
            return 1;
        }
        let tz = i.trailing_zeros() as usize;
        let level = k - tz;
        let odd = i >> tz;
        // Levels 1..level-1 hold 1, 2, 4, ... points.
        2 + ((1usize << (level - 1)) - 1) + (odd - 1) / 2
    }

    fn level_end(&self, k: usize) -> usize {
        (1usize << k) + 1
    }
}

/// Exact dyadic midpoint insertion along one realization.
pub struct ConditionalMidpointRefiner<R> {
    plan: Arc<MidpointPlan>,
    rng: R,
    z: Vec<f64>,
    values: Vec<f64>,
    revealed: usize,
}

impl<R: Rng> ConditionalMidpointRefiner<R> {
    pub fn new(plan: Arc<MidpointPlan>, rng: R) -> Self {
        Self {
            plan,
            rng,
            z: Vec::new(),
            values: Vec::new(),
            revealed: 0,
        }
    }

    fn reveal(&mut self, k: usize) {
        let end = self.plan.level_end(k);
        while self.values.len() < end {
            let pos = self.values.len();
            let v = match self.plan.slots[pos] {
                Some(row) => {
                    self.z.push(standard_normal(&mut self.rng));
                    self.plan.factor.row_dot(row, &self.z)
                }
                None => 0.0,
            };
            self.values.push(v);
        }
        self.revealed = self.revealed.max(k);
    }
}

impl<R: Rng> PathRefiner for ConditionalMidpointRefiner<R> {
    fn max_level(&self) -> usize {
        self.plan.max_level
    }

    fn level(&mut self, k: usize) -> Result<SamplePath, FbmError> {
        check_level(k, self.plan.max_level)?;
        self.reveal(k);
        let times = dyadic_grid(self.plan.a, self.plan.b, k);
        let values = (0..times.len())
            .map(|i| self.values[self.plan.order_index(i, k)])
            .collect();
        Ok(SamplePath::new(times, values)?)
    }
}

/// Refinement by subsampling a path drawn once on the finest dyadic grid.
pub struct PreDrawnRefiner {
    fine: SamplePath,
    max_level: usize,
}

impl PreDrawnRefiner {
    /// Draw the finest level of `[a, b]` with the fastest exact sampler.
    pub fn draw<R: Rng + ?Sized>(
        h: HurstIndex,
        a: f64,
        b: f64,
        max_level: usize,
        rng: &mut R,
    ) -> Result<Self, FbmError> {
        let sampler = FbmSampler::new(h, &dyadic_grid(a, b, max_level), super::FbmMethod::Auto)?;
        Ok(Self::from_sampler(&sampler, max_level, rng))
    }

    /// Reuse a sampler already built on the finest dyadic grid.
    pub fn from_sampler<R: Rng + ?Sized>(sampler: &FbmSampler, max_level: usize, rng: &mut R) -> Self {
        debug_assert_eq!(sampler.times().len(), (1usize << max_level) + 1);
        Self {
            fine: sampler.sample(rng),
            max_level,
        }
    }

    pub fn fine(&self) -> &SamplePath {
        &self.fine
    }
}

impl PathRefiner for PreDrawnRefiner {
    fn max_level(&self) -> usize {
        self.max_level
    }

    fn level(&mut self, k: usize) -> Result<SamplePath, FbmError> {
        check_level(k, self.max_level)?;
        let stride = 1usize << (self.max_level - k);
        let idx: Vec<usize> = (0..self.fine.len()).step_by(stride).collect();
        Ok(self.fine.select(&idx)?)
    }
}

/// Solve `T x = b` for symmetric positive definite Toeplitz `T` with first
/// row `r` (Levinson recursion, `O(n^2)`).
pub fn levinson_solve(r: &[f64], b: &[f64]) -> Result<Vec<f64>, FbmError> {
    let n = r.len();
    if b.len() != n || n == 0 {
        return Err(FbmError::Domain("Toeplitz system dimensions disagree".into()));
    }
    if !(r[0] > 0.0) {
        return Err(FbmError::NotPositiveDefinite { row: 0 });
    }
    let r0 = r[0];
    let rr: Vec<f64> = r[1..].iter().map(|v| v / r0).collect();
    let rhs: Vec<f64> = b.iter().map(|v| v / r0).collect();
    let mut x = vec![rhs[0]];
    if n == 1 {
        return Ok(x);
    }
    let mut y = vec![-rr[0]];
    let mut beta = 1.0;
    let mut alpha = -rr[0];
    for k in 1..n {
        beta *= 1.0 - alpha * alpha;
        if !(beta > 0.0) {
            return Err(FbmError::NotPositiveDefinite { row: k });
        }
        let mut acc = 0.0;
        for i in 0..k {
            acc += rr[i] * x[k - 1 - i];
        }
        let mu = (rhs[k] - acc) / beta;
        let v: Vec<f64> = (0..k).map(|i| x[i] + mu * y[k - 1 - i]).collect();
        x = v;
        x.push(mu);
        if k < n - 1 {
            let mut acc = 0.0;
            for i in 0..k {
                acc += rr[i] * y[k - 1 - i];
            }
            alpha = (-rr[k] - acc) / beta;
            let z: Vec<f64> = (0..k).map(|i| y[i] + alpha * y[k - 1 - i]).collect();
            y = z;
            y.push(alpha);
        }
    }
    Ok(x)
}

/// Draw `B` at `new_times` conditionally on its values on a uniform grid
/// that contains 0.
///
/// Conditioning is on the whole grid, through the Toeplitz covariance of
/// the grid increments, so the result is exact in law rather than a local
/// bridge approximation.
pub fn condition_on_uniform<R: Rng + ?Sized>(
    h: HurstIndex,
    times: &[f64],
    values: &[f64],
    new_times: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>, FbmError> {
    let (dt, k0) = uniform_lattice(times)
        .ok_or_else(|| FbmError::Domain("conditioning grid must be uniform and aligned with 0".into()))?;
    let last = k0 + times.len() as i64 - 1;
    if k0 > 0 || last < 0 {
        return Err(FbmError::Domain("conditioning grid must contain 0".into()));
    }
    if new_times.is_empty() {
        return Ok(Vec::new());
    }
    let n = times.len() - 1;
    let var = dt.powf(2.0 * h.h());
    let r: Vec<f64> = (0..n).map(|k| fgn_autocov(h.h(), k) * var).collect();
    let incr: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let m = new_times.len();
    let mut mean = vec![0.0; m];
    let mut cols = Vec::with_capacity(m);
    let mut sols = Vec::with_capacity(m);
    for (j, &tau) in new_times.iter().enumerate() {
        let c: Vec<f64> = (0..n)
            .map(|i| fbm_cov(h, tau, times[i + 1]) - fbm_cov(h, tau, times[i]))
            .collect();
        let a = levinson_solve(&r, &c)?;
        mean[j] = a.iter().zip(&incr).map(|(x, y)| x * y).sum();
        cols.push(c);
        sols.push(a);
    }
    let cond = |i: usize, j: usize| {
        let reduce: f64 = cols[i].iter().zip(&sols[j]).map(|(x, y)| x * y).sum();
        fbm_cov(h, new_times[i], new_times[j]) - reduce
    };
    let factor = PackedCholesky::factor(m, cond)?;
    let z: Vec<f64> = (0..m).map(|_| standard_normal(rng)).collect();
    let noise = factor.mul_vec(&z);
    Ok(mean.iter().zip(noise).map(|(a, b)| a + b).collect())
}
