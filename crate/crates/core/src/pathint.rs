//! Pathwise integration on grids: partition p-variation, Riemann–Stieltjes
//! sums, refinement along one realization, and the Young constant.

use serde::Serialize;
use thiserror::Error;

use crate::fbm::{FbmError, PathRefiner};
use crate::path::{PathError, SamplePath};
use crate::specfun::zeta;

/// Above this many turning points the p-variation sup falls back from the
/// exact program to greedy pruning.
pub const EXACT_PVAR_LIMIT: usize = 1 << 18;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathIntError {
    #[error("partition point {t} is not on the path grid")]
    OffGrid { t: f64 },
    #[error("bad partition: {0}")]
    Partition(String),
    #[error("integrand and integrator grids differ")]
    GridMismatch,
    #[error("young constant needs 1/p + 1/q > 1, got p = {p}, q = {q}")]
    YoungDomain { p: f64, q: f64 },
    #[error("refinement reached level {level} without |Δ| < {tol}")]
    NotConverged { estimate: IntegralEstimate, level: usize, tol: f64 },
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Fbm(#[from] FbmError),
}

/// Where each cell's integrand is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tag {
    #[default]
    Left,
    Mid,
    Right,
}

/// `s_0 < … < s_n` with optional per-cell intermediate points.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    points: Vec<f64>,
    intermediates: Option<Vec<f64>>,
}

impl Partition {
    pub fn new(points: Vec<f64>) -> Result<Self, PathIntError> {
        if points.len() < 2 {
            return Err(PathIntError::Partition("need at least one cell".into()));
        }
        crate::path::validate_grid(&points)?;
        Ok(Self {
            points,
            intermediates: None,
        })
    }

    /// The whole grid of a path.
    pub fn of(path: &SamplePath) -> Result<Self, PathIntError> {
        Self::new(path.times().to_vec())
    }

    pub fn with_intermediates(mut self, u: Vec<f64>) -> Result<Self, PathIntError> {
        if u.len() + 1 != self.points.len() {
            return Err(PathIntError::Partition(format!(
                "{} intermediates for {} cells",
                u.len(),
                self.points.len() - 1
            )));
        }
        for (i, &x) in u.iter().enumerate() {
            if !(x >= self.points[i] && x <= self.points[i + 1]) {
                return Err(PathIntError::Partition(format!("intermediate {x} outside cell {i}")));
            }
        }
        self.intermediates = Some(u);
        Ok(self)
    }

    pub fn tagged(self, tag: Tag) -> Self {
        let u = self
            .points
            .windows(2)
            .map(|w| match tag {
                Tag::Left => w[0],
                Tag::Mid => 0.5 * (w[0] + w[1]),
                Tag::Right => w[1],
            })
            .collect();
        Self {
            intermediates: Some(u),
            ..self
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Intermediate points, left endpoints when none were given.
    pub fn intermediates(&self) -> Vec<f64> {
        match &self.intermediates {
            Some(u) => u.clone(),
            None => self.points[..self.points.len() - 1].to_vec(),
        }
    }

    pub fn mesh(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

fn grid_values(path: &SamplePath, points: &[f64]) -> Result<Vec<f64>, PathIntError> {
    points
        .iter()
        .map(|&t| {
            path.index_of(t)
                .map(|i| path.values()[i])
                .ok_or(PathIntError::OffGrid { t })
        })
        .collect()
}

fn increments_pow(x: &[f64], p: f64) -> f64 {
    x.windows(2).map(|w| (w[1] - w[0]).abs().powf(p)).sum()
}

/// `Σ |X_{s_i} - X_{s_{i-1}}|^p` over the given partition.
pub fn p_variation_sum(path: &SamplePath, p: f64, partition: &Partition) -> Result<f64, PathIntError> {
    Ok(increments_pow(&grid_values(path, partition.points())?, p))
}

/// Endpoints plus the turning points of the sequence (flat runs collapsed).
fn turning_points(x: &[f64]) -> Vec<f64> {
    let mut out = vec![x[0]];
    for &v in &x[1..] {
        let n = out.len();
        if v == out[n - 1] {
            continue;
        }
        if n >= 2 && (out[n - 1] - out[n - 2]) * (v - out[n - 1]) > 0.0 {
            // Same direction: the middle point is not an extremum.
            out[n - 1] = v;
        } else {
            out.push(v);
        }
    }
    out
}

/// Exact sup over sub-partitions by dynamic programming. The scan back
/// from `j` stops once no earlier point can beat the current best: the
/// prefix maximum of `best` plus the largest reachable increment.
fn pvar_dp(x: &[f64], p: f64) -> f64 {
    let m = x.len();
    let mut best = vec![0.0f64; m];
    let mut best_max = vec![0.0f64; m];
    let (mut lo, mut hi) = (vec![x[0]; m], vec![x[0]; m]);
    for i in 1..m {
        lo[i] = lo[i - 1].min(x[i]);
        hi[i] = hi[i - 1].max(x[i]);
    }
    for j in 1..m {
        let mut b = f64::NEG_INFINITY;
        for i in (0..j).rev() {
            let reach = (x[j] - lo[i]).max(hi[i] - x[j]);
            if best_max[i] + reach.powf(p) <= b {
                break;
            }
            b = b.max(best[i] + (x[j] - x[i]).abs().powf(p));
        }
        best[j] = b;
        best_max[j] = best_max[j - 1].max(b);
    }
    best[m - 1]
}

/// Greedy pruning: drop an interior pair whenever the merged increment beats
/// the three it replaces, until nothing changes.
fn pvar_greedy(x: &[f64], p: f64) -> f64 {
    let mut pts = x.to_vec();
    loop {
        let mut next = Vec::with_capacity(pts.len());
        let mut i = 0;
        let mut changed = false;
        while i < pts.len() {
            if i >= 1 && i + 2 < pts.len() && !next.is_empty() {
                let prev: f64 = *next.last().unwrap();
                let (a, b, c) = (pts[i] - prev, pts[i + 1] - pts[i], pts[i + 2] - pts[i + 1]);
                let merged = (pts[i + 2] - prev).abs().powf(p);
                if merged > a.abs().powf(p) + b.abs().powf(p) + c.abs().powf(p) {
                    i += 2;
                    changed = true;
                    continue;
                }
            }
            next.push(pts[i]);
            i += 1;
        }
        pts = turning_points(&next);
        if !changed {
            break;
        }
    }
    increments_pow(&pts, p)
}

/// Lower bound on `v_p` of the path on its grid interval: the best of the
/// dyadic subsampling family and the local-extrema search. The search is
/// exact for `p >= 1` up to [`EXACT_PVAR_LIMIT`] turning points; for `p <= 1`
/// the full grid is already optimal.
pub fn p_variation_estimate(path: &SamplePath, p: f64) -> f64 {
    let x = path.values();
    if x.len() < 2 {
        return 0.0;
    }
    let full = increments_pow(x, p);
    if p <= 1.0 {
        return full;
    }
    let mut best = full;
    let mut stride = 2;
    while stride < x.len() {
        let mut sub: Vec<f64> = x.iter().step_by(stride).copied().collect();
        if (x.len() - 1) % stride != 0 {
            sub.push(x[x.len() - 1]);
        }
        best = best.max(increments_pow(&sub, p));
        stride *= 2;
    }
    let tp = turning_points(x);
    let search = if tp.len() <= EXACT_PVAR_LIMIT {
        pvar_dp(&tp, p)
    } else {
        pvar_greedy(&tp, p)
    };
    best.max(search)
}

/// `Σ f(u_i) [g(s_i) - g(s_{i-1})]`, with `f` read as a step function at the
/// intermediates and `g` read exactly at the partition points.
pub fn rs_integral(f: &SamplePath, g: &SamplePath, partition: &Partition) -> Result<f64, PathIntError> {
    let gv = grid_values(g, partition.points())?;
    let u = partition.intermediates();
    let mut sum = 0.0;
    for (i, w) in gv.windows(2).enumerate() {
        let fu = f.value_at(u[i]).ok_or(PathIntError::OffGrid { t: u[i] })?;
        sum += fu * (w[1] - w[0]);
    }
    Ok(sum)
}

/// Riemann–Stieltjes sum with a function integrand.
pub fn rs_integral_fn(f: impl Fn(f64) -> f64, g: &SamplePath, partition: &Partition) -> Result<f64, PathIntError> {
    let gv = grid_values(g, partition.points())?;
    let u = partition.intermediates();
    Ok(gv.windows(2).zip(&u).map(|(w, &x)| f(x) * (w[1] - w[0])).sum())
}

/// Running left-point sums `I_k = Σ_{i<k} f_i (g_{i+1} - g_i)`, `I_0 = 0`.
pub fn rs_running(f: &[f64], g: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(g.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..g.len() {
        acc += f[i - 1] * (g[i] - g[i - 1]);
        out.push(acc);
    }
    out
}

/// A refined integral with its trace of `(mesh, value)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralEstimate {
    pub value: f64,
    pub mesh: f64,
    pub refinement_trace: Vec<(f64, f64)>,
}

impl IntegralEstimate {
    pub fn write_trace_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "mesh,value")?;
        for (m, v) in &self.refinement_trace {
            writeln!(out, "{m:.16e},{v:.16e}")?;
        }
        Ok(())
    }
}

/// Left-point sums of `f ∘ g` against `g` on successive dyadic levels of a
/// single realization, doubling resolution until successive values differ
/// by less than `tol`.
///
/// `f_eval` maps the level's integrator path to integrand values on the
/// same grid.
pub fn rs_integral_refined<R, F>(
    mut f_eval: F,
    refiner: &mut R,
    start_level: usize,
    tol: f64,
) -> Result<IntegralEstimate, PathIntError>
where
    R: PathRefiner + ?Sized,
    F: FnMut(&SamplePath) -> Vec<f64>,
{
    let mut trace: Vec<(f64, f64)> = Vec::new();
    let max = refiner.max_level();
    for k in start_level.min(max)..=max {
        let g = refiner.level(k)?;
        let f = f_eval(&g);
        if f.len() != g.len() {
            return Err(PathIntError::GridMismatch);
        }
        let v = *rs_running(&f, g.values()).last().unwrap();
        let mesh = g.mesh();
        let done = trace.last().is_some_and(|&(_, prev)| (v - prev).abs() < tol);
        trace.push((mesh, v));
        if done {
            return Ok(IntegralEstimate {
                value: v,
                mesh,
                refinement_trace: trace,
            });
        }
    }
    let &(mesh, value) = trace.last().expect("at least one level");
    Err(PathIntError::NotConverged {
        estimate: IntegralEstimate {
            value,
            mesh,
            refinement_trace: trace,
        },
        level: max,
        tol,
    })
}

/// `C_{p,q} = ζ(1/p + 1/q)`.
pub fn young_constant(p: f64, q: f64) -> Result<f64, PathIntError> {
    let s = 1.0 / p + 1.0 / q;
    if !(p > 0.0 && q > 0.0) || !(s > 1.0) {
        return Err(PathIntError::YoungDomain { p, q });
    }
    zeta(s).map(|v| v.value).map_err(|_| PathIntError::YoungDomain { p, q })
}

/// Young–Loève bound `|f(a)(g(b)-g(a))| + C_{p,q} v_p(f)^{1/p} v_q(g)^{1/q}`
/// for the left-point sum on the common grid, with the variations
/// estimated on that grid.
pub fn young_loeve_bound(f: &SamplePath, g: &SamplePath, p: f64, q: f64) -> Result<f64, PathIntError> {
    if f.times() != g.times() {
        return Err(PathIntError::GridMismatch);
    }
    let c = young_constant(p, q)?;
    let head = (f.values()[0] * (g.last_value() - g.values()[0])).abs();
    Ok(head + c * p_variation_estimate(f, p).powf(1.0 / p) * p_variation_estimate(g, q).powf(1.0 / q))
}


/// Median of `v_p` for one (p, level) cell of a refinement study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PVariationCell {
    pub p: f64,
    pub level: usize,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PVariationStudy {
    pub cells: Vec<PVariationCell>,
    /// Per p: OLS slope of log2(median v_p) against the level.
    pub slopes: Vec<(f64, f64)>,
    pub threshold: f64,
    /// Smallest p of the grid from which every larger p has slope below the
    /// threshold; `None` when even the largest p still grows.
    pub threshold_transition: Option<f64>,
    /// Zero of a straight-line fit of slope against p over the cells that
    /// clearly diverge (slope >= 2 x threshold). Below the critical exponent
    /// the growth rate is close to linear in p, while above it the sup
    /// approaches its limit slowly enough that a fixed threshold lands late.
    pub transition: Option<f64>,
}

impl PVariationStudy {
    /// Empirical verdict for `p`: at or above the located transition.
    pub fn stabilizes(&self, p: f64) -> Option<bool> {
        self.transition.map(|t| p >= t)
    }
}

/// Growth of `v_p` under dyadic refinement.
///
/// `finest` draws one path on a uniform grid with `2^L + 1` points; level `k`
/// reads it at every `2^{L-k}`-th point. Growth per level below `threshold`
/// (in log2 units) counts as stabilization.
pub fn p_variation_study<F>(
    finest: F,
    p_grid: &[f64],
    levels: &[usize],
    reps: usize,
    seed: u64,
    jobs: Option<usize>,
    threshold: f64,
) -> Result<PVariationStudy, PathIntError>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> SamplePath + Sync + Send,
{
    let top = *levels
        .iter()
        .max()
        .ok_or_else(|| PathIntError::Partition("no refinement levels".into()))?;
    if levels.len() < 2 || p_grid.is_empty() || reps == 0 {
        return Err(PathIntError::Partition("need >= 2 levels, a p grid and reps >= 1".into()));
    }
    // per replication: values[level_idx][p_idx]
    let per_rep: Vec<Result<Vec<Vec<f64>>, PathIntError>> = crate::mc::replicate(reps, seed, jobs, |_, rng| {
        let path = finest(rng);
        if path.len() != (1usize << top) + 1 {
            return Err(PathIntError::GridMismatch);
        }
        levels
            .iter()
            .map(|&k| {
                let stride = 1usize << (top - k);
                let idx: Vec<usize> = (0..path.len()).step_by(stride).collect();
                let coarse = path.select(&idx).map_err(|_| PathIntError::GridMismatch)?;
                Ok(p_grid.iter().map(|&p| p_variation_estimate(&coarse, p)).collect())
            })
            .collect()
    });
    let per_rep: Vec<Vec<Vec<f64>>> = per_rep.into_iter().collect::<Result<_, _>>()?;
    let mut cells = Vec::new();
    let mut slopes = Vec::new();
    for (j, &p) in p_grid.iter().enumerate() {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, &k) in levels.iter().enumerate() {
            let vals: Vec<f64> = per_rep.iter().map(|r| r[i][j]).collect();
            let m = crate::mc::median(&vals);
            cells.push(PVariationCell { p, level: k, median: m });
            xs.push(k as f64);
            ys.push(m.max(f64::MIN_POSITIVE).log2());
        }
        slopes.push((p, crate::mc::ols(&xs, &ys).1));
    }
    let mut order: Vec<(f64, f64)> = slopes.clone();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut threshold_transition = None;
    for &(p, s) in order.iter().rev() {
        if s < threshold {
            threshold_transition = Some(p);
        } else {
            break;
        }
    }
    let steep: Vec<(f64, f64)> = order.iter().copied().filter(|&(_, s)| s >= 2.0 * threshold).collect();
    let transition = if steep.len() >= 2 {
        let xs: Vec<f64> = steep.iter().map(|v| v.0).collect();
        let ys: Vec<f64> = steep.iter().map(|v| v.1).collect();
        let (a, b) = crate::mc::ols(&xs, &ys);
        (b < 0.0).then(|| -a / b)
    } else {
        None
    };
    Ok(PVariationStudy {
        cells,
        slopes,
        threshold,
        threshold_transition,
        transition,
    })
}
