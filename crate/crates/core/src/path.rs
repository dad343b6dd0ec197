//! Càdlàg sample paths on finite grids.

use std::io::{self, Write};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("times and values differ in length ({times} vs {values})")]
    Length { times: usize, values: usize },
    #[error("times are not strictly increasing at index {index}")]
    Order { index: usize },
    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },
    #[error("a path needs at least one point")]
    Empty,
}

/// A path observed on a strictly increasing grid.
///
/// `values[i]` is the right-continuous value at `times[i]`. `jumps[i]` is
/// the jump recorded at that time, so the left limit is `values[i] -
/// jumps[i]`. Paths without recorded jumps carry zeros there.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    times: Vec<f64>,
    values: Vec<f64>,
    jumps: Vec<f64>,
}

fn check_grid(times: &[f64]) -> Result<(), PathError> {
    if times.is_empty() {
        return Err(PathError::Empty);
    }
    for (i, t) in times.iter().enumerate() {
        if !t.is_finite() {
            return Err(PathError::NonFinite { index: i });
        }
    }
    for i in 1..times.len() {
        if times[i] <= times[i - 1] {
            return Err(PathError::Order { index: i });
        }
    }
    Ok(())
}

/// Check that a grid is non-empty, finite and strictly increasing.
pub fn validate_grid(times: &[f64]) -> Result<(), PathError> {
    check_grid(times)
}

impl SamplePath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, PathError> {
        let n = values.len();
        Self::with_jumps(times, values, vec![0.0; n])
    }

    pub fn with_jumps(times: Vec<f64>, values: Vec<f64>, jumps: Vec<f64>) -> Result<Self, PathError> {
        if times.len() != values.len() {
            return Err(PathError::Length {
                times: times.len(),
                values: values.len(),
            });
        }
        if jumps.len() != values.len() {
            return Err(PathError::Length {
                times: times.len(),
                values: jumps.len(),
            });
        }
        check_grid(&times)?;
        for (i, (v, j)) in values.iter().zip(&jumps).enumerate() {
            if !v.is_finite() || !j.is_finite() {
                return Err(PathError::NonFinite { index: i });
            }
        }
        Ok(Self {
            times,
            values,
            jumps,
        })
    }

    /// Deterministic path `t ↦ f(t)` on the grid.
    pub fn from_fn(times: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self, PathError> {
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first_time(&self) -> f64 {
        self.times[0]
    }

    pub fn last_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn last_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Left limit at grid index `i`.
    pub fn left_limit(&self, i: usize) -> f64 {
        self.values[i] - self.jumps[i]
    }

    /// Index of the last grid time `<= t`, if any.
    pub fn index_at_or_before(&self, t: f64) -> Option<usize> {
        match self.times.partition_point(|&s| s <= t) {
            0 => None,
            k => Some(k - 1),
        }
    }

    /// Exact grid index of `t`, if `t` is a grid point.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times
            .binary_search_by(|s| s.total_cmp(&t))
            .ok()
    }

    /// Step-function reading: the value at the last grid time `<= t`.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.index_at_or_before(t).map(|i| self.values[i])
    }

    /// Left limit at `t`: at a grid point the stored left limit, between
    /// grid points the step value.
    pub fn left_limit_at(&self, t: f64) -> Option<f64> {
        match self.index_of(t) {
            Some(i) => Some(self.left_limit(i)),
            None => self.value_at(t),
        }
    }

    /// Keep every point whose time satisfies `keep`, along with the jumps
    /// recorded there.
    pub fn subsample(&self, keep: impl Fn(f64) -> bool) -> Option<SamplePath> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(self.times[i])).collect();
        self.select(&idx).ok()
    }

    /// Restrict to the points at the given grid indices (increasing).
    pub fn select(&self, indices: &[usize]) -> Result<SamplePath, PathError> {
        let times = indices.iter().map(|&i| self.times[i]).collect();
        let values = indices.iter().map(|&i| self.values[i]).collect();
        let jumps = indices.iter().map(|&i| self.jumps[i]).collect();
        SamplePath::with_jumps(times, values, jumps)
    }

    /// Pointwise map of values; jumps are recomputed from the mapped left
    /// limits.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SamplePath {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let jumps = (0..self.len())
            .map(|i| {
                if self.jumps[i] == 0.0 {
                    0.0
                } else {
                    values[i] - f(self.left_limit(i))
                }
            })
            .collect();
        SamplePath {
            times: self.times.clone(),
            values,
            jumps,
        }
    }

    /// Largest gap between consecutive grid times.
    pub fn mesh(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Write `time,value` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W, header_comment: Option<&str>) -> io::Result<()> {
        if let Some(c) = header_comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "time,value")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t:.16e},{v:.16e}")?;
        }
        Ok(())
    }
}

/// `n + 1` equispaced points from `a` to `b`.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let dt = (b - a) / n as f64;
    (0..=n)
        .map(|i| if i == n { b } else { a + dt * i as f64 })
        .collect()
}

/// Union of two increasing grids, merging points closer than `eps`.
pub fn merge_grids(a: &[f64], b: &[f64], eps: f64) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().chain(b).copied().collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|x, y| (*x - *y).abs() <= eps);
    out
}
