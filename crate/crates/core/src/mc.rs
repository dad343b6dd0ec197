//! Monte Carlo plumbing: per-replication random streams, the replication
//! driver, and the small set of estimators the validation runs need.
//!
//! Replication `r` always draws from stream `(base_seed, r)`, so results do
//! not depend on thread count or scheduling, and the parallel and
//! sequential builds produce identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream of replication `rep` under `base_seed`.
pub fn stream(base_seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(rep);
    rng
}

/// Run `f(r, stream(seed, r))` for `r in 0..reps`, results in replication
/// order.
///
/// With the `parallel` feature replications are spread over a rayon pool
/// (`jobs` threads, or the global pool when `None`); otherwise they run in a
/// plain loop.
pub fn replicate<T, F>(reps: usize, base_seed: u64, jobs: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = || {
            (0..reps)
                .into_par_iter()
                .map(|r| f(r, &mut stream(base_seed, r as u64)))
                .collect()
        };
        match jobs {
            Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(run),
                Err(_) => run(),
            },
            _ => run(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        replicate_sequential(reps, base_seed, f)
    }
}

/// The single-threaded driver, always available (benchmarks compare the
/// two directly).
pub fn replicate_sequential<T, F>(reps: usize, base_seed: u64, f: F) -> Vec<T>
where
    F: Fn(usize, &mut ChaCha8Rng) -> T,
{
    (0..reps)
        .map(|r| f(r, &mut stream(base_seed, r as u64)))
        .collect()
}

/// Running mean and variance (Welford), mergeable in any order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_err(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Welford {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut w = Welford::default();
        for x in iter {
            w.push(x);
        }
        w
    }
}

/// Point estimate with a standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    /// `|value - target| <= k * std_err`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_err
    }

    pub fn z_score(&self, target: f64) -> f64 {
        (self.value - target) / self.std_err
    }
}

fn sample_cov(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / (n - 1.0)
}

fn batch_spread(values: &[f64]) -> f64 {
    let w: Welford = values.iter().copied().collect();
    w.std_err()
}

/// Sample covariance of paired replications with a batch-means standard
/// error (`batches` contiguous groups).
pub fn batch_means_cov(xs: &[f64], ys: &[f64], batches: usize) -> Estimate {
    assert_eq!(xs.len(), ys.len());
    let batches = batches.clamp(2, xs.len() / 2);
    let size = xs.len() / batches;
    let per_batch: Vec<f64> = (0..batches)
        .map(|b| sample_cov(&xs[b * size..(b + 1) * size], &ys[b * size..(b + 1) * size]))
        .collect();
    Estimate {
        value: sample_cov(xs, ys),
        std_err: batch_spread(&per_batch),
    }
}

/// Sample mean with a batch-means standard error.
pub fn batch_means_mean(xs: &[f64], batches: usize) -> Estimate {
    let batches = batches.clamp(2, xs.len() / 2);
    let size = xs.len() / batches;
    let per_batch: Vec<f64> = (0..batches)
        .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    Estimate {
        value: xs.iter().sum::<f64>() / xs.len() as f64,
        std_err: batch_spread(&per_batch),
    }
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_q((en + 0.12 + 0.11 / en) * d),
    }
}

/// One-sample KS against a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs = xs.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let en = n.sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_q((en + 0.12 + 0.11 / en) * d),
    }
}

/// Kolmogorov distribution tail `Q(λ) = 2 Σ (-1)^{k-1} e^{-2k²λ²}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Median of a slice (average of the middle pair for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Ordinary least squares `y = a + b x`, returning `(a, b)`.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}
