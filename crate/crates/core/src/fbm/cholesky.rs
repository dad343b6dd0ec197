use super::FbmError;

/// Lower-triangular Cholesky factor stored row by row, so every inner
/// product in the factorization and in `L z` runs over contiguous memory.
#[derive(Debug, Clone)]
pub struct PackedCholesky {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorize without reassociation.
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

impl PackedCholesky {
    /// Factor the `n x n` matrix with entries `cov(i, j)`.
    ///
    /// On a non-positive pivot the whole factorization is retried once with
    /// `1e-12 * max diagonal` added to the diagonal.
    pub fn factor(n: usize, cov: impl Fn(usize, usize) -> f64) -> Result<Self, FbmError> {
        let mut data = vec![0.0; row_start(n)];
        for i in 0..n {
            for j in 0..=i {
                data[row_start(i) + j] = cov(i, j);
            }
        }
        let max_diag = (0..n).map(|i| data[row_start(i) + i]).fold(0.0, f64::max);
        let original = data.clone();
        match factor_in_place(n, &mut data) {
            Ok(()) => Ok(Self { n, data }),
            Err(_) => {
                let mut data = original;
                let jitter = 1e-12 * max_diag;
                for i in 0..n {
                    data[row_start(i) + i] += jitter;
                }
                factor_in_place(n, &mut data).map(|()| Self { n, data })
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Row `i` of `L`, entries `0..=i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[row_start(i)..row_start(i) + i + 1]
    }

    /// `(L z)_i`, reading only `z[0..=i]`.
    pub fn row_dot(&self, i: usize, z: &[f64]) -> f64 {
        dot(self.row(i), &z[..=i])
    }

    pub fn mul_vec(&self, z: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row_dot(i, z)).collect()
    }

    /// Solve `L x = b` by forward substitution.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for i in 0..self.n {
            let r = self.row(i);
            x[i] = (b[i] - dot(&r[..i], &x[..i])) / r[i];
        }
        x
    }
}

fn factor_in_place(n: usize, data: &mut [f64]) -> Result<(), FbmError> {
    for i in 0..n {
        let ri = row_start(i);
        for j in 0..=i {
            let rj = row_start(j);
            let s = data[ri + j] - dot(&data[ri..ri + j], &data[rj..rj + j]);
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(FbmError::NotPositiveDefinite { row: i });
                }
                data[ri + i] = s.sqrt();
            } else {
                data[ri + j] = s / data[rj + j];
            }
        }
    }
    Ok(())
}
