use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{standard_normal, FbmError, HurstIndex};

/// Unit-spacing fractional Gaussian noise by circulant embedding
/// (Davies–Harte / Wood–Chan).
///
/// The square roots of the embedding eigenvalues and the FFT plan are kept,
/// so repeated draws on the same grid cost one FFT each.
#[derive(Clone)]
pub struct CirculantFgn {
    n: usize,
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for CirculantFgn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CirculantFgn")
            .field("n", &self.n)
            .field("embedding", &self.scale.len())
            .finish()
    }
}

/// Autocovariance of unit-spacing fGn at integer lag `k`.
pub(crate) fn fgn_autocov(h: f64, k: usize) -> f64 {
    let two_h = 2.0 * h;
    let k = k as f64;
    if k == 0.0 {
        return 1.0;
    }
    0.5 * ((k + 1.0).powf(two_h) + (k - 1.0).powf(two_h) - 2.0 * k.powf(two_h))
}

impl CirculantFgn {
    pub fn new(h: HurstIndex, n: usize) -> Result<Self, FbmError> {
        if n == 0 {
            return Err(FbmError::Domain("fGn length must be positive".into()));
        }
        let half = n.next_power_of_two();
        let size = 2 * half;
        let mut row: Vec<Complex<f64>> = (0..size)
            .map(|j| {
                let lag = if j <= half { j } else { size - j };
                Complex::new(fgn_autocov(h.h(), lag), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(size);
        fft.process(&mut row);
        let max = row.iter().fold(0.0_f64, |m, c| m.max(c.re));
        let mut scale = Vec::with_capacity(size);
        for c in &row {
            if c.re < -1e-10 * max {
                return Err(FbmError::Embedding { value: c.re });
            }
            scale.push((c.re.max(0.0) / size as f64).sqrt());
        }
        Ok(Self { n, scale, fft })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn transform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = self
            .scale
            .iter()
            .map(|&s| {
                let re = standard_normal(rng);
                let im = standard_normal(rng);
                Complex::new(s * re, s * im)
            })
            .collect();
        self.fft.process(&mut buf);
        buf
    }

    /// One fGn sample of length `n`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.transform(rng)[..self.n].iter().map(|c| c.re).collect()
    }

    /// Two independent samples from the real and imaginary parts of one FFT.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let buf = self.transform(rng);
        let re = buf[..self.n].iter().map(|c| c.re).collect();
        let im = buf[..self.n].iter().map(|c| c.im).collect();
        (re, im)
    }
}
