//! Second-order theory of the stationary GFOU process and of W.
//!
//! Three independent routes to Cov(Ȳ_0, Ȳ_s): the special-function closed
//! form, the divergent-but-asymptotic series, and a direct 2D quadrature of
//! the double integral that never touches gamma or Kummer functions.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::fbm::{FbmError, HurstIndex};
use crate::levy::ThetaConstants;
use crate::quad::{integrate, integrate_breaks, integrate_to_inf, QuadError, QuadOptions};
use crate::specfun::{gamma, gamma_upper_scaled, hyp1f1_scaled, SpecialError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CovError {
    #[error("domain: {0}")]
    Domain(String),
    #[error(transparent)]
    Fbm(#[from] FbmError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

fn domain(msg: impl Into<String>) -> CovError {
    CovError::Domain(msg.into())
}

fn require_stationary(theta: ThetaConstants, h: HurstIndex) -> Result<(), CovError> {
    h.require_long_memory()?;
    if !(theta.theta2 > 0.0 && theta.theta1 > 0.0) {
        return Err(domain(format!(
            "need theta1, theta2 > 0, got ({}, {})",
            theta.theta1, theta.theta2
        )));
    }
    Ok(())
}

// ∫_lo^hi x^{2H-2} g(x) dx with w = x^{2H-1}, which turns the weight into
// dw/(2H-1) and leaves a smooth integrand in w.
fn integrate_power_weight<F: FnMut(f64) -> f64>(
    mut g: F,
    h: f64,
    lo: f64,
    hi: f64,
    opts: QuadOptions,
) -> Result<f64, QuadError> {
    let e = 2.0 * h - 1.0;
    let r = integrate(|w: f64| g(w.powf(1.0 / e)), lo.powf(e), hi.powf(e), opts)?;
    Ok(r.value / e)
}

/// `c_H ∫∫ f(u) g(v) |u - v|^{2H-2} du dv` over `support × support`.
pub fn lambda_h_inner<F, G>(f: F, g: G, support: (f64, f64), h: HurstIndex) -> Result<f64, CovError>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    lambda_h_inner_with_breaks(f, g, support, &[], h)
}

/// As [`lambda_h_inner`], for f and g with jumps or kinks at `breaks`.
///
/// Without the break points the inner integral can miss a short stretch of
/// support entirely (all nodes land outside it).
pub fn lambda_h_inner_with_breaks<F, G>(
    f: F,
    g: G,
    support: (f64, f64),
    breaks: &[f64],
    h: HurstIndex,
) -> Result<f64, CovError>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let c_h = h.require_long_memory()?;
    let (a, b) = support;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(domain(format!("bad support [{a}, {b}]")));
    }
    let len = b - a;
    let inner_opts = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-12,
        max_intervals: 4000,
    };
    let mut failure = None;
    let mut cuts = Vec::with_capacity(2 * breaks.len());
    // x = u - v >= 0 and its mirror; v runs over [a, b - x].
    let mut diag = |x: f64| -> f64 {
        cuts.clear();
        cuts.extend(breaks.iter().flat_map(|&p| [p, p - x]));
        match integrate_breaks(|v| f(v + x) * g(v) + f(v) * g(v + x), a, b - x, &cuts, inner_opts) {
            Ok(r) => r.value,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    // Kinks of the inner integral in x sit at differences of break points
    // and support ends.
    let mut ends: Vec<f64> = breaks.to_vec();
    ends.extend([a, b]);
    let mut kinks = Vec::new();
    for p in &ends {
        for q in &ends {
            let d = (p - q).abs();
            if d > 0.0 && d < len {
                kinks.push(d);
            }
        }
    }
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();
    let e = 2.0 * h.h() - 1.0;
    let wkinks: Vec<f64> = kinks.iter().map(|d| d.powf(e)).collect();
    let value = integrate_breaks(
        |w: f64| diag(w.powf(1.0 / e)),
        0.0,
        len.powf(e),
        &wkinks,
        QuadOptions::rel(1e-11),
    )?
    .value
        / e;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(c_h * value)
}

/// Factor E[exp(-(ξ_t - ξ_u) - (ξ_{t+s} - ξ_v))]: the exponent is the
/// integral of dξ against a multiplicity in {0, 1, 2}.
fn xi_kernel(theta: ThetaConstants, t: f64, s: f64, u: f64, v: f64) -> f64 {
    let double = (t - u.max(v)).max(0.0);
    let single = (t - u) + (t + s - v) - 2.0 * double;
    (-theta.theta1 * single - theta.theta2 * double).exp()
}

/// Cov(Ȳ_t, Ȳ_{t+s}) by nested adaptive quadrature of the double integral.
///
/// The region u ≤ t, v ≤ t + s is split into the quadrant {u, v ≤ t}, in
/// coordinates (distance, max), and the strip {u ≤ t < v}.
pub fn cov_oracle_quadrature(theta: ThetaConstants, h: HurstIndex, s: f64, t: f64) -> Result<f64, CovError> {
    require_stationary(theta, h)?;
    if !(s >= 0.0 && t >= 0.0) {
        return Err(domain(format!("need s, t >= 0, got s = {s}, t = {t}")));
    }
    let hh = h.h();
    let c_h = h.c_h().expect("checked above");
    let inner = QuadOptions {
        abs_tol: 1e-16,
        rel_tol: 1e-11,
        max_intervals: 4000,
    };
    let outer = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-10,
        max_intervals: 4000,
    };
    let mut failure: Option<QuadError> = None;
    let mut note = |r: Result<f64, QuadError>| match r {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };

    // Quadrant: max(u, v) = t - z, |u - v| = x.
    let quadrant_inner = |z: f64| -> (Result<f64, QuadError>, Result<f64, QuadError>) {
        let y = t - z;
        let k = |x: f64| xi_kernel(theta, t, s, y, y - x) + xi_kernel(theta, t, s, y - x, y);
        let near = integrate_power_weight(k, hh, 0.0, 1.0, inner);
        let far = integrate_to_inf(|x| x.powf(2.0 * hh - 2.0) * k(x), 1.0, inner).map(|r| r.value);
        (near, far)
    };
    let quadrant = integrate_to_inf(
        |z| {
            let (a, b) = quadrant_inner(z);
            note(a) + note(b)
        },
        0.0,
        outer,
    )?
    .value;

    // Strip: v = t + a, a in (0, s]; u = v - x with x >= a.
    let strip = if s > 0.0 {
        let mut failure2: Option<QuadError> = None;
        let mut note2 = |r: Result<f64, QuadError>| match r {
            Ok(v) => v,
            Err(e) => {
                failure2.get_or_insert(e);
                0.0
            }
        };
        let value = integrate(
            |a| {
                let v = t + a;
                let k = |x: f64| xi_kernel(theta, t, s, v - x, v);
                let near = integrate_power_weight(k, hh, a, a + 1.0, inner);
                let far = integrate_to_inf(|x| x.powf(2.0 * hh - 2.0) * k(x), a + 1.0, inner).map(|r| r.value);
                note2(near) + note2(far)
            },
            0.0,
            s,
            outer,
        )?
        .value;
        if let Some(e) = failure2 {
            return Err(e.into());
        }
        value
    } else {
        0.0
    };
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(c_h * (quadrant + strip))
}

/// The four pieces of the closed form, each already multiplied by c_H.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedTerms {
    pub variance_part: f64,
    pub kummer_part: f64,
    pub gamma_part: f64,
    pub upper_gamma_part: f64,
}

impl ClosedTerms {
    pub fn total(&self) -> f64 {
        self.variance_part + self.kummer_part + self.gamma_part + self.upper_gamma_part
    }
}

/// Terms of the closed form with the e^{-θ1 s} prefactor applied to every
/// term, including the one carrying Γ(2H-1, θ1 s).
pub fn cov_stationary_terms(theta: ThetaConstants, h: HurstIndex, s: f64) -> Result<ClosedTerms, CovError> {
    require_stationary(theta, h)?;
    if !(s > 0.0) {
        return Err(domain(format!("need s > 0, got {s}")));
    }
    let hh = h.h();
    let (t1, t2) = (theta.theta1, theta.theta2);
    let x = t1 * s;
    let decay = (-x).exp();
    // c_H Γ(2H-1) = H Γ(2H) and c_H / (2H-1) = H stay finite as H -> 1/2.
    let ch_gamma = hh * gamma(2.0 * hh)?.value;
    let a = 2.0 * hh - 1.0;
    let power = t1.powf(2.0 * hh);
    Ok(ClosedTerms {
        variance_part: 2.0 * ch_gamma * decay / (t2 * t1.powf(a)),
        kummer_part: hh * s.powf(a) / (2.0 * t1) * hyp1f1_scaled(a, 2.0 * hh, x)?.value,
        gamma_part: -ch_gamma * decay / (2.0 * power),
        upper_gamma_part: h.c_h().expect("checked") * gamma_upper_scaled(a, x)?.value / (2.0 * power),
    })
}

/// Cov(Ȳ_0, Ȳ_s) in closed form.
pub fn cov_stationary_closed(theta: ThetaConstants, h: HurstIndex, s: f64) -> Result<f64, CovError> {
    Ok(cov_stationary_terms(theta, h, s)?.total())
}

/// The same four terms with e^{2θ1 s} Γ(2H-1, θ1 s) left outside the
/// e^{-θ1 s} prefactor. Kept for comparison only; it disagrees with the
/// quadrature and grows without bound in s.
pub fn cov_stationary_unscaled_variant(theta: ThetaConstants, h: HurstIndex, s: f64) -> Result<f64, CovError> {
    let terms = cov_stationary_terms(theta, h, s)?;
    let x = theta.theta1 * s;
    Ok(terms.total() + terms.upper_gamma_part * ((2.0 * x).exp() - 1.0))
}

/// Variance of the stationary version, 2 c_H Γ(2H-1) / (θ2 θ1^{2H-1}).
pub fn stationary_variance(theta: ThetaConstants, h: HurstIndex) -> Result<f64, CovError> {
    require_stationary(theta, h)?;
    let hh = h.h();
    Ok(2.0 * hh * gamma(2.0 * hh)?.value / (theta.theta2 * theta.theta1.powf(2.0 * hh - 1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesValue {
    /// Partial sum through `n_terms`, or the best (smallest-term) truncation
    /// when the terms stop decreasing.
    pub value: f64,
    pub partial_sum: f64,
    pub best_terms: usize,
    pub term_magnitudes: Vec<f64>,
    /// Terms were still growing at the cap: the series is being used past
    /// its optimal truncation point.
    pub diverging: bool,
}

// γ(n+1, x)/n! = e^{-x} Σ_{k>n} x^k/k!, summed directly (no cancellation).
fn regularized_lower_int(n: usize, x: f64) -> f64 {
    let mut log_t = -x;
    for k in 1..=n + 1 {
        log_t += (x / k as f64).ln();
    }
    let mut term = log_t.exp();
    let mut sum = term;
    let mut k = n + 1;
    loop {
        k += 1;
        term *= x / k as f64;
        sum += term;
        if term < 1e-17 * sum || k > n + 100_000 {
            break;
        }
    }
    sum.min(1.0)
}

/// The series representation: the first and third closed-form terms plus
/// `n_terms` terms of the expansion replacing the Kummer and upper-gamma
/// terms.
///
/// The coefficients ∏(2H-k) grow factorially against (θ1 s)^{-n}, so the
/// series is asymptotic rather than convergent; term magnitudes are returned
/// and, when they grow at the cap, the optimally truncated sum is reported.
pub fn cov_series(theta: ThetaConstants, h: HurstIndex, s: f64, n_terms: usize) -> Result<SeriesValue, CovError> {
    require_stationary(theta, h)?;
    if !(s > 0.0) || n_terms == 0 {
        return Err(domain(format!("need s > 0 and n_terms >= 1, got s = {s}, n = {n_terms}")));
    }
    let terms = cov_stationary_terms(theta, h, s)?;
    let base = terms.variance_part + terms.gamma_part;
    let hh = h.h();
    let x = theta.theta1 * s;
    // c_H s^{2H-1}/(2 θ1 (2H-1)) times ∏_{k=1}^{n+1}(2H-k): the k = 1 factor
    // cancels the (2H-1) in the denominator.
    let pre = hh * (2.0 * hh - 1.0) * s.powf(2.0 * hh - 1.0) / (2.0 * theta.theta1);
    let mut coef = 1.0; // ∏_{k=2}^{n+1}(2H-k) / x^{n+1}, built incrementally
    let mut terms_v = Vec::with_capacity(n_terms);
    for n in 0..n_terms {
        if n == 0 {
            coef = 1.0 / x;
        } else {
            coef *= (2.0 * hh - (n + 1) as f64) / x;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 }; // -(-1)^{n+1}
        let bracket = 1.0 + sign * regularized_lower_int(n, x);
        terms_v.push(pre * coef * bracket);
    }
    let mags: Vec<f64> = terms_v.iter().map(|t| t.abs()).collect();
    let partial = base + terms_v.iter().sum::<f64>();
    // Odd-index brackets 1 - P(n+1, x) are O(e^{-x}); only the even terms
    // carry the power series. Optimal truncation is therefore judged on
    // consecutive pairs, not single terms.
    let pairs: Vec<f64> = terms_v.chunks(2).map(|c| c.iter().sum::<f64>().abs()).collect();
    let best_pair = pairs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let diverging = pairs.len() >= 2 && pairs[pairs.len() - 1] >= pairs[pairs.len() - 2];
    let (value, best_terms) = if diverging {
        let cut = 2 * best_pair;
        (base + terms_v[..cut].iter().sum::<f64>(), cut)
    } else {
        (partial, n_terms)
    };
    Ok(SeriesValue {
        value,
        partial_sum: partial,
        best_terms,
        term_magnitudes: mags,
        diverging,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticValue {
    pub value: f64,
    /// Set when θ1 s < 5, outside the regime where the expansion is useful.
    pub warning: Option<String>,
}

/// Large-s expansion of Cov(Y_t, Y_{t+s}) for the process started from an
/// independent initial value, truncated after `n_max` terms.
pub fn cov_nonstationary_asymptotic(
    theta: ThetaConstants,
    h: HurstIndex,
    t: f64,
    s: f64,
    n_max: usize,
) -> Result<AsymptoticValue, CovError> {
    h.require_long_memory()?;
    if !(t >= 0.0 && s > 0.0 && theta.theta1 > 0.0) {
        return Err(domain(format!("need t >= 0, s > 0, theta1 > 0; got t = {t}, s = {s}")));
    }
    let hh = h.h();
    let t1 = theta.theta1;
    let damp = (-t1 * t).exp();
    let mut prod = 1.0;
    let mut k = 0usize;
    let mut value = 0.0;
    for n in 1..=n_max {
        while k < 2 * n - 1 {
            k += 1;
            prod *= 2.0 * hh - k as f64;
        }
        let e = 2.0 * hh - 2.0 * n as f64;
        value += prod * t1.powi(-2 * n as i32) * (s.powf(e) - damp * (t + s).powf(e));
    }
    let warning = (t1 * s < 5.0).then(|| format!("theta1 * s = {} < 5: expansion not in its asymptotic regime", t1 * s));
    Ok(AsymptoticValue { value: hh * value, warning })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WCovariance {
    pub cov: f64,
    /// None when one of the two variances vanishes.
    pub corr: Option<f64>,
}

/// Covariance and correlation of W_t = 1 + e^{-(B_t + a t)}(X - 1) at
/// (t, t + s), with M1 = (E X - 1)^2 and M2 = E (X - 1)^2.
pub fn cov_w(h: HurstIndex, t: f64, s: f64, m1: f64, m2: f64, drift_a: f64) -> Result<WCovariance, CovError> {
    h.require_long_memory()?;
    if !(t >= 0.0 && s >= 0.0 && drift_a >= 0.0) {
        return Err(domain(format!("need t, s, a >= 0, got t = {t}, s = {s}, a = {drift_a}")));
    }
    if !(m1 >= 0.0 && m2 >= m1 * (1.0 - 1e-12)) {
        return Err(domain(format!("need 0 <= M1 <= M2, got M1 = {m1}, M2 = {m2}")));
    }
    let e = 2.0 * h.h();
    let (a, b, c) = (t.powf(e), (t + s).powf(e), s.powf(e));
    // Var(B_t + B_{t+s}) = a + b + (a + b - c).
    let core = m2 * (0.5 * (a + b - c)).exp() - m1;
    let cov = (0.5 * (a + b)).exp() * core * (-drift_a * (2.0 * t + s)).exp();
    let va = m2 * a.exp() - m1;
    let vb = m2 * b.exp() - m1;
    let corr = if va > 0.0 && vb > 0.0 && m2 > 0.0 {
        Some(core / (va * vb).sqrt())
    } else {
        None
    };
    Ok(WCovariance { cov, corr })
}

/// One row of a covariance validation grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceReport {
    pub lag_s: f64,
    pub analytic: f64,
    pub series: f64,
    pub oracle: f64,
    pub mc_estimate: f64,
    pub mc_stderr: f64,
    pub closed_vs_oracle: bool,
    pub closed_vs_series: bool,
    pub mc_vs_closed: bool,
    pub tol_oracle: f64,
    pub tol_series: f64,
    pub tol_mc_se: f64,
}

impl CovarianceReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        lag_s: f64,
        analytic: f64,
        series: f64,
        oracle: f64,
        mc_estimate: f64,
        mc_stderr: f64,
        tolerances: (f64, f64, f64),
    ) -> Self {
        let (tol_oracle, tol_series, tol_mc_se) = tolerances;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        Self {
            lag_s,
            analytic,
            series,
            oracle,
            mc_estimate,
            mc_stderr: mc_stderr.max(0.0),
            closed_vs_oracle: rel(analytic, oracle) <= tol_oracle,
            closed_vs_series: rel(series, analytic) <= tol_series,
            mc_vs_closed: !mc_estimate.is_finite() || (mc_estimate - analytic).abs() <= tol_mc_se * mc_stderr,
            tol_oracle,
            tol_series,
            tol_mc_se,
        }
    }

    pub fn all_agree(&self) -> bool {
        self.closed_vs_oracle && self.closed_vs_series && self.mc_vs_closed
    }
}

pub fn write_report_csv<W: Write>(rows: &[CovarianceReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "s,analytic,series,oracle,mc,mc_stderr")?;
    for r in rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.lag_s, r.analytic, r.series, r.oracle, r.mc_estimate, r.mc_stderr
        )?;
    }
    Ok(())
}
