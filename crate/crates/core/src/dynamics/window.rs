use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::poisson_tail_above;

/// Default half-width of the cavity photon window, in standard deviations.
pub const DEFAULT_COVERAGE_SIGMAS: f64 = 7.0;

/// Poisson mass the window must cover.
pub const DEFAULT_MASS_TOL: f64 = 1e-10;

/// Truncated range of cavity photon numbers with their Poisson weights.
#[derive(Clone, Debug, PartialEq)]
pub struct CavityWindow {
    pub m_lo: usize,
    pub m_hi: usize,
    /// `ln(|β₀|^{2m} e^{−|β₀|²}/m!)` for `m = m_lo..=m_hi`.
    pub log_weights: Vec<f64>,
    /// Weights renormalized to sum to one over the window.
    pub weights: Vec<f64>,
    /// Poisson mass outside the window before renormalization.
    pub uncovered: f64,
}

impl CavityWindow {
    pub fn len(&self) -> usize {
        self.m_hi - self.m_lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.m_lo..=self.m_hi).zip(self.weights.iter().copied())
    }
}

fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|j| (j as f64).ln()).sum()
}

fn poisson_tail_below(mean: f64, from: usize) -> f64 {
    // P(m < from), summed downward from the largest term
    if from == 0 {
        return 0.0;
    }
    let ln_mean = mean.ln();
    let mut m = from - 1;
    let mut ln_fact = ln_factorial(m);
    let mut sum = 0.0;
    loop {
        let term = (m as f64 * ln_mean - mean - ln_fact).exp();
        sum += term;
        if m == 0 || term <= sum * 1e-18 {
            break;
        }
        ln_fact -= (m as f64).ln();
        m -= 1;
    }
    sum
}

fn build(mean: f64, m_lo: usize, m_hi: usize) -> CavityWindow {
    let ln_mean = mean.ln();
    let mut ln_fact = ln_factorial(m_lo);
    let mut log_weights = Vec::with_capacity(m_hi - m_lo + 1);
    for m in m_lo..=m_hi {
        if m > m_lo {
            ln_fact += (m as f64).ln();
        }
        log_weights.push(m as f64 * ln_mean - mean - ln_fact);
    }
    let shift = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = log_weights.iter().map(|l| (l - shift).exp()).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let uncovered = poisson_tail_below(mean, m_lo) + poisson_tail_above(mean, m_hi);
    CavityWindow { m_lo, m_hi, log_weights, weights, uncovered }
}

/// Window `[max(0, ⌊μ − sσ⌋), ⌈μ + sσ⌉]` around the Poisson mean `μ = |β₀|²`
/// with standard deviation `σ = |β₀|`.
pub fn cavity_window(beta0: C64, coverage_sigmas: f64) -> Result<CavityWindow> {
    let r = beta0.norm();
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("|beta0| must be > 0, got {beta0}")));
    }
    if !(coverage_sigmas > 0.0) {
        return Err(Error::InvalidParameter(format!("coverage_sigmas must be > 0, got {coverage_sigmas}")));
    }
    let mean = r * r;
    let m_lo = (mean - coverage_sigmas * r).floor().max(0.0) as usize;
    let m_hi = (mean + coverage_sigmas * r).ceil() as usize;
    Ok(build(mean, m_lo, m_hi))
}

/// The `cavity_window` range, widened one photon at a time on whichever
/// side is heavier until the uncovered Poisson mass is at most `mass_tol`.
/// For small `|β₀|` the Poisson distribution is skewed and the symmetric
/// window alone misses the required mass.
pub fn covering_window(beta0: C64, coverage_sigmas: f64, mass_tol: f64) -> Result<CavityWindow> {
    let base = cavity_window(beta0, coverage_sigmas)?;
    if base.uncovered <= mass_tol {
        return Ok(base);
    }
    let mean = beta0.norm_sqr();
    let (mut lo, mut hi) = (base.m_lo, base.m_hi);
    loop {
        let below = poisson_tail_below(mean, lo);
        let above = poisson_tail_above(mean, hi);
        if below + above <= mass_tol {
            break;
        }
        if below > above && lo > 0 {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    Ok(build(mean, lo, hi))
}
