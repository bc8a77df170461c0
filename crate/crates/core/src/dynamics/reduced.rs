use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::branch::{eigen_branch, Sign};
use super::params::ModelParams;
use super::window::{covering_window, CavityWindow, DEFAULT_COVERAGE_SIGMAS, DEFAULT_MASS_TOL};
use crate::error::{Error, Result};
use crate::fock::{MotionalDensityMatrix, Truncation};

/// Per-(m, n) propagation coefficients. Starting from `|2,m,n⟩`, the state at
/// time t has amplitude `u = Σ_σ a_σ e^{−iω_σ t}` on `|2,m,n⟩` and
/// `v = Σ_σ b_σ e^{−iω_σ t}` on `|1,m+1,n+k⟩`, with `a_σ = |c^σ|²` and
/// `b_σ = |c^σ|² α^σ`.
#[derive(Clone, Copy, Debug)]
struct Coeffs {
    a_plus: f64,
    a_minus: f64,
    b_plus: C64,
    b_minus: C64,
    half_split: f64,
}

/// Time-independent data for evaluating the reduced motional state at any t.
///
/// Phases that depend on the cavity photon number alone cancel in every
/// matrix element of the reduced state, so only `νn ± R/2` is kept.
#[derive(Clone, Debug)]
pub struct Propagator {
    k: usize,
    nu: f64,
    dim: usize,
    n_in: usize,
    rho_in: Array2<C64>,
    window: CavityWindow,
    coeffs: Vec<Coeffs>,
}

impl Propagator {
    pub fn new(params: &ModelParams, trunc: &Truncation) -> Result<Self> {
        Self::with_coverage(params, trunc, DEFAULT_COVERAGE_SIGMAS)
    }

    pub fn with_coverage(params: &ModelParams, trunc: &Truncation, coverage_sigmas: f64) -> Result<Self> {
        params.validate()?;
        let rho0 = params.initial_rho(trunc)?;
        let k = params.k_sideband;
        let dim = trunc.dim();
        if k >= dim {
            return Err(Error::Truncation(format!("sideband k = {k} does not fit below n_max = {}", trunc.n_max())));
        }
        // input levels n > n_max − k would be shifted out of the basis
        let n_in = dim - k;
        let lost: f64 = rho0.populations()[n_in..].iter().sum();
        if lost > trunc.tail_tol() {
            return Err(Error::Truncation(format!(
                "input weight {lost:e} above n = {} cannot be shifted by k = {k} within n_max = {}",
                n_in - 1,
                trunc.n_max()
            )));
        }
        let window = covering_window(params.beta0, coverage_sigmas, DEFAULT_MASS_TOL)?;
        let mut coeffs = Vec::with_capacity(window.len() * n_in);
        for m in window.m_lo..=window.m_hi {
            for n in 0..n_in {
                let b = eigen_branch(m, n, params);
                let (p2, p1) = b.components(Sign::Plus);
                let (m2, m1) = b.components(Sign::Minus);
                coeffs.push(Coeffs {
                    a_plus: p2.norm_sqr(),
                    a_minus: m2.norm_sqr(),
                    b_plus: p1 * p2.conj(),
                    b_minus: m1 * m2.conj(),
                    half_split: 0.5 * b.splitting,
                });
            }
        }
        let rho_in = rho0.into_matrix();
        Ok(Self { k, nu: params.nu, dim, n_in, rho_in, window, coeffs })
    }

    pub fn window(&self) -> &CavityWindow {
        &self.window
    }

    pub fn input(&self) -> &Array2<C64> {
        &self.rho_in
    }

    /// Reduced motional density matrix at time `t` (units 1/|κ|).
    pub fn rho_at(&self, t: f64) -> Result<MotionalDensityMatrix> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("t must be finite and >= 0, got {t}")));
        }
        let n_in = self.n_in;
        let n_m = self.window.len();
        let mut u = Array2::<C64>::zeros((n_in, n_m));
        let mut v = Array2::<C64>::zeros((n_in, n_m));
        for (j, (_, p)) in self.window.iter().enumerate() {
            let sp = p.sqrt();
            for n in 0..n_in {
                let c = &self.coeffs[j * n_in + n];
                let free = C64::from_polar(sp, -self.nu * n as f64 * t);
                let ep = C64::from_polar(1.0, -c.half_split * t);
                let em = ep.conj();
                u[[n, j]] = free * (ep * c.a_plus + em * c.a_minus);
                v[[n, j]] = free * (c.b_plus * ep + c.b_minus * em);
            }
        }
        let uh = u.t().mapv(|z| z.conj());
        let vh = v.t().mapv(|z| z.conj());
        let g = u.dot(&uh);
        let h = v.dot(&vh);
        let k = self.k;
        let mut out = Array2::<C64>::zeros((self.dim, self.dim));
        for n in 0..n_in {
            for np in 0..n_in {
                let r = self.rho_in[[n, np]];
                out[[n, np]] += r * g[[n, np]];
                out[[n + k, np + k]] += r * h[[n, np]];
            }
        }
        MotionalDensityMatrix::from_matrix(out)
    }
}

/// Reduced motional density matrix at time `t`, for the ion initially in
/// `|2⟩`, the pump field in `|β₀⟩` and the motion in the configured state.
pub fn reduced_rho(t: f64, params: &ModelParams, trunc: &Truncation) -> Result<MotionalDensityMatrix> {
    Propagator::new(params, trunc)?.rho_at(t)
}
