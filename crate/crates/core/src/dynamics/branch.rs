use num_complex::Complex64 as C64;

use super::params::ModelParams;
use crate::fock::{laguerre_gen, log_factorial_ratio};

/// Diagonal element `f_k(n; η) = ⟨n|f̂_k|n⟩` of the mode function.
///
/// The operator is defined as half of a complex expression plus its
/// conjugate, so the value is real: `Re(e^{iΔφ} i^k) η^k e^{−η²/2}
/// n!/(n+k)! L_n^{(k)}(η²)`.
pub fn f_k_diag(n: usize, params: &ModelParams) -> f64 {
    let k = params.k_sideband;
    let eta = params.eta;
    let phase = (params.delta_phi + k as f64 * std::f64::consts::FRAC_PI_2).cos();
    let ln_mag = k as f64 * eta.ln() - 0.5 * eta * eta - log_factorial_ratio(n, k);
    phase * ln_mag.exp() * laguerre_gen(n, k, eta * eta)
}

/// Sideband Rabi frequency `Ω_mn = 2κ√(m+1) f_k(n) √((n+k)!/n!)`.
pub fn rabi(m: usize, n: usize, params: &ModelParams) -> C64 {
    let k = params.k_sideband;
    let eta = params.eta;
    let phase = (params.delta_phi + k as f64 * std::f64::consts::FRAC_PI_2).cos();
    // f_k(n)·√((n+k)!/n!) combined so the factorial ratio only enters as a square root
    let ln_mag = k as f64 * eta.ln() - 0.5 * eta * eta - 0.5 * log_factorial_ratio(n, k);
    let real = 2.0 * ((m + 1) as f64).sqrt() * phase * ln_mag.exp() * laguerre_gen(n, k, eta * eta);
    params.kappa() * real
}

/// Which eigenbranch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Dressed-state data for the pair `|2,m,n⟩`, `|1,m+1,n+k⟩`.
///
/// The eigenvectors are `c^±(|2,m,n⟩ + α^±|1,m+1,n+k⟩)`. When the coupling
/// vanishes the eigenvectors are the bare states; the branch holding
/// `|1,m+1,n+k⟩` then has `c = 0` and an infinite `α`, so callers should use
/// [`EigenBranch::components`] instead of the raw fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenBranch {
    pub m: usize,
    pub n: usize,
    pub omega: C64,
    pub alpha_plus: C64,
    pub alpha_minus: C64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    /// `√(Δω² + |Ω|²)`, kept separately since `ω⁺ − ω⁻` loses digits to the
    /// large common offset.
    pub splitting: f64,
    pub degenerate: bool,
}

impl EigenBranch {
    /// Amplitudes of the branch eigenvector on (`|2,m,n⟩`, `|1,m+1,n+k⟩`).
    pub fn components(&self, s: Sign) -> (C64, C64) {
        let (c, a) = match s {
            Sign::Plus => (self.c_plus, self.alpha_plus),
            Sign::Minus => (self.c_minus, self.alpha_minus),
        };
        if c == 0.0 {
            (C64::new(0.0, 0.0), C64::new(1.0, 0.0))
        } else {
            (C64::new(c, 0.0), a * c)
        }
    }
}

/// Degeneracy threshold on |Ω| relative to the detuning.
pub const DEGENERACY_RTOL: f64 = 1e-12;

fn stable_alphas(dw: f64, r: f64, omega: C64) -> (C64, C64) {
    // one root by the literal formula, the other through α⁺α⁻ = −Ω*/Ω, avoiding Δω − R cancellation
    if dw >= 0.0 {
        let plus = C64::new(dw + r, 0.0) / omega;
        let minus = -omega.conj() / (dw + r);
        (plus, minus)
    } else {
        let minus = C64::new(dw - r, 0.0) / omega;
        let plus = omega.conj() / (r - dw);
        (plus, minus)
    }
}

/// Eigen-quantities for the `(m, n)` pair, including the uncoupled limit.
pub fn eigen_branch(m: usize, n: usize, params: &ModelParams) -> EigenBranch {
    let omega = rabi(m, n, params);
    let dw = params.delta_omega;
    let r = (dw * dw + omega.norm_sqr()).sqrt();
    let k = params.k_sideband as f64;
    let mf = m as f64;
    let mean = 0.5 * (dw * (2.0 * mf + 1.0) + params.nu * (2.0 * n as f64 - 2.0 * k * mf) + params.omega21 * (2.0 * mf + 2.0));
    let omega_plus = mean + 0.5 * r;
    let omega_minus = mean - 0.5 * r;
    let degenerate = omega.norm() < DEGENERACY_RTOL * dw.abs().max(1.0);
    if degenerate {
        // |2,m,n⟩ sits at mean − Δω/2: the lower branch for Δω ≥ 0
        let zero = C64::new(0.0, 0.0);
        let inf = C64::new(f64::INFINITY, 0.0);
        let (alpha_plus, c_plus, alpha_minus, c_minus) =
            if dw >= 0.0 { (inf, 0.0, zero, 1.0) } else { (zero, 1.0, inf, 0.0) };
        return EigenBranch { m, n, omega, alpha_plus, alpha_minus, c_plus, c_minus, omega_plus, omega_minus, splitting: r, degenerate };
    }
    let (alpha_plus, alpha_minus) = stable_alphas(dw, r, omega);
    let c_of = |a: C64| 1.0 / (1.0 + a.norm_sqr()).sqrt();
    EigenBranch {
        m,
        n,
        omega,
        alpha_plus,
        alpha_minus,
        c_plus: c_of(alpha_plus),
        c_minus: c_of(alpha_minus),
        omega_plus,
        omega_minus,
        splitting: r,
        degenerate,
    }
}
