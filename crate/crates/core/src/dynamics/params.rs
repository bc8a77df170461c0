use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{MotionalDensityMatrix, Truncation};

/// Initial motional state fed into the dynamics.
#[derive(Clone, Debug, PartialEq)]
pub enum MotionalInput {
    Coherent(C64),
    Matrix(MotionalDensityMatrix),
}

/// Physical parameters of the sideband Hamiltonian, frequencies in units
/// of |κ|. The laser frequency is derived as `ω21 − kν + Δω`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub eta: f64,
    pub delta_phi: f64,
    pub k_sideband: usize,
    pub delta_omega: f64,
    pub nu: f64,
    pub omega21: f64,
    pub kappa_phase: f64,
    pub beta0: C64,
    pub motional: MotionalInput,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            eta: 0.3,
            delta_phi: 0.0,
            k_sideband: 0,
            delta_omega: 20.0,
            nu: 5000.0,
            omega21: 1e5,
            kappa_phase: 0.0,
            beta0: C64::new(100.0, 0.0),
            motional: MotionalInput::Coherent(C64::new(8f64.sqrt(), 0.0)),
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta must be > 0, got {}", self.eta)));
        }
        if !(self.beta0.norm() > 0.0 && self.beta0.norm().is_finite()) {
            return Err(Error::InvalidParameter(format!("|beta0| must be > 0, got {}", self.beta0)));
        }
        for (name, v) in [
            ("delta_phi", self.delta_phi),
            ("delta_omega", self.delta_omega),
            ("nu", self.nu),
            ("omega21", self.omega21),
            ("kappa_phase", self.kappa_phase),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Laser frequency `ω_L = ω21 − kν + Δω`.
    pub fn omega_laser(&self) -> f64 {
        self.omega21 - self.k_sideband as f64 * self.nu + self.delta_omega
    }

    /// Coupling `κ = e^{i·kappa_phase}` (unit modulus by the choice of units).
    pub fn kappa(&self) -> C64 {
        C64::from_polar(1.0, self.kappa_phase)
    }

    /// Input motional density matrix on the given truncation.
    pub fn initial_rho(&self, trunc: &Truncation) -> Result<MotionalDensityMatrix> {
        match &self.motional {
            MotionalInput::Coherent(a) => MotionalDensityMatrix::coherent(*a, trunc),
            MotionalInput::Matrix(m) => {
                if m.dim() > trunc.dim() {
                    let lost: f64 = m.populations()[trunc.dim()..].iter().sum();
                    if lost > trunc.tail_tol() {
                        return Err(Error::Truncation(format!(
                            "input state carries weight {lost:e} beyond n_max = {}",
                            trunc.n_max()
                        )));
                    }
                }
                Ok(m.resized(trunc.dim()))
            }
        }
    }
}
