use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::fock::{annihilation, coherent_vector, log_factorial_ratio, number_operator, MotionalDensityMatrix, Truncation};
use crate::linalg;

/// Brute-force propagation on the truncated product space
/// electronic ⊗ cavity ⊗ motion, used to validate the analytic solution.
///
/// Basis index of `|i, m, n⟩` is `(i·C + m)·N + n` with `i = 0` for level 1
/// and `i = 1` for level 2.
#[derive(Clone, Debug)]
pub struct Oracle {
    cavity_dim: usize,
    motional_dim: usize,
    hamiltonian: Array2<C64>,
    eigvals: Vec<f64>,
    eigvecs: Array2<C64>,
    /// initial state in the eigenbasis
    psi0_eig: Array1<C64>,
}

/// Mode-function operator from its normally ordered series
/// `½ e^{iΔφ−η²/2} Σ_l (iη)^{2l+k}/(l!(l+k)!) a†^l a^l + h.c.`
fn mode_function_operator(params: &ModelParams, dim: usize) -> Array2<C64> {
    let a = annihilation(dim);
    let ad = linalg::dagger(&a);
    let k = params.k_sideband;
    let i = C64::new(0.0, 1.0);
    let mut sum = Array2::<C64>::zeros((dim, dim));
    let mut ad_l_a_l = Array2::<C64>::eye(dim);
    for l in 0..dim {
        if l > 0 {
            ad_l_a_l = ad.dot(&ad_l_a_l).dot(&a);
        }
        let ln_den = log_factorial_ratio(0, l) + log_factorial_ratio(0, l + k);
        let coef = (i * params.eta).powu((2 * l + k) as u32) * (-ln_den).exp();
        sum = sum + &ad_l_a_l * coef;
    }
    let half = C64::from_polar(0.5 * (-0.5 * params.eta * params.eta).exp(), params.delta_phi);
    let f = sum * half;
    &f + &linalg::dagger(&f)
}

impl Oracle {
    pub fn new(params: &ModelParams, cavity_dim: usize, motional_dim: usize) -> Result<Self> {
        params.validate()?;
        let k = params.k_sideband;
        if cavity_dim < 2 || motional_dim <= k {
            return Err(Error::InvalidParameter(format!(
                "oracle dimensions too small: cavity {cavity_dim}, motional {motional_dim}, k = {k}"
            )));
        }
        let tol = 1e-10;
        let cav = coherent_vector(params.beta0, &Truncation::new(cavity_dim - 1, tol)?)?;
        // motional input occupies the levels that can still be shifted up by k
        let n_in = motional_dim - k;
        let mot: Array1<C64> = match &params.motional {
            super::params::MotionalInput::Coherent(a) => {
                let v = coherent_vector(*a, &Truncation::new(n_in - 1, tol)?)?;
                let mut full = Array1::zeros(motional_dim);
                full.slice_mut(ndarray::s![..n_in]).assign(v.amplitudes());
                full
            }
            super::params::MotionalInput::Matrix(_) => {
                return Err(Error::InvalidParameter("the oracle propagates pure motional inputs only".into()));
            }
        };

        let mut a21 = Array2::<C64>::zeros((2, 2));
        a21[[1, 0]] = C64::new(1.0, 0.0);
        let mut a22 = Array2::<C64>::zeros((2, 2));
        a22[[1, 1]] = C64::new(1.0, 0.0);
        let id_e = Array2::<C64>::eye(2);
        let id_c = Array2::<C64>::eye(cavity_dim);
        let id_m = Array2::<C64>::eye(motional_dim);
        let b = annihilation(cavity_dim);
        let a = annihilation(motional_dim);
        let mut a_k = Array2::<C64>::eye(motional_dim);
        for _ in 0..k {
            a_k = a_k.dot(&a);
        }
        let f = mode_function_operator(params, motional_dim);

        let h0 = linalg::kron(&id_e, &linalg::kron(&id_c, &number_operator(motional_dim))) * C64::new(params.nu, 0.0)
            + linalg::kron(&id_e, &linalg::kron(&number_operator(cavity_dim), &id_m)) * C64::new(params.omega_laser(), 0.0)
            + linalg::kron(&a22, &linalg::kron(&id_c, &id_m)) * C64::new(params.omega21, 0.0);
        let coupling = linalg::kron(&a21, &linalg::kron(&b, &f.dot(&a_k))) * params.kappa();
        let hamiltonian = &h0 + &coupling + &linalg::dagger(&coupling);

        let psi0 = linalg::kron_vec(&Array1::from(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]), &linalg::kron_vec(cav.amplitudes(), &mot));
        let (eigvals, eigvecs) = linalg::hermitian_eigh(&hamiltonian);
        let psi0_eig = linalg::dagger(&eigvecs).dot(&psi0);
        Ok(Self { cavity_dim, motional_dim, hamiltonian, eigvals, eigvecs, psi0_eig })
    }

    pub fn hamiltonian(&self) -> &Array2<C64> {
        &self.hamiltonian
    }

    /// Reduced motional state at time `t`, traced over level and cavity.
    pub fn rho_at(&self, t: f64) -> MotionalDensityMatrix {
        let phased = Array1::from_iter(self.psi0_eig.iter().zip(&self.eigvals).map(|(c, &l)| c * C64::from_polar(1.0, -l * t)));
        let psi = self.eigvecs.dot(&phased);
        let nm = self.motional_dim;
        let mut rho = Array2::<C64>::zeros((nm, nm));
        for block in 0..2 * self.cavity_dim {
            let seg = psi.slice(ndarray::s![block * nm..(block + 1) * nm]);
            for n in 0..nm {
                for np in 0..nm {
                    rho[[n, np]] += seg[n] * seg[np].conj();
                }
            }
        }
        MotionalDensityMatrix::from_matrix(rho).expect("square by construction")
    }
}

/// Reduced motional state at `t` from brute-force propagation with the given
/// cavity and motional dimensions.
pub fn oracle_evolve(t: f64, params: &ModelParams, cavity_dim: usize, motional_dim: usize) -> Result<MotionalDensityMatrix> {
    if params.beta0.norm() > 3.0 {
        return Err(Error::InvalidParameter(format!("oracle requires |beta0| <= 3, got {}", params.beta0.norm())));
    }
    Ok(Oracle::new(params, cavity_dim, motional_dim)?.rho_at(t))
}
