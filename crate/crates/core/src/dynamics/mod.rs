//! Analytic solution of the detuned nonlinear Jaynes-Cummings model and a
//! brute-force propagation oracle.

mod branch;
mod oracle;
mod params;
mod reduced;
mod window;

pub use branch::{eigen_branch, f_k_diag, rabi, EigenBranch, Sign, DEGENERACY_RTOL};
pub use oracle::{oracle_evolve, Oracle};
pub use params::{ModelParams, MotionalInput};
pub use reduced::{reduced_rho, Propagator};
pub use window::{cavity_window, covering_window, CavityWindow, DEFAULT_COVERAGE_SIGMAS, DEFAULT_MASS_TOL};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{MotionalDensityMatrix, Truncation};
    use crate::linalg;
    use num_complex::Complex64 as C64;
    use proptest::prelude::*;

    fn small(k: usize) -> ModelParams {
        ModelParams {
            eta: 0.3,
            k_sideband: k,
            delta_omega: 5.0,
            nu: 50.0,
            omega21: 200.0,
            beta0: C64::new(1.0, 0.0),
            motional: MotionalInput::Coherent(C64::new(1.0, 0.0)),
            ..ModelParams::default()
        }
    }

    fn max_diff(a: &MotionalDensityMatrix, b: &MotionalDensityMatrix) -> f64 {
        a.matrix().iter().zip(b.matrix().iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn time_zero_reproduces_input() {
        let t = Truncation::default();
        for k in 0..3 {
            let p = ModelParams { k_sideband: k, ..ModelParams::default() };
            let rho = reduced_rho(0.0, &p, &t).unwrap();
            let input = MotionalDensityMatrix::coherent(C64::new(8f64.sqrt(), 0.0), &t).unwrap();
            assert!(max_diff(&rho, &input) < 1e-10);
        }
    }

    #[test]
    fn carrier_diagonal_is_static() {
        let t = Truncation::default();
        let prop = Propagator::new(&ModelParams::default(), &t).unwrap();
        let p0 = prop.rho_at(0.0).unwrap().populations();
        for &time in &[0.05, 0.2, 0.43] {
            let p = prop.rho_at(time).unwrap().populations();
            for (a, b) in p.iter().zip(&p0) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn pump_frequency_offset_drops_out() {
        let t = Truncation::new(40, 1e-10).unwrap();
        for k in [0, 2] {
            let base = ModelParams { k_sideband: k, beta0: C64::new(4.0, 0.0), ..ModelParams::default() };
            let lo = reduced_rho(0.37, &ModelParams { omega21: 0.0, ..base.clone() }, &t).unwrap();
            let hi = reduced_rho(0.37, &ModelParams { omega21: 1e4, ..base }, &t).unwrap();
            assert!(max_diff(&lo, &hi) < 1e-12);
        }
    }

    #[test]
    fn shifted_block_must_fit() {
        let t = Truncation::new(12, 1e-10).unwrap();
        let p = ModelParams { k_sideband: 3, ..ModelParams::default() };
        assert!(matches!(reduced_rho(0.1, &p, &t), Err(crate::Error::Truncation(_))));
    }

    #[test]
    fn oracle_hamiltonian_is_hermitian() {
        let o = Oracle::new(&small(2), 16, 16).unwrap();
        assert!(linalg::hermiticity_defect(o.hamiltonian()) < 1e-12);
    }

    #[test]
    fn oracle_agrees_on_small_instance() {
        for k in [0, 1, 2] {
            let p = small(k);
            // same motional basis on both paths: levels that cannot be shifted up are unused
            let o = Oracle::new(&p, 14, 14 + k).unwrap();
            let prop = Propagator::new(&p, &Truncation::new(13 + k, 1e-10).unwrap()).unwrap();
            for &time in &[0.0, 0.3, 1.0] {
                let exact = o.rho_at(time);
                let analytic = prop.rho_at(time).unwrap().resized(exact.dim());
                let d = linalg::trace_distance(exact.matrix(), analytic.matrix());
                assert!(d < 1e-8, "k={k} t={time}: {d:e}");
            }
        }
    }

    #[test]
    fn oracle_rejects_large_pump_amplitude() {
        let p = ModelParams { beta0: C64::new(3.5, 0.0), ..small(0) };
        assert!(oracle_evolve(0.1, &p, 30, 10).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn evolution_preserves_state_properties(k in 0usize..3, dw in -20.0..20.0f64, dphi in 0.0..6.3f64, time in 0.0..2.0f64, b in 0.5..6.0f64) {
            let t = Truncation::new(40, 1e-10).unwrap();
            let p = ModelParams {
                k_sideband: k,
                delta_omega: dw,
                delta_phi: dphi,
                beta0: C64::new(b, 0.0),
                motional: MotionalInput::Coherent(C64::new(1.2, -0.5)),
                ..ModelParams::default()
            };
            let rho = reduced_rho(time, &p, &t).unwrap();
            prop_assert!((rho.trace().re - 1.0).abs() < 10.0 * t.tail_tol());
            prop_assert!(rho.hermiticity_defect() < 1e-12);
            prop_assert!(rho.min_eigenvalue() > -1e-9);
        }
    }
}
