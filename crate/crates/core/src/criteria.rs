//! Squeezing, sub-Poisson and anomalous-correlation criteria.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;

use crate::dynamics::{ModelParams, Propagator};
use crate::error::{Error, Result};
use crate::fock::{moments_from_rho, MomentSet, Truncation};

/// Number of uniform samples on `[0, 2π)` before refinement.
pub const PHASE_GRID: usize = 720;
/// Width of the golden-section bracket at termination.
pub const PHASE_TOL: f64 = 1e-8;

/// Normally ordered quadrature variance
/// `2Re{e^{2iφ}⟨a²⟩} − 4[Re{e^{iφ}⟨a⟩}]² + 2⟨n⟩`.
pub fn squeezing_functional(m: &MomentSet, phi: f64) -> f64 {
    let e1 = C64::from_polar(1.0, phi);
    let e2 = C64::from_polar(1.0, 2.0 * phi);
    let x = (e1 * m.mean_a).re;
    2.0 * (e2 * m.mean_a2).re - 4.0 * x * x + 2.0 * m.mean_n
}

/// Normally ordered quadrature-number covariance
/// `2Re{e^{iφ}⟨n a⟩} − 2Re{e^{iφ}⟨a⟩}⟨n⟩`.
pub fn anomalous_cross(m: &MomentSet, phi: f64) -> f64 {
    let e1 = C64::from_polar(1.0, phi);
    2.0 * (e1 * m.mean_na).re - 2.0 * (e1 * m.mean_a).re * m.mean_n
}

/// `V_n·S(φ) − X(φ)²` with the normal-ordered number variance `V_n`.
pub fn anomalous_functional(m: &MomentSet, phi: f64) -> f64 {
    let x = anomalous_cross(m, phi);
    m.normal_number_variance() * squeezing_functional(m, phi) - x * x
}

/// Mandel Q parameter `(⟨n²⟩ − ⟨n⟩²)/⟨n⟩ − 1`.
pub fn mandel_q(m: &MomentSet) -> Result<f64> {
    if m.mean_n < 1e-14 {
        return Err(Error::UndefinedForVacuum(m.mean_n));
    }
    Ok((m.mean_n2 - m.mean_n * m.mean_n) / m.mean_n - 1.0)
}

/// Global minimum of a smooth 2π-periodic function: a uniform grid picks the
/// basin, golden-section search refines it. Near-ties on the grid resolve to
/// the smallest phase, and refinement only replaces the grid point when it
/// improves on it by more than the tie tolerance.
pub fn minimize_phase<F: Fn(f64) -> f64>(f: F) -> (f64, f64) {
    let step = TAU / PHASE_GRID as f64;
    let vals: Vec<f64> = (0..PHASE_GRID).map(|i| f(i as f64 * step)).collect();
    let lowest = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = vals.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let tie = 1e-12 * (1.0 + scale);
    let best = vals.iter().position(|&v| v <= lowest + tie).unwrap_or(0);
    let grid_phi = best as f64 * step;
    let grid_val = vals[best];

    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (grid_phi - step, grid_phi + step);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > PHASE_TOL {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    if fx < grid_val - tie {
        (fx, x.rem_euclid(TAU))
    } else {
        (grid_val, grid_phi)
    }
}

/// `C_Sq`: minimum of the squeezing functional and its optimizing phase.
pub fn c_sq(m: &MomentSet) -> (f64, f64) {
    minimize_phase(|phi| squeezing_functional(m, phi))
}

/// `C_AC`: minimum of the anomalous-correlation functional and its phase.
pub fn c_ac(m: &MomentSet) -> (f64, f64) {
    minimize_phase(|phi| anomalous_functional(m, phi))
}

/// Criteria at one time point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriteriaResult {
    pub t: f64,
    pub c_sq: f64,
    pub phi_sq: f64,
    /// Mandel Q; `None` when the state is the vacuum.
    pub c_sp: Option<f64>,
    pub c_ac: f64,
    pub phi_ac: f64,
    pub moments: MomentSet,
}

impl CriteriaResult {
    pub fn from_moments(t: f64, moments: MomentSet) -> Self {
        let (c_sq, phi_sq) = c_sq(&moments);
        let (c_ac, phi_ac) = c_ac(&moments);
        Self { t, c_sq, phi_sq, c_sp: mandel_q(&moments).ok(), c_ac, phi_ac, moments }
    }
}

/// Criteria along a nondecreasing time grid.
pub fn criteria_scan(params: &ModelParams, t_grid: &[f64], trunc: &Truncation) -> Result<Vec<CriteriaResult>> {
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("time grid must be nondecreasing".into()));
    }
    let prop = Propagator::new(params, trunc)?;
    t_grid
        .iter()
        .map(|&t| {
            let rho = prop.rho_at(t)?;
            Ok(CriteriaResult::from_moments(t, moments_from_rho(&rho)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::MotionalDensityMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn number_one() -> MomentSet {
        MomentSet { mean_a: c(0.0, 0.0), mean_a2: c(0.0, 0.0), mean_n: 1.0, mean_na: c(0.0, 0.0), mean_n2: 1.0 }
    }

    fn squeezed_vacuum(r: f64) -> MomentSet {
        let (s, ch) = (r.sinh(), r.cosh());
        // ⟨n²⟩ of squeezed vacuum: 3 sinh⁴ r + 2 sinh² r
        MomentSet { mean_a: c(0.0, 0.0), mean_a2: c(-s * ch, 0.0), mean_n: s * s, mean_na: c(0.0, 0.0), mean_n2: 3.0 * s.powi(4) + 2.0 * s * s }
    }

    #[test]
    fn squeezing_functional_values() {
        for &phi in &[0.0, 0.3, 1.7, 4.0] {
            let coh = MomentSet::coherent(c(1.3, -0.4));
            assert!(squeezing_functional(&coh, phi).abs() < 1e-12);
            assert_eq!(squeezing_functional(&MomentSet::coherent(c(0.0, 0.0)), phi), 0.0);
            assert!((squeezing_functional(&number_one(), phi) - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn squeezed_vacuum_minimum() {
        let (v, phi) = c_sq(&squeezed_vacuum(0.5));
        assert!((v - ((-1.0f64).exp() - 1.0)).abs() < 1e-12);
        assert!((v + 0.632121).abs() < 1e-6);
        assert!(phi.abs() < 1e-7 || (phi - std::f64::consts::PI).abs() < 1e-7);
    }

    #[test]
    fn coherent_state_ties_to_zero_phase() {
        let (v, phi) = c_sq(&MomentSet::coherent(c(2.0, 0.5)));
        assert!(v.abs() < 1e-12);
        assert_eq!(phi, 0.0);
        let (v, phi) = c_ac(&MomentSet::coherent(c(2.0, 0.5)));
        assert!(v.abs() < 1e-10);
        assert_eq!(phi, 0.0);
    }

    #[test]
    fn mandel_q_values() {
        assert!(mandel_q(&MomentSet::coherent(c(1.5, 0.2))).unwrap().abs() < 1e-14);
        assert_eq!(mandel_q(&number_one()).unwrap(), -1.0);
        let nbar = 1.7;
        let th = MomentSet { mean_a: c(0.0, 0.0), mean_a2: c(0.0, 0.0), mean_n: nbar, mean_na: c(0.0, 0.0), mean_n2: 2.0 * nbar * nbar + nbar };
        assert!((mandel_q(&th).unwrap() - nbar).abs() < 1e-14);
        assert!(matches!(mandel_q(&MomentSet::coherent(c(0.0, 0.0))), Err(Error::UndefinedForVacuum(_))));
    }

    #[test]
    fn cross_term_values() {
        for &phi in &[0.0, 1.0, 2.5] {
            assert!(anomalous_cross(&MomentSet::coherent(c(0.7, 1.1)), phi).abs() < 1e-14);
            assert_eq!(anomalous_cross(&number_one(), phi), 0.0);
        }
        let m = MomentSet { mean_na: c(1.0, 0.0), ..number_one() };
        assert_eq!(anomalous_cross(&m, 0.0), 2.0);
    }

    #[test]
    fn number_state_anomalous_value() {
        let (v, phi) = c_ac(&number_one());
        assert!((v + 2.0).abs() < 1e-14);
        assert_eq!(phi, 0.0);
    }

    /// Closed-form minimum of the squeezing functional:
    /// 2(⟨n⟩ − |⟨a⟩|²) − 2|⟨a²⟩ − ⟨a⟩²|.
    fn sq_closed_form(m: &MomentSet) -> f64 {
        2.0 * (m.mean_n - m.mean_a.norm_sqr()) - 2.0 * (m.mean_a2 - m.mean_a * m.mean_a).norm()
    }

    fn moments_of_random_state(seed: u64) -> MomentSet {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = 8;
        let g = ndarray::Array2::from_shape_fn((d, d), |_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let rho = g.dot(&crate::linalg::dagger(&g));
        let tr = crate::linalg::trace(&rho);
        moments_from_rho(&MotionalDensityMatrix::from_matrix(rho / tr).unwrap())
    }

    #[test]
    fn squeezing_minimum_matches_closed_form() {
        for seed in 0..50 {
            let m = moments_of_random_state(seed);
            let (v, _) = c_sq(&m);
            assert!((v - sq_closed_form(&m)).abs() < 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn optimizer_dominates_random_probes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for seed in 0..10 {
            let m = moments_of_random_state(100 + seed);
            let (sq, phi_sq) = c_sq(&m);
            let (ac, _) = c_ac(&m);
            for _ in 0..10_000 {
                let phi = rng.gen_range(0.0..TAU);
                assert!(sq <= squeezing_functional(&m, phi) + 1e-10);
                assert!(ac <= anomalous_functional(&m, phi) + 1e-10);
            }
            assert!(ac <= anomalous_functional(&m, phi_sq) + 1e-12);
        }
    }

    #[test]
    fn classical_states_pass_null_test() {
        let t = Truncation::default();
        let states = [
            MotionalDensityMatrix::coherent(c(1.5, -0.9), &t).unwrap(),
            MotionalDensityMatrix::thermal(0.8, &t).unwrap(),
            MotionalDensityMatrix::thermal(1.5, &t).unwrap(),
        ];
        for s in &states {
            let r = CriteriaResult::from_moments(0.0, moments_from_rho(s));
            assert!(r.c_sq >= -1e-10);
            assert!(r.c_sp.unwrap() >= -1e-10);
            assert!(r.c_ac >= -1e-10);
        }
    }

    #[test]
    fn scan_at_time_zero_is_classical() {
        let r = criteria_scan(&ModelParams::default(), &[0.0], &Truncation::default()).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].c_sq.abs() < 1e-9);
        assert!(r[0].c_sp.unwrap().abs() < 1e-9);
        assert!(r[0].c_ac.abs() < 1e-9);
        assert!(criteria_scan(&ModelParams::default(), &[0.2, 0.1], &Truncation::default()).is_err());
    }

    proptest! {
        #[test]
        fn squeezing_functional_is_pi_periodic(re in -3.0..3.0f64, im in -3.0..3.0f64, a2r in -5.0..5.0f64, a2i in -5.0..5.0f64, n in 0.0..10.0f64, phi in 0.0..TAU) {
            let m = MomentSet { mean_a: c(re, im), mean_a2: c(a2r, a2i), mean_n: n, mean_na: c(0.0, 0.0), mean_n2: n * n };
            let a = squeezing_functional(&m, phi);
            let b = squeezing_functional(&m, phi + std::f64::consts::PI);
            prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn minima_never_exceed_probes(seed in 0u64..1000, phi in 0.0..TAU) {
            let m = moments_of_random_state(seed);
            prop_assert!(c_sq(&m).0 <= squeezing_functional(&m, phi) + 1e-10);
            prop_assert!(c_ac(&m).0 <= anomalous_functional(&m, phi) + 1e-10);
        }
    }
}
