use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{displacement_block, MotionalDensityMatrix, Truncation};
use crate::linalg;

/// Electronic level index: 0 is |1⟩, 1 is |2⟩.
pub const LEVEL_1: usize = 0;
pub const LEVEL_2: usize = 1;

/// Vibronic density operator as a 2×2 array of motional blocks
/// `ρ_ij = ⟨i|ρ|j⟩`. Conditioned states may carry total trace below one.
#[derive(Clone, Debug, PartialEq)]
pub struct VibronicState {
    blocks: [[Array2<C64>; 2]; 2],
}

impl VibronicState {
    pub fn from_blocks(blocks: [[Array2<C64>; 2]; 2]) -> Result<Self> {
        let d = blocks[0][0].nrows();
        for row in &blocks {
            for b in row {
                if b.dim() != (d, d) {
                    return Err(Error::InvalidParameter(format!("vibronic blocks must all be {d}x{d}, got {:?}", b.dim())));
                }
            }
        }
        let s = Self { blocks };
        s.validate()?;
        Ok(s)
    }

    /// Unchecked constructor for blocks produced by the probe algebra.
    pub(crate) fn from_parts(blocks: [[Array2<C64>; 2]; 2]) -> Self {
        Self { blocks }
    }

    /// `|2⟩⟨2| ⊗ ρ`.
    pub fn excited(rho: &MotionalDensityMatrix) -> Self {
        let d = rho.dim();
        let z = Array2::zeros((d, d));
        Self { blocks: [[z.clone(), z.clone()], [z, rho.matrix().clone()]] }
    }

    /// `|ψ_e⟩⟨ψ_e| ⊗ ρ` for the electronic superposition `c1|1⟩ + c2|2⟩`.
    pub fn product(c1: C64, c2: C64, rho: &MotionalDensityMatrix) -> Self {
        let amp = [c1, c2];
        let m = rho.matrix();
        let blocks = [
            [m * (amp[0] * amp[0].conj()), m * (amp[0] * amp[1].conj())],
            [m * (amp[1] * amp[0].conj()), m * (amp[1] * amp[1].conj())],
        ];
        Self { blocks }
    }

    pub fn dim(&self) -> usize {
        self.blocks[0][0].nrows()
    }

    /// Block `ρ_ij`, with `i, j ∈ {LEVEL_1, LEVEL_2}`.
    pub fn block(&self, i: usize, j: usize) -> &Array2<C64> {
        &self.blocks[i][j]
    }

    pub fn blocks(&self) -> &[[Array2<C64>; 2]; 2] {
        &self.blocks
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.blocks[0][0]).re + linalg::trace(&self.blocks[1][1]).re
    }

    /// Motional state with the electronic index traced out.
    pub fn motional(&self) -> Array2<C64> {
        &self.blocks[0][0] + &self.blocks[1][1]
    }

    /// Hermitian diagonal blocks, `ρ_12 = ρ_21†` and trace in `(0, 1 + 1e−12]`.
    pub fn validate(&self) -> Result<()> {
        let scale = self.blocks.iter().flatten().flat_map(|b| b.iter()).fold(0.0f64, |s, z| s.max(z.norm())).max(1.0);
        let tol = 1e-10 * scale;
        for i in 0..2 {
            let h = linalg::hermiticity_defect(&self.blocks[i][i]);
            if h > tol {
                return Err(Error::InvalidParameter(format!("diagonal block {i}{i} is not Hermitian (defect {h:e})")));
            }
        }
        let off = &self.blocks[0][1] - &linalg::dagger(&self.blocks[1][0]);
        let defect = off.iter().fold(0.0f64, |s, z| s.max(z.norm()));
        if defect > tol {
            return Err(Error::InvalidParameter(format!("off-diagonal blocks are not adjoint (defect {defect:e})")));
        }
        let tr = self.trace();
        if !(tr > 0.0 && tr <= 1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("vibronic trace {tr} outside (0, 1]")));
        }
        Ok(())
    }

    /// True when the off-diagonal electronic blocks vanish to `tol`.
    pub fn is_electronically_diagonal(&self, tol: f64) -> bool {
        self.blocks[1][0].iter().all(|z| z.norm() <= tol)
    }

    pub(crate) fn map_blocks<F: Fn(usize, usize, &Array2<C64>) -> Array2<C64>>(&self, f: F) -> Self {
        Self {
            blocks: [
                [f(0, 0, &self.blocks[0][0]), f(0, 1, &self.blocks[0][1])],
                [f(1, 0, &self.blocks[1][0]), f(1, 1, &self.blocks[1][1])],
            ],
        }
    }
}

/// `D†(α) ρ D(α)` applied to the motional factor of every block. The
/// displacement elements are exact within the retained basis, so the only
/// error is the weight pushed beyond `n_max`, which must stay below the
/// truncation tolerance.
pub fn displace_vibronic(state: &VibronicState, alpha: C64, trunc: &Truncation) -> Result<VibronicState> {
    let d = state.dim();
    if d != trunc.dim() {
        return Err(Error::InvalidParameter(format!("state dimension {d} does not match truncation dimension {}", trunc.dim())));
    }
    if alpha.norm_sqr() > trunc.n_max() as f64 / 4.0 {
        return Err(Error::Truncation(format!(
            "|alpha|^2 = {} exceeds n_max/4 = {}",
            alpha.norm_sqr(),
            trunc.n_max() as f64 / 4.0
        )));
    }
    let g = displacement_block(-alpha, d, d);
    let gh = linalg::dagger(&g);
    let out = state.map_blocks(|_, _, b| g.dot(b).dot(&gh));
    let lost = state.trace() - out.trace();
    if lost.abs() > trunc.tail_tol() {
        return Err(Error::Truncation(format!("displacement by {alpha} moves weight {lost:e} beyond n_max = {}", trunc.n_max())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample_state(t: &Truncation) -> VibronicState {
        let rho = MotionalDensityMatrix::coherent(c(0.7, -0.4), t).unwrap();
        VibronicState::product(c(0.6, 0.0), c(0.0, 0.8), &rho)
    }

    #[test]
    fn zero_displacement_is_identity() {
        let t = Truncation::new(30, 1e-10).unwrap();
        let s = sample_state(&t);
        let d = displace_vibronic(&s, c(0.0, 0.0), &t).unwrap();
        assert_eq!(d, s);
    }

    #[test]
    fn displacement_round_trip() {
        let t = Truncation::new(40, 1e-10).unwrap();
        let s = sample_state(&t);
        let a = c(1.1, 0.9);
        let back = displace_vibronic(&displace_vibronic(&s, a, &t).unwrap(), -a, &t).unwrap();
        for (x, y) in back.blocks().iter().flatten().zip(s.blocks().iter().flatten()) {
            let diff = (x - y).iter().fold(0.0f64, |m, z| m.max(z.norm()));
            assert!(diff < 1e-8, "{diff:e}");
        }
        back.validate().unwrap();
    }

    #[test]
    fn displaced_vacuum_population() {
        let t = Truncation::new(30, 1e-10).unwrap();
        let s = VibronicState::excited(&MotionalDensityMatrix::vacuum(&t));
        let a = c(0.8, -1.3);
        let d = displace_vibronic(&s, a, &t).unwrap();
        // ⟨0|D(−α)|0⟩ overlap squared
        let expected = (-a.norm_sqr()).exp();
        assert!((d.block(LEVEL_2, LEVEL_2)[[0, 0]].re - expected).abs() < 1e-14);
    }

    #[test]
    fn rejects_large_displacement() {
        let t = Truncation::new(16, 1e-10).unwrap();
        let s = sample_state(&t);
        assert!(matches!(displace_vibronic(&s, c(2.5, 0.0), &t), Err(Error::Truncation(_))));
    }

    #[test]
    fn validation_catches_broken_blocks() {
        let t = Truncation::new(12, 1e-10).unwrap();
        let s = sample_state(&t);
        let mut blocks = s.blocks().clone();
        blocks[0][1][[0, 1]] += c(0.1, 0.0);
        assert!(VibronicState::from_blocks(blocks).is_err());
        let z = Array2::zeros((5, 5));
        assert!(VibronicState::from_blocks([[z.clone(), z.clone()], [z.clone(), z]]).is_err());
    }
}
