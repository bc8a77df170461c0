use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::vibronic::VibronicState;
use super::wigner::{DisplacedDiagonals, WignerMatrixGrid};
use crate::error::{Error, Result};
use crate::phasespace::{fourier_to_grid, series_point, FilterSpec, Method, PhaseGrid, QuasiProbMap, WitnessKernel, BETA_STEPS_PER_WIDTH};

/// Regularized P-function matrix `P_ij,Ω` on a grid; `values[i][j][[row, col]]`
/// belongs to `grid.point(row, col)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PMatrixMaps {
    pub grid: PhaseGrid,
    pub width: f64,
    pub method: Method,
    pub values: [[Array2<C64>; 2]; 2],
    /// Grid points whose series tail bound exceeded `1e−10`.
    pub convergence_warnings: usize,
}

impl PMatrixMaps {
    /// `P_11 + P_22` as a motional map.
    pub fn traced(&self) -> QuasiProbMap {
        let values = (&self.values[0][0] + &self.values[1][1]).mapv(|z| z.re);
        QuasiProbMap { grid: self.grid, values, method: self.method, width: self.width }
    }

    /// Max of `|P_12 − P_21*|` and of the imaginary parts of the diagonal blocks.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (a, b) in self.values[0][1].iter().zip(self.values[1][0].iter()) {
            worst = worst.max((a - b.conj()).norm());
        }
        for i in 0..2 {
            worst = self.values[i][i].iter().fold(worst, |w, z| w.max(z.im.abs()));
        }
        worst
    }
}

/// P-matrix by the witness series, `P_ij,Ω(α) = Σ_n ρ_ij^{nn}(α) K_n`, from
/// displaced diagonals supplied for every grid point in row-major order.
pub fn p_matrix_series_from(grid: &PhaseGrid, width: f64, diagonals: &[DisplacedDiagonals]) -> Result<PMatrixMaps> {
    let n = grid.n_side();
    if diagonals.len() != n * n {
        return Err(Error::InvalidParameter(format!("{} diagonal sets for a {n}x{n} grid", diagonals.len())));
    }
    FilterSpec::disc(width)?;
    let mut kernel = WitnessKernel::new(width, 256);
    let mut values: [[Array2<C64>; 2]; 2] = Default::default();
    for row in values.iter_mut() {
        for v in row.iter_mut() {
            *v = Array2::zeros((n, n));
        }
    }
    let mut warnings = 0;
    for (idx, d) in diagonals.iter().enumerate() {
        let (r, c) = (idx / n, idx % n);
        for i in 0..2 {
            for j in 0..2 {
                let diag = &d.blocks[i][j];
                kernel.ensure(diag.len());
                values[i][j][[r, c]] = kernel.apply(diag);
            }
        }
        let traced: Vec<C64> = sum_padded(&d.blocks[0][0], &d.blocks[1][1]);
        let trace: f64 = traced.iter().map(|z| z.re).sum();
        if series_point(&kernel, &traced, trace).convergence_warning() {
            warnings += 1;
        }
    }
    Ok(PMatrixMaps { grid: *grid, width, method: Method::Series, values, convergence_warnings: warnings })
}

fn sum_padded(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len().max(b.len());
    (0..n).map(|i| a.get(i).copied().unwrap_or_default() + b.get(i).copied().unwrap_or_default()).collect()
}

/// P-matrix of a vibronic state by the witness series.
pub fn p_matrix_series(state: &VibronicState, grid: &PhaseGrid, width: f64) -> Result<PMatrixMaps> {
    let n = grid.n_side();
    let mut diags = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            diags.push(DisplacedDiagonals::compute(state, grid.point(r, c))?);
        }
    }
    p_matrix_series_from(grid, width, &diags)
}

/// P-matrix by Fourier quadrature of the filtered characteristic functions
/// `Φ_ij(β) Ω_w(β)`, with `Φ_ij` taken from the sampled Wigner matrix.
pub fn p_matrix_integral(wigner: &WignerMatrixGrid, grid: &PhaseGrid, filter: &FilterSpec) -> Result<PMatrixMaps> {
    let w = filter.width();
    let steps = BETA_STEPS_PER_WIDTH;
    let h = w / steps as f64;
    let axis: Vec<f64> = (0..=2 * steps).map(|i| -w + i as f64 * h).collect();
    let cf = wigner.cf_matrix(&axis)?;
    let omega = Array2::from_shape_fn((axis.len(), axis.len()), |(iu, iv)| C64::new(filter.value(C64::new(axis[iu], axis[iv])), 0.0));
    let mut values: [[Array2<C64>; 2]; 2] = Default::default();
    for (i, row) in values.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = fourier_to_grid(&axis, &(&cf[i][j] * &omega), grid);
        }
    }
    Ok(PMatrixMaps { grid: *grid, width: w, method: Method::Integral, values, convergence_warnings: 0 })
}
