use std::collections::HashMap;
use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::vibronic::VibronicState;
use crate::error::{Error, Result};
use crate::fock::{displaced_diagonal, MomentSet};
use crate::phasespace::PhaseGrid;

/// Largest |β| at which characteristic functions are taken from a sampled
/// Wigner matrix.
pub const WIGNER_CF_RADIUS: f64 = 3.0;

/// Displaced diagonal elements `ρ_ij^{nn}(α)` of all four blocks, each as
/// long as its displaced support requires.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacedDiagonals {
    pub alpha: C64,
    pub blocks: [[Vec<C64>; 2]; 2],
}

impl DisplacedDiagonals {
    pub fn compute(state: &VibronicState, alpha: C64) -> Result<Self> {
        let b = state.blocks();
        let diag = |i: usize, j: usize| displaced_diagonal(&b[i][j], alpha);
        let d10 = diag(1, 0)?;
        let d01 = d10.iter().map(|z| z.conj()).collect();
        Ok(Self { alpha, blocks: [[diag(0, 0)?, d01], [d10, diag(1, 1)?]] })
    }

    /// `(2/π) Σ_n (−1)^n ρ_ij^{nn}(α)` per block.
    pub fn wigner(&self) -> WignerMatrixSample {
        let mut values = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let s: C64 = self.blocks[i][j].iter().enumerate().map(|(n, z)| if n % 2 == 0 { *z } else { -*z }).sum();
                values[i][j] = s * (2.0 / PI);
            }
        }
        WignerMatrixSample { alpha: self.alpha, values }
    }
}

/// Wigner-function matrix `W_ij(α)` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WignerMatrixSample {
    pub alpha: C64,
    pub values: [[C64; 2]; 2],
}

impl WignerMatrixSample {
    pub fn traced(&self) -> f64 {
        self.values[0][0].re + self.values[1][1].re
    }
}

/// Wigner-function matrix of `state` at `alpha`. Fails if the displaced
/// diagonal of any block does not decay below `1e−12` within its basis.
pub fn wigner_matrix(state: &VibronicState, alpha: C64) -> Result<WignerMatrixSample> {
    Ok(DisplacedDiagonals::compute(state, alpha)?.wigner())
}

/// Wigner-function matrix sampled on a grid; `values[i][j][[row, col]]`
/// belongs to `grid.point(row, col)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerMatrixGrid {
    pub grid: PhaseGrid,
    pub values: [[Array2<C64>; 2]; 2],
}

impl WignerMatrixGrid {
    pub fn from_samples(grid: PhaseGrid, samples: &[WignerMatrixSample]) -> Result<Self> {
        let n = grid.n_side();
        if samples.len() != n * n {
            return Err(Error::InvalidParameter(format!("{} samples for a {n}x{n} grid", samples.len())));
        }
        let mut values: [[Array2<C64>; 2]; 2] = Default::default();
        for (i, row) in values.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = Array2::from_shape_fn((n, n), |(r, c)| samples[r * n + c].values[i][j]);
            }
        }
        Ok(Self { grid, values })
    }

    pub fn compute(state: &VibronicState, grid: &PhaseGrid) -> Result<Self> {
        let n = grid.n_side();
        let mut samples = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                samples.push(wigner_matrix(state, grid.point(r, c))?);
            }
        }
        Self::from_samples(*grid, &samples)
    }

    /// `W_11 + W_22`.
    pub fn traced(&self) -> Array2<f64> {
        (&self.values[0][0] + &self.values[1][1]).mapv(|z| z.re)
    }

    /// Normally ordered characteristic function of block `(i, j)`:
    /// `Φ_ij(β) = e^{|β|²/2} ∫ d²α W_ij(α) e^{βα* − β*α}` by the trapezoidal
    /// rule on the grid.
    pub fn cf(&self, i: usize, j: usize, beta: C64) -> Result<C64> {
        cf_of_map(&self.values[i][j], &self.grid, beta)
    }

    /// Characteristic function of the motional state, `Φ_11 + Φ_22`.
    pub fn traced_cf(&self, beta: C64) -> Result<C64> {
        Ok(self.cf(0, 0, beta)? + self.cf(1, 1, beta)?)
    }

    /// All four `Φ_ij` on the square β-grid given by `axis` (both axes),
    /// indexed `[iu, iv]` for `β = axis[iu] + i axis[iv]`. The Fourier sum
    /// separates into two matrix products.
    pub fn cf_matrix(&self, axis: &[f64]) -> Result<[[Array2<C64>; 2]; 2]> {
        if let Some(&u) = axis.iter().find(|u| u.abs() * std::f64::consts::SQRT_2 > WIGNER_CF_RADIUS) {
            return Err(Error::Domain(format!("beta-grid reaches |beta| = {} beyond {WIGNER_CF_RADIUS}", u.abs() * std::f64::consts::SQRT_2)));
        }
        let (xs, ys) = grid_coordinates(&self.grid);
        let h = self.grid.spacing();
        // e^{βα* − β*α} = e^{2i(v x − u y)}
        let eu = Array2::from_shape_fn((axis.len(), ys.len()), |(iu, r)| C64::from_polar(1.0, -2.0 * axis[iu] * ys[r]));
        let ev = Array2::from_shape_fn((xs.len(), axis.len()), |(c, iv)| C64::from_polar(1.0, 2.0 * axis[iv] * xs[c]));
        let gauss = Array2::from_shape_fn((axis.len(), axis.len()), |(iu, iv)| {
            C64::new(h * h * (0.5 * (axis[iu] * axis[iu] + axis[iv] * axis[iv])).exp(), 0.0)
        });
        let mut out: [[Array2<C64>; 2]; 2] = Default::default();
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = eu.dot(&self.values[i][j]).dot(&ev) * &gauss;
            }
        }
        Ok(out)
    }
}

fn grid_coordinates(grid: &PhaseGrid) -> (Vec<f64>, Vec<f64>) {
    let c = grid.center();
    let xs = grid.axis().iter().map(|d| c.re + d).collect();
    let ys = grid.axis().iter().map(|d| c.im + d).collect();
    (xs, ys)
}

fn cf_of_map(w: &Array2<C64>, grid: &PhaseGrid, beta: C64) -> Result<C64> {
    if beta.norm() > WIGNER_CF_RADIUS {
        return Err(Error::Domain(format!("|beta| = {} exceeds {WIGNER_CF_RADIUS}", beta.norm())));
    }
    let (xs, ys) = grid_coordinates(grid);
    let ex: Vec<C64> = xs.iter().map(|x| C64::from_polar(1.0, 2.0 * beta.im * x)).collect();
    let mut acc = C64::new(0.0, 0.0);
    for (r, y) in ys.iter().enumerate() {
        let row: C64 = w.row(r).iter().zip(&ex).map(|(a, b)| a * b).sum();
        acc += row * C64::from_polar(1.0, -2.0 * beta.re * y);
    }
    let h = grid.spacing();
    Ok(acc * h * h * (0.5 * beta.norm_sqr()).exp())
}

/// Finite-difference settings for moments taken from a characteristic
/// function at `β = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdOptions {
    pub h: f64,
    /// Combine steps `h` and `2h` to cancel the `O(h²)` error.
    pub richardson: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self { h: 0.02, richardson: true }
    }
}

impl FdOptions {
    pub fn validate(&self) -> Result<()> {
        if !(1e-4..=1e-1).contains(&self.h) {
            return Err(Error::InvalidParameter(format!("finite-difference step must lie in [1e-4, 0.1], got {}", self.h)));
        }
        Ok(())
    }
}

/// Central stencil for the `order`-th derivative, second-order accurate,
/// as (offset, weight) pairs in units of the step.
fn stencil(order: usize) -> &'static [(i32, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => unreachable!("derivatives above fourth order are not used"),
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Memoized evaluation of a characteristic function on the lattice `h·(a + ib)`.
struct Lattice<'a, F> {
    cf: &'a F,
    h: f64,
    cache: HashMap<(i32, i32), C64>,
}

impl<F: Fn(C64) -> Result<C64>> Lattice<'_, F> {
    fn at(&mut self, a: i32, b: i32) -> Result<C64> {
        if let Some(v) = self.cache.get(&(a, b)) {
            return Ok(*v);
        }
        let beta = C64::new(a as f64 * self.h, b as f64 * self.h);
        let v = (self.cf)(beta).map_err(|e| match e {
            Error::Domain(_) => Error::StencilOutOfDomain { re: beta.re, im: beta.im },
            other => other,
        })?;
        self.cache.insert((a, b), v);
        Ok(v)
    }

    /// `∂_u^p ∂_v^q Φ(0)` with the tensor stencil at lattice spacing `scale·h`.
    fn partial(&mut self, p: usize, q: usize, scale: i32) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for &(a, wa) in stencil(p) {
            for &(b, wb) in stencil(q) {
                acc += self.at(a * scale, b * scale)? * (wa * wb);
            }
        }
        let step = self.h * scale as f64;
        Ok(acc / step.powi((p + q) as i32))
    }

    /// `∂_β^j ∂_{β*}^l Φ(0)` with `∂_β = ½(∂_u − i∂_v)`, `∂_{β*} = ½(∂_u + i∂_v)`.
    fn wirtinger(&mut self, j: usize, l: usize, scale: i32) -> Result<C64> {
        let mi = C64::new(0.0, -1.0);
        let pi = C64::new(0.0, 1.0);
        let mut acc = C64::new(0.0, 0.0);
        for p in 0..=j {
            for q in 0..=l {
                let coef = mi.powu(p as u32) * pi.powu(q as u32) * (binomial(j, p) * binomial(l, q));
                acc += coef * self.partial(j + l - p - q, p + q, scale)?;
            }
        }
        Ok(acc * 0.5f64.powi((j + l) as i32))
    }
}

/// Normally ordered moment `⟨a†^j a^l⟩ = ∂_β^j (−∂_{β*})^l Φ(β)|_{β=0}` by
/// finite differences, with an error estimate from the step-doubling
/// difference.
pub fn normal_moment_fd<F>(cf: &F, j: usize, l: usize, opts: &FdOptions) -> Result<(C64, f64)>
where
    F: Fn(C64) -> Result<C64>,
{
    opts.validate()?;
    if j + l > 4 {
        return Err(Error::InvalidParameter(format!("moment order {} exceeds 4", j + l)));
    }
    let mut lat = Lattice { cf, h: opts.h, cache: HashMap::new() };
    moment_on(&mut lat, j, l, opts)
}

fn moment_on<F: Fn(C64) -> Result<C64>>(lat: &mut Lattice<'_, F>, j: usize, l: usize, opts: &FdOptions) -> Result<(C64, f64)> {
    let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
    let fine = lat.wirtinger(j, l, 1)? * sign;
    let coarse = lat.wirtinger(j, l, 2)? * sign;
    // the second-order error of `fine` is (fine − coarse)/3
    let est = (fine - coarse).norm() / 3.0;
    if opts.richardson {
        Ok(((fine * 4.0 - coarse) / 3.0, est))
    } else {
        Ok((fine, est))
    }
}

/// Estimated finite-difference errors of the entries of a [`MomentSet`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MomentErrors {
    pub mean_a: f64,
    pub mean_a2: f64,
    pub mean_n: f64,
    pub mean_na: f64,
    pub mean_n2: f64,
}

/// The five criteria moments from a characteristic function by finite
/// differences; `⟨n²⟩ = ⟨a†²a²⟩ + ⟨n⟩`.
pub fn moment_set_from_cf<F>(cf: &F, opts: &FdOptions) -> Result<(MomentSet, MomentErrors)>
where
    F: Fn(C64) -> Result<C64>,
{
    opts.validate()?;
    let mut lat = Lattice { cf, h: opts.h, cache: HashMap::new() };
    let (a, ea) = moment_on(&mut lat, 0, 1, opts)?;
    let (a2, ea2) = moment_on(&mut lat, 0, 2, opts)?;
    let (n, en) = moment_on(&mut lat, 1, 1, opts)?;
    let (na, ena) = moment_on(&mut lat, 1, 2, opts)?;
    let (aa, eaa) = moment_on(&mut lat, 2, 2, opts)?;
    let m = MomentSet { mean_a: a, mean_a2: a2, mean_n: n.re, mean_na: na, mean_n2: aa.re + n.re };
    let e = MomentErrors { mean_a: ea, mean_a2: ea2, mean_n: en, mean_na: ena, mean_n2: eaa + en };
    Ok((m, e))
}

/// Quadrature moments along `x(φ) = e^{iφ}a + e^{−iφ}a†`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureMoments {
    pub phi: f64,
    /// ⟨x(φ)⟩
    pub x: f64,
    /// ⟨n⟩
    pub n: f64,
    /// ⟨:x(φ) n:⟩ = 2 Re(e^{iφ} ⟨a†a²⟩)
    pub xn: f64,
    /// Finite-difference error estimates of `x`, `n`, `xn`.
    pub errors: [f64; 3],
}

impl QuadratureMoments {
    /// `⟨:Δx(φ) Δn:⟩ = ⟨:x n:⟩ − ⟨x⟩⟨n⟩`.
    pub fn cross_covariance(&self) -> f64 {
        self.xn - self.x * self.n
    }
}

/// `⟨x(φ)⟩`, `⟨n⟩` and `⟨:x(φ)n:⟩` from the characteristic function by
/// finite differences at the origin.
pub fn moments_from_cf<F>(cf: &F, phi: f64, opts: &FdOptions) -> Result<QuadratureMoments>
where
    F: Fn(C64) -> Result<C64>,
{
    opts.validate()?;
    let mut lat = Lattice { cf, h: opts.h, cache: HashMap::new() };
    let e = C64::from_polar(1.0, phi);
    let (a, ea) = moment_on(&mut lat, 0, 1, opts)?;
    let (n, en) = moment_on(&mut lat, 1, 1, opts)?;
    let (na, ena) = moment_on(&mut lat, 1, 2, opts)?;
    Ok(QuadratureMoments { phi, x: 2.0 * (e * a).re, n: n.re, xn: 2.0 * (e * na).re, errors: [2.0 * ea, en, 2.0 * ena] })
}
