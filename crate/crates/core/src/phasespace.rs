//! Characteristic functions and regularized P functions.
//!
//! The regularized P function is the Fourier transform of the normally
//! ordered characteristic function `Φ(β) = ⟨:D(β):⟩` multiplied by the
//! autocorrelation `Ω_w` of a disc of radius `w/2`. Two routes are provided:
//! a series over displaced number moments evaluated pointwise, and a
//! trapezoidal Fourier quadrature for whole grids.

use std::f64::consts::{FRAC_PI_2, PI};

use gauss_quad::GaussLegendre;
use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{displaced_diagonal, displacement_block, MotionalDensityMatrix};

/// Largest |β| at which characteristic functions are evaluated.
pub const MAX_CF_RADIUS: f64 = 6.0;

/// Default filter width.
pub const DEFAULT_WIDTH: f64 = 1.5;

/// Normally ordered characteristic function `Tr(ρ D(β)) e^{|β|²/2}`.
pub fn normal_cf(rho: &MotionalDensityMatrix, beta: C64) -> Result<C64> {
    normal_cf_block(rho.matrix(), beta)
}

/// [`normal_cf`] for an arbitrary (possibly non-Hermitian) motional block.
pub fn normal_cf_block(block: &Array2<C64>, beta: C64) -> Result<C64> {
    if beta.norm() > MAX_CF_RADIUS {
        return Err(Error::Domain(format!("|beta| = {} exceeds {MAX_CF_RADIUS}", beta.norm())));
    }
    let d = block.nrows();
    let disp = displacement_block(beta, d, d);
    let mut acc = C64::new(0.0, 0.0);
    for n in 0..d {
        for m in 0..d {
            acc += block[[n, m]] * disp[[m, n]];
        }
    }
    Ok(acc * (0.5 * beta.norm_sqr()).exp())
}

/// Normalized autocorrelation of the indicator of a disc of radius `w/2`:
/// `(2/π)(arccos u − u√(1−u²))` for `u = |β|/w ≤ 1`, zero beyond.
pub fn disc_filter(beta: C64, w: f64) -> f64 {
    let u = beta.norm() / w;
    if u >= 1.0 {
        return 0.0;
    }
    (2.0 / PI) * (u.acos() - u * (1.0 - u * u).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterKind {
    DiscAutocorrelation,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterSpec {
    width: f64,
    kind: FilterKind,
}

impl FilterSpec {
    pub fn disc(width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidParameter(format!("filter width must be > 0, got {width}")));
        }
        Ok(Self { width, kind: FilterKind::DiscAutocorrelation })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn value(&self, beta: C64) -> f64 {
        match self.kind {
            FilterKind::DiscAutocorrelation => disc_filter(beta, self.width),
        }
    }
}

/// Square grid of phase-space points, `n_side` (odd) samples per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    center: C64,
    half_extent: f64,
    n_side: usize,
}

impl PhaseGrid {
    pub fn new(center: C64, half_extent: f64, n_side: usize) -> Result<Self> {
        if n_side % 2 == 0 {
            return Err(Error::InvalidParameter(format!("n_side must be odd, got {n_side}")));
        }
        if n_side > 1 && !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(Error::InvalidParameter(format!("half_extent must be > 0, got {half_extent}")));
        }
        Ok(Self { center, half_extent, n_side })
    }

    /// Grid with the given spacing, rounded up to an odd number of samples.
    pub fn with_spacing(center: C64, half_extent: f64, spacing: f64) -> Result<Self> {
        let half = (half_extent / spacing).round() as usize;
        Self::new(center, half as f64 * spacing, 2 * half + 1)
    }

    pub fn center(&self) -> C64 {
        self.center
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn n_side(&self) -> usize {
        self.n_side
    }

    pub fn spacing(&self) -> f64 {
        if self.n_side == 1 {
            0.0
        } else {
            2.0 * self.half_extent / (self.n_side - 1) as f64
        }
    }

    /// Offsets from the center along one axis.
    pub fn axis(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_side).map(|i| -self.half_extent + i as f64 * h).collect()
    }

    /// Point at row `j` (imaginary axis) and column `i` (real axis).
    pub fn point(&self, j: usize, i: usize) -> C64 {
        let h = self.spacing();
        self.center + C64::new(-self.half_extent + i as f64 * h, -self.half_extent + j as f64 * h)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Series,
    Integral,
}

/// Sampled regularized P function; `values[[j, i]]` belongs to
/// `grid.point(j, i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiProbMap {
    pub grid: PhaseGrid,
    pub values: Array2<f64>,
    pub method: Method,
    pub width: f64,
}

impl QuasiProbMap {
    /// Riemann sum `Σ values · spacing²`.
    pub fn integral(&self) -> f64 {
        let h = self.grid.spacing();
        self.values.sum() * h * h
    }

    /// Minimum value and the point where it occurs.
    pub fn min(&self) -> (f64, C64) {
        let mut best = (f64::INFINITY, self.grid.center());
        for ((j, i), &v) in self.values.indexed_iter() {
            if v < best.0 {
                best = (v, self.grid.point(j, i));
            }
        }
        best
    }
}

/// Coefficient of `⟨:n̂(α)^m:⟩` in the witness series,
/// `(w²/(4π)) (−w²/4)^m C(2m+2, m)/((m+1)!)²`.
fn series_coefficients(w: f64, len: usize) -> Vec<f64> {
    let w2 = w * w;
    let mut c = w2 / (4.0 * PI);
    let mut out = Vec::with_capacity(len);
    for m in 0..len {
        out.push(c);
        let mf = m as f64;
        // ratio C(2m+4, m+1)/C(2m+2, m) · (m+1)!²/(m+2)!²
        c *= -0.25 * w2 * (2.0 * mf + 4.0) * (2.0 * mf + 3.0) / ((mf + 1.0) * (mf + 3.0) * (mf + 2.0) * (mf + 2.0));
    }
    out
}

/// Number-state weights `K_n` with `P_Ω(α) = Σ_n ⟨n|ρ(α)|n⟩ K_n`, where
/// `K_n = Σ_{m≤n} c_m n!/(n−m)!` collects the witness series by level.
///
/// The alternating sum cancels by roughly `e^{2w√n}`. It is summed directly
/// while its rounding bound stays below `1e−15`; higher levels use the
/// equivalent radial integral
/// `K_n = (2w²/π²) ∫_0^{π/2} cosθ sinθ (2θ − sin2θ) L_n(w² cos²θ) dθ`
/// by Gauss-Legendre quadrature.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessKernel {
    width: f64,
    weights: Vec<f64>,
    /// Number of leading weights taken from the direct series.
    series_len: usize,
}

const KERNEL_NODES: usize = 1024;

impl WitnessKernel {
    pub fn new(width: f64, len: usize) -> Self {
        let coeffs = series_coefficients(width, len);
        let mut weights = Vec::with_capacity(len);
        for n in 0..len {
            match kernel_by_series(&coeffs, n) {
                Some(v) => weights.push(v),
                None => break,
            }
        }
        let series_len = weights.len();
        if series_len < len {
            let tail = kernel_by_quadrature(width, len);
            weights.extend_from_slice(&tail[series_len..]);
        }
        Self { width, weights, series_len }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    /// Extends the table to at least `len` entries.
    pub fn ensure(&mut self, len: usize) {
        if len > self.weights.len() {
            *self = Self::new(self.width, len.next_power_of_two());
        }
    }

    /// `Σ_n diag[n] K_n`.
    pub fn apply(&self, diag: &[C64]) -> C64 {
        diag.iter().zip(&self.weights).map(|(d, k)| d * *k).sum()
    }
}

/// `K_n` by the alternating series, or `None` if rounding could exceed 1e−15.
fn kernel_by_series(coeffs: &[f64], n: usize) -> Option<f64> {
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    let mut falling = 1.0;
    for (m, c) in coeffs.iter().enumerate().take(n + 1) {
        if m > 0 {
            falling *= (n - m + 1) as f64;
        }
        let term = c * falling;
        abs_sum += term.abs();
        sum += term;
    }
    if abs_sum * f64::EPSILON * (n as f64 + 1.0) > 1e-15 {
        return None;
    }
    Some(sum)
}

/// `K_n` for `n < len` by radial Gauss-Legendre quadrature.
pub fn kernel_by_quadrature(w: f64, len: usize) -> Vec<f64> {
    let rule = GaussLegendre::new(KERNEL_NODES).expect("positive degree");
    let mut out = vec![0.0; len];
    let scale = 2.0 * w * w / (PI * PI);
    for (node, weight) in rule.as_node_weight_pairs() {
        // map [−1, 1] to [0, π/2]
        let theta = FRAC_PI_2 * 0.5 * (node + 1.0);
        let jac = FRAC_PI_2 * 0.5;
        let (s, c) = theta.sin_cos();
        let g = weight * jac * scale * c * s * (2.0 * theta - (2.0 * theta).sin());
        let x = w * w * c * c;
        let (mut prev, mut cur) = (1.0, 1.0 - x);
        for (n, slot) in out.iter_mut().enumerate() {
            let l = match n {
                0 => 1.0,
                1 => cur,
                _ => {
                    let nf = (n - 1) as f64;
                    let next = ((2.0 * nf + 1.0 - x) * cur - nf * prev) / (nf + 1.0);
                    prev = cur;
                    cur = next;
                    next
                }
            };
            *slot += g * l;
        }
    }
    out
}

/// Pointwise witness-series value with its truncation diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesPoint {
    pub value: f64,
    /// Bound on the contribution of displaced levels beyond the computed
    /// range.
    pub tail_bound: f64,
}

impl SeriesPoint {
    /// Set when the neglected tail could exceed `1e−10`.
    pub fn convergence_warning(&self) -> bool {
        self.tail_bound > 1e-10
    }
}

/// Regularized P function at `alpha` from the witness series, with
/// displaced diagonals `⟨n|D†(α)ρD(α)|n⟩`.
pub fn p_omega_series(rho: &MotionalDensityMatrix, alpha: C64, w: f64) -> Result<SeriesPoint> {
    let diag = displaced_diagonal(rho.matrix(), alpha)?;
    let kernel = WitnessKernel::new(w, diag.len());
    Ok(series_point(&kernel, &diag, rho.trace().re))
}

pub(crate) fn series_point(kernel: &WitnessKernel, diag: &[C64], trace: f64) -> SeriesPoint {
    let value = kernel.apply(diag);
    let kmax = kernel.weights().iter().fold(0.0f64, |s, k| s.max(k.abs()));
    let captured: f64 = diag.iter().map(|d| d.re).sum();
    SeriesPoint { value: value.re, tail_bound: (trace - captured).abs() * kmax }
}

/// Witness-series map over a grid.
pub fn p_omega_series_map(rho: &MotionalDensityMatrix, grid: &PhaseGrid, w: f64) -> Result<QuasiProbMap> {
    let n = grid.n_side();
    let mut kernel = WitnessKernel::new(w, 256);
    let mut values = Array2::zeros((n, n));
    for j in 0..n {
        for i in 0..n {
            let diag = displaced_diagonal(rho.matrix(), grid.point(j, i))?;
            kernel.ensure(diag.len());
            values[[j, i]] = kernel.apply(&diag).re;
        }
    }
    Ok(QuasiProbMap { grid: *grid, values, method: Method::Series, width: w })
}

/// Samples per unit filter width of the β-quadrature grid.
pub const BETA_STEPS_PER_WIDTH: usize = 64;

/// Filtered characteristic function sampled on the square β-grid
/// `[−w, w]²` with spacing `w/64`; samples outside the filter support are 0.
pub fn filtered_cf_samples<F>(filter: &FilterSpec, cf: F) -> Result<(Vec<f64>, Array2<C64>)>
where
    F: Fn(C64) -> Result<C64>,
{
    let w = filter.width();
    if w > MAX_CF_RADIUS {
        return Err(Error::Domain(format!("filter support radius {w} exceeds the characteristic-function domain {MAX_CF_RADIUS}")));
    }
    let steps = BETA_STEPS_PER_WIDTH;
    let h = w / steps as f64;
    let axis: Vec<f64> = (0..=2 * steps).map(|i| -w + i as f64 * h).collect();
    let mut f = Array2::<C64>::zeros((axis.len(), axis.len()));
    for (iu, &u) in axis.iter().enumerate() {
        for (iv, &v) in axis.iter().enumerate() {
            let beta = C64::new(u, v);
            let om = filter.value(beta);
            if om > 0.0 {
                f[[iu, iv]] = cf(beta)? * om;
            }
        }
    }
    Ok((axis, f))
}

/// `(1/π²) Σ h² F(β) e^{αβ* − α*β}` for every grid point, as two matrix
/// products since `αβ* − α*β = 2i(yu − xv)` separates in `β = u + iv`,
/// `α = x + iy`. Returns the complex map indexed `[j (imag), i (real)]`.
pub fn fourier_to_grid(axis: &[f64], f: &Array2<C64>, grid: &PhaseGrid) -> Array2<C64> {
    let h = if axis.len() > 1 { axis[1] - axis[0] } else { 1.0 };
    let xs: Vec<f64> = grid.axis().iter().map(|d| grid.center().re + d).collect();
    let ys: Vec<f64> = grid.axis().iter().map(|d| grid.center().im + d).collect();
    let ey = Array2::from_shape_fn((ys.len(), axis.len()), |(j, iu)| C64::from_polar(1.0, 2.0 * ys[j] * axis[iu]));
    let ex_t = Array2::from_shape_fn((axis.len(), xs.len()), |(iv, i)| C64::from_polar(1.0, -2.0 * xs[i] * axis[iv]));
    ey.dot(f).dot(&ex_t) * C64::new(h * h / (PI * PI), 0.0)
}

/// Regularized P function on a grid by quadrature of the filtered
/// characteristic function.
pub fn p_omega_integral(rho: &MotionalDensityMatrix, grid: &PhaseGrid, filter: &FilterSpec) -> Result<QuasiProbMap> {
    let (axis, f) = filtered_cf_samples(filter, |b| normal_cf(rho, b))?;
    let complex = fourier_to_grid(&axis, &f, grid);
    let residue = complex.iter().fold(0.0f64, |s, z| s.max(z.im.abs()));
    if residue > 1e-8 {
        return Err(Error::Domain(format!("P map has imaginary residue {residue:e}; the input is not Hermitian")));
    }
    Ok(QuasiProbMap { grid: *grid, values: complex.mapv(|z| z.re), method: Method::Integral, width: filter.width() })
}
