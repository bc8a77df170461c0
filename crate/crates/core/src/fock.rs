//! Truncated Fock-space numerics: special functions, state constructors,
//! operator matrices and moment extraction.
//!
//! Factorials never appear in raw form; every factorial ratio is carried as a
//! sum of logarithms so that cavity photon numbers around 10⁴ stay finite.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;

/// Motional Fock cutoff together with the admissible probability weight
/// beyond it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    n_max: usize,
    tail_tol: f64,
}

impl Truncation {
    pub fn new(n_max: usize, tail_tol: f64) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter(format!("n_max must be >= 1, got {n_max}")));
        }
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(Error::InvalidParameter(format!("tail_tol must lie in (0, 1), got {tail_tol}")));
        }
        Ok(Self { n_max, tail_tol })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// Basis dimension `n_max + 1`.
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Self { n_max: 64, tail_tol: 1e-10 }
    }
}

/// `ln((n+k)!/n!) = Σ_{j=1..k} ln(n+j)`.
pub fn log_factorial_ratio(n: usize, k: usize) -> f64 {
    (1..=k).map(|j| ((n + j) as f64).ln()).sum()
}

/// Table of `ln n!` for `n = 0..len`.
pub fn log_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut acc = 0.0;
    for n in 0..len {
        if n > 0 {
            acc += (n as f64).ln();
        }
        out.push(acc);
    }
    out
}

/// Generalized Laguerre polynomial `L_n^{(k)}(x)` by the three-term
/// recurrence in `n`.
pub fn laguerre_gen(n: usize, k: usize, x: f64) -> f64 {
    let kf = k as f64;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + kf - x;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + kf - x) * cur - (jf + kf) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `L_j^{(k)}(x)` for `j = 0..len`.
pub fn laguerre_sequence(len: usize, k: usize, x: f64) -> Vec<f64> {
    let kf = k as f64;
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    out.push(1.0);
    if len == 1 {
        return out;
    }
    out.push(1.0 + kf - x);
    for j in 1..len - 1 {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + kf - x) * out[j] - (jf + kf) * out[j - 1]) / (jf + 1.0);
        out.push(next);
    }
    out
}

/// Poisson probability mass `P(n > from)` for the given mean, summed
/// directly from the tail so that tiny tails keep full relative precision.
pub fn poisson_tail_above(mean: f64, from: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let ln_mean = mean.ln();
    let mut n = from + 1;
    let mut ln_fact = log_factorial_ratio(0, n);
    let mut sum = 0.0;
    loop {
        let term = (n as f64 * ln_mean - mean - ln_fact).exp();
        sum += term;
        // past the mode the terms fall off geometrically
        if (n as f64) > mean && term <= sum * 1e-18 {
            break;
        }
        if term == 0.0 && (n as f64) > mean {
            break;
        }
        n += 1;
        ln_fact += (n as f64).ln();
    }
    sum
}

/// Pure-state amplitudes `⟨n|ψ⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector(Array1<C64>);

impl FockVector {
    pub fn new(amplitudes: Array1<C64>) -> Self {
        Self(amplitudes)
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Truncated coherent state `|α⟩`, amplitudes `e^{−|α|²/2} αⁿ/√(n!)`.
pub fn coherent_vector(alpha: C64, trunc: &Truncation) -> Result<FockVector> {
    let dim = trunc.dim();
    let mean = alpha.norm_sqr();
    let tail = poisson_tail_above(mean, trunc.n_max());
    if tail > trunc.tail_tol() {
        return Err(Error::Truncation(format!(
            "coherent amplitude |alpha|^2 = {mean} leaves weight {tail:e} beyond n_max = {}",
            trunc.n_max()
        )));
    }
    let mut amps = Array1::zeros(dim);
    if mean == 0.0 {
        amps[0] = C64::new(1.0, 0.0);
        return Ok(FockVector(amps));
    }
    let ln_r = alpha.norm().ln();
    let phase = alpha.arg();
    let mut ln_fact = 0.0;
    for n in 0..dim {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let nf = n as f64;
        let mag = (-0.5 * mean + nf * ln_r - 0.5 * ln_fact).exp();
        amps[n] = C64::from_polar(mag, nf * phase);
    }
    Ok(FockVector(amps))
}

/// Truncated annihilation operator.
pub fn annihilation(dim: usize) -> Array2<C64> {
    let mut a = Array2::zeros((dim, dim));
    for n in 1..dim {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Number operator `diag(0, 1, …, dim−1)`.
pub fn number_operator(dim: usize) -> Array2<C64> {
    Array2::from_diag(&Array1::from_iter((0..dim).map(|n| C64::new(n as f64, 0.0))))
}

/// Density matrix of the motional mode in the number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionalDensityMatrix(Array2<C64>);

impl MotionalDensityMatrix {
    /// Wraps a square matrix; the physical invariants are checked separately
    /// by [`MotionalDensityMatrix::validate`].
    pub fn from_matrix(m: Array2<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidParameter(format!("density matrix must be square and non-empty, got {:?}", m.dim())));
        }
        Ok(Self(m))
    }

    pub fn from_pure(psi: &FockVector) -> Self {
        let v = psi.amplitudes();
        let d = v.len();
        Self(Array2::from_shape_fn((d, d), |(i, j)| v[i] * v[j].conj()))
    }

    pub fn coherent(alpha: C64, trunc: &Truncation) -> Result<Self> {
        Ok(Self::from_pure(&coherent_vector(alpha, trunc)?))
    }

    pub fn vacuum(trunc: &Truncation) -> Self {
        Self::number_state(0, trunc).expect("vacuum always fits")
    }

    pub fn number_state(n: usize, trunc: &Truncation) -> Result<Self> {
        if n > trunc.n_max() {
            return Err(Error::Truncation(format!("number state |{n}> exceeds n_max = {}", trunc.n_max())));
        }
        let mut m = Array2::zeros((trunc.dim(), trunc.dim()));
        m[[n, n]] = C64::new(1.0, 0.0);
        Ok(Self(m))
    }

    /// Thermal (Bose-Einstein) state with mean occupation `nbar`.
    pub fn thermal(nbar: f64, trunc: &Truncation) -> Result<Self> {
        if nbar < 0.0 {
            return Err(Error::InvalidParameter(format!("thermal occupation must be >= 0, got {nbar}")));
        }
        let q = nbar / (1.0 + nbar);
        let tail = q.powi(trunc.dim() as i32);
        if tail > trunc.tail_tol() {
            return Err(Error::Truncation(format!("thermal state nbar = {nbar} leaves weight {tail:e} beyond cutoff")));
        }
        let d = trunc.dim();
        let mut m = Array2::zeros((d, d));
        for n in 0..d {
            m[[n, n]] = C64::new((1.0 - q) * q.powi(n as i32), 0.0);
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.0
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.0)
    }

    pub fn populations(&self) -> Vec<f64> {
        self.0.diag().iter().map(|z| z.re).collect()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (vals, _) = linalg::hermitian_eigh(&linalg::hermitian_part(&self.0));
        vals[0]
    }

    /// Checks Hermiticity (1e−12), unit trace within `tail_tol` and
    /// positivity down to −1e−9.
    pub fn validate(&self, tail_tol: f64) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > 1e-12 {
            return Err(Error::Domain(format!("density matrix not Hermitian (defect {herm:e})")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tail_tol || tr.im.abs() > 1e-12 {
            return Err(Error::Truncation(format!("trace {tr} deviates from 1 by more than {tail_tol:e}")));
        }
        let lmin = self.min_eigenvalue();
        if lmin < -1e-9 {
            return Err(Error::Domain(format!("density matrix has negative eigenvalue {lmin:e}")));
        }
        Ok(())
    }

    /// Largest index whose population exceeds `floor` (0 if none).
    pub fn support_edge(&self, floor: f64) -> usize {
        let pops = self.populations();
        pops.iter().rposition(|&p| p > floor).unwrap_or(0)
    }

    /// Copy embedded into a larger basis (zero padding) or cropped.
    pub fn resized(&self, dim: usize) -> Self {
        let d = self.dim().min(dim);
        let mut m = Array2::zeros((dim, dim));
        m.slice_mut(ndarray::s![..d, ..d]).assign(&self.0.slice(ndarray::s![..d, ..d]));
        Self(m)
    }
}

/// `⟨m|D(α)|n⟩` for `m ∈ rows`, `n ∈ cols`, from the closed form
/// `√(n!/m!) α^{m−n} e^{−|α|²/2} L_n^{(m−n)}(|α|²)` (and its mirror for
/// `m < n`). These are the exact matrix elements of the infinite-dimensional
/// operator restricted to the block, so nothing leaks at the block edge.
pub fn displacement_block(alpha: C64, rows: usize, cols: usize) -> Array2<C64> {
    let mut out = Array2::zeros((rows, cols));
    let x = alpha.norm_sqr();
    if x == 0.0 {
        for i in 0..rows.min(cols) {
            out[[i, i]] = C64::new(1.0, 0.0);
        }
        return out;
    }
    let lf = log_factorials(rows.max(cols));
    let ln_r = alpha.norm().ln();
    let up = alpha / alpha.norm();
    let down = -alpha.conj() / alpha.norm();
    let short = rows.min(cols);
    for k in 0..rows.max(cols) {
        // lower part: m = n + k, degree n
        let lower_len = if k < rows { cols.min(rows - k) } else { 0 };
        // upper part: n = m + k, degree m (k = 0 is the diagonal, done above)
        let upper_len = if k > 0 && k < cols { rows.min(cols - k) } else { 0 };
        let len = lower_len.max(upper_len).min(short);
        if len == 0 {
            continue;
        }
        let lag = laguerre_sequence(len, k, x);
        let kf = k as f64;
        let ph_up = up.powu(k as u32);
        let ph_down = down.powu(k as u32);
        for (j, &l) in lag.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            let ln_mag = 0.5 * (lf[j] - lf[j + k]) + kf * ln_r - 0.5 * x + l.abs().ln();
            let mag = ln_mag.exp() * l.signum();
            if j < lower_len {
                out[[j + k, j]] = ph_up * mag;
            }
            if j < upper_len {
                out[[j, j + k]] = ph_down * mag;
            }
        }
    }
    out
}

/// Diagonal `⟨n|D†(α) X D(α)|n⟩` of a displaced motional block `X` (any
/// block of a vibronic state, not necessarily Hermitian), computed from the
/// closed-form displacement elements on an output basis large enough to hold
/// the displaced support: `(√n_sup + |α| + 5)²` levels. Fails if the trace
/// is not conserved to `1e−10` or the last returned element exceeds `1e−12`.
pub fn displaced_diagonal(block: &Array2<C64>, alpha: C64) -> Result<Vec<C64>> {
    let d = block.nrows();
    let peak = block.iter().fold(0.0f64, |s, z| s.max(z.norm()));
    if peak == 0.0 {
        return Ok(vec![C64::new(0.0, 0.0); 1]);
    }
    let mut n_sup = 0;
    for i in 0..d {
        let row = block.row(i).iter().chain(block.column(i).iter()).fold(0.0f64, |s, z| s.max(z.norm()));
        if row > 1e-15 * peak {
            n_sup = i;
        }
    }
    let r = (n_sup as f64).sqrt() + alpha.norm();
    let n_out = (r * r + 10.0 * r + 25.0).ceil() as usize;
    let core = block.slice(ndarray::s![..=n_sup, ..=n_sup]);
    let g = displacement_block(-alpha, n_out, n_sup + 1);
    let t = g.dot(&core);
    let diag: Vec<C64> = (0..n_out).map(|n| t.row(n).iter().zip(g.row(n).iter()).map(|(x, y)| x * y.conj()).sum()).collect();
    let before = linalg::trace(block);
    let after: C64 = diag.iter().sum();
    if (before - after).norm() > 1e-10 || diag[n_out - 1].norm() > 1e-12 {
        return Err(Error::Truncation(format!(
            "displaced diagonal at alpha = {alpha} leaks beyond {n_out} levels (trace change {:e})",
            (before - after).norm()
        )));
    }
    Ok(diag)
}

/// Truncated displacement `exp(α a† − α* a)` of the truncated generator,
/// exponentiated through a Hermitian eigendecomposition. The result is
/// unitary to rounding; its low-index block agrees with the exact operator.
pub fn displacement_matrix(alpha: C64, trunc: &Truncation) -> Result<Array2<C64>> {
    if alpha.norm_sqr() > trunc.n_max() as f64 / 4.0 {
        return Err(Error::Truncation(format!(
            "|alpha|^2 = {} exceeds n_max/4 = {}",
            alpha.norm_sqr(),
            trunc.n_max() as f64 / 4.0
        )));
    }
    Ok(displacement_unitary(alpha, trunc.dim()))
}

pub(crate) fn displacement_unitary(alpha: C64, dim: usize) -> Array2<C64> {
    if alpha.norm_sqr() == 0.0 {
        return Array2::eye(dim).mapv(|v: f64| C64::new(v, 0.0));
    }
    let a = annihilation(dim);
    let ad = linalg::dagger(&a);
    // D = exp(−iH) with H = i(α a† − α* a) Hermitian
    let i = C64::new(0.0, 1.0);
    let h = (&ad * alpha - &a * alpha.conj()) * i;
    let (vals, vecs) = linalg::hermitian_eigh(&h);
    let phases = Array1::from_iter(vals.iter().map(|&l| C64::from_polar(1.0, -l)));
    let scaled = &vecs * &phases.view().insert_axis(ndarray::Axis(0));
    scaled.dot(&linalg::dagger(&vecs))
}

/// The five motional moments entering the nonclassicality criteria.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSet {
    /// ⟨â⟩
    pub mean_a: C64,
    /// ⟨â²⟩
    pub mean_a2: C64,
    /// ⟨n̂⟩
    pub mean_n: f64,
    /// ⟨n̂â⟩ = ⟨â†ââ⟩
    pub mean_na: C64,
    /// ⟨n̂²⟩
    pub mean_n2: f64,
}

impl MomentSet {
    /// Analytic moments of the coherent state `|α⟩`.
    pub fn coherent(alpha: C64) -> Self {
        let n = alpha.norm_sqr();
        Self { mean_a: alpha, mean_a2: alpha * alpha, mean_n: n, mean_na: alpha * n, mean_n2: n * n + n }
    }

    /// Normal-ordered number variance `⟨n̂²⟩ − ⟨n̂⟩ − ⟨n̂⟩²`.
    pub fn normal_number_variance(&self) -> f64 {
        self.mean_n2 - self.mean_n - self.mean_n * self.mean_n
    }
}

/// Moments as traces of `ρ` against the normally ordered operators, by
/// direct index sums over the relevant sub-diagonals.
pub fn moments_from_rho(rho: &MotionalDensityMatrix) -> MomentSet {
    let m = rho.matrix();
    let d = rho.dim();
    let zero = C64::new(0.0, 0.0);
    let mut mean_a = zero;
    let mut mean_a2 = zero;
    let mut mean_na = zero;
    let mut mean_n = 0.0;
    let mut mean_n2 = 0.0;
    for n in 0..d {
        let nf = n as f64;
        let p = m[[n, n]].re;
        mean_n += nf * p;
        mean_n2 += nf * nf * p;
        if n + 1 < d {
            let s = (nf + 1.0).sqrt();
            mean_a += m[[n + 1, n]] * s;
            mean_na += m[[n + 1, n]] * (s * nf);
        }
        if n + 2 < d {
            mean_a2 += m[[n + 2, n]] * ((nf + 1.0) * (nf + 2.0)).sqrt();
        }
    }
    MomentSet { mean_a, mean_a2, mean_n, mean_na, mean_n2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Direct coefficient sum Σ_i (−1)^i C(n+k, n−i) x^i / i! in exact
    /// integer arithmetic for rational `x = p/q`: multiplying through by
    /// `n!·qⁿ` leaves Σ_i (−1)^i C(n+k, n−i) (n!/i!) p^i q^{n−i}.
    fn laguerre_direct(n: usize, k: usize, p: u64, q: u64) -> f64 {
        use num_bigint::BigInt;
        let big = |v: u64| BigInt::from(v);
        let binom = |a: u64, b: u64| -> BigInt {
            let mut r = BigInt::from(1);
            for j in 0..b {
                r = r * big(a - j) / big(j + 1);
            }
            r
        };
        let falling = |from: u64, to: u64| -> BigInt { (to + 1..=from).fold(BigInt::from(1), |acc, j| acc * big(j)) };
        let mut num = BigInt::from(0);
        for i in 0..=n as u64 {
            let term = binom((n + k) as u64, n as u64 - i) * falling(n as u64, i) * big(p).pow(i as u32) * big(q).pow((n as u64 - i) as u32);
            if i % 2 == 0 {
                num += term;
            } else {
                num -= term;
            }
        }
        let den = falling(n as u64, 0) * big(q).pow(n as u32);
        // exact ratio rounded once: scale the numerator so the integer quotient carries 64 bits
        let shift = 64u32;
        let scaled = (num << shift) / den;
        let (sign, digits) = scaled.to_u64_digits();
        let mut mag = 0.0;
        for d in digits.iter().rev() {
            mag = mag * 18446744073709551616.0 + *d as f64;
        }
        let v = mag / 2f64.powi(shift as i32);
        if sign == num_bigint::Sign::Minus {
            -v
        } else {
            v
        }
    }

    #[test]
    fn laguerre_known_values() {
        for k in 0..4 {
            for &x in &[0.0, 0.5, 3.0] {
                assert_eq!(laguerre_gen(0, k, x), 1.0);
            }
        }
        assert!((laguerre_gen(1, 0, 0.09) - 0.91).abs() < 1e-15);
        assert!((laguerre_gen(2, 0, 0.09) - 0.82405).abs() < 1e-15);
    }

    #[test]
    fn laguerre_matches_direct_summation() {
        for n in 0..=30 {
            for k in 0..=4 {
                for &(p, q) in &[(1, 100), (9, 100), (1, 2), (1, 1), (5, 2), (4, 1)] {
                    let x = p as f64 / q as f64;
                    let a = laguerre_gen(n, k, x);
                    let b = laguerre_direct(n, k, p, q);
                    assert!((a - b).abs() <= 1e-10 * b.abs() + 1e-13, "n={n} k={k} x={x}: {a} vs {b}");
                }
            }
        }
        let seq = laguerre_sequence(12, 3, 1.7);
        for (n, v) in seq.iter().enumerate() {
            assert_eq!(*v, laguerre_gen(n, 3, 1.7));
        }
    }

    #[test]
    fn log_factorial_ratio_values() {
        assert_eq!(log_factorial_ratio(17, 0), 0.0);
        assert!((log_factorial_ratio(0, 2) - 2f64.ln()).abs() < 1e-15);
        assert!((log_factorial_ratio(3, 2) - 20f64.ln()).abs() < 1e-15);
        assert!((log_factorial_ratio(3, 2) - 2.995732).abs() < 1e-6);
        assert!(log_factorial_ratio(1_000_000, 3).is_finite());
    }

    #[test]
    fn coherent_vector_cases() {
        let t = Truncation::default();
        let vac = coherent_vector(c(0.0, 0.0), &t).unwrap();
        assert_eq!(vac.amplitudes()[0], c(1.0, 0.0));
        assert!(vac.amplitudes().iter().skip(1).all(|z| *z == c(0.0, 0.0)));

        let v = coherent_vector(c(8f64.sqrt(), 0.0), &t).unwrap();
        let argmax = v
            .amplitudes()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        // |α|² = 8 is an integer, so c_7 and c_8 tie exactly; the maximum is at 8 (or 7 by rounding)
        assert!(argmax == 8 || argmax == 7);
        assert!((v.amplitudes()[8].norm() - v.amplitudes()[7].norm()).abs() < 1e-15);
        assert!((1.0 - v.norm_sqr()).abs() < t.tail_tol());

        let small = Truncation::new(5, 1e-10).unwrap();
        assert!(matches!(coherent_vector(c(8f64.sqrt(), 0.0), &small), Err(Error::Truncation(_))));
    }

    #[test]
    fn displacement_examples() {
        let t = Truncation::default();
        let id = displacement_matrix(c(0.0, 0.0), &t).unwrap();
        for i in 0..t.dim() {
            for j in 0..t.dim() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[[i, j]] - c(e, 0.0)).norm() < 1e-15);
            }
        }
        let alpha = c(1.2, -0.7);
        let d = displacement_matrix(alpha, &t).unwrap();
        let coh = coherent_vector(alpha, &t).unwrap();
        for n in 0..t.dim() / 2 {
            assert!((d[[n, 0]] - coh.amplitudes()[n]).norm() < 1e-10);
        }
        for &a in &[c(2.0, 0.0), c(0.0, -2.0), c(1.3, 1.4)] {
            let p = displacement_matrix(a, &t).unwrap().dot(&displacement_matrix(-a, &t).unwrap());
            for i in 0..t.dim() / 2 {
                for j in 0..t.dim() / 2 {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((p[[i, j]] - c(e, 0.0)).norm() < 1e-8);
                }
            }
        }
        assert!(matches!(displacement_matrix(c(4.1, 0.0), &t), Err(Error::Truncation(_))));
    }

    #[test]
    fn displacement_unitarity_defect_lives_in_last_quarter() {
        let t = Truncation::default();
        let d = displacement_matrix(c(2.0, 1.0), &t).unwrap();
        let dd = linalg::dagger(&d).dot(&d);
        let q = 3 * t.dim() / 4;
        for i in 0..q {
            for j in 0..q {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((dd[[i, j]] - c(e, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn truncated_exponential_agrees_with_closed_form_on_low_block() {
        let t = Truncation::default();
        let alpha = c(-1.1, 0.9);
        let d = displacement_matrix(alpha, &t).unwrap();
        let exact = displacement_block(alpha, t.dim(), t.dim());
        for i in 0..20 {
            for j in 0..20 {
                assert!((d[[i, j]] - exact[[i, j]]).norm() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn closed_form_block_is_unitary_where_supported() {
        // columns up to 10 displaced by |α| = 3 stay far below 200
        let alpha = c(2.1, -2.1);
        let d = displacement_block(alpha, 200, 11);
        let g = linalg::dagger(&d).dot(&d);
        for i in 0..11 {
            for j in 0..11 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[[i, j]] - c(e, 0.0)).norm() < 1e-12, "({i},{j}) {}", g[[i, j]]);
            }
        }
        // mirror relation D(α)† = D(−α)
        let sq = displacement_block(alpha, 30, 30);
        let neg = displacement_block(-alpha, 30, 30);
        for i in 0..30 {
            for j in 0..30 {
                assert!((sq[[j, i]].conj() - neg[[i, j]]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn displaced_diagonal_of_vacuum_is_poissonian() {
        let t = Truncation::default();
        let vac = MotionalDensityMatrix::vacuum(&t);
        let alpha = c(1.1, 0.6);
        let diag = displaced_diagonal(vac.matrix(), alpha).unwrap();
        let x = alpha.norm_sqr();
        assert!((diag[0].re - (-x).exp()).abs() < 1e-14);
        let mut p = (-x).exp();
        for (n, z) in diag.iter().enumerate().skip(1) {
            p *= x / n as f64;
            assert!((z.re - p).abs() < 1e-14 && z.im.abs() < 1e-14);
        }
    }

    #[test]
    fn displaced_diagonal_matches_unitary_conjugation() {
        let t = Truncation::new(90, 1e-10).unwrap();
        let rho = MotionalDensityMatrix::coherent(c(1.0, -1.5), &t).unwrap();
        let alpha = c(-0.7, 0.4);
        let d = displacement_matrix(alpha, &t).unwrap();
        let full = linalg::dagger(&d).dot(rho.matrix()).dot(&d);
        let diag = displaced_diagonal(rho.matrix(), alpha).unwrap();
        for n in 0..30 {
            assert!((full[[n, n]] - diag[n]).norm() < 1e-12);
        }
        // D†(α)|β⟩ = |β − α⟩ up to phase
        let shifted = coherent_vector(c(1.7, -1.9), &Truncation::new(60, 1e-10).unwrap()).unwrap();
        for n in 0..40 {
            assert!((diag[n].re - shifted.amplitudes()[n].norm_sqr()).abs() < 1e-13);
        }
    }

    /// Moments from explicit operator products followed by a trace.
    fn moments_by_operators(rho: &MotionalDensityMatrix) -> MomentSet {
        let d = rho.dim();
        let a = annihilation(d);
        let ad = linalg::dagger(&a);
        let n = number_operator(d);
        let r = rho.matrix();
        let tr = |op: &Array2<C64>| linalg::trace(&r.dot(op));
        MomentSet {
            mean_a: tr(&a),
            mean_a2: tr(&a.dot(&a)),
            mean_n: tr(&n).re,
            mean_na: tr(&ad.dot(&a).dot(&a)),
            mean_n2: tr(&n.dot(&n)).re,
        }
    }

    #[test]
    fn moments_known_states() {
        let t = Truncation::default();
        let vac = moments_from_rho(&MotionalDensityMatrix::vacuum(&t));
        assert_eq!(vac.mean_n, 0.0);
        assert_eq!(vac.mean_a, c(0.0, 0.0));
        assert_eq!(vac.mean_n2, 0.0);

        let one = moments_from_rho(&MotionalDensityMatrix::number_state(1, &t).unwrap());
        assert_eq!(one.mean_a, c(0.0, 0.0));
        assert_eq!(one.mean_n, 1.0);
        assert_eq!(one.mean_n2, 1.0);

        let alpha = c(1.5, -0.8);
        let m = moments_from_rho(&MotionalDensityMatrix::coherent(alpha, &t).unwrap());
        let e = MomentSet::coherent(alpha);
        assert!((m.mean_a - e.mean_a).norm() < 1e-10);
        assert!((m.mean_a2 - e.mean_a2).norm() < 1e-10);
        assert!((m.mean_n - e.mean_n).abs() < 1e-10);
        assert!((m.mean_na - e.mean_na).norm() < 1e-10);
        assert!((m.mean_n2 - e.mean_n2).abs() < 1e-9);
    }

    #[test]
    fn thermal_state_trace_and_support() {
        let t = Truncation::default();
        let th = MotionalDensityMatrix::thermal(1.5, &t).unwrap();
        th.validate(t.tail_tol()).unwrap();
        assert!(MotionalDensityMatrix::thermal(40.0, &t).is_err());
    }

    proptest! {
        #[test]
        fn moments_index_sums_match_operator_traces(re in -2.0..2.0f64, im in -2.0..2.0f64, nbar in 0.0..1.5f64, mix in 0.0..1.0f64) {
            let t = Truncation::default();
            let coh = MotionalDensityMatrix::coherent(c(re, im), &t).unwrap();
            let th = MotionalDensityMatrix::thermal(nbar, &t).unwrap();
            let rho = MotionalDensityMatrix::from_matrix(coh.matrix() * mix + th.matrix() * (1.0 - mix)).unwrap();
            let a = moments_from_rho(&rho);
            let b = moments_by_operators(&rho);
            prop_assert!((a.mean_a - b.mean_a).norm() < 1e-12);
            prop_assert!((a.mean_a2 - b.mean_a2).norm() < 1e-12);
            prop_assert!((a.mean_n - b.mean_n).abs() < 1e-12);
            prop_assert!((a.mean_na - b.mean_na).norm() < 1e-12);
            prop_assert!((a.mean_n2 - b.mean_n2).abs() < 1e-11);
        }

        #[test]
        fn coherent_norm_within_tail_tol(re in -3.0..3.0f64, im in -3.0..3.0f64) {
            let t = Truncation::default();
            let v = coherent_vector(c(re, im), &t).unwrap();
            prop_assert!((1.0 - v.norm_sqr()).abs() < t.tail_tol());
        }
    }
}
