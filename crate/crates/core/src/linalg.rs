//! Small dense-matrix helpers shared across modules. Storage is `ndarray`;
//! Hermitian eigendecompositions and SVDs go through `faer`.

use faer::complex_native::c64;
use faer::{Mat, Side};
use ndarray::Array2;
use num_complex::Complex64 as C64;

fn to_faer(m: &Array2<C64>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[[i, j]];
        c64::new(z.re, z.im)
    })
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
/// Only the lower triangle is read.
pub fn hermitian_eigh(m: &Array2<C64>) -> (Vec<f64>, Array2<C64>) {
    let eig = to_faer(m).selfadjoint_eigendecomposition(Side::Lower);
    let s = eig.s().column_vector();
    let u = eig.u();
    let n = m.nrows();
    let vals = (0..n).map(|i| s.read(i).re).collect();
    let vecs = Array2::from_shape_fn((n, n), |(r, c)| {
        let z = u.read(r, c);
        C64::new(z.re, z.im)
    });
    (vals, vecs)
}

/// Symmetrized copy `(m + m†)/2`.
pub fn hermitian_part(m: &Array2<C64>) -> Array2<C64> {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[[i, j]] = 0.5 * (m[[i, j]] + m[[j, i]].conj());
        }
    }
    out
}

/// Max elementwise `|m − m†|`.
pub fn hermiticity_defect(m: &Array2<C64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub fn trace(m: &Array2<C64>) -> C64 {
    m.diag().iter().sum()
}

/// Trace distance `½‖a − b‖₁` for Hermitian arguments of equal shape.
pub fn trace_distance(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    let diff = hermitian_part(&(a - b));
    let (vals, _) = hermitian_eigh(&diff);
    0.5 * vals.iter().map(|v| v.abs()).sum::<f64>()
}

/// Kronecker product.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let s = a[[i, j]];
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = s * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Kronecker product of vectors.
pub fn kron_vec(a: &ndarray::Array1<C64>, b: &ndarray::Array1<C64>) -> ndarray::Array1<C64> {
    ndarray::Array1::from_iter(a.iter().flat_map(|x| b.iter().map(move |y| x * y)))
}

/// Singular values of a real matrix, descending.
pub fn singular_values(m: &Array2<f64>) -> Vec<f64> {
    let f = Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]]);
    let mut sv = f.singular_values();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Least-squares solution of `a x = b` through the thin SVD, together with
/// the 2-norm condition number `σ_max/σ_min` of `a`.
pub fn lstsq(a: &Array2<f64>, b: &ndarray::Array1<f64>) -> (ndarray::Array1<f64>, f64) {
    let (r, c) = a.dim();
    let f = Mat::<f64>::from_fn(r, c, |i, j| a[[i, j]]);
    let svd = f.thin_svd();
    let (u, s, v) = (svd.u(), svd.s_diagonal(), svd.v());
    let k = s.nrows();
    let smax = (0..k).map(|i| s.read(i)).fold(0.0, f64::max);
    let smin = (0..k).map(|i| s.read(i)).fold(f64::INFINITY, f64::min);
    let mut x = ndarray::Array1::zeros(c);
    for i in 0..k {
        let si = s.read(i);
        if si <= 0.0 {
            continue;
        }
        let coef = (0..r).map(|row| u.read(row, i) * b[row]).sum::<f64>() / si;
        for j in 0..c {
            x[j] += coef * v.read(j, i);
        }
    }
    (x, smax / smin)
}
