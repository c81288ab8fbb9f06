//! Small dense helpers on top of nalgebra that are shared by the numerical modules.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Float;

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(Float::abs(*x)))
}

/// The standard structure `J = [[0, -I], [I, 0]]` of size `2n`.
pub fn j_matrix(n: usize) -> Mat {
    let mut j = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -1.0;
        j[(n + i, i)] = 1.0;
    }
    j
}

/// `exp(sJ) = cos(s) I + sin(s) J`.
pub fn exp_sj(n: usize, s: f64) -> Mat {
    let (sn, cs) = (Float::sin(s), Float::cos(s));
    let mut m = Mat::identity(2 * n, 2 * n) * cs;
    for i in 0..n {
        m[(i, n + i)] = -sn;
        m[(n + i, i)] = sn;
    }
    m
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm(a: &Mat) -> Mat {
    let dim = a.nrows();
    let norm = a.iter().map(|x| Float::abs(*x)).sum::<f64>().max(1e-300);
    let mut squarings = 0u32;
    while norm / (1u64 << squarings.min(60)) as f64 > 0.25 && squarings < 60 {
        squarings += 1;
    }
    let scaled = a / (1u64 << squarings) as f64;
    let mut result = Mat::identity(dim, dim);
    let mut term = Mat::identity(dim, dim);
    for k in 1..=18 {
        term = &term * &scaled / k as f64;
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Singular values in ascending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

/// Dimension of the numerical kernel: singular values at most `rel_tol * max(1, largest)`.
pub fn nullity(m: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let top = s.last().copied().unwrap_or(0.0).max(1.0);
    s.iter().filter(|&&x| x <= rel_tol * top).count()
}

/// Right singular vectors belonging to the `k` smallest singular values, as columns.
pub fn smallest_right_singular_vectors(m: &CMat, k: usize) -> CMat {
    let dim = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let mut out = CMat::zeros(dim, k);
    for (col, &row) in order.iter().take(k).enumerate() {
        for i in 0..dim {
            out[(i, col)] = v_t[(row, i)].conj();
        }
    }
    out
}

/// Inertia `(positive, negative, zero)` of a Hermitian matrix, zero meaning
/// `|lambda| <= tol * max(1, max |lambda|)`.
pub fn hermitian_inertia(h: &CMat, tol: f64) -> (usize, usize, usize) {
    if h.nrows() == 0 {
        return (0, 0, 0);
    }
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen().eigenvalues;
    let scale = eig.iter().fold(1.0f64, |acc, x| acc.max(Float::abs(*x)));
    inertia_of(eig.iter().copied(), tol * scale)
}

pub fn symmetric_inertia(m: &Mat, tol: f64) -> (usize, usize, usize) {
    if m.nrows() == 0 {
        return (0, 0, 0);
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen().eigenvalues;
    let scale = eig.iter().fold(1.0f64, |acc, x| acc.max(Float::abs(*x)));
    inertia_of(eig.iter().copied(), tol * scale)
}

fn inertia_of(values: impl Iterator<Item = f64>, zero: f64) -> (usize, usize, usize) {
    let (mut p, mut q, mut z) = (0, 0, 0);
    for v in values {
        if v > zero {
            p += 1;
        } else if v < -zero {
            q += 1;
        } else {
            z += 1;
        }
    }
    (p, q, z)
}

fn schur_eigenvalues(m: &Mat) -> Option<Vec<Complex64>> {
    let iters = 1000 * m.nrows().max(1);
    m.clone().try_schur(f64::EPSILON, iters).map(|s| s.complex_eigenvalues().iter().copied().collect())
}

/// Eigenvalues with a bounded QR iteration. The Schur iteration can stall on
/// matrices within roundoff of a multiple of the identity; those are handled
/// as `c I + s A` with `A` of unit size.
pub fn eigenvalues(m: &Mat) -> Vec<Complex64> {
    if let Some(e) = schur_eigenvalues(m) {
        return e;
    }
    let d = m.nrows();
    let c = m.trace() / d as f64;
    let a = m - Mat::identity(d, d) * c;
    let s = a.amax();
    if s == 0.0 {
        return alloc::vec![Complex64::new(c, 0.0); d];
    }
    let shift = |e: Vec<Complex64>| e.into_iter().map(|z| z * s + c).collect();
    if let Some(e) = schur_eigenvalues(&(&a / s)) {
        return shift(e);
    }
    let mut k = 1.0;
    loop {
        let nudge = Mat::from_fn(d, d, |i, j| k * 1e-15 * (((3 * i + 7 * j) % 11) as f64 - 5.0));
        if let Some(e) = schur_eigenvalues(&(&a / s + nudge)) {
            return shift(e);
        }
        k *= 10.0;
    }
}

/// `||M^T J M - J||` in the max-abs metric.
pub fn symplectic_residual(m: &Mat) -> f64 {
    let n = m.nrows() / 2;
    let j = j_matrix(n);
    max_abs(&(m.transpose() * &j * m - j))
}

/// Pulls a nearly symplectic matrix back onto Sp(2n) by the first-order Gram
/// correction `M <- M (I + J E / 2)` with `E = M^T J M - J`, repeated a few times.
/// Returns the corrected matrix and the size of the total correction.
pub fn symplectic_correct(m: &Mat) -> (Mat, f64) {
    let n = m.nrows() / 2;
    let j = j_matrix(n);
    let mut out = m.clone();
    for _ in 0..4 {
        let e = out.transpose() * &j * &out - &j;
        if max_abs(&e) < 1e-15 {
            break;
        }
        let x = &j * e * 0.5;
        out = &out + &out * x;
    }
    let delta = max_abs(&(&out - m));
    (out, delta)
}
