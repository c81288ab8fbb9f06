//! Linear symplectic primitives: the standard structure, symplecticity checks,
//! the diamond product and the basic normal forms.

use alloc::{format, vec::Vec};
use core::f64::consts::PI;

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{exp_sj, expm, j_matrix, symplectic_residual, Mat};

pub const DEFAULT_TOL: f64 = 1e-9;

pub fn standard_j(n: usize) -> Result<Mat> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be positive".into()));
    }
    Ok(j_matrix(n))
}

/// Returns whether `||M^T J M - J||` is within `tol`, together with the residual.
pub fn is_symplectic(m: &Mat, tol: f64) -> Result<(bool, f64)> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidDimension(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    if m.nrows() == 0 || m.nrows() % 2 == 1 {
        return Err(Error::InvalidDimension(format!("dimension {} is not a positive even number", m.nrows())));
    }
    let r = symplectic_residual(m);
    Ok((r <= tol, r))
}

/// A real `2n x 2n` matrix known to satisfy `M^T J M = J` within a tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMatrix {
    m: Mat,
    residual: f64,
}

impl SymplecticMatrix {
    pub fn new(m: Mat, tol: f64) -> Result<Self> {
        let (ok, residual) = is_symplectic(&m, tol)?;
        if !ok {
            return Err(Error::NotSymplectic { residual });
        }
        Ok(Self { m, residual })
    }

    /// Wraps a matrix without checking; the residual is still recorded.
    pub fn new_unchecked(m: Mat) -> Self {
        let residual = symplectic_residual(&m);
        Self { m, residual }
    }

    pub fn identity(n: usize) -> Self {
        Self { m: Mat::identity(2 * n, 2 * n), residual: 0.0 }
    }

    pub fn n(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn into_matrix(self) -> Mat {
        self.m
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `M^{-1} = -J M^T J`.
    pub fn inverse(&self) -> Self {
        let j = j_matrix(self.n());
        Self::new_unchecked(-(&j * self.m.transpose() * &j))
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new_unchecked(&self.m * &other.m)
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut out = Mat::identity(self.m.nrows(), self.m.nrows());
        for _ in 0..k {
            out = &out * &self.m;
        }
        Self::new_unchecked(out)
    }

    /// `P^{-1} M P`.
    pub fn conjugate_by(&self, p: &Self) -> Self {
        Self::new_unchecked(p.inverse().matrix() * &self.m * p.matrix())
    }
}

/// Position in the `(x_1, .., x_n, y_1, .., y_n)` ordering of the k-th
/// coordinate of the pair ordering `(x_1, y_1, x_2, y_2, ..)`.
pub fn pair_permutation(n: usize) -> Vec<usize> {
    (0..2 * n).map(|k| if k % 2 == 0 { k / 2 } else { n + k / 2 }).collect()
}

/// `M` rewritten in pair coordinates, so that 2-plane blocks sit on the diagonal.
pub fn to_pair_view(m: &Mat) -> Mat {
    let p = pair_permutation(m.nrows() / 2);
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(p[i], p[j])])
}

pub fn from_pair_view(m: &Mat) -> Mat {
    let p = pair_permutation(m.nrows() / 2);
    let mut out = Mat::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[(p[i], p[j])] = m[(i, j)];
        }
    }
    out
}

/// Interleaving product of a `2a x 2a` and a `2b x 2b` matrix, acting on the
/// x-blocks and y-blocks separately. No symplecticity check.
pub fn diamond_raw(m1: &Mat, m2: &Mat) -> Mat {
    let a = m1.nrows() / 2;
    let b = m2.nrows() / 2;
    let d = a + b;
    let mut out = Mat::zeros(2 * d, 2 * d);
    let place1 = |i: usize| if i < a { i } else { i + b };
    let place2 = |i: usize| if i < b { a + i } else { i + 2 * a };
    for i in 0..2 * a {
        for j in 0..2 * a {
            out[(place1(i), place1(j))] = m1[(i, j)];
        }
    }
    for i in 0..2 * b {
        for j in 0..2 * b {
            out[(place2(i), place2(j))] = m2[(i, j)];
        }
    }
    out
}

/// Diamond product of several blocks, left to right.
pub fn diamond_all(blocks: &[Mat]) -> Mat {
    let d: usize = blocks.iter().map(|b| b.nrows() / 2).sum();
    let mut out = Mat::zeros(2 * d, 2 * d);
    let mut offset = 0;
    for blk in blocks {
        let k = blk.nrows() / 2;
        let place = |i: usize| if i < k { offset + i } else { d + offset + i - k };
        for i in 0..2 * k {
            for j in 0..2 * k {
                out[(place(i), place(j))] = blk[(i, j)];
            }
        }
        offset += k;
    }
    out
}

pub fn diamond(m1: &SymplecticMatrix, m2: &SymplecticMatrix) -> Result<SymplecticMatrix> {
    for m in [m1, m2] {
        let (ok, residual) = is_symplectic(m.matrix(), DEFAULT_TOL)?;
        if !ok {
            return Err(Error::NotSymplectic { residual });
        }
    }
    Ok(SymplecticMatrix::new_unchecked(diamond_raw(m1.matrix(), m2.matrix())))
}

/// `D(mu)^{<>n} = diag(mu I_n, mu^{-1} I_n)`.
pub fn hyperbolic_diag(n: usize, mu: f64) -> Mat {
    let mut m = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, i)] = mu;
        m[(n + i, n + i)] = 1.0 / mu;
    }
    m
}

pub fn rotation(theta: f64) -> Mat {
    exp_sj(1, theta)
}

/// Basic normal forms. `OffCircle` stands for the part of a matrix whose
/// eigenvalues are off the unit circle, of the recorded dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormalForm {
    D { lambda: f64 },
    N1 { lambda: f64, b: f64 },
    R { theta: f64 },
    N2 { theta: f64, trivial: bool },
    OffCircle { dim: usize },
}

impl NormalForm {
    /// Half of the matrix dimension of the block.
    pub fn half_dim(&self) -> usize {
        match self {
            NormalForm::N2 { .. } => 2,
            NormalForm::OffCircle { dim } => dim / 2,
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidParameter(msg));
        match *self {
            NormalForm::D { lambda } => {
                if lambda == 0.0 || Float::abs(Float::abs(lambda) - 1.0) < 1e-12 || !lambda.is_finite() {
                    return bad(format!("D(lambda) needs |lambda| != 1, got {lambda}"));
                }
            }
            NormalForm::N1 { lambda, b } => {
                if lambda != 1.0 && lambda != -1.0 {
                    return bad(format!("N1 needs lambda = +-1, got {lambda}"));
                }
                if b != -1.0 && b != 0.0 && b != 1.0 {
                    return bad(format!("N1 needs b in {{-1, 0, 1}}, got {b}"));
                }
            }
            NormalForm::R { theta } | NormalForm::N2 { theta, .. } => {
                let s = Float::sin(theta);
                if !theta.is_finite() || theta <= 0.0 || theta >= 2.0 * PI || Float::abs(s) < 1e-12 {
                    return bad(format!("angle must lie in (0, pi) or (pi, 2pi), got {theta}"));
                }
            }
            NormalForm::OffCircle { dim } => {
                if dim == 0 || dim % 2 == 1 {
                    return bad(format!("off-circle dimension must be positive and even, got {dim}"));
                }
            }
        }
        Ok(())
    }

    /// The block as a path parameter `u in [0, 1]`: `u = 0` gives the identity
    /// and `u = 1` the normal form itself.
    pub fn interpolate(&self, u: f64) -> Mat {
        match *self {
            NormalForm::D { lambda } => {
                let mu = Float::abs(lambda);
                let d = hyperbolic_diag(1, Float::powf(mu, u));
                if lambda < 0.0 {
                    rotation(PI * u) * d
                } else {
                    d
                }
            }
            NormalForm::N1 { lambda, b } => {
                if lambda > 0.0 {
                    Mat::from_row_slice(2, 2, &[1.0, b * u, 0.0, 1.0])
                } else {
                    rotation(PI * u) * Mat::from_row_slice(2, 2, &[1.0, -b * u, 0.0, 1.0])
                }
            }
            NormalForm::R { theta } => rotation(theta * u),
            NormalForm::N2 { theta, trivial } => {
                let sigma = if trivial { -1.0 } else { 1.0 };
                let r = rotation(theta * u);
                let mut m = Mat::zeros(4, 4);
                m.view_mut((0, 0), (2, 2)).copy_from(&r);
                m.view_mut((2, 2), (2, 2)).copy_from(&r);
                m.view_mut((0, 2), (2, 2)).copy_from(&(&r * (sigma * u)));
                m
            }
            NormalForm::OffCircle { dim } => hyperbolic_diag(dim / 2, Float::powf(2.0, u)),
        }
    }
}

/// The matrix of a basic normal form. For `N2` the off-diagonal block is
/// `b = sigma R(theta)`, which is the symplectic choice; `sigma = +1` gives the
/// non-trivial form and `sigma = -1` the trivial one.
pub fn make_normal_form(d: &NormalForm) -> Result<SymplecticMatrix> {
    d.validate()?;
    Ok(SymplecticMatrix::new_unchecked(d.interpolate(1.0)))
}

/// `(b2 - b3) sin(theta)` for an `N2` block; negative means non-trivial.
pub fn n2_sign_indicator(m: &Mat, theta: f64) -> f64 {
    (m[(0, 3)] - m[(1, 2)]) * Float::sin(theta)
}

/// Diamond product of several normal forms.
pub fn normal_form_product(blocks: &[NormalForm]) -> Result<SymplecticMatrix> {
    if blocks.is_empty() {
        return Err(Error::InvalidDimension("empty block list".into()));
    }
    let mats: Result<Vec<Mat>> = blocks.iter().map(|b| make_normal_form(b).map(|m| m.into_matrix())).collect();
    Ok(SymplecticMatrix::new_unchecked(diamond_all(&mats?)))
}

/// Random symplectic matrix `exp(J S1) exp(J S2)` with symmetric `S_i` whose
/// entries are uniform in `[-scale, scale]`.
pub fn random_symplectic<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> SymplecticMatrix {
    let j = j_matrix(n);
    let mut out = Mat::identity(2 * n, 2 * n);
    for _ in 0..2 {
        let mut s = Mat::zeros(2 * n, 2 * n);
        for i in 0..2 * n {
            for k in i..2 * n {
                let v = rng.random_range(-scale..=scale);
                s[(i, k)] = v;
                s[(k, i)] = v;
            }
        }
        out = out * expm(&(&j * s));
    }
    let (m, _) = crate::linalg::symplectic_correct(&out);
    SymplecticMatrix::new_unchecked(m)
}

/// A random list of basic normal forms of total half-dimension `n`. Angles are
/// kept at least `0.15` away from each other and from `0` and `pi`, except that
/// a block may be repeated verbatim.
pub fn random_blocks<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<NormalForm> {
    let mut blocks: Vec<NormalForm> = Vec::new();
    let mut used: Vec<f64> = Vec::new();
    let mut left = n;
    while left > 0 {
        if !blocks.is_empty() && rng.random_bool(0.15) {
            let prev = blocks[blocks.len() - 1];
            if prev.half_dim() <= left {
                left -= prev.half_dim();
                blocks.push(prev);
                continue;
            }
        }
        let kind = rng.random_range(0..if left >= 2 { 5 } else { 4 });
        let block = match kind {
            0 => NormalForm::D { lambda: if rng.random_bool(0.5) { 2.0 } else { -2.0 } },
            1 | 2 => NormalForm::N1 {
                lambda: if rng.random_bool(0.5) { 1.0 } else { -1.0 },
                b: [-1.0, 0.0, 1.0][rng.random_range(0..3)],
            },
            _ => {
                let theta = loop {
                    let t: f64 = rng.random_range(0.15..(2.0 * PI - 0.15));
                    let folded = if t > PI { 2.0 * PI - t } else { t };
                    if Float::abs(folded - PI) >= 0.15
                        && used.iter().all(|&u| Float::abs(u - folded) >= 0.15)
                    {
                        used.push(folded);
                        break t;
                    }
                };
                if kind == 3 {
                    NormalForm::R { theta }
                } else {
                    NormalForm::N2 { theta, trivial: rng.random_bool(0.5) }
                }
            }
        };
        left -= block.half_dim();
        blocks.push(block);
    }
    blocks
}

#[cfg(test)]
mod tests {
    #[test]
    fn pair_view_puts_planes_on_the_diagonal() {
        let m = diamond_raw(&rotation(0.3), &rotation(1.1));
        let v = to_pair_view(&m);
        assert!((v.view((0, 0), (2, 2)) - rotation(0.3)).amax() < 1e-15);
        assert!((v.view((2, 2), (2, 2)) - rotation(1.1)).amax() < 1e-15);
        assert_eq!(from_pair_view(&v), m);
    }

    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn j_squares_to_minus_identity() {
        let j = standard_j(2).unwrap();
        assert_eq!(&j * &j, -Mat::identity(4, 4));
        assert!(standard_j(0).is_err());
    }

    #[test]
    fn symplecticity_residuals() {
        let (ok, r) = is_symplectic(&Mat::identity(4, 4), 1e-12).unwrap();
        assert!(ok && r == 0.0);
        let d = Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        assert!(is_symplectic(&d, 1e-12).unwrap().0);
        let bad = Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let (ok, r) = is_symplectic(&bad, 1e-9).unwrap();
        assert!(!ok);
        assert!((r - 1.0).abs() < 1e-15);
        assert!(is_symplectic(&Mat::identity(3, 3), 1e-9).is_err());
    }

    #[test]
    fn every_normal_form_is_symplectic() {
        let forms = [
            NormalForm::D { lambda: 2.0 },
            NormalForm::D { lambda: -2.0 },
            NormalForm::N1 { lambda: 1.0, b: 1.0 },
            NormalForm::N1 { lambda: -1.0, b: -1.0 },
            NormalForm::R { theta: 5.19 },
            NormalForm::N2 { theta: 1.0, trivial: false },
            NormalForm::N2 { theta: 4.0, trivial: true },
            NormalForm::OffCircle { dim: 4 },
        ];
        for f in forms {
            for u in [0.0, 0.3, 1.0] {
                let m = f.interpolate(u);
                assert!(symplectic_residual(&m) < 1e-13, "{f:?} at {u}");
            }
            assert!(max_abs(&(f.interpolate(0.0) - Mat::identity(2 * f.half_dim(), 2 * f.half_dim()))) < 1e-15);
        }
    }

    #[test]
    fn n2_sign_rule() {
        for theta in [0.4, PI / 2.0, 2.5, 4.0, 5.5] {
            let nt = make_normal_form(&NormalForm::N2 { theta, trivial: false }).unwrap();
            let tr = make_normal_form(&NormalForm::N2 { theta, trivial: true }).unwrap();
            assert!(n2_sign_indicator(nt.matrix(), theta) < 0.0);
            assert!(n2_sign_indicator(tr.matrix(), theta) > 0.0);
        }
    }

    #[test]
    fn out_of_range_forms_rejected() {
        assert!(make_normal_form(&NormalForm::R { theta: PI }).is_err());
        assert!(make_normal_form(&NormalForm::R { theta: 0.0 }).is_err());
        assert!(make_normal_form(&NormalForm::N1 { lambda: 1.0, b: 2.0 }).is_err());
    }

    #[test]
    fn diamond_interleaves_blocks() {
        let theta = 0.8;
        let r = SymplecticMatrix::new(rotation(theta), 1e-12).unwrap();
        let n1 = make_normal_form(&NormalForm::N1 { lambda: 1.0, b: 1.0 }).unwrap();
        let d = diamond(&r, &n1).unwrap();
        let (c, s) = (theta.cos(), theta.sin());
        #[rustfmt::skip]
        let expected = Mat::from_row_slice(4, 4, &[
            c,   0.0, -s,  0.0,
            0.0, 1.0, 0.0, 1.0,
            s,   0.0, c,   0.0,
            0.0, 0.0, 0.0, 1.0,
        ]);
        assert_eq!(*d.matrix(), expected);
        assert!(is_symplectic(d.matrix(), 1e-12).unwrap().0);
    }

    #[test]
    fn inverse_and_conjugation() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let p = random_symplectic(&mut rng, 2, 0.5);
        let prod = p.mul(&p.inverse());
        assert!(max_abs(&(prod.into_matrix() - Mat::identity(4, 4))) < 1e-12);
        assert!(p.residual() < 1e-12);
    }
}
