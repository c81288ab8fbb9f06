//! Symplectic paths `gamma: [0, tau] -> Sp(2n)` with `gamma(0) = I`.

use alloc::{boxed::Box, format, vec::Vec};

use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{exp_sj, max_abs, symplectic_correct, symplectic_residual, Mat};
use crate::symplectic::{diamond_all, hyperbolic_diag, NormalForm};

pub trait SymplecticPath: Send + Sync {
    fn half_dim(&self) -> usize;
    fn period(&self) -> f64;
    fn eval(&self, t: f64) -> Mat;

    /// Minimum number of samples a scan over the whole path should use.
    fn sample_hint(&self) -> usize {
        64
    }

    fn end(&self) -> Mat {
        self.eval(self.period())
    }
}

impl<T: SymplecticPath + ?Sized> SymplecticPath for &T {
    fn half_dim(&self) -> usize {
        (**self).half_dim()
    }
    fn period(&self) -> f64 {
        (**self).period()
    }
    fn eval(&self, t: f64) -> Mat {
        (**self).eval(t)
    }
    fn sample_hint(&self) -> usize {
        (**self).sample_hint()
    }
    fn end(&self) -> Mat {
        (**self).end()
    }
}

impl<T: SymplecticPath + ?Sized> SymplecticPath for Box<T> {
    fn half_dim(&self) -> usize {
        (**self).half_dim()
    }
    fn period(&self) -> f64 {
        (**self).period()
    }
    fn eval(&self, t: f64) -> Mat {
        (**self).eval(t)
    }
    fn sample_hint(&self) -> usize {
        (**self).sample_hint()
    }
    fn end(&self) -> Mat {
        (**self).end()
    }
}

/// Checks `gamma(0) = I` and symplecticity at a handful of sample points.
pub fn check_path(path: &dyn SymplecticPath, tol: f64) -> Result<()> {
    let n = path.half_dim();
    if n == 0 {
        return Err(Error::InvalidDimension("path of dimension zero".into()));
    }
    if !(path.period() > 0.0) || !path.period().is_finite() {
        return Err(Error::InvalidParameter(format!("period must be positive, got {}", path.period())));
    }
    let start = path.eval(0.0);
    if start.nrows() != 2 * n || max_abs(&(start - Mat::identity(2 * n, 2 * n))) > 1e-10 {
        return Err(Error::InvalidParameter("path does not start at the identity".into()));
    }
    for k in 0..=8 {
        let t = path.period() * k as f64 / 8.0;
        let r = symplectic_residual(&path.eval(t));
        if !(r <= tol) {
            return Err(Error::NotSymplectic { residual: r });
        }
    }
    Ok(())
}

/// `t -> D(2 - t/tau)^{<>n}`, from `D(2)^{<>n}` to the identity.
#[derive(Clone, Debug)]
pub struct XiPath {
    pub n: usize,
    pub tau: f64,
}

pub fn xi_path(n: usize, tau: f64) -> Result<XiPath> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be positive".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    Ok(XiPath { n, tau })
}

impl XiPath {
    pub fn eval(&self, t: f64) -> Mat {
        hyperbolic_diag(self.n, 2.0 - t / self.tau)
    }
}

/// Diamond product of the standard interpolations of basic normal forms,
/// run over `[0, tau]`.
#[derive(Clone, Debug)]
pub struct NormalFormPath {
    blocks: Vec<NormalForm>,
    tau: f64,
    n: usize,
}

impl NormalFormPath {
    pub fn new(blocks: Vec<NormalForm>, tau: f64) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidDimension("empty block list".into()));
        }
        for b in &blocks {
            b.validate()?;
        }
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        let n = blocks.iter().map(|b| b.half_dim()).sum();
        Ok(Self { blocks, tau, n })
    }

    pub fn blocks(&self) -> &[NormalForm] {
        &self.blocks
    }
}

impl SymplecticPath for NormalFormPath {
    fn half_dim(&self) -> usize {
        self.n
    }
    fn period(&self) -> f64 {
        self.tau
    }
    fn eval(&self, t: f64) -> Mat {
        let u = t / self.tau;
        let mats: Vec<Mat> = self.blocks.iter().map(|b| b.interpolate(u)).collect();
        diamond_all(&mats)
    }
    fn sample_hint(&self) -> usize {
        let turns: f64 = self
            .blocks
            .iter()
            .map(|b| match b {
                NormalForm::R { theta } | NormalForm::N2 { theta, .. } => *theta,
                _ => core::f64::consts::PI,
            })
            .sum();
        64 + (16.0 * turns) as usize
    }
}

/// `t -> R(theta t)` on `[0, 1]`.
pub fn rotation_path(theta: f64) -> Result<FnPath> {
    if !theta.is_finite() {
        return Err(Error::InvalidParameter("rotation angle must be finite".into()));
    }
    let hint = 64 + (16.0 * Float::abs(theta)) as usize;
    Ok(FnPath::new(1, 1.0, hint, move |t| exp_sj(1, theta * t)))
}

/// A path given by a closure.
pub struct FnPath {
    n: usize,
    tau: f64,
    hint: usize,
    f: Box<dyn Fn(f64) -> Mat + Send + Sync>,
}

impl FnPath {
    pub fn new(n: usize, tau: f64, hint: usize, f: impl Fn(f64) -> Mat + Send + Sync + 'static) -> Self {
        Self { n, tau, hint, f: Box::new(f) }
    }
}

impl SymplecticPath for FnPath {
    fn half_dim(&self) -> usize {
        self.n
    }
    fn period(&self) -> f64 {
        self.tau
    }
    fn eval(&self, t: f64) -> Mat {
        (self.f)(t)
    }
    fn sample_hint(&self) -> usize {
        self.hint
    }
}

/// `t -> P^{-1} gamma(t) P`.
pub struct Conjugated<P> {
    inner: P,
    p: Mat,
    p_inv: Mat,
}

impl<P: SymplecticPath> Conjugated<P> {
    pub fn new(inner: P, p: &crate::symplectic::SymplecticMatrix) -> Self {
        Self { inner, p: p.matrix().clone(), p_inv: p.inverse().into_matrix() }
    }
}

impl<P: SymplecticPath> SymplecticPath for Conjugated<P> {
    fn half_dim(&self) -> usize {
        self.inner.half_dim()
    }
    fn period(&self) -> f64 {
        self.inner.period()
    }
    fn eval(&self, t: f64) -> Mat {
        &self.p_inv * self.inner.eval(t) * &self.p
    }
    fn sample_hint(&self) -> usize {
        self.inner.sample_hint()
    }
}

/// The `m`-th iterate `gamma^m(t) = gamma(t - j tau) gamma(tau)^j` on `[0, m tau]`.
pub struct Iterated<P> {
    inner: P,
    m: usize,
    powers: Vec<Mat>,
}

pub fn iterate_path<P: SymplecticPath>(inner: P, m: usize) -> Result<Iterated<P>> {
    if m == 0 {
        return Err(Error::InvalidParameter("iteration count must be positive".into()));
    }
    let end = inner.end();
    let dim = end.nrows();
    let mut powers = Vec::with_capacity(m);
    powers.push(Mat::identity(dim, dim));
    for j in 1..m {
        let next = &powers[j - 1] * &end;
        powers.push(next);
    }
    Ok(Iterated { inner, m, powers })
}

impl<P: SymplecticPath> SymplecticPath for Iterated<P> {
    fn half_dim(&self) -> usize {
        self.inner.half_dim()
    }
    fn period(&self) -> f64 {
        self.m as f64 * self.inner.period()
    }
    fn eval(&self, t: f64) -> Mat {
        let tau = self.inner.period();
        let j = (Float::floor(t / tau).max(0.0) as usize).min(self.m - 1);
        self.inner.eval(t - j as f64 * tau) * &self.powers[j]
    }
    fn sample_hint(&self) -> usize {
        self.m * self.inner.sample_hint()
    }
}

/// `t -> gamma(t) exp(s (t/tau) J)`: a small rotation that moves a degenerate
/// endpoint off the singular set.
pub struct Rotated<P> {
    inner: P,
    s: f64,
}

impl<P: SymplecticPath> Rotated<P> {
    pub fn new(inner: P, s: f64) -> Self {
        Self { inner, s }
    }
}

impl<P: SymplecticPath> SymplecticPath for Rotated<P> {
    fn half_dim(&self) -> usize {
        self.inner.half_dim()
    }
    fn period(&self) -> f64 {
        self.inner.period()
    }
    fn eval(&self, t: f64) -> Mat {
        let n = self.inner.half_dim();
        self.inner.eval(t) * exp_sj(n, self.s * t / self.inner.period())
    }
    fn sample_hint(&self) -> usize {
        self.inner.sample_hint()
    }
}

/// Path through sampled matrices, interpolated by cubic Hermite splines with
/// finite-difference tangents and pulled back onto Sp(2n) after interpolation.
#[derive(Clone, Debug)]
pub struct SampledPath {
    n: usize,
    times: Vec<f64>,
    mats: Vec<Mat>,
    slopes: Vec<Mat>,
}

impl SampledPath {
    pub fn new(times: Vec<f64>, mats: Vec<Mat>) -> Result<Self> {
        if times.len() < 2 || times.len() != mats.len() {
            return Err(Error::InvalidParameter("need at least two samples with matching times".into()));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("sample times must start at 0 and increase".into()));
        }
        let dim = mats[0].nrows();
        if dim == 0 || dim % 2 == 1 || mats.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::InvalidDimension("samples must share one even square dimension".into()));
        }
        if max_abs(&(&mats[0] - Mat::identity(dim, dim))) > 1e-10 {
            return Err(Error::InvalidParameter("first sample must be the identity".into()));
        }
        for (t, m) in times.iter().zip(&mats) {
            let r = symplectic_residual(m);
            if r > 1e-8 {
                return Err(Error::InvalidParameter(format!("sample at t = {t} not symplectic (residual {r:.3e})")));
            }
        }
        let k = times.len();
        let slopes = (0..k)
            .map(|i| {
                let (a, b) = if i == 0 { (0, 1) } else if i == k - 1 { (k - 2, k - 1) } else { (i - 1, i + 1) };
                (&mats[b] - &mats[a]) / (times[b] - times[a])
            })
            .collect();
        Ok(Self { n: dim / 2, times, mats, slopes })
    }
}

impl SymplecticPath for SampledPath {
    fn half_dim(&self) -> usize {
        self.n
    }
    fn period(&self) -> f64 {
        *self.times.last().unwrap()
    }
    fn eval(&self, t: f64) -> Mat {
        let k = self.times.len();
        let i = match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => return self.mats[i].clone(),
            Err(0) => 0,
            Err(i) if i >= k => k - 2,
            Err(i) => i - 1,
        };
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let u = ((t - t0) / h).clamp(0.0, 1.0);
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let m = &self.mats[i] * h00 + &self.slopes[i] * (h10 * h) + &self.mats[i + 1] * h01 + &self.slopes[i + 1] * (h11 * h);
        symplectic_correct(&m).0
    }
    fn sample_hint(&self) -> usize {
        4 * self.times.len()
    }
}
