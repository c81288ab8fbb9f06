//! The index function `(i_omega, nu_omega)` of symplectic paths, computed as a
//! signed count of crossings with the singular set `{D_omega = 0}`.
//!
//! The reference path `xi_n` is not traversed literally. A path `gamma` is
//! replaced by `t -> gamma(t) Xi` followed by `s -> gamma(tau) Xi(s)`, where
//! `Xi = diag(mu_1..mu_n, 1/mu_1..1/mu_n)` and `Xi(s)` shrinks to the identity.
//! Right multiplication by hyperbolic diagonals keeps the concatenation in the
//! same fixed-endpoint homotopy class, and unlike `xi_n * gamma` the new path
//! never touches the identity in its interior.
//!
//! On the second segment the tilt decays exponentially, so that crossings
//! crowding near the endpoint (a nearly degenerate endpoint, or the small
//! rotation used for a degenerate one) are resolved on a logarithmic scale.

use alloc::{boxed::Box, format, vec::Vec};
use core::f64::consts::TAU;

use num_complex::Complex64;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::angle::UnitAngle;
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, exp_sj, j_matrix, to_complex, Mat};
use crate::path::{iterate_path, Rotated, SymplecticPath};
use crate::spectral::{cluster_eigenvalues, nu_omega, unit_spectrum_with, SpectralTolerances, SplittingPair};
use crate::symplectic::SymplecticMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexOptions {
    /// Samples per unit of estimated rotation and per degree of freedom.
    pub samples_per_turn: usize,
    /// Size of the rotation used when the endpoint is degenerate.
    pub eps: f64,
    /// An endpoint eigenvalue this close to `omega` makes the endpoint degenerate.
    pub degeneracy_tol: f64,
    /// Relative singular-value threshold for `nu_omega` at a degenerate endpoint.
    pub kernel_tol: f64,
    /// How many times the sampling may be doubled before giving up.
    pub max_refinements: usize,
    /// Relative width at which crossing bisection stops.
    pub bisection_tol: f64,
    pub max_samples: usize,
}

impl Default for IndexOptions {
    fn default() -> Self {
        Self {
            samples_per_turn: 256,
            eps: 1e-2,
            degeneracy_tol: 1e-5,
            kernel_tol: 1e-6,
            max_refinements: 4,
            bisection_tol: 1e-12,
            max_samples: 1 << 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexResult {
    pub i: i64,
    pub nu: usize,
    pub omega: UnitAngle,
    /// The rotation size used for a degenerate endpoint, zero otherwise.
    pub perturbation_used: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterateIndex {
    pub m: usize,
    pub i: i64,
    pub nu: usize,
}

const TILTS: [f64; 4] = [2.0, 2.37, 1.71, 2.93];
/// Decades of `mu - 1` covered by the graded second segment.
const JORDAN_SPREAD: f64 = 1e-4;
const TAIL_DECAY: f64 = 18.420680743952367;
const GOLDEN_STEPS: usize = 40;
const COORIENT_STEPS: [f64; 3] = [1e-6, 1e-5, 1e-7];

fn d_from_det(det: Complex64, omega: Complex64, n: usize) -> Complex64 {
    let mut v = det * omega.conj().powu(n as u32);
    if (n - 1) % 2 == 1 {
        v = -v;
    }
    v
}

/// `D_omega(M) = (-1)^{n-1} conj(omega)^n det(M - omega I)`, which is real.
pub fn d_omega(m: &Mat, omega: UnitAngle) -> Result<f64> {
    let n = m.nrows() / 2;
    let w = omega.to_complex();
    let v = d_from_det(det_shifted(m, w), w, n);
    if Float::abs(v.im) > 1e-9 * v.re.abs().max(1.0) {
        return Err(Error::NumericalConsistency(format!("D_omega has imaginary part {:.3e}", v.im)));
    }
    Ok(v.re)
}

fn det_shifted(m: &Mat, w: Complex64) -> Complex64 {
    let mut c = to_complex(m);
    for i in 0..c.nrows() {
        c[(i, i)] -= w;
    }
    c.lu().determinant()
}

fn d_from_eigs(eigs: &[Complex64], w: Complex64, n: usize) -> f64 {
    let det = eigs.iter().fold(Complex64::new(1.0, 0.0), |acc, l| acc * (l - w));
    d_from_det(det, w, n).re
}

fn sign(x: f64) -> i32 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// Crossing scanner for one path and one tilt.
struct Engine<'a> {
    path: Box<dyn SymplecticPath + 'a>,
    n: usize,
    tau: f64,
    tilt: Vec<f64>,
    end: Mat,
    base_a: usize,
    base_b: usize,
    level: usize,
    eig_a: Vec<Vec<Complex64>>,
    eig_b: Vec<Vec<Complex64>>,
}

#[derive(Debug)]
enum ScanError {
    Tangent(f64),
}

impl<'a> Engine<'a> {
    fn new(path: Box<dyn SymplecticPath + 'a>, tilt_base: f64, opts: &IndexOptions) -> Self {
        let n = path.half_dim();
        let tau = path.period();
        let tilt: Vec<f64> = (0..n).map(|i| tilt_base + i as f64).collect();
        let end = path.end();
        let rot = rotation_estimate(path.as_ref());
        let want = (opts.samples_per_turn as f64 * n as f64 * (1.0 + rot)) as usize;
        let base_a = want.max(path.sample_hint()).min(opts.max_samples).max(16);
        let base_b = 64 * n;
        let mut e = Engine { path, n, tau, tilt, end, base_a, base_b, level: 0, eig_a: Vec::new(), eig_b: Vec::new() };
        e.eig_a = (0..=base_a).map(|k| eigenvalues(&e.mat_a(tau * k as f64 / base_a as f64))).collect();
        e.eig_b = (0..=base_b).map(|k| eigenvalues(&e.mat_b(k as f64 / base_b as f64))).collect();
        e
    }

    fn mat_a(&self, t: f64) -> Mat {
        let mut m = self.path.eval(t);
        for (i, mu) in self.tilt.iter().enumerate() {
            m.column_mut(i).scale_mut(*mu);
            m.column_mut(self.n + i).scale_mut(1.0 / mu);
        }
        m
    }

    fn mat_b(&self, s: f64) -> Mat {
        let mut m = self.end.clone();
        let g = (Float::exp(-TAIL_DECAY * s) - Float::exp(-TAIL_DECAY)) / (1.0 - Float::exp(-TAIL_DECAY));
        for (i, mu) in self.tilt.iter().enumerate() {
            let nu = 1.0 + (mu - 1.0) * g;
            m.column_mut(i).scale_mut(nu);
            m.column_mut(self.n + i).scale_mut(1.0 / nu);
        }
        m
    }

    /// Doubles the density of both segments, reusing the existing samples.
    fn refine(&mut self) {
        self.level += 1;
        let na = self.base_a << self.level;
        let nb = self.base_b << self.level;
        let mut a = Vec::with_capacity(na + 1);
        for k in 0..na / 2 {
            a.push(core::mem::take(&mut self.eig_a[k]));
            a.push(eigenvalues(&self.mat_a(self.tau * (2 * k + 1) as f64 / na as f64)));
        }
        a.push(core::mem::take(&mut self.eig_a[na / 2]));
        let mut b = Vec::with_capacity(nb + 1);
        for k in 0..nb / 2 {
            b.push(core::mem::take(&mut self.eig_b[k]));
            b.push(eigenvalues(&self.mat_b((2 * k + 1) as f64 / nb as f64)));
        }
        b.push(core::mem::take(&mut self.eig_b[nb / 2]));
        self.eig_a = a;
        self.eig_b = b;
    }

    /// Signed crossing count using every `stride`-th sample.
    fn count(&self, omega: UnitAngle, stride: usize, opts: &IndexOptions) -> core::result::Result<i64, ScanError> {
        let w = omega.to_complex();
        let mut total = 0i64;
        for seg in 0..2 {
            let (eigs, len) = if seg == 0 { (&self.eig_a, self.tau) } else { (&self.eig_b, 1.0) };
            let steps = (eigs.len() - 1) / stride;
            let param = |k: usize| len * (k * stride) as f64 / (eigs.len() - 1) as f64;
            let pts: Vec<(f64, f64)> = (0..=steps).map(|k| (param(k), d_from_eigs(&eigs[k * stride], w, self.n))).collect();
            let mut all = pts.clone();
            for k in 1..steps {
                let (l, c, r) = (pts[k - 1].1, pts[k].1, pts[k + 1].1);
                let dip = c.abs() < (1.0 - 1e-9) * l.abs().min(r.abs());
                if dip && sign(l) == sign(c) && sign(c) == sign(r) {
                    if let Some(p) = self.hidden_pair(seg, pts[k - 1].0, pts[k + 1].0, sign(c), w) {
                        all.push(p);
                    }
                }
            }
            all.sort_by(|x, y| x.0.total_cmp(&y.0));
            for win in all.windows(2) {
                // the last sample of the second segment is the endpoint, which is nondegenerate here
                if sign(win[0].1) != sign(win[1].1) {
                    total += self.crossing(seg, win[0].0, win[1].0, win[0].1, win[1].1, w, len, opts)?;
                }
            }
        }
        Ok(total)
    }

    /// A local minimum of `|D|` between samples can hide a pair of crossings
    /// (an eigenvalue pair touching `omega` and leaving again). Golden-section
    /// search for a point of the opposite sign.
    fn hidden_pair(&self, seg: usize, mut lo: f64, mut hi: f64, s: i32, w: Complex64) -> Option<(f64, f64)> {
        let f = |x: f64| {
            let m = if seg == 0 { self.mat_a(x) } else { self.mat_b(x) };
            d_from_eigs(&eigenvalues(&m), w, self.n)
        };
        let g = 0.5 * (Float::sqrt(5.0) - 1.0);
        let (mut a, mut b) = (hi - g * (hi - lo), lo + g * (hi - lo));
        let (mut fa, mut fb) = (f(a), f(b));
        for _ in 0..GOLDEN_STEPS {
            if sign(fa) != s {
                return Some((a, fa));
            }
            if sign(fb) != s {
                return Some((b, fb));
            }
            if s as f64 * fa < s as f64 * fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - g * (hi - lo);
                fa = f(a);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + g * (hi - lo);
                fb = f(b);
            }
        }
        None
    }

    #[allow(clippy::too_many_arguments)]
    fn crossing(
        &self,
        seg: usize,
        mut lo: f64,
        mut hi: f64,
        d_lo: f64,
        d_hi: f64,
        w: Complex64,
        len: f64,
        opts: &IndexOptions,
    ) -> core::result::Result<i64, ScanError> {
        let eval = |x: f64| if seg == 0 { self.mat_a(x) } else { self.mat_b(x) };
        let s_lo = sign(d_lo);
        for _ in 0..80 {
            if hi - lo <= opts.bisection_tol * len {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let v = d_from_eigs(&eigenvalues(&eval(mid)), w, self.n);
            if sign(v) == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let at = 0.5 * (lo + hi);
        let m = eval(at);
        // sign of d/ds D(M e^{sJ}) at s = 0, read off from both sides so that
        // products of small factors cannot fake a tangency
        for h in COORIENT_STEPS {
            let plus = d_from_eigs(&eigenvalues(&(&m * exp_sj(self.n, h))), w, self.n);
            let minus = d_from_eigs(&eigenvalues(&(&m * exp_sj(self.n, -h))), w, self.n);
            if sign(plus) != sign(minus) && plus != 0.0 && minus != 0.0 {
                return Ok(if sign(plus) == sign(d_hi) { 1 } else { -1 });
            }
        }
        Err(ScanError::Tangent(if seg == 0 { at } else { self.tau }))
    }
}

/// An eigenvalue, or the mean of a tight cluster, within `tol` of `omega`. The
/// cluster mean catches Jordan blocks whose eigenvalues were split by roundoff
/// to roughly the square root of the perturbation.
fn near_eigenvalue(eigs: &[Complex64], omega: UnitAngle, tol: f64) -> bool {
    let w = omega.to_complex();
    if eigs.iter().any(|l| (l - w).norm() <= tol) {
        return true;
    }
    cluster_eigenvalues(eigs, JORDAN_SPREAD).iter().any(|c| {
        let mean = c.iter().sum::<Complex64>() / c.len() as f64;
        c.len() > 1 && (mean - w).norm() <= tol
    })
}

/// Rough number of turns of the path, used to pick the sampling density.
fn rotation_estimate(path: &dyn SymplecticPath) -> f64 {
    let n = path.half_dim();
    let j = j_matrix(n);
    let k = 128usize.max(path.sample_hint() / 4);
    let tau = path.period();
    let mut prev = path.eval(0.0);
    let mut total = 0.0;
    for i in 1..=k {
        let cur = path.eval(tau * i as f64 / k as f64);
        let inv = -(&j * prev.transpose() * &j);
        total += ((&cur - &prev) * inv).norm();
        prev = cur;
    }
    total / (TAU * Float::sqrt(2.0 * n as f64))
}

struct Slot<'a> {
    rot: f64,
    tilt: usize,
    engine: Engine<'a>,
}

/// Computes `i_omega` for many `omega` on one path, reusing the sampled spectra.
pub struct IndexCalculator<'a> {
    path: &'a dyn SymplecticPath,
    end: Mat,
    end_eigs: Vec<Complex64>,
    opts: IndexOptions,
    slots: Vec<Slot<'a>>,
}

impl<'a> IndexCalculator<'a> {
    pub fn new(path: &'a dyn SymplecticPath, opts: IndexOptions) -> Result<Self> {
        crate::path::check_path(path, 1e-6)?;
        let end = path.end();
        let end_eigs = eigenvalues(&end);
        Ok(Self { path, end, end_eigs, opts, slots: Vec::new() })
    }

    pub fn half_dim(&self) -> usize {
        self.path.half_dim()
    }

    pub fn endpoint(&self) -> &Mat {
        &self.end
    }

    fn slot(&mut self, rot: f64, tilt: usize) -> usize {
        if let Some(k) = self.slots.iter().position(|s| s.rot == rot && s.tilt == tilt) {
            return k;
        }
        let path: Box<dyn SymplecticPath + 'a> =
            if rot == 0.0 { Box::new(self.path) } else { Box::new(Rotated::new(self.path, rot)) };
        let engine = Engine::new(path, TILTS[tilt], &self.opts);
        self.slots.push(Slot { rot, tilt, engine });
        self.slots.len() - 1
    }

    /// Crossing count of the (possibly rotated) path, checked under refinement
    /// and retried with other tilts on tangencies.
    fn stable_count(&mut self, omega: UnitAngle, rot: f64) -> Result<i64> {
        let opts = self.opts;
        let mut last_tangent = 0.0;
        let mut unstable = None;
        for tilt in 0..TILTS.len() {
            let k = self.slot(rot, tilt);
            let mut outcome = None;
            loop {
                let e = &self.slots[k].engine;
                let fine = e.count(omega, 1, &opts);
                let coarse = e.count(omega, 2, &opts);
                match (coarse, fine) {
                    (Ok(a), Ok(b)) if a == b => {
                        outcome = Some(Ok(b));
                        break;
                    }
                    (Err(ScanError::Tangent(t)), _) | (_, Err(ScanError::Tangent(t))) => {
                        last_tangent = t;
                        break;
                    }
                    (Ok(a), Ok(b)) => {
                        if self.slots[k].engine.level >= opts.max_refinements
                            || (self.slots[k].engine.base_a << (self.slots[k].engine.level + 1)) > opts.max_samples
                        {
                            unstable = Some(Error::IndexUnstable(format!(
                                "crossing count {a} vs {b} at angle {:.9} after {} refinements",
                                omega.radians(),
                                opts.max_refinements
                            )));
                            break;
                        }
                        self.slots[k].engine.refine();
                    }
                }
            }
            if let Some(r) = outcome {
                return r;
            }
        }
        Err(unstable.unwrap_or(Error::TangencyUnresolved { t: last_tangent }))
    }

    /// `nu_omega` of the endpoint: zero unless an eigenvalue lies within the
    /// degeneracy tolerance of `omega`, then the dimension of the kernel.
    pub fn nullity(&self, omega: UnitAngle) -> usize {
        if !near_eigenvalue(&self.end_eigs, omega, self.opts.degeneracy_tol) {
            return 0;
        }
        nu_omega(&self.end, omega, self.opts.kernel_tol).max(1)
    }

    pub fn index(&mut self, omega: UnitAngle) -> Result<IndexResult> {
        let nu = self.nullity(omega);
        if nu == 0 {
            let i = self.stable_count(omega, 0.0)?;
            return Ok(IndexResult { i, nu, omega, perturbation_used: 0.0 });
        }
        let mut eps = self.opts.eps;
        let mut previous: Option<i64> = None;
        for _ in 0..8 {
            let n = self.path.half_dim();
            let rotated_end = &self.end * exp_sj(n, -eps);
            let other_end = &self.end * exp_sj(n, eps);
            let tol = self.opts.degeneracy_tol;
            if near_eigenvalue(&eigenvalues(&rotated_end), omega, tol) || near_eigenvalue(&eigenvalues(&other_end), omega, tol) {
                eps *= 0.5;
                previous = None;
                continue;
            }
            let minus = self.stable_count(omega, -eps)?;
            let plus = self.stable_count(omega, eps)?;
            if minus > plus {
                return Err(Error::IndexUnstable(format!(
                    "negative rotation gives {minus} > positive rotation {plus} at angle {:.9}",
                    omega.radians()
                )));
            }
            if previous == Some(minus) {
                return Ok(IndexResult { i: minus, nu, omega, perturbation_used: 2.0 * eps });
            }
            previous = Some(minus);
            eps *= 0.5;
        }
        Err(Error::IndexUnstable(format!("degenerate index at angle {:.9} did not settle", omega.radians())))
    }
}

pub fn index_nu_omega(path: &dyn SymplecticPath, omega: UnitAngle, opts: &IndexOptions) -> Result<IndexResult> {
    IndexCalculator::new(path, *opts)?.index(omega)
}

/// `(i(gamma, m), nu(gamma, m))`, computed on the iterated path and, as a
/// cross-check, as the sum of `i_omega(gamma)` over the m-th roots of unity.
pub fn index_iterates(path: &dyn SymplecticPath, m: usize, opts: &IndexOptions) -> Result<IterateIndex> {
    let mut base = IndexCalculator::new(path, *opts)?;
    iterate_checked(&mut base, path, m, opts)
}

fn iterate_checked(base: &mut IndexCalculator<'_>, path: &dyn SymplecticPath, m: usize, opts: &IndexOptions) -> Result<IterateIndex> {
    let (sum_i, sum_nu) = root_sum(base, m)?;
    let (direct_i, direct_nu) = if m == 1 {
        (sum_i, sum_nu)
    } else {
        let it = iterate_path(path, m)?;
        let r = IndexCalculator::new(&it, *opts)?.index(UnitAngle::ONE)?;
        (r.i, r.nu)
    };
    if direct_i != sum_i || direct_nu != sum_nu {
        return Err(Error::BottViolation { m, direct_i, direct_nu, sum_i, sum_nu });
    }
    Ok(IterateIndex { m, i: direct_i, nu: direct_nu })
}

fn root_sum(base: &mut IndexCalculator<'_>, m: usize) -> Result<(i64, usize)> {
    let mut i = 0;
    let mut nu = 0;
    for k in 0..m {
        let r = base.index(UnitAngle::root_of_unity(k, m))?;
        i += r.i;
        nu += r.nu;
    }
    Ok((i, nu))
}

/// Index table `m = 1..=m_max`, each entry checked both ways.
pub fn index_table(path: &dyn SymplecticPath, m_max: usize, opts: &IndexOptions) -> Result<Vec<IterateIndex>> {
    let mut base = IndexCalculator::new(path, *opts)?;
    (1..=m_max).map(|m| iterate_checked(&mut base, path, m, opts)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanIndex {
    /// Average of `i_omega` over the `K`-th roots of unity.
    pub average: f64,
    pub samples: usize,
    /// Bound on `|average - exact|`.
    pub error_bound: f64,
    /// `(1/2pi) * integral of i_omega over the circle`, using that `i_omega` is
    /// constant between the unit eigenvalues of the endpoint.
    pub exact: f64,
}

pub fn mean_index(path: &dyn SymplecticPath, k: usize, opts: &IndexOptions) -> Result<MeanIndex> {
    if k < 64 {
        return Err(Error::InvalidParameter(format!("mean index needs K >= 64, got {k}")));
    }
    let mut calc = IndexCalculator::new(path, *opts)?;
    let mut sum = 0i64;
    for j in 0..k {
        sum += calc.index(UnitAngle::root_of_unity(j, k))?.i;
    }
    let exact = arc_integral(&mut calc)?;
    let n = path.half_dim();
    Ok(MeanIndex { average: sum as f64 / k as f64, samples: k, error_bound: 2.0 * n as f64 / k as f64, exact })
}

fn arc_integral(calc: &mut IndexCalculator<'_>) -> Result<f64> {
    let end = SymplecticMatrix::new_unchecked(calc.endpoint().clone());
    let spec = unit_spectrum_with(&end, &SpectralTolerances::default())?;
    let mut cuts: Vec<f64> = spec.entries.iter().map(|e| e.angle.radians()).collect();
    cuts.push(0.0);
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup_by(|a, b| Float::abs(*a - *b) < 1e-12);
    let mut total = 0.0;
    for (idx, &a) in cuts.iter().enumerate() {
        let b = if idx + 1 < cuts.len() { cuts[idx + 1] } else { TAU };
        let i = calc.index(UnitAngle::new(0.5 * (a + b)))?.i;
        total += i as f64 * (b - a);
    }
    Ok(total / TAU)
}

/// Numeric splitting numbers: the jumps of `i_omega` on either side of `omega`.
pub fn splitting_numbers_numeric(
    path: &dyn SymplecticPath,
    omega: UnitAngle,
    eps: f64,
    opts: &IndexOptions,
) -> Result<SplittingPair> {
    let mut calc = IndexCalculator::new(path, *opts)?;
    splitting_with(&mut calc, omega, eps)
}

pub fn splitting_with(calc: &mut IndexCalculator<'_>, omega: UnitAngle, eps: f64) -> Result<SplittingPair> {
    let at = calc.index(omega)?.i;
    let mut e = eps;
    let mut previous: Option<(i64, i64)> = None;
    for _ in 0..9 {
        let plus = calc.index(omega.rotate(e))?.i - at;
        let minus = calc.index(omega.rotate(-e))?.i - at;
        if previous == Some((plus, minus)) {
            if plus < 0 || minus < 0 {
                return Err(Error::NumericalConsistency(format!("negative splitting number ({plus}, {minus})")));
            }
            return Ok(SplittingPair::new(plus as usize, minus as usize));
        }
        previous = Some((plus, minus));
        e *= 0.5;
    }
    Err(Error::SplittingUnstable { angle: omega.radians() })
}
