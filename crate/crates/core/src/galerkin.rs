//! Fourier-Galerkin discretization of the dual-action Hessian
//! `Q_s(v, v) = int_0^s (Jv . Mv + H_2''(x_2(t))^{-1} Jv . Jv) dt`
//! on mean-zero loops, and its constant-coefficient comparison forms.

use alloc::{format, vec, vec::Vec};
use core::f64::consts::{PI, TAU};

use num_traits::Float;

use crate::error::{Error, Result};
use crate::flow::FlowOptions;
use crate::linalg::{j_matrix, Mat};
use crate::orbit::{h2_solution, ClosedCharacteristic};
use crate::surface::SurfaceSpec;

#[derive(Clone, Copy, Debug)]
pub struct GalerkinOptions {
    pub modes: usize,
    pub nodes: usize,
    /// Relative to the largest eigenvalue magnitude.
    pub zero_tol: f64,
}

impl Default for GalerkinOptions {
    fn default() -> Self {
        Self { modes: 32, nodes: 2048, zero_tol: 1e-7 }
    }
}

/// The form in the orthonormal basis `sqrt(2/s) cos(2 pi k t/s) e_i`,
/// `sqrt(2/s) sin(2 pi k t/s) e_i`, `k = 1..K`, ordered by mode, cosines first.
#[derive(Clone, Debug)]
pub struct GalerkinForm {
    pub n: usize,
    pub modes: usize,
    pub period: f64,
    pub matrix: Mat,
    /// Only equal modes couple (the coefficient is constant in `t`).
    pub block_diagonal: bool,
}

impl GalerkinForm {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn symmetry_defect(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    fn eigenvalues(&self) -> Vec<f64> {
        if !self.block_diagonal {
            return self.matrix.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        }
        let b = 4 * self.n;
        let mut out = Vec::with_capacity(self.dimension());
        for k in 0..self.modes {
            let block = self.matrix.view((k * b, k * b), (b, b)).into_owned();
            out.extend(block.symmetric_eigen().eigenvalues.iter().copied());
        }
        out
    }
}

/// Samples of `C(t) = J^T H_2''(x_2(t))^{-1} J` over one period of the
/// `H_2`-parametrized orbit.
#[derive(Clone, Debug)]
pub struct CoefficientSamples {
    pub n: usize,
    pub period: f64,
    pub values: Vec<Mat>,
    pub constant: bool,
}

impl CoefficientSamples {
    pub fn constant(c: Mat, nodes: usize) -> Self {
        Self { n: c.nrows() / 2, period: 1.0, values: vec![c; nodes], constant: true }
    }
}

pub fn coefficient_samples(
    spec: &SurfaceSpec,
    orbit: &ClosedCharacteristic,
    nodes: usize,
    flow: &FlowOptions,
) -> Result<CoefficientSamples> {
    let (sol, t2) = h2_solution(spec, orbit, flow)?;
    let h2 = spec.with_alpha(2.0);
    let dim = spec.dim();
    let j = j_matrix(spec.n);
    let mut values = Vec::with_capacity(nodes);
    for q in 0..nodes {
        let t = t2 * q as f64 / nodes as f64;
        let x = sol.eval(t);
        let hess = h2.gauge_and_derivatives(&x[..dim])?.hess_h2;
        let inv = hess.try_inverse().ok_or(Error::HessianSingular { t })?;
        if inv.iter().any(|v| !v.is_finite()) {
            return Err(Error::HessianSingular { t });
        }
        values.push(j.transpose() * inv * &j);
    }
    let scale = values[0].amax().max(1e-300);
    let constant = values.iter().all(|v| (v - &values[0]).amax() <= 1e-12 * scale);
    Ok(CoefficientSamples { n: spec.n, period: t2, values, constant })
}

/// Assembles `Q_s` for `s = m T_2` with `modes` Fourier modes.
pub fn assemble(c: &CoefficientSamples, m: usize, modes: usize) -> Result<GalerkinForm> {
    if m == 0 || modes == 0 {
        return Err(Error::InvalidParameter("iterate and mode count must be positive".into()));
    }
    let n = c.n;
    let d = 2 * n;
    let nodes = c.values.len();
    if 2 * modes >= nodes / 2 && !c.constant {
        return Err(Error::InvalidParameter(format!("{nodes} nodes cannot resolve {modes} modes")));
    }
    let s = m as f64 * c.period;
    let max_p = if c.constant { 0 } else { 2 * modes };
    // Fourier coefficients (1/s) int C(t) cos / sin(2 pi p t / s) dt
    let mut cc = vec![Mat::zeros(d, d); max_p + 1];
    let mut cs = vec![Mat::zeros(d, d); max_p + 1];
    if c.constant {
        cc[0] = c.values[0].clone();
    } else {
        for q in 0..nodes {
            let v = &c.values[(q * m) % nodes];
            for p in 0..=max_p {
                let arg = TAU * ((p * q) % nodes) as f64 / nodes as f64;
                cc[p] += v * (Float::cos(arg) / nodes as f64);
                cs[p] += v * (Float::sin(arg) / nodes as f64);
            }
        }
    }
    let coef = |p: i64, table: &[Mat]| -> Option<Mat> {
        let a = p.unsigned_abs() as usize;
        if a >= table.len() {
            return None;
        }
        Some(table[a].clone())
    };
    let sine = |p: i64| -> Option<Mat> { coef(p, &cs).map(|m| if p < 0 { -m } else { m }) };
    let dim = 4 * n * modes;
    let mut q = Mat::zeros(dim, dim);
    let j = j_matrix(n);
    for k in 1..=modes {
        let bk = (k - 1) * 4 * n;
        let omega = TAU * k as f64 / s;
        for i in 0..d {
            for jj in 0..d {
                q[(bk + i, bk + d + jj)] += -j[(jj, i)] / omega;
                q[(bk + d + i, bk + jj)] += j[(jj, i)] / omega;
            }
        }
        for l in 1..=modes {
            if c.constant && l != k {
                continue;
            }
            let bl = (l - 1) * 4 * n;
            let (ki, li) = (k as i64, l as i64);
            let diff = coef(ki - li, &cc);
            let sum = coef(ki + li, &cc);
            let s_sum = sine(ki + li);
            let s_diff = sine(ki - li);
            for i in 0..d {
                for jj in 0..d {
                    let g = |m: &Option<Mat>| m.as_ref().map_or(0.0, |m| m[(i, jj)]);
                    q[(bk + i, bl + jj)] += g(&diff) + g(&sum);
                    q[(bk + d + i, bl + d + jj)] += g(&diff) - g(&sum);
                    q[(bk + i, bl + d + jj)] += g(&s_sum) - g(&s_diff);
                    q[(bk + d + i, bl + jj)] += g(&s_sum) + g(&s_diff);
                }
            }
        }
    }
    let sym = (&q + q.transpose()) * 0.5;
    Ok(GalerkinForm { n, modes, period: s, matrix: sym, block_diagonal: c.constant })
}

pub fn galerkin_hessian(
    spec: &SurfaceSpec,
    orbit: &ClosedCharacteristic,
    m: usize,
    modes: usize,
    opts: &GalerkinOptions,
    flow: &FlowOptions,
) -> Result<GalerkinForm> {
    let c = coefficient_samples(spec, orbit, opts.nodes, flow)?;
    assemble(&c, m, modes)
}

/// Counts eigenvalues below `-tol` and within `tol` of zero, where `tol` is
/// relative to the largest eigenvalue magnitude.
pub fn morse_index_nullity(form: &GalerkinForm, zero_tol: f64) -> (usize, usize) {
    let eig = form.eigenvalues();
    let top = eig.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if top == 0.0 {
        return (0, eig.len());
    }
    let tol = zero_tol * top;
    let index = eig.iter().filter(|e| **e < -tol).count();
    let nullity = eig.iter().filter(|e| e.abs() <= tol).count();
    (index, nullity)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StableCount {
    pub index: usize,
    pub nullity: usize,
    pub modes: usize,
}

/// Index and nullity at `K` and `2K`, going on to `4K` if those differ.
pub fn stabilized_count(c: &CoefficientSamples, m: usize, opts: &GalerkinOptions) -> Result<StableCount> {
    let mut prev = None;
    let mut seen = Vec::new();
    for level in 0..3 {
        let modes = opts.modes << level;
        let form = assemble(c, m, modes)?;
        let (index, nullity) = morse_index_nullity(&form, opts.zero_tol);
        seen.push((modes, index, nullity));
        if prev == Some((index, nullity)) {
            return Ok(StableCount { index, nullity, modes: opts.modes << (level - 1) });
        }
        prev = Some((index, nullity));
    }
    Err(Error::GalerkinUnstable(format!("index/nullity by mode count: {seen:?}")))
}

/// `2n [s / (pi rho^2)]`, the index of the constant form
/// `int (Jv . Mv + rho^2/2 |v|^2) dt` on `s`-periodic mean-zero loops.
pub fn constant_form_index(s: f64, rho: f64, n: usize) -> Result<usize> {
    if !(s > 0.0) || !(rho > 0.0) || n == 0 {
        return Err(Error::InvalidParameter("s, rho and n must be positive".into()));
    }
    let ratio = s / (PI * rho * rho);
    if (ratio - ratio.round()).abs() <= 1e-12 * ratio.max(1.0) && ratio.round() >= 1.0 {
        return Err(Error::ResonantForm { ratio });
    }
    Ok(2 * n * Float::floor(ratio) as usize)
}

/// The same comparison form, discretized.
pub fn constant_form(s: f64, rho: f64, n: usize, modes: usize) -> Result<GalerkinForm> {
    let d = 2 * n;
    let c = CoefficientSamples {
        n,
        period: s,
        values: vec![Mat::identity(d, d) * (rho * rho / 2.0)],
        constant: true,
    };
    assemble(&c, 1, modes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_count(m: usize, modes: usize) -> (usize, usize) {
        let c = CoefficientSamples { n: 1, period: PI, values: vec![Mat::identity(2, 2) * 0.5], constant: true };
        morse_index_nullity(&assemble(&c, m, modes).unwrap(), 1e-7)
    }

    #[test]
    fn circle_counts() {
        // per mode k the eigenvalues are 1/2 +- s/(2 pi k), each twice
        assert_eq!(circle_count(1, 8), (0, 2));
        assert_eq!(circle_count(2, 8), (2, 2));
        assert_eq!(circle_count(3, 8), (4, 2));
    }

    #[test]
    fn zero_form() {
        let c = CoefficientSamples { n: 1, period: 1.0, values: vec![Mat::zeros(2, 2)], constant: true };
        let mut form = assemble(&c, 1, 4).unwrap();
        form.matrix.fill(0.0);
        assert_eq!(morse_index_nullity(&form, 1e-7), (0, 16));
    }

    #[test]
    fn constant_form_examples() {
        assert_eq!(constant_form_index(1.5 * PI, 1.0, 2).unwrap(), 4);
        assert_eq!(constant_form_index(0.5 * PI, 1.0, 3).unwrap(), 0);
        assert!(matches!(constant_form_index(2.0 * PI, 1.0, 1), Err(Error::ResonantForm { .. })));
        let form = constant_form(1.5 * PI, 1.0, 2, 16).unwrap();
        assert_eq!(morse_index_nullity(&form, 1e-7).0, 4);
    }

    #[test]
    fn dense_and_block_assembly_agree() {
        let c = Mat::from_row_slice(4, 4, &[0.6, 0.1, 0.0, 0.0, 0.1, 0.5, 0.0, 0.0, 0.0, 0.0, 0.6, 0.1, 0.0, 0.0, 0.1, 0.5]);
        let mut dense = CoefficientSamples::constant(c.clone(), 64);
        dense.constant = false;
        dense.period = 2.0;
        let block = CoefficientSamples { period: 2.0, ..CoefficientSamples::constant(c, 64) };
        let a = assemble(&dense, 2, 8).unwrap();
        let b = assemble(&block, 2, 8).unwrap();
        assert!((&a.matrix - &b.matrix).amax() < 1e-13);
        assert!(a.symmetry_defect() < 1e-12);
    }
}
