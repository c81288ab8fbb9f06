//! Convex hypersurfaces given by a gauge function: ellipsoids and ellipsoids
//! with a small quartic perturbation.

use alloc::{format, vec, vec::Vec};
use core::f64::consts::PI;

use nalgebra::DVector;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Ellipsoid,
    Perturbed,
}

/// `G(x) = sum_ij C_ij x_i^2 x_j^2` scaled by `delta`, with `C` given row-major
/// as a `2n x 2n` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub delta: f64,
    pub quartic_coeffs: Vec<f64>,
}

fn default_alpha() -> f64 {
    1.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub kind: SurfaceKind,
    pub n: usize,
    pub radii: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
}

/// Gauge `j` and the derived Hamiltonians `H_2 = j^2`, `H_alpha = j^alpha`.
#[derive(Clone, Debug)]
pub struct GaugeData {
    pub j: f64,
    pub h2: f64,
    pub grad_h2: DVector<f64>,
    pub hess_h2: Mat,
    pub h_alpha: f64,
    pub grad_h_alpha: DVector<f64>,
    pub hess_h_alpha: Mat,
}

impl SurfaceSpec {
    pub fn ellipsoid(radii: &[f64]) -> Self {
        Self { kind: SurfaceKind::Ellipsoid, n: radii.len(), radii: radii.to_vec(), alpha: default_alpha(), perturbation: None }
    }

    pub fn perturbed(radii: &[f64], delta: f64, quartic_coeffs: Vec<f64>) -> Self {
        Self {
            kind: SurfaceKind::Perturbed,
            n: radii.len(),
            radii: radii.to_vec(),
            alpha: default_alpha(),
            perturbation: Some(Perturbation { delta, quartic_coeffs }),
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Structural checks; convexity of perturbed surfaces is checked separately.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidDimension("n must be positive".into()));
        }
        if self.radii.len() != self.n {
            return Err(Error::InvalidParameter(format!("expected {} radii, got {}", self.n, self.radii.len())));
        }
        if let Some(r) = self.radii.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidParameter(format!("radii must be positive, got {r}")));
        }
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must exceed 1, got {}", self.alpha)));
        }
        match (self.kind, &self.perturbation) {
            (SurfaceKind::Ellipsoid, Some(p)) if p.delta != 0.0 => {
                return Err(Error::InvalidParameter("ellipsoid with a nonzero perturbation; use kind \"perturbed\"".into()));
            }
            (SurfaceKind::Perturbed, None) => {
                return Err(Error::InvalidParameter("perturbed surface needs a perturbation".into()));
            }
            _ => {}
        }
        if let Some(p) = &self.perturbation {
            let m = 2 * self.n;
            if p.quartic_coeffs.len() != m * m {
                return Err(Error::InvalidParameter(format!(
                    "quartic_coeffs needs {} entries, got {}",
                    m * m,
                    p.quartic_coeffs.len()
                )));
            }
            if !p.delta.is_finite() || p.quartic_coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidParameter("perturbation must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn is_ellipsoid(&self) -> bool {
        match &self.perturbation {
            None => true,
            Some(p) => p.delta == 0.0 || p.quartic_coeffs.iter().all(|c| *c == 0.0),
        }
    }

    fn quad_weight(&self, i: usize) -> f64 {
        let r = self.radii[i % self.n];
        1.0 / (r * r)
    }

    /// `x^T Q x` with `Q = diag(1/r^2)` on both coordinate blocks.
    fn quadratic(&self, x: &[f64]) -> f64 {
        x.iter().enumerate().map(|(i, v)| self.quad_weight(i) * v * v).sum()
    }

    fn symmetric_coeffs(&self) -> Option<(f64, Mat)> {
        let p = self.perturbation.as_ref()?;
        if self.is_ellipsoid() {
            return None;
        }
        let m = 2 * self.n;
        let c = Mat::from_row_slice(m, m, &p.quartic_coeffs);
        Some((p.delta, &c + c.transpose()))
    }

    /// `G`, its gradient and Hessian at `x`.
    fn defining(&self, x: &[f64]) -> (f64, DVector<f64>, Mat) {
        let m = 2 * self.n;
        let mut g = self.quadratic(x);
        let mut grad = DVector::from_fn(m, |i, _| 2.0 * self.quad_weight(i) * x[i]);
        let mut hess = Mat::from_diagonal(&DVector::from_fn(m, |i, _| 2.0 * self.quad_weight(i)));
        if let Some((delta, s)) = self.symmetric_coeffs() {
            let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
            let mut p4 = 0.0;
            for k in 0..m {
                let row: f64 = (0..m).map(|j| s[(k, j)] * sq[j]).sum();
                p4 += 0.5 * sq[k] * row;
                grad[k] += delta * 2.0 * x[k] * row;
                hess[(k, k)] += delta * 2.0 * row;
                for l in 0..m {
                    hess[(k, l)] += delta * 4.0 * x[k] * s[(k, l)] * x[l];
                }
            }
            g += delta * p4;
        }
        (g, grad, hess)
    }

    /// The gauge `j(x)`, i.e. the `lambda > 0` with `x / lambda` on the surface.
    pub fn gauge(&self, x: &[f64]) -> Result<f64> {
        let q = self.quadratic(x);
        match self.symmetric_coeffs() {
            None => Ok(Float::sqrt(q)),
            Some(_) => {
                // G(x/l) = q/l^2 + p/l^4 with p the perturbation part: a quadratic in 1/l^2
                let (g, _, _) = self.defining(x);
                let p = g - q;
                let disc = q * q + 4.0 * p;
                if !(disc >= 0.0) || !(q > 0.0) {
                    return Err(Error::GaugeDiverged { norm: norm(x) });
                }
                let u = 2.0 / (q + Float::sqrt(disc));
                if !(u > 0.0) || !u.is_finite() {
                    return Err(Error::GaugeDiverged { norm: norm(x) });
                }
                Ok(1.0 / Float::sqrt(u))
            }
        }
    }

    pub fn gauge_and_derivatives(&self, x: &[f64]) -> Result<GaugeData> {
        if x.len() != 2 * self.n {
            return Err(Error::InvalidDimension(format!("point has {} coordinates, expected {}", x.len(), 2 * self.n)));
        }
        if norm(x) == 0.0 {
            return Err(Error::InvalidParameter("gauge is singular at the origin".into()));
        }
        let alpha = self.alpha;
        if self.symmetric_coeffs().is_none() {
            let h2 = self.quadratic(x);
            let grad_h2 = DVector::from_fn(x.len(), |i, _| 2.0 * self.quad_weight(i) * x[i]);
            let hess_h2 = Mat::from_diagonal(&DVector::from_fn(x.len(), |i, _| 2.0 * self.quad_weight(i)));
            let a2 = alpha / 2.0;
            let h_alpha = Float::powf(h2, a2);
            let grad_h_alpha = &grad_h2 * (a2 * Float::powf(h2, a2 - 1.0));
            let hess_h_alpha = &grad_h2 * grad_h2.transpose() * (a2 * (a2 - 1.0) * Float::powf(h2, a2 - 2.0))
                + &hess_h2 * (a2 * Float::powf(h2, a2 - 1.0));
            return Ok(GaugeData { j: Float::sqrt(h2), h2, grad_h2, hess_h2, h_alpha, grad_h_alpha, hess_h_alpha });
        }
        let j = self.gauge(x)?;
        let z: Vec<f64> = x.iter().map(|v| v / j).collect();
        let zv = DVector::from_column_slice(&z);
        let (_, g, hg) = self.defining(&z);
        let gz = g.dot(&zv);
        let grad_j = &g / gz;
        let m = x.len();
        let dphi = &hg / gz - &g * (&hg * &zv + &g).transpose() / (gz * gz);
        let dz = (Mat::identity(m, m) - &zv * grad_j.transpose()) / j;
        let hj = dphi * dz;
        let hess_j = (&hj + hj.transpose()) * 0.5;
        let outer = &grad_j * grad_j.transpose();
        Ok(GaugeData {
            j,
            h2: j * j,
            grad_h2: &grad_j * (2.0 * j),
            hess_h2: &outer * 2.0 + &hess_j * (2.0 * j),
            h_alpha: Float::powf(j, alpha),
            grad_h_alpha: &grad_j * (alpha * Float::powf(j, alpha - 1.0)),
            hess_h_alpha: &outer * (alpha * (alpha - 1.0) * Float::powf(j, alpha - 2.0))
                + &hess_j * (alpha * Float::powf(j, alpha - 1.0)),
        })
    }

    /// `x / j(x)`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let j = self.gauge(x)?;
        Ok(x.iter().map(|v| v / j).collect())
    }

    /// Uniformly random direction pushed onto the surface.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        loop {
            let v: Vec<f64> = (0..2 * self.n).map(|_| gaussian(rng)).collect();
            if norm(&v) > 1e-6 {
                return self.project(&v);
            }
        }
    }

    /// Samples the Hessian of `H_2` at `samples` surface points; an error if it
    /// fails to be positive definite anywhere.
    pub fn check_convexity(&self, samples: usize, seed: u64) -> Result<()> {
        if self.is_ellipsoid() {
            return Ok(());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let x = self.random_point(&mut rng)?;
            let gd = self.gauge_and_derivatives(&x)?;
            let eig = gd.hess_h2.clone().symmetric_eigen().eigenvalues;
            let lo = eig.iter().fold(f64::INFINITY, |a, b| a.min(*b));
            if !(lo > 0.0) {
                return Err(Error::NonConvex(format!("Hessian of H_2 has eigenvalue {lo:.3e} at a surface point")));
            }
        }
        Ok(())
    }

    /// `(r, R)` with `1/R^2 <= H_2''/2 <= 1/r^2` on the surface.
    pub fn pinching_constants(&self, samples: usize, seed: u64) -> Result<Pinching> {
        if self.is_ellipsoid() {
            let r = self.radii.iter().copied().fold(f64::INFINITY, f64::min);
            let big = self.radii.iter().copied().fold(0.0, f64::max);
            return Ok(Pinching { r, big_r: big, ratio: big / r, exact: true, sampling_margin: 0.0 });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        let (mut lo_half, mut hi_half) = (f64::INFINITY, 0.0f64);
        for k in 0..samples.max(2) {
            let x = self.random_point(&mut rng)?;
            let gd = self.gauge_and_derivatives(&x)?;
            let eig = (gd.hess_h2 * 0.5).symmetric_eigen().eigenvalues;
            for e in eig.iter() {
                lo = lo.min(*e);
                hi = hi.max(*e);
            }
            if k + 1 == samples.max(2) / 2 {
                lo_half = lo;
                hi_half = hi;
            }
        }
        if !(lo > 0.0) {
            return Err(Error::NonConvex("Hessian of H_2 not positive definite".into()));
        }
        let r = 1.0 / Float::sqrt(hi);
        let big = 1.0 / Float::sqrt(lo);
        let margin = (1.0 / Float::sqrt(hi_half) - r).abs().max((big - 1.0 / Float::sqrt(lo_half)).abs());
        Ok(Pinching { r, big_r: big, ratio: big / r, exact: false, sampling_margin: margin })
    }

    /// Closed-form planar circles of an ellipsoid: orbit `k` lies in the
    /// `(x_k, y_k)` plane, has radius `r_k` and action `pi r_k^2`.
    pub fn planar_orbit(&self, k: usize) -> (Vec<f64>, f64, f64) {
        let mut x = vec![0.0; 2 * self.n];
        x[k] = self.radii[k];
        let r2 = self.radii[k] * self.radii[k];
        (x, 2.0 * PI * r2 / self.alpha, PI * r2)
    }

    /// `J grad H_alpha`.
    pub fn vector_field(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let gd = self.gauge_and_derivatives(x)?;
        let n = self.n;
        for i in 0..n {
            out[i] = -gd.grad_h_alpha[n + i];
            out[n + i] = gd.grad_h_alpha[i];
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pinching {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub ratio: f64,
    pub exact: bool,
    /// Change of the estimate between half and all of the samples.
    pub sampling_margin: f64,
}

pub fn norm(x: &[f64]) -> f64 {
    Float::sqrt(x.iter().map(|v| v * v).sum::<f64>())
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random_range(1e-300..1.0);
    let u2: f64 = rng.random();
    Float::sqrt(-2.0 * Float::ln(u1)) * Float::cos(2.0 * PI * u2)
}
