//! Hamiltonian flow of `H_alpha` together with its linearization.

use alloc::{format, vec, vec::Vec};

use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{symplectic_correct, symplectic_residual, Mat};
use crate::ode::{integrate, DenseSolution, OdeOptions};
use crate::path::SymplecticPath;
use crate::surface::SurfaceSpec;
use crate::symplectic::SymplecticMatrix;

#[derive(Clone, Copy, Debug)]
pub struct FlowOptions {
    pub ode: OdeOptions,
    /// Cocycles with a larger residual are pulled back onto Sp(2n).
    pub symplectic_tol: f64,
    /// Allowed `|H_alpha(x0) - 1|`.
    pub energy_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { ode: OdeOptions::default(), symplectic_tol: 1e-8, energy_tol: 1e-8 }
    }
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub end: Vec<f64>,
    pub cocycle: SymplecticMatrix,
    /// `|H_alpha(y(T)) - H_alpha(x0)|`.
    pub energy_drift: f64,
    /// Size of the symplectic correction applied to the cocycle, zero if none.
    pub correction: f64,
    pub solution: DenseSolution,
}

/// `J A` for `J = [[0, -I], [I, 0]]`.
pub(crate) fn apply_j_rows(a: &Mat) -> Mat {
    let dim = a.nrows();
    let n = dim / 2;
    Mat::from_fn(dim, a.ncols(), |i, j| if i < n { -a[(i + n, j)] } else { a[(i - n, j)] })
}

fn state_rhs(spec: &SurfaceSpec, y: &[f64], dy: &mut [f64], err: &mut Option<Error>) {
    if let Err(e) = spec.vector_field(y, dy) {
        err.get_or_insert(e);
        dy.iter_mut().for_each(|v| *v = 0.0);
    }
}

fn variational_rhs(spec: &SurfaceSpec, y: &[f64], dy: &mut [f64], err: &mut Option<Error>) {
    let dim = spec.dim();
    let gd = match spec.gauge_and_derivatives(&y[..dim]) {
        Ok(g) => g,
        Err(e) => {
            err.get_or_insert(e);
            dy.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
    };
    let n = spec.n;
    for i in 0..n {
        dy[i] = -gd.grad_h_alpha[n + i];
        dy[n + i] = gd.grad_h_alpha[i];
    }
    let w = Mat::from_column_slice(dim, dim, &y[dim..]);
    let jw = apply_j_rows(&gd.hess_h_alpha) * w;
    dy[dim..].copy_from_slice(jw.as_slice());
}

fn check_start(spec: &SurfaceSpec, x0: &[f64], opts: &FlowOptions) -> Result<f64> {
    if x0.len() != spec.dim() {
        return Err(Error::InvalidDimension(format!("start point has {} coordinates, expected {}", x0.len(), spec.dim())));
    }
    let h = spec.gauge_and_derivatives(x0)?.h_alpha;
    if (h - 1.0).abs() > opts.energy_tol {
        return Err(Error::InvalidParameter(format!("start point is off the surface: H_alpha - 1 = {:.3e}", h - 1.0)));
    }
    Ok(h)
}

/// Trajectory only, without the variational matrix.
pub fn integrate_state(spec: &SurfaceSpec, x0: &[f64], t: f64, opts: &FlowOptions) -> Result<DenseSolution> {
    check_start(spec, x0, opts)?;
    let mut err = None;
    let sol = integrate(|_, y, dy| state_rhs(spec, y, dy, &mut err), 0.0, x0, t, &opts.ode)?;
    match err {
        Some(e) => Err(e),
        None => Ok(sol),
    }
}

/// State and `2n x 2n` variational matrix integrated in the same steps.
pub fn integrate_flow(spec: &SurfaceSpec, x0: &[f64], t: f64, opts: &FlowOptions) -> Result<FlowResult> {
    let h0 = check_start(spec, x0, opts)?;
    let dim = spec.dim();
    let mut y0 = vec![0.0; dim + dim * dim];
    y0[..dim].copy_from_slice(x0);
    for i in 0..dim {
        y0[dim + i * dim + i] = 1.0;
    }
    let mut err = None;
    let sol = integrate(|_, y, dy| variational_rhs(spec, y, dy, &mut err), 0.0, &y0, t, &opts.ode)?;
    if let Some(e) = err {
        return Err(e);
    }
    let end = sol.end()[..dim].to_vec();
    let energy_drift = (spec.gauge_and_derivatives(&end)?.h_alpha - h0).abs();
    let w = Mat::from_column_slice(dim, dim, &sol.end()[dim..]);
    let (w, correction) = correct_if_needed(w, opts.symplectic_tol);
    if correction > 0.0 {
        log::debug!("cocycle pulled back onto Sp(2n), correction {correction:.3e}");
    }
    let cocycle = SymplecticMatrix::new(w, opts.symplectic_tol)?;
    Ok(FlowResult { end, cocycle, energy_drift, correction, solution: sol })
}

fn correct_if_needed(w: Mat, tol: f64) -> (Mat, f64) {
    if symplectic_residual(&w) <= tol {
        return (w, 0.0);
    }
    let before = w.clone();
    let (fixed, _) = symplectic_correct(&w);
    let delta = (&fixed - before).amax();
    (fixed, delta)
}

/// The linearized flow `t -> W(t)` along a trajectory, read from the dense
/// output of [`integrate_flow`].
#[derive(Clone, Debug)]
pub struct FlowPath {
    n: usize,
    tau: f64,
    hint: usize,
    solution: DenseSolution,
}

impl FlowPath {
    pub fn new(n: usize, solution: DenseSolution) -> Result<Self> {
        let dim = 2 * n;
        if solution.dim() != dim + dim * dim {
            return Err(Error::InvalidDimension("solution does not carry a variational matrix".into()));
        }
        let tau = solution.t1() - solution.t0();
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter("flow path needs positive duration".into()));
        }
        let hint = 64.max(4 * solution.num_steps());
        Ok(Self { n, tau, hint, solution })
    }

    pub fn from_flow(n: usize, flow: &FlowResult) -> Result<Self> {
        Self::new(n, flow.solution.clone())
    }

    pub fn solution(&self) -> &DenseSolution {
        &self.solution
    }

    pub fn state(&self, t: f64) -> Vec<f64> {
        let mut y = self.solution.eval(t);
        y.truncate(2 * self.n);
        y
    }
}

impl SymplecticPath for FlowPath {
    fn half_dim(&self) -> usize {
        self.n
    }
    fn period(&self) -> f64 {
        self.tau
    }
    fn eval(&self, t: f64) -> Mat {
        let dim = 2 * self.n;
        let y = self.solution.eval(self.solution.t0() + t.clamp(0.0, self.tau));
        let w = Mat::from_column_slice(dim, dim, &y[dim..]);
        correct_if_needed(w, 1e-10).0
    }
    fn sample_hint(&self) -> usize {
        self.hint
    }
}

/// `|| W(T) - exp(T J A) ||` for a quadratic Hamiltonian `x^T A x / 2` is a
/// useful sanity check; this returns the linear-flow matrix.
pub fn linear_flow(a: &Mat, t: f64) -> Mat {
    crate::linalg::expm(&(apply_j_rows(a) * t))
}

pub fn max_energy_error(spec: &SurfaceSpec, sol: &DenseSolution, samples: usize) -> Result<f64> {
    let dim = spec.dim();
    let (t0, t1) = (sol.t0(), sol.t1());
    let mut worst = 0.0f64;
    for k in 0..=samples.max(1) {
        let t = t0 + (t1 - t0) * k as f64 / samples.max(1) as f64;
        let y = sol.eval(t);
        let h = spec.gauge_and_derivatives(&y[..dim])?.h_alpha;
        worst = worst.max(Float::abs(h - 1.0));
    }
    Ok(worst)
}
