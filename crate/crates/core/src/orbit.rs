//! Closed characteristics: shooting Newton from seeds, deduplication, prime
//! periods, action and the associated symplectic path.

use alloc::{format, string::String, vec, vec::Vec};
use core::cmp::Ordering;
use core::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::angle::UnitAngle;
use crate::error::{Error, Result};
use crate::flow::{integrate_flow, integrate_state, max_energy_error, FlowOptions, FlowPath};
use crate::linalg::{eigenvalues, Mat};
use crate::ode::DenseSolution;
use crate::spectral::{cluster_eigenvalues, nu_omega};
use crate::surface::{norm, SurfaceSpec};
use crate::symplectic::SymplecticMatrix;

#[derive(Clone, Debug)]
pub struct OrbitOptions {
    /// Random seeds tried in addition to the coordinate-plane seeds.
    pub seeds: usize,
    pub rng_seed: u64,
    pub max_newton: usize,
    /// Closing defect accepted as converged, relative to the orbit size.
    pub newton_tol: f64,
    /// Relative Hausdorff distance under which two orbits are the same.
    pub dedup_tol: f64,
    pub flow: FlowOptions,
    /// Exponents at which the Floquet spectrum is recomputed.
    pub alpha_checks: Vec<f64>,
    pub alpha_tol: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self {
            seeds: 32,
            rng_seed: 0,
            max_newton: 40,
            newton_tol: 1e-9,
            dedup_tol: 1e-6,
            flow: FlowOptions::default(),
            alpha_checks: vec![1.2, 1.8],
            alpha_tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OrbitOrigin {
    ClosedForm { plane: usize },
    PlaneSeed { plane: usize },
    RandomSeed { index: usize },
}

#[derive(Clone, Debug)]
pub struct ClosedCharacteristic {
    pub start: Vec<f64>,
    /// Period under the `H_alpha` flow.
    pub tau: f64,
    pub alpha: f64,
    pub action: f64,
    pub monodromy: SymplecticMatrix,
    pub path: FlowPath,
    pub prime: bool,
    /// Eigenvalue 1 of the monodromy has geometric multiplicity above one, so
    /// the orbit sits in a family of closed orbits.
    pub non_isolated: bool,
    pub origin: OrbitOrigin,
    /// Largest `|H_alpha - 1|` along the orbit.
    pub energy_error: f64,
    pub diameter: f64,
}

impl ClosedCharacteristic {
    pub fn n(&self) -> usize {
        self.start.len() / 2
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        self.path.state(t.rem_euclid(self.tau))
    }

    /// `k` equally spaced points along one period.
    pub fn samples(&self, k: usize) -> Vec<(f64, Vec<f64>)> {
        (0..k)
            .map(|i| {
                let t = self.tau * i as f64 / k as f64;
                (t, self.point(t))
            })
            .collect()
    }

    /// `A(m tau, y) = m A(tau, y)`.
    pub fn iterate_action(&self, m: usize) -> f64 {
        m as f64 * self.action
    }
}

/// A seed for the shooting method: start point on the surface and period guess.
#[derive(Clone, Debug)]
pub struct Seed {
    pub x: Vec<f64>,
    pub period: f64,
    pub origin: OrbitOrigin,
}

/// A converged, not yet deduplicated closed orbit.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub x: Vec<f64>,
    pub period: f64,
    pub origin: OrbitOrigin,
}

#[derive(Clone, Debug)]
pub struct OrbitSearch {
    pub orbits: Vec<ClosedCharacteristic>,
    pub warnings: Vec<String>,
    pub seeds_tried: usize,
    pub seeds_converged: usize,
}

fn plane_seed(spec: &SurfaceSpec, k: usize) -> Result<Seed> {
    let mut x = vec![0.0; spec.dim()];
    x[k] = spec.radii[k];
    let x = spec.project(&x)?;
    let r2 = spec.radii[k] * spec.radii[k];
    Ok(Seed { x, period: 2.0 * PI * r2 / spec.alpha, origin: OrbitOrigin::PlaneSeed { plane: k } })
}

/// Coordinate-plane seeds followed by `opts.seeds` random ones. Random seeds
/// are surface points scattered around the plane seeds with growing spread.
pub fn seeds(spec: &SurfaceSpec, opts: &OrbitOptions) -> Result<Vec<Seed>> {
    spec.validate()?;
    let mut out = Vec::new();
    for k in 0..spec.n {
        out.push(plane_seed(spec, k)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    for i in 0..opts.seeds {
        let k = i % spec.n;
        let base = plane_seed(spec, k)?;
        let spread = 0.02 + 0.3 * (i / spec.n) as f64 / (opts.seeds / spec.n).max(1) as f64;
        let dir = spec.random_point(&mut rng)?;
        let x: Vec<f64> = base.x.iter().zip(&dir).map(|(a, b)| a + spread * b).collect();
        out.push(Seed { x: spec.project(&x)?, period: base.period, origin: OrbitOrigin::RandomSeed { index: i } });
    }
    Ok(out)
}

/// Bordered shooting Newton for `phi_T(x) = x` with the energy and a phase
/// condition, solved in the least-squares sense.
pub fn shoot(spec: &SurfaceSpec, x0: &[f64], period: f64, opts: &OrbitOptions) -> Result<(Vec<f64>, f64)> {
    let dim = spec.dim();
    let scale = norm(x0).max(1e-300);
    let mut x = spec.project(x0)?;
    let mut t = period;
    let x_ref = x.clone();
    let mut f_ref = vec![0.0; dim];
    spec.vector_field(&x_ref, &mut f_ref)?;
    let f_ref_norm = norm(&f_ref);
    let f_ref: Vec<f64> = f_ref.iter().map(|v| v / f_ref_norm).collect();
    let mut best = f64::INFINITY;
    for _ in 0..opts.max_newton {
        let flow = integrate_flow(spec, &x, t, &opts.flow)?;
        let defect: Vec<f64> = flow.end.iter().zip(&x).map(|(a, b)| a - b).collect();
        let size = norm(&defect) / scale;
        best = best.min(size);
        if size <= opts.newton_tol * 1e-1 {
            return Ok((x, t));
        }
        let mut f_end = vec![0.0; dim];
        spec.vector_field(&flow.end, &mut f_end)?;
        let grad = spec.gauge_and_derivatives(&x)?.grad_h_alpha;
        let rows = dim + 2;
        let mut jac = Mat::zeros(rows, dim + 1);
        let w = flow.cocycle.matrix();
        for i in 0..dim {
            for j in 0..dim {
                jac[(i, j)] = w[(i, j)] - if i == j { 1.0 } else { 0.0 };
            }
            jac[(i, dim)] = f_end[i];
            jac[(dim, i)] = grad[i];
            jac[(dim + 1, i)] = f_ref[i];
        }
        let mut rhs = DVector::zeros(rows);
        for i in 0..dim {
            rhs[i] = -defect[i];
        }
        rhs[dim + 1] = -(0..dim).map(|i| f_ref[i] * (x[i] - x_ref[i])).sum::<f64>();
        let svd = jac.svd(true, true);
        let top = svd.singular_values.max();
        let step = svd.solve(&rhs, 1e-10 * top).map_err(|e| Error::NumericalConsistency(e.into()))?;
        let mut step_norm = step.norm();
        let limit = 0.2 * scale;
        let damp = if step_norm > limit { limit / step_norm } else { 1.0 };
        step_norm *= damp;
        for i in 0..dim {
            x[i] += damp * step[i];
        }
        t += damp * step[dim];
        if !(t > 0.0) {
            return Err(Error::NumericalConsistency("shooting drove the period negative".into()));
        }
        x = spec.project(&x)?;
        if step_norm <= 1e-14 * scale && size <= opts.newton_tol {
            return Ok((x, t));
        }
    }
    let flow = integrate_flow(spec, &x, t, &opts.flow)?;
    let size = norm(&flow.end.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>()) / scale;
    if size <= opts.newton_tol {
        return Ok((x, t));
    }
    Err(Error::NumericalConsistency(format!("shooting did not close the orbit: defect {best:.3e}")))
}

/// Largest divisor `j <= 8` of the period at which the orbit already returns.
fn prime_divisor(spec: &SurfaceSpec, x: &[f64], t: f64, opts: &OrbitOptions) -> Result<usize> {
    let sol = integrate_state(spec, x, t, &opts.flow)?;
    let scale = norm(x);
    for j in (2..=8).rev() {
        let y = sol.eval(t / j as f64);
        let d = norm(&y.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>());
        if d <= 1e-5 * scale {
            return Ok(j);
        }
    }
    Ok(1)
}

pub fn converge_seed(spec: &SurfaceSpec, seed: &Seed, opts: &OrbitOptions) -> Option<Candidate> {
    let (mut x, mut t) = shoot(spec, &seed.x, seed.period, opts).ok()?;
    let j = prime_divisor(spec, &x, t, opts).ok()?;
    if j > 1 {
        let (x2, t2) = shoot(spec, &x, t / j as f64, opts).ok()?;
        x = x2;
        t = t2;
    }
    Some(Candidate { x, period: t, origin: seed.origin })
}

/// Gauss-Legendre nodes and weights on [0, 1].
const GL_NODES: [f64; 5] = [0.046910077030668, 0.230765344947158, 0.5, 0.769234655052842, 0.953089922969332];
const GL_WEIGHTS: [f64; 5] = [0.118463442528095, 0.239314335249683, 0.284444444444444, 0.239314335249683, 0.118463442528095];

/// `1/2 int (J y . y') dt` over the dense solution, whose first `2n`
/// components must be the state.
pub fn action_integral(spec: &SurfaceSpec, sol: &DenseSolution) -> Result<f64> {
    let dim = spec.dim();
    let n = spec.n;
    let mesh = sol.mesh();
    let mut total = 0.0;
    let mut f = vec![0.0; dim];
    for w in mesh.windows(2) {
        let h = w[1] - w[0];
        for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let y = sol.eval(w[0] + node * h);
            spec.vector_field(&y[..dim], &mut f)?;
            let mut dot = 0.0;
            for i in 0..n {
                dot += -y[n + i] * f[i] + y[i] * f[n + i];
            }
            total += weight * h * dot;
        }
    }
    Ok(0.5 * total)
}

/// Full record for a closed orbit through `x` with period `t`.
pub fn build_orbit(spec: &SurfaceSpec, x: &[f64], t: f64, origin: OrbitOrigin, opts: &OrbitOptions) -> Result<ClosedCharacteristic> {
    let flow = integrate_flow(spec, x, t, &opts.flow)?;
    let action = action_integral(spec, &flow.solution)?.abs();
    let energy_error = max_energy_error(spec, &flow.solution, 256)?;
    let path = FlowPath::from_flow(spec.n, &flow)?;
    let nu = nu_omega(flow.cocycle.matrix(), UnitAngle::ONE, 1e-6);
    let pts: Vec<Vec<f64>> = (0..128).map(|i| path.state(t * i as f64 / 128.0)).collect();
    let mut diameter = 0.0f64;
    for a in &pts {
        for b in &pts {
            diameter = diameter.max(dist(a, b));
        }
    }
    Ok(ClosedCharacteristic {
        start: x.to_vec(),
        tau: t,
        alpha: spec.alpha,
        action,
        monodromy: flow.cocycle,
        path,
        prime: true,
        non_isolated: nu >= 2,
        origin,
        energy_error,
        diameter,
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    Float::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
}

/// Distance from `p` to the closed curve of `orbit`, by nearest sample and a
/// golden-section refinement on the dense output.
fn distance_to_orbit(p: &[f64], orbit: &ClosedCharacteristic, grid: &[(f64, Vec<f64>)]) -> f64 {
    let (k, _) = grid
        .iter()
        .enumerate()
        .map(|(k, (_, q))| (k, dist(p, q)))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let h = orbit.tau / grid.len() as f64;
    let (mut a, mut b) = (grid[k].0 - h, grid[k].0 + h);
    let g = 0.5 * (Float::sqrt(5.0) - 1.0);
    let f = |t: f64| dist(p, &orbit.point(t));
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

/// Symmetric Hausdorff distance between the point sets of two orbits.
pub fn hausdorff(a: &ClosedCharacteristic, b: &ClosedCharacteristic) -> f64 {
    let ga = a.samples(256);
    let gb = b.samples(256);
    let one = |x: &ClosedCharacteristic, gx: &[(f64, Vec<f64>)], gy: &[(f64, Vec<f64>)]| {
        gy.iter().step_by(4).map(|(_, p)| distance_to_orbit(p, x, gx)).fold(0.0, f64::max)
    };
    one(b, &gb, &ga).max(one(a, &ga, &gb))
}

pub fn same_orbit(a: &ClosedCharacteristic, b: &ClosedCharacteristic, tol: f64) -> bool {
    let scale = a.diameter.max(b.diameter);
    if (a.action - b.action).abs() > 1e-4 * a.action.max(b.action) {
        return false;
    }
    hausdorff(a, b) <= tol * scale
}

fn compare_orbits(a: &ClosedCharacteristic, b: &ClosedCharacteristic) -> Ordering {
    if (a.action - b.action).abs() > 1e-9 * a.action.max(b.action) {
        return a.action.partial_cmp(&b.action).unwrap_or(Ordering::Equal);
    }
    // descending start coordinates, so plane 1 comes before plane 2 on ties
    for (x, y) in a.start.iter().zip(&b.start) {
        let (x, y) = ((x * 1e8).round(), (y * 1e8).round());
        if x != y {
            return y.partial_cmp(&x).unwrap_or(Ordering::Equal);
        }
    }
    Ordering::Equal
}

/// Deduplicates candidates (kept in the given order) and sorts by action.
pub fn merge(
    spec: &SurfaceSpec,
    known: Vec<ClosedCharacteristic>,
    candidates: Vec<Candidate>,
    opts: &OrbitOptions,
    warnings: &mut Vec<String>,
) -> Result<Vec<ClosedCharacteristic>> {
    let mut orbits = known;
    for c in candidates {
        let orbit = match build_orbit(spec, &c.x, c.period, c.origin, opts) {
            Ok(o) => o,
            Err(e) => {
                warnings.push(format!("dropped a converged seed: {e}"));
                continue;
            }
        };
        if orbits.iter().any(|o| same_orbit(o, &orbit, opts.dedup_tol)) {
            continue;
        }
        if orbit.non_isolated && matches!(c.origin, OrbitOrigin::RandomSeed { .. }) {
            // a random seed landing in a family of closed orbits adds nothing new
            continue;
        }
        orbits.push(orbit);
    }
    orbits.sort_by(compare_orbits);
    Ok(orbits)
}

/// Closed-form planar circles of an ellipsoid.
pub fn ellipsoid_orbits(spec: &SurfaceSpec, opts: &OrbitOptions) -> Result<Vec<ClosedCharacteristic>> {
    (0..spec.n)
        .map(|k| {
            let (x, t, _) = spec.planar_orbit(k);
            build_orbit(spec, &x, t, OrbitOrigin::ClosedForm { plane: k }, opts)
        })
        .collect()
}

/// Sequential search. The `pinchcheck` crate runs the seeds in parallel with
/// the same [`seeds`], [`converge_seed`] and [`merge`].
pub fn find_orbits(spec: &SurfaceSpec, opts: &OrbitOptions) -> Result<OrbitSearch> {
    let all = seeds(spec, opts)?;
    let candidates: Vec<Option<Candidate>> = all.iter().map(|s| converge_seed(spec, s, opts)).collect();
    finish_search(spec, &all, candidates, opts)
}

pub fn finish_search(
    spec: &SurfaceSpec,
    all: &[Seed],
    candidates: Vec<Option<Candidate>>,
    opts: &OrbitOptions,
) -> Result<OrbitSearch> {
    let mut warnings = Vec::new();
    let converged = candidates.iter().filter(|c| c.is_some()).count();
    let known = if spec.is_ellipsoid() { ellipsoid_orbits(spec, opts)? } else { Vec::new() };
    let closed_form = known.len();
    let orbits = merge(spec, known, candidates.into_iter().flatten().collect(), opts, &mut warnings)?;
    if spec.is_ellipsoid() && orbits.len() > closed_form {
        warnings.push(format!("shooting found {} orbits beyond the planar circles", orbits.len() - closed_form));
    }
    if orbits.len() < spec.n {
        warnings.push(format!("search-incomplete: found {} closed orbits, expected at least {}", orbits.len(), spec.n));
    }
    for o in &orbits {
        if o.non_isolated {
            warnings.push(format!("orbit with action {:.9} is non-isolated", o.action));
        }
    }
    Ok(OrbitSearch { orbits, warnings, seeds_tried: all.len(), seeds_converged: converged })
}

/// Monodromy and symplectic path of the linearized `H_alpha` flow along `orbit`.
pub fn monodromy_and_path(spec: &SurfaceSpec, orbit: &ClosedCharacteristic, opts: &FlowOptions) -> Result<(SymplecticMatrix, FlowPath)> {
    let flow = integrate_flow(spec, &orbit.start, orbit.tau, opts)?;
    let path = FlowPath::from_flow(spec.n, &flow)?;
    Ok((flow.cocycle, path))
}

/// Monodromy of the same geometric orbit under `H_beta`; the period scales by
/// `alpha / beta`.
pub fn monodromy_at_alpha(spec: &SurfaceSpec, orbit: &ClosedCharacteristic, beta: f64, opts: &FlowOptions) -> Result<SymplecticMatrix> {
    let other = spec.with_alpha(beta);
    other.validate()?;
    Ok(integrate_flow(&other, &orbit.start, orbit.tau * orbit.alpha / beta, opts)?.cocycle)
}

fn clustered_spectrum(m: &Mat) -> Vec<Complex64> {
    let mut out = Vec::new();
    for c in cluster_eigenvalues(&eigenvalues(m), 1e-4) {
        let mean = c.iter().sum::<Complex64>() / c.len() as f64;
        out.extend(core::iter::repeat_n(mean, c.len()));
    }
    out
}

/// Largest distance between matched eigenvalues, with tight clusters replaced
/// by their means so that split Jordan blocks compare stably.
pub fn spectrum_distance(a: &Mat, b: &Mat) -> f64 {
    let sa = clustered_spectrum(a);
    let mut sb = clustered_spectrum(b);
    let mut worst = 0.0f64;
    for z in sa {
        let Some((k, d)) = sb.iter().enumerate().map(|(k, w)| (k, (z - w).norm())).min_by(|x, y| x.1.total_cmp(&y.1))
        else {
            return f64::INFINITY;
        };
        worst = worst.max(d);
        sb.swap_remove(k);
    }
    worst
}

/// Deviation of the Floquet spectrum across `opts.alpha_checks`.
pub fn alpha_consistency(spec: &SurfaceSpec, orbit: &ClosedCharacteristic, opts: &OrbitOptions) -> Result<f64> {
    let mut worst = 0.0f64;
    for &beta in &opts.alpha_checks {
        let m = monodromy_at_alpha(spec, orbit, beta, &opts.flow)?;
        worst = worst.max(spectrum_distance(orbit.monodromy.matrix(), m.matrix()));
    }
    if worst > opts.alpha_tol {
        return Err(Error::AlphaInconsistency { deviation: worst });
    }
    Ok(worst)
}

/// Trajectory of the `H_2` flow through the orbit start over one period
/// `T_2 = A(tau, y)`.
pub fn h2_solution(spec: &SurfaceSpec, orbit: &ClosedCharacteristic, opts: &FlowOptions) -> Result<(DenseSolution, f64)> {
    let h2 = spec.with_alpha(2.0);
    let t2 = orbit.action;
    Ok((integrate_state(&h2, &orbit.start, t2, opts)?, t2))
}
