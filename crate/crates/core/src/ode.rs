//! Dormand-Prince 5(4) with Hairer's continuous extension.

use alloc::{vec, vec::Vec};

use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Steps shorter than this fraction of the interval count as underflow.
    pub min_step_fraction: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-12, max_steps: 2_000_000, min_step_fraction: 1e-14 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Accepted steps of an integration together with their interpolation data.
#[derive(Clone, Debug)]
pub struct DenseSolution {
    dim: usize,
    t0: f64,
    y0: Vec<f64>,
    /// Start time of each step.
    times: Vec<f64>,
    steps: Vec<f64>,
    /// Five coefficient vectors per step, stored contiguously.
    coeffs: Vec<f64>,
    end: Vec<f64>,
}

impl DenseSolution {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        match self.times.last() {
            Some(t) => t + self.steps[self.steps.len() - 1],
            None => self.t0,
        }
    }

    pub fn num_steps(&self) -> usize {
        self.times.len()
    }

    pub fn start(&self) -> &[f64] {
        &self.y0
    }

    pub fn end(&self) -> &[f64] {
        &self.end
    }

    /// Start times of the accepted steps plus the final time.
    pub fn mesh(&self) -> Vec<f64> {
        let mut m = self.times.clone();
        m.push(self.t1());
        m
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        if self.times.is_empty() {
            out.copy_from_slice(&self.y0);
            return;
        }
        let k = match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(k) => k,
            Err(0) => 0,
            Err(k) => k - 1,
        };
        let h = self.steps[k];
        let theta = ((t - self.times[k]) / h).clamp(0.0, 1.0);
        let th1 = 1.0 - theta;
        let d = self.dim;
        let c = &self.coeffs[5 * d * k..5 * d * (k + 1)];
        for i in 0..d {
            out[i] = c[i] + theta * (c[d + i] + th1 * (c[2 * d + i] + theta * (c[3 * d + i] + th1 * c[4 * d + i])));
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 >= t0`.
pub fn integrate<F>(mut f: F, t0: f64, y0: &[f64], t1: f64, opts: &OdeOptions) -> Result<DenseSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let d = y0.len();
    let mut sol = DenseSolution {
        dim: d,
        t0,
        y0: y0.to_vec(),
        times: Vec::new(),
        steps: Vec::new(),
        coeffs: Vec::new(),
        end: y0.to_vec(),
    };
    let span = t1 - t0;
    if !(span > 0.0) {
        return Ok(sol);
    }
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let mut k5 = vec![0.0; d];
    let mut k6 = vec![0.0; d];
    let mut k7 = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    let mut y1 = vec![0.0; d];
    f(t, &y, &mut k1);
    let mut h = initial_step(&y, &k1, span, opts);
    let mut fac_old: f64 = 1e-4;
    let mut rejected = false;
    for _ in 0..opts.max_steps {
        if t >= t1 {
            break;
        }
        if h < opts.min_step_fraction * span {
            return Err(Error::StiffFlow { t });
        }
        let last = t + h >= t1 - 1e-15 * span;
        if last {
            h = t1 - t;
        }
        for i in 0..d {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &tmp, &mut k2);
        for i in 0..d {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &tmp, &mut k3);
        for i in 0..d {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &tmp, &mut k4);
        for i in 0..d {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &tmp, &mut k5);
        for i in 0..d {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, &tmp, &mut k6);
        for i in 0..d {
            y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + h, &y1, &mut k7);
        let mut err = 0.0;
        for i in 0..d {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * Float::abs(y[i]).max(Float::abs(y1[i]));
            err += (e / sc) * (e / sc);
        }
        let err = Float::sqrt(err / d.max(1) as f64);
        if !err.is_finite() {
            h *= 0.1;
            rejected = true;
            continue;
        }
        // Lund stabilisation as in DOPRI5
        let fac11 = Float::powf(err, 0.2 - 0.04 * 0.75);
        let mut fac = fac11 / Float::powf(fac_old, 0.04);
        fac = (fac / 0.9).clamp(0.1, 5.0);
        let h_new = h / fac;
        if err <= 1.0 {
            fac_old = err.max(1e-4);
            sol.times.push(t);
            sol.steps.push(h);
            let base = sol.coeffs.len();
            sol.coeffs.resize(base + 5 * d, 0.0);
            let c = &mut sol.coeffs[base..];
            for i in 0..d {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                c[i] = y[i];
                c[d + i] = ydiff;
                c[2 * d + i] = bspl;
                c[3 * d + i] = ydiff - h * k7[i] - bspl;
                c[4 * d + i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            t = if last { t1 } else { t + h };
            core::mem::swap(&mut y, &mut y1);
            core::mem::swap(&mut k1, &mut k7);
            h = if rejected { h_new.min(h) } else { h_new };
            rejected = false;
        } else {
            h /= (fac11 / 0.9).min(10.0).max(1.0);
            rejected = true;
        }
    }
    if t < t1 {
        return Err(Error::StiffFlow { t });
    }
    sol.end = y;
    Ok(sol)
}

fn initial_step(y: &[f64], f0: &[f64], span: f64, opts: &OdeOptions) -> f64 {
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..y.len() {
        let sk = opts.atol + opts.rtol * Float::abs(y[i]);
        dnf += (f0[i] / sk) * (f0[i] / sk);
        dny += (y[i] / sk) * (y[i] / sk);
    }
    let h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * Float::sqrt(dny / dnf) };
    h.min(span).max(1e-10 * span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_and_dense_output() {
        let f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = -y[1];
            dy[1] = y[0];
        };
        let sol = integrate(f, 0.0, &[1.0, 0.0], 10.0, &OdeOptions::default()).unwrap();
        let end = sol.end();
        assert!((end[0] - 10.0f64.cos()).abs() < 1e-10);
        assert!((end[1] - 10.0f64.sin()).abs() < 1e-10);
        for k in 0..97 {
            let t = 10.0 * k as f64 / 97.0;
            let y = sol.eval(t);
            assert!((y[0] - t.cos()).abs() < 1e-9, "t = {t}");
            assert!((y[1] - t.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn dense_output_is_accurate_between_coarse_steps() {
        let f = |t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * t.cos();
        let opts = OdeOptions { rtol: 1e-7, atol: 1e-9, ..OdeOptions::default() };
        let sol = integrate(f, 0.0, &[1.0], 6.0, &opts).unwrap();
        for k in 0..200 {
            let t = 6.0 * k as f64 / 200.0;
            assert!((sol.eval(t)[0] - t.sin().exp()).abs() < 5e-6);
        }
    }

    #[test]
    fn zero_span_returns_start() {
        let sol = integrate(|_, _, dy: &mut [f64]| dy[0] = 1.0, 0.0, &[2.0], 0.0, &OdeOptions::default()).unwrap();
        assert_eq!(sol.end(), &[2.0]);
        assert_eq!(sol.eval(0.0), alloc::vec![2.0]);
    }
}
