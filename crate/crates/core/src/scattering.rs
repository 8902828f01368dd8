//! Zero-energy scattering: `(-2Δ + w) f = 0`, `f → 1` at infinity.
//!
//! With `u(r) = r f(r)` the s-wave equation reads `u'' = (w/2) u`. Outside the range
//! `u` is linear and `f = 1 - a/r`, which defines the scattering length `a`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::RadialPotential;
use crate::quad::integrate_pieces;

/// Solution of the zero-energy scattering problem on a log-spaced mesh.
#[derive(Clone, Debug)]
pub struct ScatteringResult {
    pub a: f64,
    /// `(r, u(r), u'(r))`, normalized so that `u' → 1` outside the range.
    pub u_samples: Vec<(f64, f64, f64)>,
    /// Start of the outer quarter used for the fit.
    pub r_fit: f64,
    /// Max deviation of `r - u/u'` from `a` on the outer quarter.
    pub residual: f64,
    pot: RadialPotential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BornGap {
    pub eight_pi_a: f64,
    pub integral_w: f64,
    pub gap: f64,
}

/// Dormand-Prince 5(4) coefficients.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

type State = [f64; 2];

/// Integrates `y' = rhs(r, y)` from `r0` to `r1` with adaptive Dormand-Prince steps.
/// `h` carries the step size between calls.
fn dopri_segment<F: Fn(f64, &State) -> State>(
    rhs: &F,
    r0: f64,
    r1: f64,
    y: &mut State,
    h: &mut f64,
    rtol: f64,
) -> Result<()> {
    let mut r = r0;
    let mut steps = 0usize;
    let span = r1 - r0;
    if span <= 0.0 {
        return Ok(());
    }
    if *h <= 0.0 || *h > span {
        *h = span;
    }
    while r < r1 {
        steps += 1;
        if steps > 1_000_000 {
            return Err(Error::NonConvergence { what: "scattering ODE step control", residual: *h });
        }
        let hstep = h.min(r1 - r);
        let mut k = [[0.0; 2]; 7];
        k[0] = rhs(r, y);
        for s in 1..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                ys[0] += hstep * A[s][j] * kj[0];
                ys[1] += hstep * A[s][j] * kj[1];
            }
            k[s] = rhs(r + C[s] * hstep, &ys);
        }
        let mut y5 = *y;
        let mut err = 0.0f64;
        for c in 0..2 {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][c];
                d4 += B4[s] * k[s][c];
            }
            y5[c] += hstep * d5;
            let scale = rtol * (1e-300 + y[c].abs().max(y5[c].abs()));
            err = err.max((hstep * (d5 - d4)).abs() / scale);
        }
        if err <= 1.0 || hstep < 1e-14 * span.max(r.abs()) {
            r += hstep;
            *y = y5;
            if r1 - r < 1e-15 * r1.abs() {
                r = r1;
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        *h = hstep * factor;
    }
    Ok(())
}

fn cubic_hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = (6.0 * t2 - 6.0 * t) / h;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = (-6.0 * t2 + 6.0 * t) / h;
    let dh11 = 3.0 * t2 - 2.0 * t;
    let d = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
    (v, d)
}

impl ScatteringResult {
    /// `(u(r), u'(r))` by Hermite interpolation of the stored mesh; linear continuation
    /// outside the mesh.
    pub fn u(&self, r: f64) -> (f64, f64) {
        let s = &self.u_samples;
        let last = s[s.len() - 1];
        if r >= last.0 {
            return (last.1 + last.2 * (r - last.0), last.2);
        }
        let idx = s.partition_point(|p| p.0 <= r).max(1);
        let (x0, y0, d0) = s[idx - 1];
        let (x1, y1, d1) = s[idx];
        cubic_hermite(x0, x1, y0, y1, d0, d1, r)
    }

    /// `f(r) = u(r)/r` with its derivative; continuous at the origin.
    pub fn f(&self, r: f64) -> (f64, f64) {
        let (r_start, _, slope0) = self.u_samples[0];
        if r < r_start {
            // inside a hard core
            return (0.0, 0.0);
        }
        if r_start == 0.0 && r < self.u_samples[1].0 {
            // u = u'(0) (r + w(0) r³/12 + ...) near the origin
            let c = self.pot.value(0.0) / 12.0;
            return (slope0 * (1.0 + c * r * r), slope0 * 2.0 * c * r);
        }
        let (u, du) = self.u(r);
        (u / r, (du * r - u) / (r * r))
    }

    /// The scattering solution viewed as a variational trial function.
    pub fn trial(&self) -> ScatteringTrial<'_> {
        ScatteringTrial { result: self }
    }
}

/// Computes the scattering length by outward integration of `u'' = (w/2) u`.
pub fn scattering_length(pot: &RadialPotential, r_max: f64, tol: f64) -> Result<ScatteringResult> {
    let r0 = pot.range();
    if !(r_max > 2.0 * r0) {
        return Err(Error::InvalidParameter(format!("r_max = {r_max} must exceed 2·R0 = {}", 2.0 * r0)));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }

    let start = if pot.is_hard_core() { r0 } else { 0.0 };
    let mut nodes: Vec<f64> = vec![start];
    let lo = (r0 * 1e-4).max(start);
    let count = 400;
    let (la, lb) = (lo.max(1e-300).ln(), r_max.ln());
    for i in 0..=count {
        let r = (la + (lb - la) * i as f64 / count as f64).exp();
        if r > start {
            nodes.push(r);
        }
    }
    if !pot.is_hard_core() {
        nodes.extend(pot.breakpoints().into_iter().filter(|&b| b > 0.0));
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
    if let Some(l) = nodes.last_mut() {
        *l = r_max;
    }

    let rhs = |r: f64, y: &State| -> State { [y[1], 0.5 * pot.value(r) * y[0]] };
    let mut y: State = [0.0, 1.0];
    let mut samples = vec![(nodes[0], y[0], y[1])];
    let mut h = 0.0;
    let rtol = 1e-13;
    for w in nodes.windows(2) {
        dopri_segment(&rhs, w[0], w[1], &mut y, &mut h, rtol)?;
        samples.push((w[1], y[0], y[1]));
        let mag = y[0].abs().max(y[1].abs());
        if mag > 1e100 {
            y = [y[0] / mag, y[1] / mag];
            for s in samples.iter_mut() {
                s.1 /= mag;
                s.2 /= mag;
            }
        }
    }

    let slope = samples.last().unwrap().2;
    for s in samples.iter_mut() {
        s.1 /= slope;
        s.2 /= slope;
    }

    let r_fit = r0 + 0.75 * (r_max - r0);
    let outer: Vec<f64> = samples.iter().filter(|s| s.0 >= r_fit).map(|s| s.0 - s.1 / s.2).collect();
    let a = outer.iter().sum::<f64>() / outer.len() as f64;
    let residual = outer.iter().map(|v| (v - a).abs()).fold(0.0, f64::max);
    if residual > tol {
        return Err(Error::NonConvergence { what: "scattering length extraction", residual });
    }
    Ok(ScatteringResult { a, u_samples: samples, r_fit, residual, pot: pot.clone() })
}

/// A radial trial function `f` for the variational characterization of `8πa`.
pub trait RadialTrial {
    fn value(&self, r: f64) -> f64;
    fn derivative(&self, r: f64) -> f64;
    /// Points where `f` or `f'` may be non-smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Trial built from closures for `f` and `f'`.
pub struct FnTrial<F, G> {
    pub f: F,
    pub df: G,
    pub kinks: Vec<f64>,
}

impl<F: Fn(f64) -> f64, G: Fn(f64) -> f64> RadialTrial for FnTrial<F, G> {
    fn value(&self, r: f64) -> f64 {
        (self.f)(r)
    }
    fn derivative(&self, r: f64) -> f64 {
        (self.df)(r)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.kinks.clone()
    }
}

pub struct ScatteringTrial<'a> {
    result: &'a ScatteringResult,
}

impl RadialTrial for ScatteringTrial<'_> {
    fn value(&self, r: f64) -> f64 {
        self.result.f(r).0
    }
    fn derivative(&self, r: f64) -> f64 {
        self.result.f(r).1
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.result.u_samples.iter().map(|s| s.0).collect()
    }
}

/// `∫ 2|∇f|² + w|f|²` over `ℝ³` for a radial trial, by radial quadrature up to `r_max`
/// plus the tail `8π c²/r_max` of a `1 - c/r` continuation (`c = r_max² f'(r_max)`).
///
/// For a hard core the trial must vanish inside the core; otherwise the energy is infinite.
pub fn variational_energy<T: RadialTrial + ?Sized>(trial: &T, pot: &RadialPotential, r_max: f64) -> Result<f64> {
    let deviation = (trial.value(r_max) - 1.0).abs();
    if !(deviation < 0.01) {
        return Err(Error::TrialNormalization { deviation });
    }
    let r0 = pot.range();
    if r_max <= r0 {
        return Err(Error::InvalidParameter("r_max must exceed the potential range".into()));
    }
    let start = if pot.is_hard_core() {
        for i in 0..64 {
            let r = r0 * i as f64 / 64.0;
            if trial.value(r).abs() > 1e-12 {
                return Ok(f64::INFINITY);
            }
        }
        r0
    } else {
        0.0
    };
    let mut breaks = vec![start, r_max];
    breaks.extend(trial.breakpoints().into_iter().filter(|&b| b > start && b < r_max));
    if !pot.is_hard_core() {
        breaks.extend(pot.breakpoints().into_iter().filter(|&b| b > start && b < r_max));
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let integrand = |r: f64| {
        let f = trial.value(r);
        let df = trial.derivative(r);
        (2.0 * df * df + pot.value(r) * f * f) * r * r
    };
    let body = 4.0 * PI * integrate_pieces(integrand, &breaks, 1e-13, 1e-12)?;
    let c = r_max * r_max * trial.derivative(r_max);
    Ok(body + 8.0 * PI * c * c / r_max)
}

/// `∫w - 8πa`, strictly positive for any nonzero soft potential.
pub fn born_gap(pot: &RadialPotential) -> Result<BornGap> {
    if pot.is_hard_core() {
        return Err(Error::HardCore);
    }
    let integral_w = pot.integral(3)?;
    let eight_pi_a = if pot.is_zero() {
        0.0
    } else {
        8.0 * PI * scattering_length(pot, 8.0 * pot.range(), 1e-9)?.a
    };
    Ok(BornGap { eight_pi_a, integral_w, gap: integral_w - eight_pi_a })
}
