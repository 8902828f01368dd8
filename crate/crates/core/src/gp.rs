//! Gross-Pitaevskii functional, its cutoff variant, a normalized gradient-flow minimizer,
//! vortex winding numbers and the `(ε, s)` limit study.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::LinearOperator;
use crate::onebody::{build_h, build_htilde_with, FieldConfig, OperatorHandle, SolverSettings};

const NORM_TOL: f64 = 1e-12;

/// Normalized complex order parameter on a grid.
#[derive(Clone, Debug)]
pub struct WaveFunction {
    grid: Grid,
    data: Vec<C64>,
}

impl WaveFunction {
    /// Wraps samples that are already `L²`-normalized.
    pub fn new(grid: &Grid, data: Vec<C64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!("{} samples for {} grid points", data.len(), grid.len())));
        }
        let norm = grid.norm(&data);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { grid: grid.clone(), data })
    }

    /// Normalizes the samples first.
    pub fn normalized(grid: &Grid, mut data: Vec<C64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!("{} samples for {} grid points", data.len(), grid.len())));
        }
        let norm = grid.normalize(&mut data);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { grid: grid.clone(), data })
    }

    /// Centered Gaussian `exp(-|x|²/(2σ²))`.
    pub fn gaussian(grid: &Grid, sigma: f64) -> Result<Self> {
        let data = grid
            .sample(|x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2.0 * sigma * sigma)).exp())
            .into_iter()
            .map(|v| C64::new(v, 0.0))
            .collect();
        Self::normalized(grid, data)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        self.grid.norm(&self.data)
    }

    pub fn density(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Multiplies by `e^{iα}`.
    pub fn with_phase(&self, alpha: f64) -> Self {
        let p = C64::from_polar(1.0, alpha);
        Self { grid: self.grid.clone(), data: self.data.iter().map(|z| z * p).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GPParams {
    pub g: f64,
    /// Multiplies `g`; `(1 - ε)²` for the cutoff functional.
    #[serde(default = "one")]
    pub prefactor: f64,
}

fn one() -> f64 {
    1.0
}

impl GPParams {
    pub fn new(g: f64) -> Result<Self> {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter(format!("coupling g = {g} must be nonnegative")));
        }
        Ok(Self { g, prefactor: 1.0 })
    }

    /// `g = 4πa`, the physical three-dimensional coupling.
    pub fn from_scattering_length(a: f64) -> Result<Self> {
        Self::new(4.0 * std::f64::consts::PI * a)
    }

    pub fn cutoff(g: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("ε = {eps} must lie in (0, 1)")));
        }
        Ok(Self { prefactor: (1.0 - eps).powi(2), ..Self::new(g)? })
    }

    pub fn effective(&self) -> f64 {
        self.g * self.prefactor
    }
}

fn quartic(grid: &Grid, u: &[C64]) -> f64 {
    u.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * grid.cell_volume()
}

fn check_normalized(grid: &Grid, u: &[C64]) -> Result<()> {
    let norm = grid.norm(u);
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// `⟨u, hu⟩ + g∫|u|⁴` with the effective coupling of `params`.
pub fn gp_energy(u: &WaveFunction, h: &OperatorHandle, params: &GPParams) -> Result<f64> {
    check_normalized(u.grid(), u.data())?;
    Ok(energy_unchecked(h, params.effective(), u.data()))
}

fn energy_unchecked(h: &OperatorHandle, g: f64, u: &[C64]) -> f64 {
    h.expectation(u) + g * quartic(h.grid(), u)
}

/// Energy and tangent gradient from a single application of `h`.
fn energy_and_gradient(h: &OperatorHandle, g: f64, u: &[C64]) -> (f64, Vec<C64>) {
    let grid = h.grid();
    let hu = h.apply_vec(u);
    let energy = grid.inner(u, &hu).re + g * quartic(grid, u);
    let mut grad: Vec<C64> = hu.iter().zip(u).map(|(a, b)| a * 2.0 + b * (4.0 * g * b.norm_sqr())).collect();
    project_tangent(grid, u, &mut grad);
    (energy, grad)
}

fn raw_gradient(h: &OperatorHandle, g: f64, u: &[C64]) -> Vec<C64> {
    let mut grad = h.apply_vec(u);
    for (gi, ui) in grad.iter_mut().zip(u) {
        *gi = *gi * 2.0 + ui * (4.0 * g * ui.norm_sqr());
    }
    grad
}

fn project_tangent(grid: &Grid, u: &[C64], v: &mut [C64]) {
    let c = grid.inner(u, v).re;
    for (vi, ui) in v.iter_mut().zip(u) {
        *vi -= ui * c;
    }
}

/// `2hu + 4g|u|²u` with its component along `u` removed.
pub fn gp_gradient(u: &WaveFunction, h: &OperatorHandle, params: &GPParams) -> Vec<C64> {
    let mut grad = raw_gradient(h, params.effective(), u.data());
    project_tangent(u.grid(), u.data(), &mut grad);
    grad
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeOptions {
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    /// Random-phase restarts used when `A ≠ 0`.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_step() -> f64 {
    0.5
}
fn default_max_iter() -> usize {
    20_000
}
fn default_grad_tol() -> f64 {
    1e-8
}
fn default_restarts() -> usize {
    8
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            step: default_step(),
            max_iter: default_max_iter(),
            grad_tol: default_grad_tol(),
            restarts: default_restarts(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimizeReport {
    pub energy_trace: Vec<f64>,
    pub energy: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub restarts_used: usize,
    pub converged: bool,
}

impl MinimizeReport {
    /// Largest single-step energy increase along the trace.
    pub fn max_increase(&self) -> f64 {
        self.energy_trace.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max).max(0.0)
    }
}

/// Preconditioned Riemannian descent on the unit sphere: the direction is the tangent part of
/// `-(c + p²)^{-1}∇E`, the step is Barzilai–Borwein with Armijo backtracking, and the iterate is
/// renormalized after each step.
fn descend(h: &OperatorHandle, g: f64, init: &[C64], opts: &MinimizeOptions) -> (Vec<C64>, MinimizeReport) {
    let grid = h.grid();
    let sp = h.spectral();
    let mut u = init.to_vec();
    grid.normalize(&mut u);
    let (mut energy, mut grad) = energy_and_gradient(h, g, &u);
    let shift = energy.abs().max(1.0);
    let precond: Vec<f64> = grid.sample_momentum(|k| 1.0 / (shift + k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
    let precondition = |v: &[C64]| {
        let mut w = v.to_vec();
        sp.apply_multiplier(&precond, &mut w);
        w
    };

    let mut pgrad = precondition(&grad);
    let mut gnorm = grid.norm(&grad);
    let mut trace = vec![energy];
    let mut tau = opts.step;
    let noise = 1e-14 * energy.abs().max(1.0);
    let mut iterations = 0;

    while iterations < opts.max_iter && gnorm >= opts.grad_tol {
        iterations += 1;
        let mut dir = pgrad.clone();
        project_tangent(grid, &u, &mut dir);
        let slope = grid.inner(&grad, &dir).re;
        if slope <= 0.0 {
            break;
        }
        let mut accepted = None;
        let mut t = tau;
        for _ in 0..60 {
            let mut trial: Vec<C64> = u.iter().zip(&dir).map(|(a, d)| a - d * t).collect();
            grid.normalize(&mut trial);
            let (e_trial, g_trial) = energy_and_gradient(h, g, &trial);
            let armijo = e_trial <= energy - 1e-4 * t * slope;
            let flat = t * slope < noise && e_trial <= energy + noise;
            if armijo || flat {
                accepted = Some((trial, e_trial, g_trial));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, e_trial, g_trial)) = accepted else { break };
        let pg_trial = precondition(&g_trial);
        // Barzilai–Borwein step in the preconditioned metric.
        let s: Vec<C64> = trial.iter().zip(&u).map(|(a, b)| a - b).collect();
        let y: Vec<C64> = pg_trial.iter().zip(&pgrad).map(|(a, b)| a - b).collect();
        let sy = grid.inner(&s, &y).re;
        tau = if sy > 0.0 { (grid.inner(&s, &s).re / sy).clamp(1e-4, 1e4) } else { (2.0 * t).min(1e4) };
        u = trial;
        energy = e_trial;
        grad = g_trial;
        pgrad = pg_trial;
        gnorm = grid.norm(&grad);
        trace.push(energy);
    }
    let converged = gnorm < opts.grad_tol;
    let report = MinimizeReport {
        energy_trace: trace,
        energy,
        gradient_norm: gnorm,
        iterations,
        restarts_used: 0,
        converged,
    };
    (u, report)
}

/// Smooth random complex field: a few low Fourier modes with random coefficients.
pub fn smooth_random_field(grid: &Grid, rng: &mut ChaCha8Rng, modes: usize) -> Vec<C64> {
    let l = grid.half_width();
    let terms: Vec<([f64; 3], C64)> = (0..modes)
        .map(|_| {
            let mut k = [0.0; 3];
            for ka in k.iter_mut().take(grid.dim()) {
                *ka = std::f64::consts::PI / l * rng.gen_range(-3i32..=3) as f64;
            }
            (k, C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        })
        .collect();
    (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            terms.iter().map(|(k, c)| c * C64::from_polar(1.0, k[0] * x[0] + k[1] * x[1] + k[2] * x[2])).sum()
        })
        .collect()
}

/// Seed for restart `r`: the base state times `e^{i(mφ + χ)}` with winding `m = r mod 4` about
/// a slightly displaced center and a smooth random phase `χ`.
fn phase_seed(grid: &Grid, base: &[C64], r: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let m = (r % 4) as f64;
    let c = [0.3 * (rng.gen::<f64>() - 0.5), 0.3 * (rng.gen::<f64>() - 0.5)];
    let chi: Vec<f64> = smooth_random_field(grid, rng, 4).iter().map(|z| z.re).collect();
    base.iter()
        .enumerate()
        .map(|(i, z)| {
            let x = grid.point(i);
            let phi = if grid.dim() >= 2 { (x[1] - c[1]).atan2(x[0] - c[0]) } else { 0.0 };
            z * C64::from_polar(1.0, m * phi + chi[i])
        })
        .collect()
}

/// Minimizes `⟨u, hu⟩ + g∫|u|⁴` over normalized `u`. With a vector potential, additional
/// random-phase restarts are run in parallel and the lowest energy is kept.
pub fn minimize_gp(
    h: &OperatorHandle,
    params: &GPParams,
    init: Option<&WaveFunction>,
    opts: &MinimizeOptions,
) -> Result<(WaveFunction, MinimizeReport)> {
    let grid = h.grid();
    let g = params.effective();
    let base: Vec<C64> = match init {
        Some(w) => {
            if w.grid() != grid {
                return Err(Error::DimensionMismatch("initial state lives on a different grid".into()));
            }
            w.data().to_vec()
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let sigma = (grid.half_width() / 4.0).max(grid.spacing());
            let gauss = WaveFunction::gaussian(grid, sigma)?;
            let noise = smooth_random_field(grid, &mut rng, 6);
            gauss.data().iter().zip(noise).map(|(a, n)| a * (1.0 + 0.05 * n.re)).collect()
        }
    };
    let restarts = if h.vector_potential().is_some() { opts.restarts } else { 0 };
    let mut starts = vec![base.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    if restarts > 0 {
        let ground = crate::onebody::lowest_eigenpairs(h, 1, 1e-8)?;
        for r in 0..restarts {
            starts.push(phase_seed(grid, &ground[0].vector, r, &mut rng));
        }
    }
    let runs: Vec<(Vec<C64>, MinimizeReport)> = starts.par_iter().map(|s| descend(h, g, s, opts)).collect();
    let (best_idx, _) = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.energy.partial_cmp(&b.1 .1.energy).unwrap().then(a.0.cmp(&b.0)))
        .expect("at least one run");
    let (u, mut report) = runs.into_iter().nth(best_idx).unwrap();
    report.restarts_used = restarts;
    Ok((WaveFunction::normalized(grid, u)?, report))
}

/// Closed lattice circuit: boundary of the centered square of half-width `half` grid steps,
/// traversed counterclockwise in the first two axes (other axes at their center index).
pub fn square_loop(grid: &Grid, half: usize) -> Result<Vec<usize>> {
    if grid.dim() < 2 {
        return Err(Error::DimensionMismatch("winding loops need d >= 2".into()));
    }
    let n = grid.points_per_axis();
    let c = n / 2;
    if half == 0 || half >= c {
        return Err(Error::InvalidParameter(format!("loop half-width {half} outside 1..{c}")));
    }
    let (lo, hi) = (c - half, c + half);
    let mut idx = vec![c; grid.dim()];
    let mut path = Vec::new();
    let mut push = |i: usize, j: usize| {
        idx[0] = i;
        idx[1] = j;
        path.push(grid.flat_index(&idx));
    };
    for i in lo..hi {
        push(i, lo);
    }
    for j in lo..hi {
        push(hi, j);
    }
    for i in (lo + 1..=hi).rev() {
        push(i, hi);
    }
    for j in (lo + 1..=hi).rev() {
        push(lo, j);
    }
    Ok(path)
}

/// Winding number of the phase of `u` around a closed circuit of flat grid indices.
/// Fails if `|u|` drops below `floor · max|u|` on the circuit.
pub fn vortex_winding(u: &WaveFunction, circuit: &[usize], floor: f64) -> Result<i64> {
    let max = u.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut total = 0.0;
    for (k, &i) in circuit.iter().enumerate() {
        let a = u.data()[i];
        let b = u.data()[circuit[(k + 1) % circuit.len()]];
        if a.norm() < floor * max {
            return Err(Error::IllDefinedWinding { value: a.norm() / max });
        }
        let mut d = b.arg() - a.arg();
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d <= -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        total += d;
    }
    Ok((total / (2.0 * std::f64::consts::PI)).round() as i64)
}

/// Winding about the box center using the largest square loop (from `sizes`, in grid steps)
/// on which `u` stays above the density floor.
pub fn central_winding(u: &WaveFunction, sizes: &[usize], floor: f64) -> Result<i64> {
    let mut last = Error::IllDefinedWinding { value: 0.0 };
    for &s in sizes {
        match vortex_winding(u, &square_loop(u.grid(), s)?, floor) {
            Ok(w) => return Ok(w),
            Err(e) => last = e,
        }
    }
    Err(last)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NlStudyRow {
    pub eps: f64,
    pub s: f64,
    pub kappa: f64,
    pub e_nl_plus_kappa: f64,
    pub e_gp: f64,
    /// `(e_GP - (e_NL + κ)) / e_GP`.
    pub gap: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NlStudy {
    pub e_gp: f64,
    /// Smallest `s` at which `θ_s` vanishes on the whole lattice.
    pub saturation_s: f64,
    pub rows: Vec<NlStudyRow>,
}

impl NlStudy {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,s,kappa,e_nl_plus_kappa,e_gp,gap\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.eps, r.s, r.kappa, r.e_nl_plus_kappa, r.e_gp, r.gap
            ));
        }
        out
    }
}

/// For each `(ε, s)`: minimize `⟨u, ĥu⟩ + (1 - ε)²g∫|u|⁴` starting from the GP minimizer and
/// report `e_NL + κ` against `e_GP`.
pub fn nl_energy_study(
    grid: &Grid,
    fields: &FieldConfig,
    eps_list: &[f64],
    s_list: &[f64],
    g: f64,
    opts: &MinimizeOptions,
) -> Result<NlStudy> {
    let max_k = grid.max_momentum_norm();
    if let Some(s) = s_list.iter().find(|&&s| !(s > 0.0 && s <= max_k * 1.000_001)) {
        return Err(Error::InvalidParameter(format!("s = {s} outside (0, {max_k}]")));
    }
    let h = build_h(grid, fields)?;
    let (u_gp, rep_gp) = minimize_gp(&h, &GPParams::new(g)?, None, opts)?;
    let e_gp = rep_gp.energy;
    let cells: Vec<(f64, f64)> = eps_list.iter().flat_map(|&e| s_list.iter().map(move |&s| (e, s))).collect();
    let settings = SolverSettings { tol: 1e-11, ..Default::default() };
    let rows: Vec<NlStudyRow> = cells
        .par_iter()
        .map(|&(eps, s)| -> Result<NlStudyRow> {
            let (hat, kappa) = build_htilde_with(grid, fields, eps, s, &settings)?;
            let params = GPParams::cutoff(g, eps)?;
            let (_, rep) = minimize_gp(&hat, &params, Some(&u_gp), opts)?;
            let value = rep.energy + kappa;
            Ok(NlStudyRow {
                eps,
                s,
                kappa,
                e_nl_plus_kappa: value,
                e_gp,
                gap: (e_gp - value) / e_gp,
                converged: rep.converged,
                error: None,
            })
        })
        .zip(&cells)
        .map(|(r, &(eps, s))| {
            r.unwrap_or_else(|e| NlStudyRow {
                eps,
                s,
                kappa: f64::NAN,
                e_nl_plus_kappa: f64::NAN,
                e_gp,
                gap: f64::NAN,
                converged: false,
                error: Some(e.to_string()),
            })
        })
        .collect();
    Ok(NlStudy { e_gp, saturation_s: max_k, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_enforced() {
        let g = Grid::new(1, 4.0, 32).unwrap();
        assert!(matches!(WaveFunction::new(&g, vec![C64::new(1.0, 0.0); 32]), Err(Error::NotNormalized { .. })));
        let w = WaveFunction::gaussian(&g, 1.0).unwrap();
        assert!((w.norm() - 1.0).abs() < 1e-14);
        assert!(GPParams::new(-1.0).is_err());
        assert!(GPParams::cutoff(1.0, 1.0).is_err());
    }

    #[test]
    fn linear_energy_at_eigenvector() {
        let g = Grid::new(1, 8.0, 64).unwrap();
        let h = build_h(&g, &FieldConfig::harmonic(1.0)).unwrap();
        let ground = crate::onebody::lowest_eigenpairs(&h, 1, 1e-12).unwrap();
        let w = WaveFunction::normalized(&g, ground[0].vector.clone()).unwrap();
        let p = GPParams::new(0.0).unwrap();
        assert!((gp_energy(&w, &h, &p).unwrap() - ground[0].value).abs() < 1e-11);
        assert!(g.norm(&gp_gradient(&w, &h, &p)) < 1e-9);
    }

    #[test]
    fn synthetic_windings() {
        let g = Grid::new(2, 5.0, 32).unwrap();
        let make = |m: f64| {
            let data = (0..g.len())
                .map(|i| {
                    let x = g.point(i);
                    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                    C64::from_polar(r.powf(m.abs()) * (-r * r / 2.0).exp(), m * x[1].atan2(x[0]))
                })
                .collect();
            WaveFunction::normalized(&g, data).unwrap()
        };
        let lp = square_loop(&g, 6).unwrap();
        assert_eq!(vortex_winding(&make(0.0), &lp, 1e-3).unwrap(), 0);
        assert_eq!(vortex_winding(&make(1.0), &lp, 1e-3).unwrap(), 1);
        assert_eq!(vortex_winding(&make(2.0), &lp, 1e-3).unwrap(), 2);
        assert_eq!(vortex_winding(&make(-1.0), &lp, 1e-3).unwrap(), -1);
        let far = square_loop(&g, 15).unwrap();
        assert!(matches!(vortex_winding(&make(1.0), &far, 1e-3), Err(Error::IllDefinedWinding { .. })));
    }

    #[test]
    fn square_loop_is_closed_circuit() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let lp = square_loop(&g, 3).unwrap();
        assert_eq!(lp.len(), 24);
        for k in 0..lp.len() {
            let a = g.multi_index(lp[k]);
            let b = g.multi_index(lp[(k + 1) % lp.len()]);
            let step = (a[0] as i64 - b[0] as i64).abs() + (a[1] as i64 - b[1] as i64).abs();
            assert_eq!(step, 1);
        }
    }
}
