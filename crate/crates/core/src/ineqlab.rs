//! Numerical checks of the operator inequalities used in the energy lower bound: the Sobolev
//! bound on `W(x-y)`, the Green-function bound with constant `C_δ`, the kinetic commutator
//! bound and the one-body Dyson inequality.
//!
//! Pair operators `W(x-y)` commute with total momentum, so on the periodic lattice they are
//! block diagonal in the total wavenumber `P` and each block is a one-body problem in the
//! relative momentum.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Spectral};
use crate::linalg::{self, EigenOptions, LinearOperator, Negated};
use crate::onebody::{build_htilde, FieldConfig};
use crate::potentials::{AnnulusPotential, CutoffFunction, RadialPotential};
use crate::quad::{integrate, sphere_area};
use crate::scattering::scattering_length;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub id: String,
    pub parameters: BTreeMap<String, f64>,
    /// Best constant found (smallest certifying or largest violating ratio).
    pub constant: f64,
    /// Smallest eigenvalue of the certifying form at that constant.
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl InequalityReport {
    fn new(id: &str, params: &[(&str, f64)], constant: f64, min_eigenvalue: f64, tolerance: f64) -> Self {
        Self {
            id: id.to_string(),
            parameters: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            constant,
            min_eigenvalue,
            tolerance,
            verdict: if min_eigenvalue >= -tolerance { Verdict::Holds } else { Verdict::Violated },
            notes: Vec::new(),
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

/// Flags a best constant that moves by more than 10% between two resolutions.
pub fn resolution_dependent(coarse: f64, fine: f64) -> bool {
    let scale = coarse.abs().max(fine.abs());
    scale > 0.0 && (coarse - fine).abs() > 0.1 * scale
}

/// `C_δ = ∫_{ℝ³} dk (1 + 4π²|k|²)^{-2(1-δ)}`.
pub fn c_delta(delta: f64) -> Result<f64> {
    c_delta_dim(delta, 3)
}

/// `∫_{ℝ^d} dk (1 + 4π²|k|²)^{-2(1-δ)}`, finite for `δ < 1 - d/4`.
///
/// With `u = 2π|k| = tan φ` and `ψ = π/2 - φ` the radial integral is
/// `∫_0^{π/2} cos^{d-1}ψ sin^γψ dψ`, `γ = 4(1-δ) - d - 1 > -1`; the endpoint singularity is
/// removed by `ψ = τ^{1/(γ+1)}`.
pub fn c_delta_dim(delta: f64, d: usize) -> Result<f64> {
    if !(1..=3).contains(&d) {
        return Err(Error::InvalidParameter(format!("dimension {d} not in 1..=3")));
    }
    let upper = 1.0 - d as f64 / 4.0;
    if !(delta >= 0.0 && delta < upper) {
        return Err(Error::InvalidParameter(format!("δ = {delta} outside [0, {upper})")));
    }
    let gamma = 4.0 * (1.0 - delta) - d as f64 - 1.0;
    let q = 1.0 / (gamma + 1.0);
    let top = std::f64::consts::FRAC_PI_2.powf(gamma + 1.0);
    let f = |tau: f64| {
        let psi = tau.powf(q);
        if psi == 0.0 {
            return 1.0;
        }
        psi.cos().powi(d as i32 - 1) * (psi.sin() / psi).powf(gamma)
    };
    let radial = q * integrate(f, 0.0, top, 1e-15, 1e-13)?;
    Ok(sphere_area(d) * radial / (2.0 * std::f64::consts::PI).powi(d as i32))
}

fn sample_radial(grid: &Grid, pot: &RadialPotential) -> Vec<f64> {
    grid.sample(|x| pot.value((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()))
}

/// `Ŵ(k) = Σ_z W(z) e^{-ik·z} Δx^d` on the momentum lattice.
fn kernel_transform(grid: &Grid, sp: &Spectral, w: &[f64]) -> Vec<f64> {
    let n = grid.points_per_axis();
    let half = n / 2;
    let mut centered = vec![C64::new(0.0, 0.0); grid.len()];
    for (i, &v) in w.iter().enumerate() {
        let idx = grid.multi_index(i);
        let mut s = [0usize; 3];
        for a in 0..grid.dim() {
            s[a] = (idx[a] + n - half) % n;
        }
        centered[grid.flat_index(&s[..grid.dim()])] = C64::new(v, 0.0);
    }
    sp.forward(&mut centered);
    centered.iter().map(|z| z.re * grid.cell_volume()).collect()
}

/// `x ↦ T(W·(Tx))` with `T = |p|^{-1}` off the zero mode.
struct SobolevForm {
    sp: Arc<Spectral>,
    inv_p: Vec<f64>,
    w: Vec<f64>,
}

impl LinearOperator for SobolevForm {
    fn dim(&self) -> usize {
        self.w.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let mut t = x.to_vec();
        self.sp.apply_multiplier(&self.inv_p, &mut t);
        for (a, w) in t.iter_mut().zip(&self.w) {
            *a *= w;
        }
        self.sp.apply_multiplier(&self.inv_p, &mut t);
        y.copy_from_slice(&t);
    }
}

/// Best constant in `W(x-y) <= C ‖W‖_{3/2} (-Δ_x)`: the top of `|p|^{-1} W |p|^{-1}` on
/// the complement of constants, divided by `‖W‖_{3/2}`.
pub fn best_constant_w1(pot: &RadialPotential, grid: &Grid) -> Result<InequalityReport> {
    if grid.dim() != 3 {
        return Err(Error::InvalidParameter("the Sobolev bound is a three-dimensional statement".into()));
    }
    if pot.is_hard_core() {
        return Err(Error::InvalidParameter("W must be a sampled potential, not a hard core".into()));
    }
    let params = [("w0", pot.amplitude()), ("R0", pot.range()), ("L", grid.half_width()), ("n", grid.points_per_axis() as f64)];
    if pot.is_zero() {
        return Ok(InequalityReport::new("w1", &params, 0.0, 0.0, 1e-10));
    }
    if pot.range() < 2.0 * grid.spacing() {
        return Err(Error::Aliasing { range: pot.range(), spacing: grid.spacing() });
    }
    let sp = Arc::new(Spectral::new(grid));
    let inv_p = (0..grid.len())
        .map(|i| {
            let p = grid.momentum_norm(i);
            if p == 0.0 { 0.0 } else { 1.0 / p }
        })
        .collect();
    let op = SobolevForm { sp, inv_p, w: sample_radial(grid, pot) };
    let norm = pot.lp_norm(1.5, 3)?;
    let top = -linalg::preconditioned_lowest(&Negated(&op), |_| {}, 1e-9 * norm, 5000, 0x5eed)?.value;
    let mut rep = InequalityReport::new("w1", &params, top / norm, 0.0, 1e-10);
    rep.notes.push(format!("largest generalized eigenvalue {top:.6e}, ‖W‖_3/2 = {norm:.6e}"));
    Ok(rep)
}

/// `v ↦ √W (G * (√W v))` with the free-space Green's function `G = 1/(4π|x|)` of `-Δ` on ℝ³,
/// convolved on the grid zero-padded to twice its size so that no periodic image enters.
struct GreenForm {
    padded: Spectral,
    kernel_hat: Vec<C64>,
    sqrt_w: Vec<f64>,
    n: usize,
    cell: f64,
}

impl GreenForm {
    fn new(grid: &Grid, w: &[f64]) -> Result<Self> {
        let n = grid.points_per_axis();
        let h = grid.spacing();
        let big = Grid::new(3, 2.0 * grid.half_width(), 2 * n)?;
        // cell average of 1/(4π|x|) over the unit cube, times 1/h
        let g0 = 2.380_077_363_886_1 / (4.0 * std::f64::consts::PI * h);
        let disp = |i: usize| if i < n { i as f64 * h } else { (i as f64 - 2.0 * n as f64) * h };
        let mut kernel: Vec<C64> = (0..big.len())
            .map(|f| {
                let idx = big.multi_index(f);
                let r = (disp(idx[0]).powi(2) + disp(idx[1]).powi(2) + disp(idx[2]).powi(2)).sqrt();
                C64::new(if r == 0.0 { g0 } else { 1.0 / (4.0 * std::f64::consts::PI * r) }, 0.0)
            })
            .collect();
        let padded = Spectral::new(&big);
        padded.forward(&mut kernel);
        Ok(Self { padded, kernel_hat: kernel, sqrt_w: w.iter().map(|v| v.max(0.0).sqrt()).collect(), n, cell: h.powi(3) })
    }

    fn embed(&self, f: usize) -> usize {
        let n = self.n;
        let i = f / (n * n);
        let j = (f / n) % n;
        let k = f % n;
        let m = 2 * n;
        ((i + n / 2) * m + j + n / 2) * m + k + n / 2
    }
}

impl LinearOperator for GreenForm {
    fn dim(&self) -> usize {
        self.sqrt_w.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let mut buf = vec![C64::new(0.0, 0.0); 8 * self.sqrt_w.len()];
        for (f, (xi, s)) in x.iter().zip(&self.sqrt_w).enumerate() {
            buf[self.embed(f)] = xi * s;
        }
        self.padded.forward(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.padded.inverse(&mut buf);
        for (f, (yi, s)) in y.iter_mut().zip(&self.sqrt_w).enumerate() {
            *yi = buf[self.embed(f)] * (s * self.cell);
        }
    }
}

/// Same constant as [`best_constant_w1`] computed on ℝ³ instead of the torus: the top of
/// `√W (-Δ)^{-1} √W`, which shares the nonzero spectrum of `|p|^{-1} W |p|^{-1}`. The grid
/// only has to cover the support of `W`.
pub fn best_constant_w1_free(pot: &RadialPotential, grid: &Grid) -> Result<InequalityReport> {
    if grid.dim() != 3 {
        return Err(Error::InvalidParameter("the Sobolev bound is a three-dimensional statement".into()));
    }
    if pot.is_hard_core() {
        return Err(Error::InvalidParameter("W must be a sampled potential, not a hard core".into()));
    }
    let params = [("w0", pot.amplitude()), ("R0", pot.range()), ("L", grid.half_width()), ("n", grid.points_per_axis() as f64)];
    if pot.is_zero() {
        return Ok(InequalityReport::new("w1", &params, 0.0, 0.0, 1e-10));
    }
    if pot.range() < 2.0 * grid.spacing() {
        return Err(Error::Aliasing { range: pot.range(), spacing: grid.spacing() });
    }
    if pot.range() > grid.half_width() {
        return Err(Error::InvalidParameter(format!(
            "support radius {} exceeds the box half-width {}",
            pot.range(),
            grid.half_width()
        )));
    }
    let op = GreenForm::new(grid, &sample_radial(grid, pot))?;
    let norm = pot.lp_norm(1.5, 3)?;
    let top = -linalg::preconditioned_lowest(&Negated(&op), |_| {}, 1e-9 * norm, 5000, 0x5eed)?.value;
    let mut rep = InequalityReport::new("w1", &params, top / norm, 0.0, 1e-10);
    rep.notes.push(format!("free-space Green's function; top eigenvalue {top:.6e}, ‖W‖_3/2 = {norm:.6e}"));
    Ok(rep)
}

/// Canonical representative of a lattice wavenumber vector under signed axis permutations.
fn canonical(grid: &Grid, idx: [usize; 3]) -> [usize; 3] {
    let n = grid.points_per_axis();
    let mut k = [0usize; 3];
    for a in 0..grid.dim() {
        k[a] = idx[a].min(n - idx[a]) % n;
    }
    k[..grid.dim()].sort_unstable();
    k
}

/// `C_δ ‖W‖₁ (1-Δ_x)^{1-δ}(1-Δ_y)^{1-δ} - W(x-y) ⪰ 0`, checked block by block in the total
/// momentum, with the `d`-dimensional `C_δ` and the lattice `‖W‖₁`.
pub fn check_w2(pot: &RadialPotential, delta: f64, grid: &Grid) -> Result<InequalityReport> {
    let d = grid.dim();
    let c = c_delta_dim(delta, d)?;
    if pot.is_hard_core() {
        return Err(Error::InvalidParameter("W must be a sampled potential, not a hard core".into()));
    }
    if !pot.is_zero() && pot.range() < 2.0 * grid.spacing() {
        return Err(Error::Aliasing { range: pot.range(), spacing: grid.spacing() });
    }
    let sp = Spectral::new(grid);
    let w = sample_radial(grid, pot);
    let l1: f64 = w.iter().map(|v| v.abs()).sum::<f64>() * grid.cell_volume();
    let what = kernel_transform(grid, &sp, &w);
    let volume = (2.0 * grid.half_width()).powi(d as i32);
    let n = grid.points_per_axis();
    let g = grid.len();
    let mult: Vec<f64> = (0..g).map(|i| (1.0 + grid.momentum_norm(i).powi(2)).powf(1.0 - delta)).collect();
    let scale = c * l1;

    let mut seen = BTreeSet::new();
    let mut worst = f64::INFINITY;
    let mut worst_block = [0usize; 3];
    for big_p in 0..g {
        let pi = grid.multi_index(big_p);
        if !seen.insert(canonical(grid, pi)) {
            continue;
        }
        let mut block = DMatrix::<C64>::zeros(g, g);
        for p in 0..g {
            let a = grid.multi_index(p);
            let mut q = [0usize; 3];
            for ax in 0..d {
                q[ax] = (pi[ax] + n - a[ax]) % n;
            }
            let qf = grid.flat_index(&q[..d]);
            block[(p, p)] = C64::new(scale * mult[p] * mult[qf], 0.0);
            for p2 in 0..g {
                let b = grid.multi_index(p2);
                let mut k = [0usize; 3];
                for ax in 0..d {
                    k[ax] = (a[ax] + n - b[ax]) % n;
                }
                block[(p, p2)] -= C64::new(what[grid.flat_index(&k[..d])] / volume, 0.0);
            }
        }
        let low = if g <= 600 {
            linalg::hermitian_eigenvalues(&block)[0]
        } else {
            linalg::block_lanczos(&block, 1, 1e-10, &EigenOptions::default())?[0].value
        };
        if low < worst {
            worst = low;
            worst_block = pi;
        }
    }
    let params = [
        ("delta", delta),
        ("w0", pot.amplitude()),
        ("R0", pot.range()),
        ("L", grid.half_width()),
        ("n", n as f64),
        ("dim", d as f64),
    ];
    let mut rep = InequalityReport::new("w2", &params, c, worst, 1e-8);
    rep.notes.push(format!("lattice ‖W‖₁ = {l1:.6e}; {} total-momentum blocks; worst block {:?}", seen.len(), &worst_block[..d]));
    Ok(rep)
}

/// Dense `(1-Δ)^{power}` on the grid.
fn dense_multiplier(grid: &Grid, sp: &Spectral, power: f64) -> DMatrix<C64> {
    let g = grid.len();
    let mult: Vec<f64> = (0..g).map(|i| (1.0 + grid.momentum_norm(i).powi(2)).powf(power)).collect();
    let mut out = DMatrix::<C64>::zeros(g, g);
    let mut e = vec![C64::new(0.0, 0.0); g];
    for j in 0..g {
        e.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        e[j] = C64::new(1.0, 0.0);
        sp.apply_multiplier(&mult, &mut e);
        for i in 0..g {
            out[(i, j)] = e[i];
        }
    }
    (&out + out.adjoint()) * C64::new(0.5, 0.0)
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Largest pair-space size assembled densely by [`check_w3`].
pub const W3_MAX_DIM: usize = 2048;

/// Smallest `c >= 0` with `ĥ_xW + Wĥ_x + c(‖W‖₂ + (1+s²)‖W‖_{3/2})(1-Δ_x)(1-Δ_y) ⪰ 0`.
///
/// The threshold is the top eigenvalue of `-B^{-1/2}(ĥ_xW + Wĥ_x)B^{-1/2}` with
/// `B = (1-Δ_x)(1-Δ_y)`; the form is then re-diagonalized at that `c` as a certificate.
pub fn check_w3(pot: &RadialPotential, eps: f64, s: f64, grid: &Grid, fields: &FieldConfig) -> Result<InequalityReport> {
    let g = grid.len();
    if g * g > W3_MAX_DIM {
        return Err(Error::MemoryBudget { required: g * g, limit: W3_MAX_DIM });
    }
    if pot.is_hard_core() {
        return Err(Error::InvalidParameter("W must be a sampled potential, not a hard core".into()));
    }
    let d = grid.dim();
    let params = [("eps", eps), ("s", s), ("w0", pot.amplitude()), ("R0", pot.range()), ("n", grid.points_per_axis() as f64)];
    if pot.is_zero() {
        return Ok(InequalityReport::new("w3", &params, 0.0, 0.0, 1e-9));
    }
    if pot.range() < 2.0 * grid.spacing() {
        return Err(Error::Aliasing { range: pot.range(), spacing: grid.spacing() });
    }
    let (hat, _) = build_htilde(grid, fields, eps, s)?;
    let h1 = linalg::assemble_dense(&hat);
    let h1 = (&h1 + h1.adjoint()) * C64::new(0.5, 0.0);
    let id = DMatrix::<C64>::identity(g, g);
    let hx = kron(&h1, &id);
    let mut wdiag = vec![0.0; g * g];
    for x in 0..g {
        let px = grid.point(x);
        for y in 0..g {
            wdiag[x * g + y] = pot.value(grid.distance(&px, &grid.point(y)));
        }
    }
    let wmat = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(g * g, wdiag.iter().map(|&v| C64::new(v, 0.0))));
    let form = &hx * &wmat + &wmat * &hx;
    let sp = Spectral::new(grid);
    let s_half = dense_multiplier(grid, &sp, -0.5);
    let one = dense_multiplier(grid, &sp, 1.0);
    let sb = kron(&s_half, &s_half);
    let reduced = &sb * &form * &sb;
    let reduced = (&reduced + reduced.adjoint()) * C64::new(0.5, 0.0);
    let top = -linalg::hermitian_eigenvalues(&reduced)[0];
    let norm = pot.lp_norm(2.0, d)? + (1.0 + s * s) * pot.lp_norm(1.5, d)?;
    let c = top.max(0.0) / norm;
    let b = kron(&one, &one);
    let cert = &form + &b * C64::new(c * norm * (1.0 + 1e-10), 0.0);
    let cert = (&cert + cert.adjoint()) * C64::new(0.5, 0.0);
    let min_eig = linalg::hermitian_eigenvalues(&cert)[0];
    let mut rep = InequalityReport::new("w3", &params, c, min_eig, 1e-9 * (1.0 + c * norm));
    rep.notes.push(format!("norm factor ‖W‖₂ + (1+s²)‖W‖_3/2 = {norm:.6e}"));
    Ok(rep)
}

/// `p²θ_s(p) + ½Σ_j w_N(x-y_j) - (1-ε)/N Σ_j U_R(x-y_j)` on a periodic grid.
struct DysonForm {
    sp: Arc<Spectral>,
    kinetic: Vec<f64>,
    potential: Vec<f64>,
}

impl LinearOperator for DysonForm {
    fn dim(&self) -> usize {
        self.potential.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let mut t = x.to_vec();
        self.sp.apply_multiplier(&self.kinetic, &mut t);
        for ((yi, ti), (xi, v)) in y.iter_mut().zip(t).zip(x.iter().zip(&self.potential)) {
            *yi = ti + xi * v;
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DysonSetup {
    pub particles: usize,
    #[serde(rename = "R")]
    pub r: f64,
    pub s: f64,
    pub eps: f64,
    pub scatterers: Vec<[f64; 3]>,
}

/// Smallest `C` with `p²θ_s(p) + ½Σ_j w_N(x-y_j) - (1-ε)/N Σ_j U_R(x-y_j) + C a R² s⁵/ε ⪰ 0`,
/// where `w_N = N²w(N·)` and `U_R` carries the scattering length `a` of `w`.
pub fn dyson_onebody_check(w: &RadialPotential, setup: &DysonSetup, grid: &Grid) -> Result<InequalityReport> {
    if grid.dim() != 3 {
        return Err(Error::InvalidParameter("the Dyson lemma is stated on L²(ℝ³)".into()));
    }
    let n = setup.particles;
    let r = setup.r;
    if !(setup.eps > 0.0 && setup.eps < 1.0) {
        return Err(Error::InvalidParameter(format!("ε = {} must lie in (0, 1)", setup.eps)));
    }
    if !w.is_zero() && !(r > 2.0 * w.range() / n as f64) {
        return Err(Error::InvalidParameter(format!("R = {r} must exceed 2R0/N = {}", 2.0 * w.range() / n as f64)));
    }
    let ys = &setup.scatterers;
    let mut min_sep = f64::INFINITY;
    for i in 0..ys.len() {
        for j in i + 1..ys.len() {
            min_sep = min_sep.min(grid.distance(&ys[i], &ys[j]));
        }
    }
    if min_sep < 2.0 * r {
        return Err(Error::ScattererSeparation { min_sep, required: 2.0 * r });
    }
    let wn = w.scale_gp(n)?;
    if !wn.is_zero() && wn.range() < 2.0 * grid.spacing() {
        return Err(Error::Aliasing { range: wn.range(), spacing: grid.spacing() });
    }
    let a = if w.is_zero() { 0.0 } else { scattering_length(w, 4.0 * w.range(), 1e-10)?.a };
    let u = if a == 0.0 { AnnulusPotential::zero(r, 3) } else { AnnulusPotential::new(r, a, 3)? };
    let theta = CutoffFunction::new(setup.s)?;
    let kinetic: Vec<f64> = (0..grid.len())
        .map(|i| {
            let p = grid.momentum_norm(i);
            p * p * theta.eval(p)
        })
        .collect();
    let nf = n as f64;
    let potential: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            ys.iter()
                .map(|y| {
                    let d = grid.distance(&x, y);
                    0.5 * wn.value(d) - (1.0 - setup.eps) / nf * u.eval(d)
                })
                .sum()
        })
        .collect();
    let sigma = 1.0 + potential.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let inv: Vec<f64> = kinetic.iter().map(|k| 1.0 / (k + sigma)).collect();
    let sp = Arc::new(Spectral::new(grid));
    let op = DysonForm { sp: sp.clone(), kinetic, potential };
    let low = linalg::preconditioned_lowest(&op, |r| sp.apply_multiplier(&inv, r), 1e-8, 5000, 0x5eed)?.value;
    let denom = a * r * r * setup.s.powi(5) / setup.eps;
    // the iterative solve resolves a zero bottom only to its tolerance
    let constant = if low >= -1e-9 {
        0.0
    } else if denom > 0.0 {
        -low / denom
    } else {
        f64::INFINITY
    };
    let params = [
        ("N", nf),
        ("R", r),
        ("s", setup.s),
        ("eps", setup.eps),
        ("a", a),
        ("scatterers", ys.len() as f64),
    ];
    let certified = if constant.is_finite() { low + constant * denom } else { low };
    let mut rep = InequalityReport::new("dyson", &params, constant, certified, 1e-9);
    rep.notes.push(format!("lowest eigenvalue without the error term {low:.6e}"));
    Ok(rep)
}

/// `δXX* + δ^{-1}Y*Y ± (XY + Y*X*) ⪰ 0` for random complex `X`, `Y`.
pub fn cauchy_schwarz_selftest(dim: usize, delta: f64, seed: u64) -> Result<InequalityReport> {
    if !(delta > 0.0) || dim == 0 {
        return Err(Error::InvalidParameter("need δ > 0 and a positive dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random = || DMatrix::<C64>::from_fn(dim, dim, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let x = random();
    let y = random();
    let base = &x * x.adjoint() * C64::new(delta, 0.0) + y.adjoint() * &y * C64::new(1.0 / delta, 0.0);
    let cross = &x * &y + y.adjoint() * x.adjoint();
    let mut low = f64::INFINITY;
    for sign in [1.0, -1.0] {
        let f = &base + &cross * C64::new(sign, 0.0);
        let f = (&f + f.adjoint()) * C64::new(0.5, 0.0);
        low = low.min(linalg::hermitian_eigenvalues(&f)[0]);
    }
    let scale = base.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(InequalityReport::new("cs", &[("dim", dim as f64), ("delta", delta)], 0.0, low, 1e-12 * scale.max(1.0) * dim as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_wavenumbers() {
        let g = Grid::new(3, 1.0, 8).unwrap();
        assert_eq!(canonical(&g, [7, 2, 0]), [0, 1, 2]);
        assert_eq!(canonical(&g, [4, 4, 1]), [1, 4, 4]);
    }

    #[test]
    fn c_delta_rejects_out_of_range() {
        assert!(c_delta(0.25).is_err());
        assert!(c_delta(-0.1).is_err());
        assert!(c_delta_dim(0.7, 1).is_ok());
    }

    #[test]
    fn selftest_holds() {
        for seed in 0..3 {
            assert!(cauchy_schwarz_selftest(12, 0.3, seed).unwrap().holds());
        }
    }
}
