//! One-body operators on the periodic grid: `h = (p + A)² + V`, the momentum cutoff
//! `p²θ_s(p)`, and the shifted operator `ĥ` together with its constant `κ`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use crate::grid::{Grid, GridSpec, Spectral};
use crate::error::{Error, Result};
use crate::linalg::{self, EigenOptions, Eigenpair, LinearOperator};
use crate::potentials::CutoffFunction;

/// Largest ground-state mass allowed in the outer 10% shell of a confining box.
pub const SHELL_MASS_LIMIT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialField {
    /// `V(x) = stiffness·|x|²`.
    Harmonic { stiffness: f64 },
    /// Values on the grid points, row-major.
    CustomSamples { values: Vec<f64> },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorField {
    #[default]
    Zero,
    /// `A = Ω ∧ x` about the last-but-one/last axes plane (`d = 2`: `A = Ω(-y, x)`; `d = 3`:
    /// rotation about the third axis).
    ///
    /// The trap is read in the rotating frame: the centrifugal term `|A|²` produced by
    /// `(p + A)²` is subtracted from `V`, so `h = p² + V + 2Ω·L`. The harmonic stiffness
    /// must exceed `Ω²` for the effective potential to stay confining.
    Rotation { omega: f64 },
    /// One array of grid samples per component.
    CustomSamples { components: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    #[serde(rename = "V")]
    pub potential: PotentialField,
    #[serde(rename = "A", default)]
    pub vector: VectorField,
}

impl FieldConfig {
    pub fn free() -> Self {
        Self { potential: PotentialField::Harmonic { stiffness: 0.0 }, vector: VectorField::Zero }
    }

    pub fn harmonic(stiffness: f64) -> Self {
        Self { potential: PotentialField::Harmonic { stiffness }, vector: VectorField::Zero }
    }

    pub fn with_rotation(mut self, omega: f64) -> Self {
        self.vector = VectorField::Rotation { omega };
        self
    }

    pub fn with_vector(mut self, vector: VectorField) -> Self {
        self.vector = vector;
        self
    }

    /// Vector potential samples, `None` for `A = 0`.
    pub fn vector_samples(&self, grid: &Grid) -> Result<Option<Vec<Vec<f64>>>> {
        match &self.vector {
            VectorField::Zero => Ok(None),
            VectorField::Rotation { omega } => {
                if grid.dim() < 2 {
                    return Err(Error::DimensionMismatch("rotation needs d >= 2".into()));
                }
                let mut comps = vec![vec![0.0; grid.len()]; grid.dim()];
                for i in 0..grid.len() {
                    let x = grid.point(i);
                    comps[0][i] = -omega * x[1];
                    comps[1][i] = omega * x[0];
                }
                Ok(Some(comps))
            }
            VectorField::CustomSamples { components } => {
                if components.len() != grid.dim() || components.iter().any(|c| c.len() != grid.len()) {
                    return Err(Error::DimensionMismatch(format!(
                        "vector potential needs {} components of {} samples",
                        grid.dim(),
                        grid.len()
                    )));
                }
                if components.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter("non-finite vector potential sample".into()));
                }
                Ok(Some(components.clone()))
            }
        }
    }

    /// Samples of `V` entering `h`, including the rotating-frame compensation.
    pub fn potential_samples(&self, grid: &Grid) -> Result<Vec<f64>> {
        let mut v = match &self.potential {
            PotentialField::Harmonic { stiffness } => {
                if *stiffness < 0.0 {
                    return Err(Error::InvalidParameter(format!("negative trap stiffness {stiffness}")));
                }
                grid.sample(|x| stiffness * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]))
            }
            PotentialField::CustomSamples { values } => {
                if values.len() != grid.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "potential has {} samples, grid has {}",
                        values.len(),
                        grid.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter("non-finite potential sample".into()));
                }
                values.clone()
            }
        };
        if let VectorField::Rotation { omega } = self.vector {
            for (i, vi) in v.iter_mut().enumerate() {
                let x = grid.point(i);
                *vi -= omega * omega * (x[0] * x[0] + x[1] * x[1]);
            }
        }
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-12 {
            return Err(Error::InvalidParameter(format!("potential is negative on the grid (min {min})")));
        }
        Ok(v)
    }

    /// A growing trap: nonconstant and maximal on the outermost grid layer.
    pub fn is_confining(&self, grid: &Grid) -> bool {
        let Ok(v) = self.potential_samples(grid) else { return false };
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(max > min) {
            return false;
        }
        let boundary_max = (0..grid.len())
            .filter(|&i| grid.multi_index(i)[..grid.dim()].iter().any(|&j| j == 0))
            .map(|i| v[i])
            .fold(f64::NEG_INFINITY, f64::max);
        boundary_max >= max
    }
}

/// Momentum cutoff `θ_s(|k|)` sampled on the lattice, with its prefactor `1 - ε`.
#[derive(Clone, Debug)]
pub struct SpectralCutoff {
    pub eps: f64,
    pub s: f64,
    pub multiplier: Vec<f64>,
}

impl SpectralCutoff {
    pub fn new(grid: &Grid, eps: f64, s: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("ε = {eps} must lie in (0, 1)")));
        }
        let theta = CutoffFunction::new(s)?;
        let multiplier = (0..grid.len()).map(|i| theta.eval(grid.momentum_norm(i))).collect();
        Ok(Self { eps, s, multiplier })
    }

    /// Whether `θ_s` vanishes on the whole lattice.
    pub fn is_inactive(&self) -> bool {
        self.multiplier.iter().all(|&t| t == 0.0)
    }
}

/// Matrix-free self-adjoint one-body operator
/// `u ↦ m(p)u + A·(pu) + p·(Au) + |A|²u + (V + c)u`.
#[derive(Clone, Debug)]
pub struct OperatorHandle {
    grid: Grid,
    spectral: Arc<Spectral>,
    kinetic: Vec<f64>,
    potential: Vec<f64>,
    vector: Option<Vec<Vec<f64>>>,
    momenta: Vec<Vec<f64>>,
    a_squared: Vec<f64>,
    /// Each component `A_α` is independent of `x_α`, so `p·(Au) = A·(pu)` exactly on the grid.
    commuting: bool,
    shift: f64,
    lower_bound: Option<f64>,
    confining: bool,
}

impl OperatorHandle {
    fn new(grid: &Grid, kinetic: Vec<f64>, potential: Vec<f64>, vector: Option<Vec<Vec<f64>>>) -> Self {
        let momenta = if vector.is_some() {
            (0..grid.dim()).map(|a| grid.sample_momentum(|k| k[a])).collect()
        } else {
            Vec::new()
        };
        let a_squared = match &vector {
            Some(a) => (0..grid.len()).map(|i| a.iter().map(|c| c[i] * c[i]).sum()).collect(),
            None => Vec::new(),
        };
        let commuting = vector.as_ref().is_some_and(|a| components_commute(grid, a));
        Self {
            grid: grid.clone(),
            spectral: Arc::new(Spectral::new(grid)),
            kinetic,
            potential,
            vector,
            momenta,
            a_squared,
            commuting,
            shift: 0.0,
            lower_bound: None,
            confining: false,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// The kinetic Fourier multiplier in spectral ordering.
    pub fn kinetic_multiplier(&self) -> &[f64] {
        &self.kinetic
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn vector_potential(&self) -> Option<&[Vec<f64>]> {
        self.vector.as_deref()
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Declared lower bound on the spectrum, when known.
    pub fn lower_bound(&self) -> Option<f64> {
        self.lower_bound
    }

    pub fn is_self_adjoint(&self) -> bool {
        true
    }

    pub fn is_confining(&self) -> bool {
        self.confining
    }

    /// The same operator plus `c` times the identity.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.shift += c;
        out.lower_bound = self.lower_bound.map(|b| b + c);
        out
    }

    /// `⟨u, Op u⟩` in the grid `L²` product.
    pub fn expectation(&self, u: &[C64]) -> f64 {
        self.grid.inner(u, &self.apply_vec(u)).re
    }
}

/// Whether every component `A_α` is constant along axis `α`.
fn components_commute(grid: &Grid, a: &[Vec<f64>]) -> bool {
    a.iter().enumerate().all(|(axis, comp)| {
        (0..grid.len()).all(|i| {
            let mut idx = grid.multi_index(i);
            idx[axis] = 0;
            comp[i] == comp[grid.flat_index(&idx[..grid.dim()])]
        })
    })
}

impl LinearOperator for OperatorHandle {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let sp = &self.spectral;
        let mut xh = x.to_vec();
        sp.forward(&mut xh);
        for ((yi, xi), m) in y.iter_mut().zip(&xh).zip(&self.kinetic) {
            *yi = xi * m;
        }
        sp.inverse(y);
        if let Some(a) = &self.vector {
            let n = x.len();
            let mut t = vec![C64::new(0.0, 0.0); n];
            let mut pa = vec![C64::new(0.0, 0.0); n];
            let factor = if self.commuting { 2.0 } else { 1.0 };
            for (aa, ka) in a.iter().zip(&self.momenta) {
                for ((ti, xi), k) in t.iter_mut().zip(&xh).zip(ka) {
                    *ti = xi * k;
                }
                sp.inverse(&mut t);
                for ((yi, ti), ai) in y.iter_mut().zip(&t).zip(aa) {
                    *yi += ti * (factor * ai);
                }
                if !self.commuting {
                    for ((ti, xi), ai) in t.iter_mut().zip(x).zip(aa) {
                        *ti = xi * ai;
                    }
                    sp.forward(&mut t);
                    for ((pi, ti), k) in pa.iter_mut().zip(&t).zip(ka) {
                        *pi += ti * k;
                    }
                }
            }
            if !self.commuting {
                sp.inverse(&mut pa);
                for (yi, pi) in y.iter_mut().zip(&pa) {
                    *yi += pi;
                }
            }
            for ((yi, xi), a2) in y.iter_mut().zip(x).zip(&self.a_squared) {
                *yi += xi * a2;
            }
        }
        for ((yi, xi), v) in y.iter_mut().zip(x).zip(&self.potential) {
            *yi += xi * (v + self.shift);
        }
    }
}

/// `h = (p + A)² + V` with spectral `p = -i∇`.
pub fn build_h(grid: &Grid, fields: &FieldConfig) -> Result<OperatorHandle> {
    let potential = fields.potential_samples(grid)?;
    let vector = fields.vector_samples(grid)?;
    let kinetic = grid.sample_momentum(|k| k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    let mut op = OperatorHandle::new(grid, kinetic, potential, vector);
    // (p + A)² ≥ 0, so the smallest sample of the stored potential bounds the spectrum.
    op.lower_bound = Some(op.potential.iter().cloned().fold(f64::INFINITY, f64::min));
    op.confining = fields.is_confining(grid);
    Ok(op)
}

/// Solver settings shared by the one-body eigen-problems.
#[derive(Clone, Debug)]
pub struct SolverSettings {
    pub tol: f64,
    pub options: EigenOptions,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol: 1e-10, options: EigenOptions::default() }
    }
}

/// `ĥ = h - (1 - ε)p²θ_s(p) - κ` with `κ = inf σ(h - (1 - ε)p²θ_s(p) - 1)`, so that
/// `inf σ(ĥ) = 1`. Returns `(ĥ, κ)`.
pub fn build_htilde(grid: &Grid, fields: &FieldConfig, eps: f64, s: f64) -> Result<(OperatorHandle, f64)> {
    build_htilde_with(grid, fields, eps, s, &SolverSettings::default())
}

pub fn build_htilde_with(
    grid: &Grid,
    fields: &FieldConfig,
    eps: f64,
    s: f64,
    settings: &SolverSettings,
) -> Result<(OperatorHandle, f64)> {
    let cutoff = SpectralCutoff::new(grid, eps, s)?;
    let mut op = build_h(grid, fields)?;
    for (m, t) in op.kinetic.iter_mut().zip(&cutoff.multiplier) {
        *m *= 1.0 - (1.0 - eps) * t;
    }
    op.lower_bound = None;
    let ground = linalg::lowest_eigenpairs(&op, 1, settings.tol, &settings.options)?;
    let kappa = ground[0].value - 1.0;
    let mut hat = op.shifted(-kappa);
    hat.lower_bound = Some(1.0);
    Ok((hat, kappa))
}

/// The `k` lowest eigenpairs with `L²`-normalized vectors. For confining operators the
/// ground state must keep its outer-shell mass below [`SHELL_MASS_LIMIT`].
pub fn lowest_eigenpairs(op: &OperatorHandle, k: usize, tol: f64) -> Result<Vec<Eigenpair>> {
    lowest_eigenpairs_with(op, k, tol, &EigenOptions::default())
}

pub fn lowest_eigenpairs_with(
    op: &OperatorHandle,
    k: usize,
    tol: f64,
    options: &EigenOptions,
) -> Result<Vec<Eigenpair>> {
    let mut pairs = linalg::lowest_eigenpairs(op, k, tol, options)?;
    let scale = 1.0 / op.grid.cell_volume().sqrt();
    for p in pairs.iter_mut() {
        linalg::scale(C64::new(scale, 0.0), &mut p.vector);
    }
    if op.confining {
        let mass = op.grid.outer_shell_mass(&pairs[0].vector);
        if mass >= SHELL_MASS_LIMIT {
            return Err(Error::ConfinementLeak { mass });
        }
    }
    Ok(pairs)
}

/// CSV table `index,eigenvalue,residual`.
pub fn spectrum_csv(pairs: &[Eigenpair]) -> String {
    let mut out = String::from("index,eigenvalue,residual\n");
    for (i, p) in pairs.iter().enumerate() {
        out.push_str(&format!("{i},{:.16e},{:.6e}\n", p.value, p.residual));
    }
    out
}

/// Energy-cutoff projector check on a mixture `v = Σ c_i φ_i` of `ĥ` eigenvectors:
/// returns `(‖(1 - P_Λ)v‖, Λ^{-1/5}‖ĥ^{1/5}v‖)`.
pub fn projector_tail(eigenvalues: &[f64], coeffs: &[C64], lambda: f64) -> (f64, f64) {
    let mut tail = 0.0;
    let mut weighted = 0.0;
    for (e, c) in eigenvalues.iter().zip(coeffs) {
        let w = c.norm_sqr();
        if *e >= lambda {
            tail += w;
        }
        weighted += e.powf(0.4) * w;
    }
    (tail.sqrt(), lambda.powf(-0.2) * weighted.sqrt())
}
