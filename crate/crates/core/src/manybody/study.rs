//! Energy per particle and condensation along a family of scaled interactions `w_N`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::SymmetricBasis;
use super::modes::{condensate_distance, depletion, eigenmodes, ground_state_with_witness, rdm, ModeHamiltonian};
use crate::error::Result;
use crate::gp::{minimize_gp, GPParams, MinimizeOptions};
use crate::grid::Grid;
use crate::onebody::{build_h, FieldConfig};
use crate::potentials::RadialPotential;
use crate::scattering::scattering_length;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scaling {
    /// `w_N = N^{dβ-1} w(N^β x)`.
    Beta { beta: f64 },
    /// `N^{d-1} w(Nx)`; in three dimensions `N² w(Nx)`.
    Gp,
}

impl Scaling {
    pub fn beta(&self) -> f64 {
        match self {
            Scaling::Beta { beta } => *beta,
            Scaling::Gp => 1.0,
        }
    }

    pub fn apply(&self, w: &RadialPotential, n: usize, dim: usize) -> Result<RadialPotential> {
        w.scale_beta_dim(n, self.beta(), dim)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyOptions {
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    /// Also minimize the local functional on the grid (costs one GP minimization per row).
    #[serde(default = "yes")]
    pub local_reference: bool,
    #[serde(default)]
    pub gp: MinimizeOptions,
}

fn default_modes() -> usize {
    8
}

fn default_tol() -> f64 {
    1e-10
}

fn yes() -> bool {
    true
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self { modes: default_modes(), tol: default_tol(), seed: 0, local_reference: true, gp: MinimizeOptions::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub dim: usize,
    pub energy_per_particle: f64,
    /// Mode-space Hartree minimum of `c†Tc + (N/2)⟨cc, w_N cc⟩`; for `β = 0` this is the
    /// `N`-independent functional with pair coupling `w/2`.
    pub e_hartree: f64,
    /// Best product-state energy per particle, `(N-1)/2` pair counting.
    pub e_hartree_product: f64,
    /// Grid minimum of `⟨u,hu⟩ + (N-1)/2 ∫w_N ∫|u|⁴` (contact coupling).
    pub e_hartree_local: f64,
    /// GP energy with `g = 4π N a(w_N)`; only defined in three dimensions.
    pub e_gp: f64,
    pub depletion: f64,
    pub condensate_distance: f64,
    pub error: Option<String>,
}

impl ConvergenceRow {
    fn failed(n: usize, err: String) -> Self {
        Self {
            n,
            dim: 0,
            energy_per_particle: f64::NAN,
            e_hartree: f64::NAN,
            e_hartree_product: f64::NAN,
            e_hartree_local: f64::NAN,
            e_gp: f64::NAN,
            depletion: f64::NAN,
            condensate_distance: f64::NAN,
            error: Some(err),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceStudy {
    pub scaling: Scaling,
    pub mode_energies: Vec<f64>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceStudy {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "N,dim,energy_per_particle,e_hartree,e_hartree_product,e_hartree_local,e_gp,depletion,condensate_distance,error\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                r.n,
                r.dim,
                r.energy_per_particle,
                r.e_hartree,
                r.e_hartree_product,
                r.e_hartree_local,
                r.e_gp,
                r.depletion,
                r.condensate_distance,
                r.error.as_deref().map(|e| format!("\"{}\"", e.replace('"', "\"\""))).unwrap_or_default()
            ));
        }
        out
    }
}

/// Exact diagonalization in the lowest `opts.modes` eigenmodes of `h` for each `N`, with
/// mean-field references. A failing row is recorded and the study continues.
pub fn convergence_study(
    scaling: Scaling,
    n_values: &[usize],
    grid: &Grid,
    fields: &FieldConfig,
    pot: &RadialPotential,
    opts: &StudyOptions,
) -> Result<ConvergenceStudy> {
    let (energies, modes) = eigenmodes(grid, fields, opts.modes)?;
    let h = build_h(grid, fields)?;
    let rows = n_values
        .par_iter()
        .map(|&n| {
            study_row(scaling, n, grid, &energies, &modes, &h, pot, opts).unwrap_or_else(|e| ConvergenceRow::failed(n, e.to_string()))
        })
        .collect();
    Ok(ConvergenceStudy { scaling, mode_energies: energies, rows })
}

#[allow(clippy::too_many_arguments)]
fn study_row(
    scaling: Scaling,
    n: usize,
    grid: &Grid,
    energies: &[f64],
    modes: &[Vec<num_complex::Complex64>],
    h: &crate::onebody::OperatorHandle,
    pot: &RadialPotential,
    opts: &StudyOptions,
) -> Result<ConvergenceRow> {
    let d = grid.dim();
    let wn = scaling.apply(pot, n, d)?;
    let mh = ModeHamiltonian::from_modes(grid, energies, modes.to_vec(), &wn)?;
    let basis = SymmetricBasis::new(n, mh.modes_count())?;
    let nf = n as f64;
    let limit = mh.hartree(nf, opts.seed);
    let product = mh.hartree(nf - 1.0, opts.seed);
    let witness = nf * product.energy;
    let (e, psi) = ground_state_with_witness(&mh.assemble(&basis)?, opts.tol, witness)?;
    let gamma = rdm(&basis, &psi, 1)?;
    let e_hartree_local = if opts.local_reference && !wn.is_zero() {
        let g = 0.5 * (nf - 1.0) * wn.integral(d)?;
        minimize_gp(h, &GPParams::new(g)?, None, &opts.gp)?.1.energy
    } else if opts.local_reference {
        energies[0]
    } else {
        f64::NAN
    };
    let e_gp = if d == 3 {
        let a = if wn.is_zero() { 0.0 } else { scattering_length(&wn, 4.0 * wn.range(), 1e-10)?.a };
        minimize_gp(h, &GPParams::from_scattering_length(nf * a)?, None, &opts.gp)?.1.energy
    } else {
        f64::NAN
    };
    Ok(ConvergenceRow {
        n,
        dim: basis.dim(),
        energy_per_particle: e / nf,
        e_hartree: limit.energy,
        e_hartree_product: product.energy,
        e_hartree_local,
        e_gp,
        depletion: depletion(&gamma),
        condensate_distance: condensate_distance(&gamma, &limit.coeffs)?,
        error: None,
    })
}
