use gplimit_core::gp::{central_winding, minimize_gp, nl_energy_study, GPParams};
use gplimit_core::ineqlab::{
    best_constant_w1, best_constant_w1_free, c_delta_dim, cauchy_schwarz_selftest, check_w2, check_w3, dyson_onebody_check,
    resolution_dependent, InequalityReport,
};
use gplimit_core::manybody::{
    condensate_distance, convergence_study, depletion, ground_state_with_witness, rdm, ModeHamiltonian,
    SymmetricBasis,
};
use gplimit_core::manybody::modes::eigenmodes;
use gplimit_core::onebody::{build_h, Grid};
use gplimit_core::scattering::{born_gap, scattering_length};
use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::config::*;
use crate::seeds;
use crate::table::{fmt_f64, Table};
use crate::RunError;

/// A complex array written as raw little-endian complex64 with a JSON sidecar.
#[derive(Clone, Debug)]
pub struct Dump {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<C64>,
    pub meta: Value,
}

#[derive(Clone, Debug)]
pub struct StudyResult {
    pub kind: StudyKind,
    pub summary: Value,
    pub tables: Vec<Table>,
    pub dumps: Vec<Dump>,
    /// Number of independent cells (rows, potentials, reports) and how many failed.
    pub cells: usize,
    pub failed: usize,
}

impl StudyResult {
    pub fn total_failure(&self) -> bool {
        self.cells > 0 && self.failed == self.cells
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

fn err_cell(e: Option<&String>) -> String {
    e.cloned().unwrap_or_default()
}

pub fn run(cfg: &RunConfig) -> Result<StudyResult, RunError> {
    match &cfg.study {
        Study::Scatter(c) => scatter(c),
        Study::GpMinimize(c) => gp_minimize(c, cfg.seed),
        Study::NlStudy(c) => nl_study(c, cfg.seed),
        Study::ManybodyEd(c) => manybody_ed(c, cfg.seed),
        Study::Converge(c) => converge(c, cfg.seed),
        Study::IneqCheck(c) => ineq_check(c, cfg.seed),
    }
}

fn scatter(c: &ScatterConfig) -> Result<StudyResult, RunError> {
    if c.potentials.is_empty() {
        return Err(RunError::Config("at `study.potentials`: list is empty".into()));
    }
    let mut table = Table::new(
        "scatter",
        &["index", "profile", "w0", "R0", "hard_core", "a", "residual", "eight_pi_a", "integral_w", "born_gap", "error"],
    );
    let mut summary = Vec::new();
    let mut failed = 0;
    for (i, pot) in c.potentials.iter().enumerate() {
        let res = scattering_length(pot, c.r_max_factor * pot.range(), c.tol);
        let born = if pot.is_hard_core() { None } else { Some(born_gap(pot)) };
        let (a, residual, err) = match &res {
            Ok(r) => (r.a, r.residual, None),
            Err(e) => (f64::NAN, f64::NAN, Some(e.to_string())),
        };
        let (bg, berr) = match born {
            Some(Ok(b)) => (Some(b), None),
            Some(Err(e)) => (None, Some(e.to_string())),
            None => (None, None),
        };
        let err = err.or(berr);
        failed += err.is_some() as usize;
        table.push(vec![
            i.to_string(),
            serde_json::to_value(pot.profile()).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            fmt_f64(pot.amplitude()),
            fmt_f64(pot.range()),
            pot.is_hard_core().to_string(),
            fmt_f64(a),
            fmt_f64(residual),
            fmt_f64(bg.map_or(f64::NAN, |b| b.eight_pi_a)),
            fmt_f64(bg.map_or(f64::NAN, |b| b.integral_w)),
            fmt_f64(bg.map_or(f64::NAN, |b| b.gap)),
            err_cell(err.as_ref()),
        ]);
        summary.push(json!({
            "a": finite(a),
            "residual": finite(residual),
            "born_gap": bg.map(|b| b.gap),
            "error": err,
        }));
    }
    Ok(StudyResult {
        kind: StudyKind::Scatter,
        summary: Value::Array(summary),
        tables: vec![table],
        dumps: Vec::new(),
        cells: c.potentials.len(),
        failed,
    })
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn grid_shape(grid: &Grid) -> Vec<usize> {
    vec![grid.points_per_axis(); grid.dim()]
}

fn gp_minimize(c: &GpConfig, seed: u64) -> Result<StudyResult, RunError> {
    let h = build_h(&c.grid, &c.fields)?;
    let params = GPParams::new(c.g)?;
    let mut opts = c.options.clone();
    opts.seed = seeds::child(seed, seeds::GP, 0);
    let (u, rep) = minimize_gp(&h, &params, None, &opts)?;
    let winding = if c.grid.dim() == 2 {
        match central_winding(&u, &c.winding_loops, 1e-2) {
            Ok(w) => json!(w),
            Err(e) => json!(e.to_string()),
        }
    } else {
        Value::Null
    };
    let mut trace = Table::new("energy_trace", &["iteration", "energy"]);
    for (i, e) in rep.energy_trace.iter().enumerate() {
        trace.push(vec![i.to_string(), fmt_f64(*e)]);
    }
    let summary = json!({
        "energy": rep.energy,
        "gradient_norm": rep.gradient_norm,
        "iterations": rep.iterations,
        "restarts_used": rep.restarts_used,
        "converged": rep.converged,
        "winding": winding,
        "model_dimension": c.grid.dim() != 3,
        "solver_seed": opts.seed,
    });
    let dump = Dump {
        name: "field".into(),
        shape: grid_shape(&c.grid),
        data: u.data().to_vec(),
        meta: json!({ "grid": c.grid, "normalization": "L2 with cell volume (2L/n)^d" }),
    };
    Ok(StudyResult {
        kind: StudyKind::GpMinimize,
        summary,
        tables: vec![trace],
        dumps: vec![dump],
        cells: 1,
        failed: !rep.converged as usize,
    })
}

fn nl_study(c: &NlConfig, seed: u64) -> Result<StudyResult, RunError> {
    let mut s_list = c.s.clone();
    if c.include_lattice_max {
        s_list.push(c.grid.max_momentum_norm());
    }
    let mut opts = c.options.clone();
    opts.seed = seeds::child(seed, seeds::NL, 0);
    let study = nl_energy_study(&c.grid, &c.fields, &c.eps, &s_list, c.g, &opts)?;
    let mut table = Table::new("nl_study", &["eps", "s", "kappa", "e_nl_plus_kappa", "e_gp", "gap", "converged", "error"]);
    let mut failed = 0;
    for r in &study.rows {
        failed += r.error.is_some() as usize;
        table.push(vec![
            fmt_f64(r.eps),
            fmt_f64(r.s),
            fmt_f64(r.kappa),
            fmt_f64(r.e_nl_plus_kappa),
            fmt_f64(r.e_gp),
            fmt_f64(r.gap),
            r.converged.to_string(),
            err_cell(r.error.as_ref()),
        ]);
    }
    let summary = json!({
        "e_gp": study.e_gp,
        "lattice_max_momentum": study.saturation_s,
        "cells": study.rows.len(),
        "failed": failed,
        "model_dimension": c.grid.dim() != 3,
    });
    Ok(StudyResult { kind: StudyKind::NlStudy, summary, tables: vec![table], dumps: Vec::new(), cells: study.rows.len(), failed })
}

fn manybody_ed(c: &EdConfig, seed: u64) -> Result<StudyResult, RunError> {
    let d = c.grid.dim();
    let n = c.particles;
    if n == 0 {
        return Err(RunError::Config("at `study.particles`: need at least one particle".into()));
    }
    if c.rdm_order == 0 || c.rdm_order > n {
        return Err(RunError::Config(format!("at `study.rdm_order`: must lie in 1..={n}")));
    }
    let wn = c.scaling.apply(&c.potential, n, d)?;
    let (energies, modes) = eigenmodes(&c.grid, &c.fields, c.modes)?;
    let mh = ModeHamiltonian::from_modes(&c.grid, &energies, modes, &wn)?;
    let basis = SymmetricBasis::new(n, mh.modes_count())?;
    let nf = n as f64;
    let hseed = seeds::child(seed, seeds::HARTREE, 0);
    let limit = mh.hartree(nf, hseed);
    let product = mh.hartree(nf - 1.0, hseed);
    let (e, psi) = ground_state_with_witness(&mh.assemble(&basis)?, c.tol, nf * product.energy)?;
    let gamma1 = rdm(&basis, &psi, 1)?;
    let gamma = if c.rdm_order == 1 { gamma1.clone() } else { rdm(&basis, &psi, c.rdm_order)? };

    let mut mode_table = Table::new("modes", &["index", "energy"]);
    for (i, e) in energies.iter().enumerate() {
        mode_table.push(vec![i.to_string(), fmt_f64(*e)]);
    }
    let mut spec = Table::new("rdm_spectrum", &["order", "index", "eigenvalue"]);
    let mut ev = gamma.eigenvalues();
    ev.sort_by(|a, b| b.total_cmp(a));
    for (i, v) in ev.iter().enumerate() {
        spec.push(vec![c.rdm_order.to_string(), i.to_string(), fmt_f64(*v)]);
    }
    let mut basis_table = Table::new("basis", &["index", "occupations"]);
    for (i, occ) in basis.states().iter().enumerate() {
        basis_table.push(vec![i.to_string(), occ.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(" ")]);
    }
    let summary = json!({
        "particles": n,
        "modes": mh.modes_count(),
        "basis_dim": basis.dim(),
        "energy": e,
        "energy_per_particle": e / nf,
        "e_hartree": limit.energy,
        "e_hartree_product": product.energy,
        "depletion": depletion(&gamma1),
        "condensate_distance": condensate_distance(&gamma1, &limit.coeffs)?,
        "rdm_trace": gamma.trace(),
        "model_dimension": d != 3,
    });
    let k = gamma.matrix.nrows();
    let dumps = vec![
        Dump {
            name: "ground_state".into(),
            shape: vec![basis.dim()],
            data: psi,
            meta: json!({ "basis": "occupation vectors listed in basis.csv", "particles": n, "modes": mh.modes_count() }),
        },
        Dump {
            name: "rdm".into(),
            shape: vec![k, k],
            data: gamma.matrix.transpose().iter().cloned().collect(),
            meta: json!({ "order": c.rdm_order, "layout": "row-major, ordered mode tuples I = i1*M^(k-1) + ... + ik" }),
        },
    ];
    Ok(StudyResult {
        kind: StudyKind::ManybodyEd,
        summary,
        tables: vec![mode_table, spec, basis_table],
        dumps,
        cells: 1,
        failed: 0,
    })
}

fn converge(c: &ConvergeConfig, seed: u64) -> Result<StudyResult, RunError> {
    if c.n_values.is_empty() {
        return Err(RunError::Config("at `study.N`: list is empty".into()));
    }
    let mut opts = c.options.clone();
    opts.seed = seeds::child(seed, seeds::STUDY, 0);
    opts.gp.seed = seeds::child(seed, seeds::GP, 0);
    let study = convergence_study(c.scaling, &c.n_values, &c.grid, &c.fields, &c.potential, &opts)?;
    let mut table = Table::new(
        "converge",
        &[
            "N",
            "basis_dim",
            "energy_per_particle",
            "e_hartree",
            "e_hartree_product",
            "e_hartree_local",
            "e_gp",
            "gap_to_hartree",
            "depletion",
            "condensate_distance",
            "error",
        ],
    );
    let mut failed = 0;
    for r in &study.rows {
        failed += r.error.is_some() as usize;
        table.push(vec![
            r.n.to_string(),
            r.dim.to_string(),
            fmt_f64(r.energy_per_particle),
            fmt_f64(r.e_hartree),
            fmt_f64(r.e_hartree_product),
            fmt_f64(r.e_hartree_local),
            fmt_f64(r.e_gp),
            fmt_f64((r.energy_per_particle - r.e_hartree).abs()),
            fmt_f64(r.depletion),
            fmt_f64(r.condensate_distance),
            err_cell(r.error.as_ref()),
        ]);
    }
    let gaps: Vec<f64> = study.rows.iter().map(|r| (r.energy_per_particle - r.e_hartree).abs()).collect();
    let summary = json!({
        "scaling": c.scaling,
        "mode_energies": study.mode_energies,
        "rows": study.rows.len(),
        "failed": failed,
        "gap_strictly_decreasing": gaps.windows(2).all(|w| w[1] < w[0]),
        "model_dimension": c.grid.dim() != 3,
    });
    Ok(StudyResult { kind: StudyKind::Converge, summary, tables: vec![table], dumps: Vec::new(), cells: study.rows.len(), failed })
}

fn need<'a, T>(v: &'a Option<T>, what: &str) -> Result<&'a T, RunError> {
    v.as_ref().ok_or_else(|| RunError::Config(format!("at `study.{what}`: required for this case")))
}

fn one_report(c: &IneqConfig, case: IneqCase, grid: Option<&Grid>, seed: u64) -> Result<Vec<InequalityReport>, RunError> {
    if case == IneqCase::Cs {
        return Ok(vec![cauchy_schwarz_selftest(c.cs_dim, c.cs_delta, seeds::child(seed, seeds::SELFTEST, 0))?]);
    }
    let grid = grid.ok_or_else(|| RunError::Config("at `study.grid`: required for this case".into()))?;
    let pot = need(&c.potential, "potential")?;
    let reps = match case {
        IneqCase::W1 => {
            let mut out = vec![best_constant_w1(pot, grid)?];
            // the free-space route needs the support inside the box
            if pot.is_zero() || pot.range() <= grid.half_width() {
                let mut free = best_constant_w1_free(pot, grid)?;
                free.id = "w1_free".into();
                out.push(free);
            }
            out
        }
        IneqCase::W2 => vec![check_w2(pot, c.delta, grid)?],
        IneqCase::W3 => vec![check_w3(pot, c.eps, c.s, grid, &c.fields)?],
        IneqCase::Dyson => vec![dyson_onebody_check(pot, need(&c.dyson, "dyson")?, grid)?],
        IneqCase::Cs => unreachable!(),
    };
    Ok(reps)
}

fn ineq_check(c: &IneqConfig, seed: u64) -> Result<StudyResult, RunError> {
    let case = *need(&c.case, "case")?;
    let mut reports = one_report(c, case, c.grid.as_ref(), seed)?;
    let mut flag = Value::Null;
    if c.refine && case != IneqCase::Cs {
        let g = need(&c.grid, "grid")?;
        let fine = Grid::new(g.dim(), g.half_width(), 2 * g.points_per_axis())?;
        let finer = one_report(c, case, Some(&fine), seed)?;
        let flags: Vec<bool> =
            reports.iter().zip(&finer).map(|(a, b)| resolution_dependent(a.constant, b.constant)).collect();
        flag = json!(flags);
        reports.extend(finer);
    }
    let mut table =
        Table::new("ineq", &["id", "n", "constant", "min_eigenvalue", "tolerance", "verdict", "c_delta"]);
    for r in &reports {
        let c_delta = if r.id == "w2" {
            c_delta_dim(c.delta, r.parameters.get("dim").map_or(3, |d| *d as usize)).map_or(f64::NAN, |v| v)
        } else {
            f64::NAN
        };
        table.push(vec![
            r.id.clone(),
            fmt_f64(r.parameters.get("n").copied().unwrap_or(f64::NAN)),
            fmt_f64(r.constant),
            fmt_f64(r.min_eigenvalue),
            fmt_f64(r.tolerance),
            if r.holds() { "holds".into() } else { "violated".into() },
            fmt_f64(c_delta),
        ]);
    }
    // a violated verdict is a finding, not a compute failure
    let summary = json!({ "reports": reports, "resolution_dependent": flag });
    Ok(StudyResult { kind: StudyKind::IneqCheck, summary, tables: vec![table], dumps: Vec::new(), cells: reports.len(), failed: 0 })
}
