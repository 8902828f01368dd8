//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero on any failure that is
//! not listed in `KNOWN_FAILURES`.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use gplimit::{parse_config, replay, run, write_result};
use gplimit_core::gp::{
    central_winding, gp_energy, gp_gradient, minimize_gp, nl_energy_study, smooth_random_field, GPParams,
    MinimizeOptions, WaveFunction,
};
use gplimit_core::ineqlab::{
    best_constant_w1_free, c_delta, check_w2, check_w3, dyson_onebody_check, resolution_dependent, DysonSetup,
};
use gplimit_core::linalg::{assemble_dense, hermitian_eigen, hermitian_eigenvalues};
use gplimit_core::manybody::modes::{eigenmodes, tensor_power};
use gplimit_core::manybody::{
    build_mode_hamiltonian, convergence_study, dyson_pointwise_check, ground_state, perturbation_expectation,
    product_state, rdm, second_moment_identity_check, DysonParams, ModeHamiltonian, PerturbationSpec, Scaling,
    StudyOptions, SymmetricBasis,
};
use gplimit_core::onebody::{build_h, FieldConfig, Grid};
use gplimit_core::potentials::RadialPotential;
use gplimit_core::scattering::{born_gap, scattering_length, variational_energy, FnTrial};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria whose literal statement cannot hold; they print FAIL without failing the run.
const KNOWN_FAILURES: &[usize] = &[13];

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn random_unit(len: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..len).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

fn profiles(r0: f64) -> Vec<RadialPotential> {
    let sampled = |f: fn(f64) -> f64| -> Vec<[f64; 2]> {
        (0..=20)
            .map(|i| {
                let t = i as f64 / 20.0;
                [t, f(t)]
            })
            .collect()
    };
    vec![
        RadialPotential::square_well(1.0, r0).unwrap(),
        RadialPotential::smooth_bump(1.0, r0).unwrap(),
        RadialPotential::custom(sampled(|t| 1.0 - t), 1.0, r0).unwrap(),
        RadialPotential::custom(sampled(|t| 1.0 - t * t), 1.0, r0).unwrap(),
        RadialPotential::custom(sampled(|t| (PI * t).sin()), 1.0, r0).unwrap(),
    ]
}

fn spread(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn square_well_a(w0: f64, r0: f64) -> f64 {
    let k = (w0 / 2.0).sqrt();
    r0 - (k * r0).tanh() / k
}

fn c01_scattering_exactness() -> Check {
    let t = Instant::now();
    let hard = scattering_length(&RadialPotential::hard_core(1.0).map_err(e)?, 8.0, 1e-10).map_err(e)?.a;
    let t_hard = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let well = scattering_length(&RadialPotential::square_well(2.0, 1.0).map_err(e)?, 8.0, 1e-10).map_err(e)?.a;
    let t_well = t.elapsed().as_secs_f64();
    let oracle = 1.0 - 1f64.tanh();
    ensure((square_well_a(2.0, 1.0) - oracle).abs() < 1e-15, "closed form")?;
    ensure((hard - 1.0).abs() < 1e-6, format!("hard core a = {hard}"))?;
    ensure((well - oracle).abs() < 1e-6, format!("square well a = {well}, expected {oracle}"))?;
    ensure(t_hard < 1.0 && t_well < 1.0, format!("runtime {t_hard:.3}s / {t_well:.3}s"))?;
    Ok(format!("a_hard-1 = {:.1e}, a_well-(1-tanh 1) = {:.1e}, {:.3}s/{:.3}s", hard - 1.0, well - oracle, t_hard, t_well))
}

fn c02_scaling_laws() -> Check {
    let w = RadialPotential::smooth_bump(3.0, 1.0).map_err(e)?;
    let a = scattering_length(&w, 8.0, 1e-12).map_err(e)?.a;
    let mut worst = 0.0f64;
    for n in [2usize, 10, 100] {
        let wn = w.scale_gp(n).map_err(e)?;
        let an = scattering_length(&wn, 8.0 * wn.range(), 1e-12).map_err(e)?.a;
        worst = worst.max((an - a / n as f64).abs());
    }
    ensure(worst < 1e-6, format!("|a(w_N) - a/N| = {worst:e}"))?;
    let born = w.integral(3).map_err(e)? / (8.0 * PI);
    let mut na = Vec::new();
    for n in [10usize, 100, 1000, 10000] {
        let wn = w.scale_beta(n, 0.5).map_err(e)?;
        na.push(n as f64 * scattering_length(&wn, 8.0 * wn.range(), 1e-12).map_err(e)?.a);
    }
    let gaps: Vec<f64> = na.iter().map(|x| (born - x) / born).collect();
    ensure(gaps.iter().all(|g| *g > 0.0), format!("N·a_N above the Born value: {na:?}"))?;
    ensure(gaps.windows(2).all(|p| p[1] < p[0]), format!("not monotone: {gaps:?}"))?;
    ensure(gaps[3] < 0.02, format!("final gap {}", gaps[3]))?;
    Ok(format!("max |a_N - a/N| = {worst:.1e}; β=1/2 relative gaps {:.3e} → {:.3e}", gaps[0], gaps[3]))
}

fn c03_born_gap() -> Check {
    let mut pots = vec![
        RadialPotential::square_well(2.0, 1.0).map_err(e)?,
        RadialPotential::smooth_bump(5.0, 1.0).map_err(e)?,
    ];
    pots.extend(profiles(0.8).into_iter().skip(2).map(|p| p.scaled(4.0, 1.0)));
    let mut gaps = Vec::new();
    for p in &pots {
        let g = born_gap(p).map_err(e)?;
        ensure(g.gap > 0.0, format!("gap {} for {p:?}", g.gap))?;
        gaps.push(g.gap);
    }
    let mut weak_worst = 0.0f64;
    for p in [RadialPotential::square_well(0.01, 1.0).map_err(e)?, RadialPotential::smooth_bump(0.01, 1.0).map_err(e)?] {
        let g = born_gap(&p).map_err(e)?;
        ensure(g.gap > 0.0, "weak gap not positive")?;
        weak_worst = weak_worst.max(g.gap / g.integral_w);
    }
    ensure(weak_worst < 0.01, format!("weak relative gap {weak_worst}"))?;
    Ok(format!("{} potentials, min gap {:.3e}; weak relative gap {:.2e}", pots.len(), gaps.iter().cloned().fold(f64::INFINITY, f64::min), weak_worst))
}

fn c04_variational() -> Check {
    let trial = FnTrial {
        f: |r: f64| (1.0 - 1.0 / r).max(0.0),
        df: |r: f64| if r > 1.0 { 1.0 / (r * r) } else { 0.0 },
        kinks: vec![1.0],
    };
    let hard = variational_energy(&trial, &RadialPotential::hard_core(1.0).map_err(e)?, 400.0).map_err(e)?;
    let rel = (hard - 8.0 * PI).abs() / (8.0 * PI);
    ensure(rel < 1e-4, format!("hard sphere trial {hard}"))?;
    let w = RadialPotential::square_well(2.0, 1.0).map_err(e)?;
    let bound = 8.0 * PI * scattering_length(&w, 8.0, 1e-12).map_err(e)?.a - 1e-3;
    let mut lowest = f64::INFINITY;
    for depth in [0.2, 0.4, 0.6, 0.8] {
        for width in [0.5, 0.8, 1.2, 2.0, 3.0] {
            let t = FnTrial {
                f: move |r: f64| 1.0 - depth * (-(r / width).powi(2)).exp(),
                df: move |r: f64| depth * 2.0 * r / (width * width) * (-(r / width).powi(2)).exp(),
                kinks: vec![],
            };
            let en = variational_energy(&t, &w, 30.0).map_err(e)?;
            ensure(en >= bound, format!("trial ({depth}, {width}) gives {en} < {bound}"))?;
            lowest = lowest.min(en);
        }
    }
    Ok(format!("hard-sphere trial rel err {rel:.1e}; 20 trials ≥ 8πa - 1e-3 (lowest {lowest:.4}, 8πa = {:.4})", bound + 1e-3))
}

fn c05_gp_linear() -> Check {
    let g = Grid::new(3, 6.0, 32).map_err(e)?;
    let h = build_h(&g, &FieldConfig::harmonic(1.0)).map_err(e)?;
    let (_, rep) = minimize_gp(&h, &GPParams::new(0.0).map_err(e)?, None, &MinimizeOptions::default()).map_err(e)?;
    ensure((rep.energy - 3.0).abs() < 1e-3, format!("energy {}", rep.energy))?;
    ensure(rep.max_increase() <= 1e-12, format!("trace increases by {}", rep.max_increase()))?;

    let g2 = Grid::new(2, 5.0, 32).map_err(e)?;
    let h2 = build_h(&g2, &FieldConfig::harmonic(1.0).with_rotation(0.4)).map_err(e)?;
    let p = GPParams::new(3.0).map_err(e)?;
    let state = |seed: u64| -> Result<WaveFunction, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = WaveFunction::gaussian(&g2, 1.5).map_err(e)?;
        let noise = smooth_random_field(&g2, &mut rng, 8);
        WaveFunction::normalized(&g2, env.data().iter().zip(noise).map(|(a, b)| a * b).collect()).map_err(e)
    };
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let u = state(seed)?;
        let v = state(seed + 100)?;
        let predicted = g2.inner(v.data(), &gp_gradient(&u, &h2, &p)).re;
        let at = |t: f64| -> Result<f64, String> {
            let data = u.data().iter().zip(v.data()).map(|(a, b)| a + b * t).collect();
            gp_energy(&WaveFunction::normalized(&g2, data).map_err(e)?, &h2, &p).map_err(e)
        };
        let fd = (at(1e-6)? - at(-1e-6)?) / 2e-6;
        worst = worst.max((fd - predicted).abs() / predicted.abs());
    }
    ensure(worst < 1e-5, format!("gradient rel err {worst:e}"))?;
    Ok(format!("E = {:.6}, gradient rel err {worst:.1e}, trace monotone", rep.energy))
}

fn c06_gp_perturbative() -> Check {
    let g = Grid::new(3, 6.0, 32).map_err(e)?;
    let h = build_h(&g, &FieldConfig::harmonic(1.0)).map_err(e)?;
    let (_, rep) = minimize_gp(&h, &GPParams::new(0.01).map_err(e)?, None, &MinimizeOptions::default()).map_err(e)?;
    let oracle = 3.0 + 0.01 * (2.0 * PI).powf(-1.5);
    ensure((rep.energy - oracle).abs() < 1e-4, format!("{} vs {oracle}", rep.energy))?;
    ensure(rep.max_increase() <= 1e-12, "trace increases")?;
    Ok(format!("e_GP - oracle = {:.1e}", rep.energy - oracle))
}

fn c07_vortex() -> Check {
    let g = Grid::new(2, 8.0, 64).map_err(e)?;
    let omegas = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95];
    let mut windings = Vec::new();
    for (i, &om) in omegas.iter().enumerate() {
        let h = build_h(&g, &FieldConfig::harmonic(1.0).with_rotation(om)).map_err(e)?;
        let opts = MinimizeOptions { max_iter: 4000, seed: 100 + i as u64, ..Default::default() };
        let (u, rep) = minimize_gp(&h, &GPParams::new(50.0).map_err(e)?, None, &opts).map_err(e)?;
        ensure(rep.max_increase() <= 1e-12, format!("trace increases at Ω = {om}"))?;
        windings.push(central_winding(&u, &[8, 10, 6, 12, 4], 1e-2).map_err(e)?);
    }
    let first = windings.iter().position(|&w| w != 0).ok_or_else(|| format!("no vortex in sweep: {windings:?}"))?;
    ensure(windings[first..].iter().all(|&w| w != 0), format!("winding not persistent above Ω*: {windings:?}"))?;
    ensure(windings[..first].iter().all(|&w| w == 0), "nonzero winding below Ω*")?;
    Ok(format!("Ω* = {}; windings {windings:?}", omegas[first]))
}

fn c08_cutoff_limit() -> Check {
    let t = Instant::now();
    let g = Grid::new(1, 8.0, 64).map_err(e)?;
    let smax = g.max_momentum_norm();
    let eps = [0.5, 0.1, 0.01];
    let s = [0.5, 1.0, 2.0, 4.0, smax];
    let study = nl_energy_study(&g, &FieldConfig::harmonic(1.0), &eps, &s, 5.0, &MinimizeOptions::default()).map_err(e)?;
    for r in &study.rows {
        ensure(r.error.is_none(), format!("cell failed: {r:?}"))?;
        ensure(r.e_nl_plus_kappa <= study.e_gp + 1e-8, format!("e_NL + κ above e_GP: {r:?}"))?;
    }
    for chunk in study.rows.chunks(s.len()) {
        ensure(chunk.windows(2).all(|p| p[1].gap <= p[0].gap + 1e-12), format!("gap not monotone at ε = {}", chunk[0].eps))?;
    }
    let last = study.rows.last().unwrap();
    ensure(last.eps == 0.01 && last.s == smax, "last cell is not (0.01, lattice max)")?;
    ensure(last.gap < 0.05, format!("final gap {}", last.gap))?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 600.0, format!("runtime {secs:.0}s"))?;
    Ok(format!("{} cells, final gap {:.2e}, {secs:.1}s", study.rows.len(), last.gap))
}

fn c09_ed_correctness() -> Check {
    let g = Grid::new(1, 8.0, 64).map_err(e)?;
    let f = FieldConfig::harmonic(1.0);
    let free = build_mode_hamiltonian(&g, &f, &RadialPotential::zero(), 5).map_err(e)?;
    let (e1, _) = eigenmodes(&g, &f, 5).map_err(e)?;
    let mut worst = 0.0f64;
    for n in 1..=4 {
        let (en, _) = ground_state(&free.assemble(&SymmetricBasis::new(n, 5).map_err(e)?).map_err(e)?, 1e-12).map_err(e)?;
        worst = worst.max((en - n as f64 * e1[0]).abs());
    }
    ensure(worst < 1e-10, format!("noninteracting defect {worst:e}"))?;

    // complete mode basis on a small grid against the dense two-particle grid Hamiltonian
    let g = Grid::new(1, 4.0, 16).map_err(e)?;
    let w = RadialPotential::smooth_bump(3.0, 1.2).map_err(e)?;
    let n = g.len();
    let h1 = assemble_dense(&build_h(&g, &f).map_err(e)?);
    let (vals, vecs) = hermitian_eigen(&h1);
    let norm = g.spacing().sqrt();
    let modes: Vec<Vec<C64>> = (0..n).map(|j| vecs.column(j).iter().map(|z| z / norm).collect()).collect();
    let mh = ModeHamiltonian::from_modes(&g, &vals, modes, &w).map_err(e)?;
    let (e_ed, _) = ground_state(&mh.assemble(&SymmetricBasis::new(2, n).map_err(e)?).map_err(e)?, 1e-12).map_err(e)?;
    let mut full = DMatrix::<C64>::zeros(n * n, n * n);
    for a in 0..n {
        for b in 0..n {
            for a2 in 0..n {
                full[(a * n + b, a2 * n + b)] += h1[(a, a2)];
                full[(b * n + a, b * n + a2)] += h1[(a, a2)];
            }
            let r = g.min_image(g.coordinate(a) - g.coordinate(b)).abs();
            full[(a * n + b, a * n + b)] += c(w.eval(r).map_err(e)? + 100.0);
            full[(a * n + b, b * n + a)] -= c(100.0);
        }
    }
    let oracle = hermitian_eigenvalues(&full)[0];
    ensure((e_ed - oracle).abs() < 1e-8, format!("N=2: {e_ed} vs {oracle}"))?;
    Ok(format!("E(N) - N·e0 ≤ {worst:.1e}; N=2 ED - dense = {:.1e}", e_ed - oracle))
}

fn c10_mean_field_trend() -> Check {
    let t = Instant::now();
    let g = Grid::new(1, 8.0, 64).map_err(e)?;
    let w = RadialPotential::smooth_bump(4.0, 1.0).map_err(e)?;
    let ns: Vec<usize> = (2..=8).collect();
    let opts = StudyOptions { modes: 6, local_reference: false, ..Default::default() };
    let study = convergence_study(Scaling::Beta { beta: 0.0 }, &ns, &g, &FieldConfig::harmonic(1.0), &w, &opts).map_err(e)?;
    let gap: Vec<f64> = study.rows.iter().map(|r| (r.energy_per_particle - r.e_hartree).abs()).collect();
    let dep: Vec<f64> = study.rows.iter().map(|r| r.depletion).collect();
    ensure(study.rows.iter().all(|r| r.error.is_none()), "a row failed")?;
    ensure(gap.windows(2).all(|p| p[1] < p[0]), format!("|E/N - e_H| not decreasing: {gap:?}"))?;
    ensure(dep.windows(2).all(|p| p[1] < p[0]), format!("depletion not decreasing: {dep:?}"))?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 300.0, format!("runtime {secs:.0}s"))?;
    Ok(format!("gap {:.3e} → {:.3e}, depletion {:.3e} → {:.3e}, {secs:.1}s", gap[0], gap[6], dep[0], dep[6]))
}

fn c11_correlation_direction() -> Check {
    let g = Grid::new(1, 8.0, 128).map_err(e)?;
    let w = RadialPotential::smooth_bump(2.0, 2.0).map_err(e)?;
    let opts = StudyOptions { modes: 8, ..Default::default() };
    let study = convergence_study(Scaling::Gp, &[2, 3, 4], &g, &FieldConfig::harmonic(1.0), &w, &opts).map_err(e)?;
    let mut margins = Vec::new();
    for r in &study.rows {
        ensure(r.error.is_none(), format!("N = {}: {:?}", r.n, r.error))?;
        ensure(r.energy_per_particle < r.e_hartree_local, format!("N = {}: {} ≥ {}", r.n, r.energy_per_particle, r.e_hartree_local))?;
        margins.push(r.e_hartree_local - r.energy_per_particle);
    }
    Ok(format!("e_H,local - E/N = {margins:.3?}"))
}

fn c12_density_matrices() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for (n, m) in [(3, 3), (4, 3), (5, 4)] {
        let basis = SymmetricBasis::new(n, m).map_err(e)?;
        let psi = random_unit(basis.dim(), &mut rng);
        let mut above = rdm(&basis, &psi, n).map_err(e)?;
        for k in (1..n).rev() {
            let gk = rdm(&basis, &psi, k).map_err(e)?;
            worst = worst.max((gk.trace() - 1.0).abs());
            worst = worst.max(-gk.eigenvalues()[0]);
            worst = worst.max((&above.partial_trace().map_err(e)?.matrix - &gk.matrix).camax());
            above = gk;
        }
        let u = random_unit(m, &mut rng);
        let prod = product_state(&basis, &u);
        for k in 1..=n {
            let gk = rdm(&basis, &prod, k).map_err(e)?;
            let v = nalgebra::DVector::from_vec(tensor_power(&u, k));
            worst = worst.max((&gk.matrix - &v * v.adjoint()).camax());
        }
    }
    ensure(worst < 1e-12, format!("worst defect {worst:e}"))?;
    Ok(format!("worst defect {worst:.1e}"))
}

fn c13_perturbation_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut literal = 0.0f64;
    let mut exact = 0.0f64;
    for (n, ell) in [(4usize, 1usize), (4, 2), (6, 3)] {
        let basis = SymmetricBasis::new(n, 3).map_err(e)?;
        for _ in 0..20 {
            let psi = random_unit(basis.dim(), &mut rng);
            let v = random_unit(3, &mut rng);
            let rep = perturbation_expectation(&basis, &psi, &PerturbationSpec { v, ell }).map_err(e)?;
            literal = literal.max(rep.asymptotic_residual);
            exact = exact.max(rep.identity_residual);
        }
    }
    // the identity with the N!/((N-ℓ)!N^ℓ) tuple count must hold regardless
    ensure(exact < 1e-10, format!("counted identity residual {exact:e}"))?;
    let detail = format!("literal residual {literal:.2e}; with tuple count N!/((N-ℓ)!N^ℓ) residual {exact:.1e}");
    if literal < 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c14_second_moment() -> Check {
    let g = Grid::new(1, 0.6, 8).map_err(e)?;
    let f = FieldConfig::harmonic(1.0);
    let mut worst = 0.0f64;
    for (eps, s) in [(0.5, 2.0), (0.2, 3.0)] {
        let p = DysonParams { particles: 3, eps, s, r: 0.2, a: 0.5, two_body: false };
        let rep = second_moment_identity_check(&g, &f, &p).map_err(e)?;
        ensure(rep.lhs_scale > 1.0, "degenerate assembly")?;
        worst = worst.max(rep.residual);
    }
    ensure(worst < 1e-10, format!("residual {worst:e}"))?;
    Ok(format!("residual {worst:.1e}"))
}

fn c15_dyson_structure() -> Check {
    let mut active = 0;
    for (dim, seed) in [(3usize, 7u64), (1, 8)] {
        let rep = dyson_pointwise_check(5, dim, 0.5, 0.3, 2.0, 100_000, seed).map_err(e)?;
        ensure(rep.configurations == 100_000, "sample count")?;
        ensure(rep.decomposition_violations == 0, format!("d={dim}: {} violations", rep.decomposition_violations))?;
        ensure(rep.max_neighbor_count <= 1, format!("d={dim}: neighbor count {}", rep.max_neighbor_count))?;
        ensure(rep.two_body_defect == 0.0, format!("d={dim}: W_2 - 2U_R = {}", rep.two_body_defect))?;
        ensure(rep.passed(), format!("{rep:?}"))?;
        active += rep.active;
    }
    Ok(format!("2×10^5 configurations ({active} active), no violations"))
}

fn c16_inequality_lab() -> Check {
    let c0 = c_delta(0.0).map_err(e)?;
    ensure((c0 - 1.0 / (8.0 * PI)).abs() < 1e-6, format!("C_0 = {c0}"))?;
    let (c1, c2, c249) = (c_delta(0.1).map_err(e)?, c_delta(0.2).map_err(e)?, c_delta(0.249).map_err(e)?);
    ensure(c0 < c1 && c1 < c2, "C_δ not monotone")?;
    ensure(c249 > 100.0 * c0, format!("C_0.249 = {c249}"))?;

    let g1 = Grid::new(1, 6.4, 256).map_err(e)?;
    let mut w2_min = f64::INFINITY;
    for r0 in [0.4, 0.2, 0.1] {
        let w = RadialPotential::smooth_bump(1.0, r0).map_err(e)?;
        let w = w.scaled(1.0 / w.integral(1).map_err(e)?, 1.0);
        let rep = check_w2(&w, 0.0, &g1).map_err(e)?;
        ensure(rep.min_eigenvalue >= -1e-8, format!("W2 at R0 = {r0}: {}", rep.min_eigenvalue))?;
        w2_min = w2_min.min(rep.min_eigenvalue);
    }

    // W1: scaling family and profiles on a fixed grid, then refinement
    let g3 = Grid::new(3, 1.0, 32).map_err(e)?;
    let mut w1_spread = 1.0f64;
    let mut w1_base = Vec::new();
    for w in profiles(1.0) {
        let cs = [1.0, 2.0, 4.0]
            .iter()
            .map(|&l| best_constant_w1_free(&w.scaled(l * l * l, l), &g3).map(|r| r.constant))
            .collect::<Result<Vec<f64>, _>>()
            .map_err(e)?;
        w1_spread = w1_spread.max(spread(&cs));
        w1_base.push(cs[0]);
    }
    ensure(w1_spread < 1.1, format!("W1 λ-spread {w1_spread}"))?;
    ensure(spread(&w1_base) < 10.0, format!("W1 profile spread {}", spread(&w1_base)))?;
    let bump = RadialPotential::smooth_bump(1.0, 1.0).map_err(e)?;
    let fine = best_constant_w1_free(&bump, &Grid::new(3, 1.0, 64).map_err(e)?).map_err(e)?.constant;
    ensure(!resolution_dependent(w1_base[1], fine), format!("W1 refinement {} → {fine}", w1_base[1]))?;

    // W3: profile sweep at fixed range, then refinement
    let gw3 = Grid::new(1, 4.0, 16).map_err(e)?;
    let mut w3_spread = 1.0f64;
    for (fields, s) in [(FieldConfig::harmonic(1.0), 2.0), (FieldConfig::free(), 100.0)] {
        let cs = profiles(1.5)
            .iter()
            .map(|w| check_w3(w, 0.5, s, &gw3, &fields).map(|r| r.constant))
            .collect::<Result<Vec<f64>, _>>()
            .map_err(e)?;
        w3_spread = w3_spread.max(spread(&cs));
    }
    ensure(w3_spread < 5.0, format!("W3 profile spread {w3_spread}"))?;
    let w = RadialPotential::smooth_bump(1.0, 1.5).map_err(e)?;
    let at = |n| check_w3(&w, 0.5, 2.0, &Grid::new(1, 4.0, n).unwrap(), &FieldConfig::harmonic(1.0)).map(|r| r.constant);
    let (w3c, w3f) = (at(16).map_err(e)?, at(32).map_err(e)?);
    ensure(!resolution_dependent(w3c, w3f), format!("W3 refinement {w3c} → {w3f}"))?;

    // Dyson: doubling s, then refinement
    let gd = Grid::new(3, 2.0, 32).map_err(e)?;
    let wd = RadialPotential::smooth_bump(5.0, 1.0).map_err(e)?;
    let setup = |n: usize, r: f64, s: f64| DysonSetup { particles: n, r, s, eps: 0.5, scatterers: vec![[0.0; 3]] };
    let mut ratios = Vec::new();
    for r in [0.6, 0.8] {
        let a = dyson_onebody_check(&wd, &setup(4, r, 2.0), &gd).map_err(e)?.constant;
        let b = dyson_onebody_check(&wd, &setup(4, r, 4.0), &gd).map_err(e)?.constant;
        ensure(a > 0.0 && b > 0.0, "Dyson constant vanished")?;
        ratios.push(b / a);
    }
    ensure(ratios.iter().all(|q| *q > 1.0 / 3.0 && *q < 3.0), format!("Dyson C(2s)/C(s) = {ratios:?}"))?;
    let dc = dyson_onebody_check(&wd, &setup(2, 1.2, 2.0), &Grid::new(3, 2.0, 16).map_err(e)?).map_err(e)?.constant;
    let df = dyson_onebody_check(&wd, &setup(2, 1.2, 2.0), &gd).map_err(e)?.constant;
    ensure(!resolution_dependent(dc, df), format!("Dyson refinement {dc} → {df}"))?;

    Ok(format!(
        "C_0 ok; W2 min eig {w2_min:.2e}; W1 λ-spread {:.1}% profiles ×{:.2}; W3 ×{w3_spread:.2}; Dyson C(2s)/C(s) {ratios:.2?}",
        100.0 * (w1_spread - 1.0),
        spread(&w1_base)
    ))
}

fn c17_reproducibility() -> Check {
    let dir = std::env::temp_dir().join(format!("gplimit-acceptance-{}", std::process::id()));
    let cfg_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples_cfg");
    let mut names: Vec<_> = std::fs::read_dir(&cfg_dir).map_err(e)?.filter_map(|d| d.ok()).map(|d| d.path()).collect();
    names.sort();
    let mut compared = 0;
    for path in &names {
        let stem = path.file_stem().unwrap().to_string_lossy().to_string();
        let cfg = parse_config(&std::fs::read_to_string(path).map_err(e)?).map_err(e)?;
        let first = dir.join(&stem);
        let result = run(&cfg).map_err(e)?;
        write_result(&first, &cfg, &result, 1, 0.0).map_err(e)?;
        let rep = replay(&first.join("manifest.json"), &dir.join(format!("{stem}-replay")), 1).map_err(e)?;
        ensure(rep.identical(), format!("{stem}: mismatched {:?} missing {:?}", rep.mismatched, rep.missing))?;
        compared += rep.compared;
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{} studies replayed, {compared} artifacts bit-identical", names.len()))
}

fn main() {
    let criteria: Vec<(usize, &str, fn() -> Check)> = vec![
        (1, "scattering exactness", c01_scattering_exactness),
        (2, "scaling laws", c02_scaling_laws),
        (3, "Born gap", c03_born_gap),
        (4, "variational characterization", c04_variational),
        (5, "GP linear limit", c05_gp_linear),
        (6, "GP perturbative check", c06_gp_perturbative),
        (7, "vortex property", c07_vortex),
        (8, "cutoff-functional limit", c08_cutoff_limit),
        (9, "ED correctness", c09_ed_correctness),
        (10, "mean-field trend", c10_mean_field_trend),
        (11, "correlation energy direction", c11_correlation_direction),
        (12, "density-matrix contracts", c12_density_matrices),
        (13, "perturbation identity", c13_perturbation_identity),
        (14, "second-moment identity", c14_second_moment),
        (15, "Dyson structure", c15_dyson_structure),
        (16, "inequality lab", c16_inequality_lab),
        (17, "reproducibility", c17_reproducibility),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                let known = KNOWN_FAILURES.contains(&id);
                println!("FAIL {id:>2} {name} ({secs:.1}s){}: {detail}", if known { " [known]" } else { "" });
                if !known {
                    unexpected.push(id);
                }
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
