use gplimit_core::manybody::{convergence_study, Scaling, StudyOptions};
use gplimit_core::onebody::{FieldConfig, Grid};
use gplimit_core::potentials::RadialPotential;

#[test]
fn noninteracting_rows_are_flat() {
    let g = Grid::new(1, 8.0, 64).unwrap();
    let study = convergence_study(
        Scaling::Beta { beta: 0.0 },
        &[1, 2, 3, 4],
        &g,
        &FieldConfig::harmonic(1.0),
        &RadialPotential::zero(),
        &StudyOptions { modes: 5, ..Default::default() },
    )
    .unwrap();
    for r in &study.rows {
        assert!((r.energy_per_particle - study.mode_energies[0]).abs() < 1e-10);
        assert!(r.depletion.abs() < 1e-10);
        assert!(r.e_gp.is_nan());
    }
}

#[test]
fn mean_field_trend_at_fixed_range() {
    let g = Grid::new(1, 8.0, 64).unwrap();
    let w = RadialPotential::smooth_bump(4.0, 1.0).unwrap();
    let opts = StudyOptions { modes: 6, ..Default::default() };
    let ns: Vec<usize> = (2..=6).collect();
    let study = convergence_study(Scaling::Beta { beta: 0.0 }, &ns, &g, &FieldConfig::harmonic(1.0), &w, &opts).unwrap();
    for r in &study.rows {
        println!("{r:?}");
        assert!(r.error.is_none());
        assert!(r.energy_per_particle <= r.e_hartree_product + 1e-10);
    }
    for pair in study.rows.windows(2) {
        let gap = |r: &gplimit_core::manybody::ConvergenceRow| (r.energy_per_particle - r.e_hartree).abs();
        assert!(gap(&pair[1]) < gap(&pair[0]));
        assert!(pair[1].depletion < pair[0].depletion);
    }
    assert!(study.to_csv().lines().count() == ns.len() + 1);
}

#[test]
fn depletion_follows_the_coupling() {
    let g = Grid::new(1, 8.0, 64).unwrap();
    let opts = StudyOptions { modes: 6, local_reference: false, ..Default::default() };
    let mut last = f64::INFINITY;
    for w0 in [8.0, 4.0, 2.0, 1.0] {
        let w = RadialPotential::smooth_bump(w0, 1.0).unwrap();
        let study = convergence_study(Scaling::Beta { beta: 0.0 }, &[6], &g, &FieldConfig::harmonic(1.0), &w, &opts).unwrap();
        let dep = study.rows[0].depletion;
        assert!(dep < last, "w0 {w0}: {dep}");
        last = dep;
    }
}

#[test]
fn failing_rows_are_recorded() {
    let g = Grid::new(1, 8.0, 64).unwrap();
    let w = RadialPotential::smooth_bump(1.0, 1.0).unwrap();
    let study = convergence_study(
        Scaling::Beta { beta: 1.0 },
        &[2, 8],
        &g,
        &FieldConfig::harmonic(1.0),
        &w,
        &StudyOptions { modes: 4, ..Default::default() },
    )
    .unwrap();
    assert!(study.rows[0].error.is_none());
    assert!(study.rows[1].error.is_some() && study.rows[1].energy_per_particle.is_nan());
    assert!(study.to_csv().contains('"'));
}
