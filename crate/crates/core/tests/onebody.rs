use gplimit_core::linalg::{self, LinearOperator};
use gplimit_core::onebody::{
    build_h, build_htilde, lowest_eigenpairs, FieldConfig, Grid, PotentialField, VectorField,
};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn three_dimensional_oscillator_ground_energy() {
    let g = Grid::new(3, 6.0, 32).unwrap();
    let h = build_h(&g, &FieldConfig::harmonic(1.0)).unwrap();
    let e = lowest_eigenpairs(&h, 1, 1e-9).unwrap()[0].value;
    // one unit of zero-point energy per axis
    assert!((e - 3.0).abs() < 1e-3, "{e}");
}

#[test]
fn rotating_trap_matches_fock_darwin() {
    let omega = 0.5;
    let g = Grid::new(2, 7.0, 64).unwrap();
    let h = build_h(&g, &FieldConfig::harmonic(1.0).with_rotation(omega)).unwrap();
    let pairs = lowest_eigenpairs(&h, 6, 1e-9).unwrap();
    // p² + |x|² + 2ΩL_z: 2(2n_r + |m| + 1) + 2Ωm
    let mut oracle = Vec::new();
    for nr in 0..6 {
        for m in -12i32..=12 {
            oracle.push(2.0 * (2 * nr + m.abs() + 1) as f64 + 2.0 * omega * m as f64);
        }
    }
    oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (p, e) in pairs.iter().zip(&oracle) {
        assert!((p.value - e).abs() < 1e-6, "{} vs {e}", p.value);
    }
    let h0 = build_h(&g, &FieldConfig::harmonic(1.0)).unwrap();
    let e0 = lowest_eigenpairs(&h0, 1, 1e-9).unwrap()[0].value;
    assert!(pairs[0].value <= e0 + 1e-8);
}

#[test]
fn constant_vector_potential_shifts_momenta() {
    let a0 = 0.37;
    let g = Grid::new(1, 3.0, 32).unwrap();
    let f = FieldConfig::free().with_vector(VectorField::CustomSamples { components: vec![vec![a0; g.len()]] });
    let h = build_h(&g, &f).unwrap();
    let vals = linalg::hermitian_eigenvalues(&linalg::assemble_dense(&h));
    let mut oracle: Vec<f64> = (0..g.len()).map(|i| (g.momentum(i)[0] + a0).powi(2)).collect();
    oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (v, e) in vals.iter().zip(&oracle) {
        assert!((v - e).abs() < 1e-9, "{v} vs {e}");
    }
}

#[test]
fn htilde_bounded_below_by_one() {
    let g = Grid::new(1, 8.0, 64).unwrap();
    let (hat, _) = build_htilde(&g, &FieldConfig::harmonic(1.0), 0.5, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let u: Vec<C64> = (0..g.len()).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let q = linalg::dot(&u, &hat.apply_vec(&u)).re / linalg::dot(&u, &u).re;
        assert!(q >= 1.0 - 1e-8, "{q}");
    }
}

#[test]
fn kappa_bounds_uniform_in_s() {
    let g = Grid::new(1, 8.0, 64).unwrap();
    let f = FieldConfig::harmonic(1.0);
    let h0 = lowest_eigenpairs(&build_h(&g, &f).unwrap(), 1, 1e-10).unwrap()[0].value;
    for eps in [0.1f64, 0.5] {
        // h - (1-ε)p²θ_s ≥ εp² + x², whose ground energy is √ε
        let floor = eps.sqrt() - 1.0;
        for s in [0.5, 1.0, 2.0, 4.0] {
            let (_, kappa) = build_htilde(&g, &f, eps, s).unwrap();
            assert!(kappa >= floor - 1e-8, "ε={eps} s={s}: {kappa} < {floor}");
            assert!(kappa <= h0 - 1.0 + 1e-9);
        }
    }
}

#[test]
fn custom_potential_matches_harmonic() {
    let g = Grid::new(1, 8.0, 64).unwrap();
    let values = g.sample(|x| x[0] * x[0]);
    let f = FieldConfig { potential: PotentialField::CustomSamples { values }, vector: VectorField::Zero };
    let a = lowest_eigenpairs(&build_h(&g, &f).unwrap(), 2, 1e-10).unwrap();
    let b = lowest_eigenpairs(&build_h(&g, &FieldConfig::harmonic(1.0)).unwrap(), 2, 1e-10).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.value - y.value).abs() < 1e-10);
    }
}

#[test]
fn field_config_json() {
    let json = r#"{"V": {"kind": "harmonic", "stiffness": 1.0}, "A": {"kind": "rotation", "omega": 0.4}}"#;
    let f: FieldConfig = serde_json::from_str(json).unwrap();
    assert_eq!(f, FieldConfig::harmonic(1.0).with_rotation(0.4));
    assert!(serde_json::from_str::<FieldConfig>(r#"{"V": {"kind": "harmonic", "stiffness": 1.0, "x": 2}}"#).is_err());
}
