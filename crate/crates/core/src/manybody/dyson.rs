//! Pointwise checks of the structure of `W_N` on random configurations in `ℝ^d`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::firstq::wn_from_distances;
use crate::error::{Error, Result};
use crate::potentials::{AnnulusPotential, CutoffFunction};

#[derive(Clone, Debug, Serialize)]
pub struct DysonPointwiseReport {
    pub configurations: usize,
    /// Configurations where some `U_R` factor was nonzero.
    pub active: usize,
    /// `W_N < Σ U_R - Σ U_R(1 - θ_{2R})` beyond roundoff.
    pub decomposition_violations: usize,
    /// Largest number of nonzero terms in either sum making up `W_a`.
    pub max_neighbor_count: usize,
    pub max_wa: f64,
    /// `2 sup U_R`.
    pub wa_bound: f64,
    /// `max |W_2 - 2U_R(x_1 - x_2)|` over the same draws restricted to two particles.
    pub two_body_defect: f64,
}

impl DysonPointwiseReport {
    pub fn passed(&self) -> bool {
        self.decomposition_violations == 0
            && self.max_neighbor_count <= 1
            && self.max_wa <= self.wa_bound * (1.0 + 1e-12)
            && self.two_body_defect == 0.0
    }
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Draws `samples` configurations of `n` particles uniformly in `[0, box_len]^d`.
pub fn dyson_pointwise_check(
    n: usize,
    dim: usize,
    r: f64,
    a: f64,
    box_len: f64,
    samples: usize,
    seed: u64,
) -> Result<DysonPointwiseReport> {
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two particles".into()));
    }
    if !(box_len > 0.0) {
        return Err(Error::InvalidParameter(format!("box length must be positive, got {box_len}")));
    }
    let u = AnnulusPotential::new(r, a, dim)?;
    let theta = CutoffFunction::new(2.0 * r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = DysonPointwiseReport {
        configurations: samples,
        active: 0,
        decomposition_violations: 0,
        max_neighbor_count: 0,
        max_wa: 0.0,
        wa_bound: 2.0 * u.sup(),
        two_body_defect: 0.0,
    };
    let mut x = vec![vec![0.0; dim]; n];
    for _ in 0..samples {
        for p in x.iter_mut() {
            for c in p.iter_mut() {
                *c = rng.gen::<f64>() * box_len;
            }
        }
        let d = |i: usize, j: usize| dist(&x[i], &x[j]);
        let w = wn_from_distances(&d, n, &u, &theta, false);
        let mut lower = 0.0;
        let mut any = false;
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let uij = u.eval(d(i, j));
                if uij == 0.0 {
                    continue;
                }
                any = true;
                let loss: f64 = (0..n).filter(|&k| k != i && k != j).map(|k| 1.0 - theta.eval(d(j, k))).sum();
                let prod: f64 = (0..n).filter(|&k| k != i && k != j).map(|k| theta.eval(d(j, k))).product();
                if prod < 1.0 - loss - 1e-14 {
                    rep.decomposition_violations += 1;
                }
                lower += uij * (1.0 - loss);
            }
        }
        if w < lower - 1e-12 * (1.0 + w.abs()) {
            rep.decomposition_violations += 1;
        }
        if any {
            rep.active += 1;
        }
        // W_a: terms of W_N in which particle 0 is one of the interacting pair
        let mut first = (0, 0.0);
        let mut second = (0, 0.0);
        for j in 1..n {
            let pj: f64 = (1..n).filter(|&k| k != j).map(|k| theta.eval(d(j, k))).product();
            let t = u.eval(d(0, j)) * pj;
            if t != 0.0 {
                first.0 += 1;
                first.1 += t;
            }
            let p0: f64 = (1..n).filter(|&k| k != j).map(|k| theta.eval(d(0, k))).product();
            let t = u.eval(d(j, 0)) * p0;
            if t != 0.0 {
                second.0 += 1;
                second.1 += t;
            }
        }
        rep.max_neighbor_count = rep.max_neighbor_count.max(first.0).max(second.0);
        rep.max_wa = rep.max_wa.max(first.1 + second.1);
        let w2 = wn_from_distances(&d, 2, &u, &theta, false);
        rep.two_body_defect = rep.two_body_defect.max((w2 - 2.0 * u.eval(d(0, 1))).abs());
    }
    Ok(rep)
}
