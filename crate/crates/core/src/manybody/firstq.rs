//! First-quantized grid tensors for a few particles: the Dyson potential `W_N`, the effective
//! Hamiltonian `H̃_N = Σ ĥ_j + (1-ε)²/N · W_N` and its second-moment diagnostics.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::basis::SymmetricBasis;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{self, EigenOptions, LinearOperator};
use crate::onebody::{build_htilde, FieldConfig};
use crate::potentials::{AnnulusPotential, CutoffFunction};

/// Largest tensor length `(grid points)^N` accepted.
pub const MAX_TENSOR_LEN: usize = 1 << 22;

fn tensor_len(grid: &Grid, particles: usize) -> Result<usize> {
    if particles == 0 {
        return Err(Error::InvalidParameter("particle count must be positive".into()));
    }
    let mut len: usize = 1;
    for _ in 0..particles {
        len = len.checked_mul(grid.len()).filter(|&l| l <= MAX_TENSOR_LEN).ok_or(Error::MemoryBudget {
            required: grid.len().saturating_pow(particles as u32),
            limit: MAX_TENSOR_LEN,
        })?;
    }
    Ok(len)
}

/// Grid-point index of each particle for a flat tensor index (particle 0 slowest).
fn configuration(flat: usize, g: usize, particles: usize, out: &mut [usize]) {
    let mut r = flat;
    for slot in (0..particles).rev() {
        out[slot] = r % g;
        r /= g;
    }
}

fn flat_of(points: &[usize], g: usize) -> usize {
    points.iter().fold(0, |acc, &p| acc * g + p)
}

/// A wave function on `(grid points)^N`, `L²`-normalized with the cell volume `Δx^{dN}`.
#[derive(Clone, Debug)]
pub struct FirstQuantizedState {
    grid: Grid,
    particles: usize,
    data: Vec<C64>,
}

impl FirstQuantizedState {
    pub fn new(grid: &Grid, particles: usize, data: Vec<C64>) -> Result<Self> {
        let len = tensor_len(grid, particles)?;
        if data.len() != len {
            return Err(Error::DimensionMismatch(format!("tensor has {} entries, expected {len}", data.len())));
        }
        let s = Self { grid: grid.clone(), particles, data };
        let norm = s.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(s)
    }

    /// Normalizes `data` (Euclidean coefficients are rescaled by the cell volume).
    pub fn normalized(grid: &Grid, particles: usize, mut data: Vec<C64>) -> Result<Self> {
        let e = linalg::norm(&data);
        if e == 0.0 {
            return Err(Error::NotNormalized { norm: 0.0 });
        }
        let scale = 1.0 / (e * grid.cell_volume().powf(0.5 * particles as f64));
        for z in &mut data {
            *z *= scale;
        }
        Self::new(grid, particles, data)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.data) * self.grid.cell_volume().powf(0.5 * self.particles as f64)
    }

    /// Largest `|ψ - τψ|` over adjacent transpositions `τ` (these generate all permutations).
    pub fn transposition_residual(&self) -> f64 {
        let g = self.grid.len();
        let n = self.particles;
        let scale = self.grid.cell_volume().powf(0.5 * n as f64);
        let mut pts = vec![0; n];
        let mut worst: f64 = 0.0;
        for (flat, z) in self.data.iter().enumerate() {
            configuration(flat, g, n, &mut pts);
            for t in 0..n.saturating_sub(1) {
                pts.swap(t, t + 1);
                worst = worst.max((z - self.data[flat_of(&pts, g)]).norm() * scale);
                pts.swap(t, t + 1);
            }
        }
        worst
    }

    pub fn is_symmetric(&self) -> bool {
        self.transposition_residual() < 1e-10
    }

    /// One-particle density `ρ(x) = ∫|ψ(x, x_2, …)|² dx_2…`, normalized to one.
    pub fn density(&self) -> Vec<f64> {
        let g = self.grid.len();
        let rest = self.data.len() / g;
        let dv = self.grid.cell_volume().powi(self.particles as i32 - 1);
        (0..g).map(|p| self.data[p * rest..(p + 1) * rest].iter().map(|z| z.norm_sqr()).sum::<f64>() * dv).collect()
    }
}

/// Parameters of the Dyson Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DysonParams {
    #[serde(rename = "N")]
    pub particles: usize,
    pub eps: f64,
    pub s: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub a: f64,
    /// Replace the `θ_{2R}` product by one (the two-body effective `K_N`).
    #[serde(default)]
    pub two_body: bool,
}

fn annulus(r: f64, a: f64, dim: usize) -> Result<AnnulusPotential> {
    if a == 0.0 {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("annulus scale R must be positive, got {r}")));
        }
        Ok(AnnulusPotential::zero(r, dim))
    } else {
        AnnulusPotential::new(r, a, dim)
    }
}

/// `Σ_{i≠j} U_R(x_i - x_j) Π_{k≠i,j} θ_{2R}(x_j - x_k)` from a pairwise distance table.
pub fn wn_from_distances(dist: &dyn Fn(usize, usize) -> f64, n: usize, u: &AnnulusPotential, theta: &CutoffFunction, two_body: bool) -> f64 {
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let uij = u.eval(dist(i, j));
            if uij == 0.0 {
                continue;
            }
            let mut prod = 1.0;
            if !two_body {
                for k in (0..n).filter(|&k| k != i && k != j) {
                    prod *= theta.eval(dist(j, k));
                }
            }
            total += uij * prod;
        }
    }
    total
}

/// Diagonal of `W_N` on the grid tensor, with minimum-image distances.
pub fn build_wn(grid: &Grid, particles: usize, r: f64, a: f64, two_body: bool) -> Result<Vec<f64>> {
    let len = tensor_len(grid, particles)?;
    let u = annulus(r, a, grid.dim())?;
    let theta = CutoffFunction::new(2.0 * r)?;
    let g = grid.len();
    let points: Vec<[f64; 3]> = (0..g).map(|p| grid.point(p)).collect();
    let mut cfg = vec![0; particles];
    Ok((0..len)
        .map(|flat| {
            configuration(flat, g, particles, &mut cfg);
            let dist = |i: usize, j: usize| grid.distance(&points[cfg[i]], &points[cfg[j]]);
            wn_from_distances(&dist, particles, &u, &theta, two_body)
        })
        .collect())
}

/// `H̃_N` on the full grid tensor, applied matrix-free with a dense `ĥ` per particle.
#[derive(Clone, Debug)]
pub struct DysonHamiltonian {
    grid: Grid,
    params: DysonParams,
    hhat: DMatrix<C64>,
    kappa: f64,
    w: Vec<f64>,
    coupling: f64,
}

pub fn build_dyson_hamiltonian(grid: &Grid, fields: &FieldConfig, params: &DysonParams) -> Result<DysonHamiltonian> {
    let n = params.particles;
    tensor_len(grid, n)?;
    let (op, kappa) = build_htilde(grid, fields, params.eps, params.s)?;
    let hhat = linalg::assemble_dense(&op);
    let w = build_wn(grid, n, params.r, params.a, params.two_body)?;
    let coupling = (1.0 - params.eps).powi(2) / n as f64;
    Ok(DysonHamiltonian { grid: grid.clone(), params: params.clone(), hhat, kappa, w, coupling })
}

impl DysonHamiltonian {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &DysonParams {
        &self.params
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn hhat(&self) -> &DMatrix<C64> {
        &self.hhat
    }

    /// Diagonal of `W_N`.
    pub fn potential(&self) -> &[f64] {
        &self.w
    }

    /// `(1-ε)²/N`.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// `y += ĥ_slot x`.
    pub fn add_slot(&self, slot: usize, x: &[C64], y: &mut [C64]) {
        let g = self.grid.len();
        let n = self.params.particles;
        let inner = g.pow((n - 1 - slot) as u32);
        let outer = x.len() / (inner * g);
        for o in 0..outer {
            for i in 0..inner {
                let base = o * g * inner + i;
                for p in 0..g {
                    let mut acc = C64::new(0.0, 0.0);
                    for q in 0..g {
                        acc += self.hhat[(p, q)] * x[base + q * inner];
                    }
                    y[base + p * inner] += acc;
                }
            }
        }
    }

    /// `Σ_j ĥ_j x`.
    pub fn sum_hhat(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        for slot in 0..self.params.particles {
            self.add_slot(slot, x, &mut y);
        }
        y
    }

    pub fn apply_w(&self, x: &[C64]) -> Vec<C64> {
        x.iter().zip(&self.w).map(|(a, w)| a * w).collect()
    }

    /// Orthonormal symmetrized configurations, one per multiset of grid points, as sparse
    /// columns `(flat index, coefficient)`.
    pub fn symmetric_columns(&self) -> Result<Vec<Vec<(usize, f64)>>> {
        let g = self.grid.len();
        let n = self.params.particles;
        let basis = SymmetricBasis::new(n, g)?;
        Ok(basis
            .states()
            .iter()
            .map(|occ| {
                let mut sorted: Vec<usize> = Vec::with_capacity(n);
                for (p, &k) in occ.iter().enumerate() {
                    sorted.extend(std::iter::repeat_n(p, k as usize));
                }
                let perms = distinct_permutations(&sorted);
                let c = 1.0 / (perms.len() as f64).sqrt();
                perms.iter().map(|t| (flat_of(t, g), c)).collect()
            })
            .collect())
    }

    /// `B† X B` for the symmetric columns `B` and an operator given column by column.
    fn reduce<F: Fn(&[C64]) -> Vec<C64>>(&self, cols: &[Vec<(usize, f64)>], op: F) -> DMatrix<C64> {
        let d = cols.len();
        let len = self.w.len();
        let mut out = DMatrix::<C64>::zeros(d, d);
        let mut x = vec![C64::new(0.0, 0.0); len];
        for (b, col) in cols.iter().enumerate() {
            for &(f, c) in col {
                x[f] = C64::new(c, 0.0);
            }
            let y = op(&x);
            for &(f, _) in col {
                x[f] = C64::new(0.0, 0.0);
            }
            for (a, row) in cols.iter().enumerate() {
                out[(a, b)] = row.iter().map(|&(f, c)| y[f] * c).sum();
            }
        }
        out
    }

    /// Ground state in the bosonic sector.
    pub fn ground_state(&self) -> Result<(f64, FirstQuantizedState)> {
        let cols = self.symmetric_columns()?;
        let reduced = self.reduce(&cols, |x| {
            let mut y = vec![C64::new(0.0, 0.0); x.len()];
            self.apply(x, &mut y);
            y
        });
        let opts = EigenOptions { dense_threshold: 4096, ..Default::default() };
        let pair = linalg::lowest_eigenpairs(&reduced, 1, 1e-11, &opts)?.remove(0);
        let mut data = vec![C64::new(0.0, 0.0); self.w.len()];
        for (coef, col) in pair.vector.iter().zip(&cols) {
            for &(f, c) in col {
                data[f] += coef * c;
            }
        }
        Ok((pair.value, FirstQuantizedState::normalized(&self.grid, self.params.particles, data)?))
    }
}

impl LinearOperator for DysonHamiltonian {
    fn dim(&self) -> usize {
        self.w.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for ((yi, xi), w) in y.iter_mut().zip(x).zip(&self.w) {
            *yi = xi * (self.coupling * w);
        }
        for slot in 0..self.params.particles {
            self.add_slot(slot, x, y);
        }
    }
}

/// All distinct orderings of a sorted tuple, in lexicographic order.
fn distinct_permutations(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = sorted.to_vec();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (0..cur.len().saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            return out;
        };
        let j = (i + 1..cur.len()).rev().find(|&j| cur[j] > cur[i]).expect("successor exists");
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(cur.clone());
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SecondMomentIdentity {
    /// `max |(H̃²  - (Σĥ)²) - RHS|` on the symmetric subspace.
    pub residual: f64,
    /// `max |H̃² - (Σĥ)²|`, for scale.
    pub lhs_scale: f64,
    pub symmetric_dim: usize,
}

/// Compares `(H̃_N)² - (Σĥ_j)²` with `(1-ε)²/N Σ_ℓ(ĥ_ℓW_N + W_Nĥ_ℓ) + (1-ε)⁴/N² W_N²`.
/// The left side is squared after reduction to the symmetric subspace; the right side is
/// assembled term by term on the full tensor.
pub fn second_moment_identity_check(grid: &Grid, fields: &FieldConfig, params: &DysonParams) -> Result<SecondMomentIdentity> {
    let h = build_dyson_hamiltonian(grid, fields, params)?;
    let cols = h.symmetric_columns()?;
    let ht = h.reduce(&cols, |x| {
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        h.apply(x, &mut y);
        y
    });
    let hs = h.reduce(&cols, |x| h.sum_hhat(x));
    let lhs = &ht * &ht - &hs * &hs;
    let c = h.coupling;
    let rhs = h.reduce(&cols, |x| {
        let wx = h.apply_w(x);
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        for slot in 0..params.particles {
            h.add_slot(slot, &wx, &mut y);
            let mut hx = vec![C64::new(0.0, 0.0); x.len()];
            h.add_slot(slot, x, &mut hx);
            for (yi, (hi, w)) in y.iter_mut().zip(hx.iter().zip(&h.w)) {
                *yi += hi * w;
            }
        }
        for ((yi, xi), w) in y.iter_mut().zip(x).zip(&h.w) {
            *yi = *yi * c + xi * (c * c * w * w);
        }
        y
    });
    let residual = (&lhs - &rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lhs_scale = lhs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(SecondMomentIdentity { residual, lhs_scale, symmetric_dim: cols.len() })
}

#[derive(Clone, Debug, Serialize)]
pub struct SecondMomentRatio {
    /// `⟨Ψ, H̃²Ψ⟩ / ⟨Ψ, (Σĥ)²Ψ⟩`.
    pub ratio: f64,
    /// `⟨Ψ, ĥ_1ĥ_2 Ψ⟩`.
    pub h1h2: f64,
}

pub fn second_moment_ratio(psi: &FirstQuantizedState, h: &DysonHamiltonian) -> Result<SecondMomentRatio> {
    if psi.particles() != h.params.particles || psi.data().len() != h.dim() {
        return Err(Error::DimensionMismatch("state does not match the Hamiltonian".into()));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    let x = psi.data();
    let mut hx = vec![C64::new(0.0, 0.0); x.len()];
    h.apply(x, &mut hx);
    let sx = h.sum_hhat(x);
    let ratio = hx.iter().map(|z| z.norm_sqr()).sum::<f64>() / sx.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let h1h2 = if h.params.particles >= 2 {
        let mut a = vec![C64::new(0.0, 0.0); x.len()];
        let mut b = vec![C64::new(0.0, 0.0); x.len()];
        h.add_slot(0, x, &mut a);
        h.add_slot(1, x, &mut b);
        linalg::dot(&a, &b).re * h.grid.cell_volume().powi(h.params.particles as i32)
    } else {
        f64::NAN
    };
    Ok(SecondMomentRatio { ratio, h1h2 })
}
