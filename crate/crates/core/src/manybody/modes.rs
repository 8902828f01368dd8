//! Second quantization over the lowest `M` eigenmodes of `h`: the pairwise Hamiltonian,
//! ground states, reduced density matrices, mean-field references and the perturbation
//! `S_{v,ℓ}`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::basis::{annihilate, annihilate_state, SparseMatrix, SymmetricBasis};
use crate::error::{Error, Result};
use crate::grid::{Grid, Spectral};
use crate::linalg::{self, EigenOptions, LinearOperator};
use crate::onebody::{build_h, lowest_eigenpairs, FieldConfig};
use crate::potentials::RadialPotential;

pub const MAX_MODES: usize = 32;

/// `H = Σ T_ij a†_i a_j + ½ Σ V_ijkl a†_i a†_j a_l a_k` over `M` modes.
#[derive(Clone, Debug)]
pub struct ModeHamiltonian {
    m: usize,
    pub t: DMatrix<C64>,
    /// `V_ijkl` at `((i·M + j)·M + k)·M + l`.
    pub v: Vec<C64>,
    /// Mode functions on the grid (`L²`-normalized), empty for abstract Hamiltonians.
    pub modes: Vec<Vec<C64>>,
}

/// Lowest `m` eigenmodes of `h` with their energies.
pub fn eigenmodes(grid: &Grid, fields: &FieldConfig, m: usize) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    if m == 0 || m > MAX_MODES {
        return Err(Error::InvalidParameter(format!("mode count {m} outside 1..={MAX_MODES}")));
    }
    let h = build_h(grid, fields)?;
    let pairs = lowest_eigenpairs(&h, m, 1e-10)?;
    Ok((pairs.iter().map(|p| p.value).collect(), pairs.into_iter().map(|p| p.vector).collect()))
}

/// Checks that `pot` can be sampled on `grid` without aliasing.
pub fn check_resolvable(grid: &Grid, pot: &RadialPotential) -> Result<()> {
    if pot.is_hard_core() {
        return Err(Error::InvalidParameter("a hard core has no grid representation".into()));
    }
    if pot.is_zero() {
        return Ok(());
    }
    let range = pot.range();
    if range < 2.0 * grid.spacing() {
        return Err(Error::Aliasing { range, spacing: grid.spacing() });
    }
    if range >= grid.half_width() {
        return Err(Error::InvalidParameter(format!(
            "potential range {range} must stay below the box half-width {}",
            grid.half_width()
        )));
    }
    Ok(())
}

pub fn build_mode_hamiltonian(grid: &Grid, fields: &FieldConfig, pot: &RadialPotential, m: usize) -> Result<ModeHamiltonian> {
    let (energies, modes) = eigenmodes(grid, fields, m)?;
    ModeHamiltonian::from_modes(grid, &energies, modes, pot)
}

impl ModeHamiltonian {
    /// Interaction matrix elements by grid quadrature, using one spectral convolution per
    /// mode pair: `V_ijkl = Σ_x conj(φ_i)φ_k · (w * conj(φ_j)φ_l)(x) Δx^d`.
    pub fn from_modes(grid: &Grid, energies: &[f64], modes: Vec<Vec<C64>>, pot: &RadialPotential) -> Result<Self> {
        let m = modes.len();
        if energies.len() != m {
            return Err(Error::DimensionMismatch("one energy per mode required".into()));
        }
        check_resolvable(grid, pot)?;
        let t = DMatrix::from_fn(m, m, |i, j| if i == j { C64::new(energies[i], 0.0) } else { C64::new(0.0, 0.0) });
        let mut v = vec![C64::new(0.0, 0.0); m * m * m * m];
        if !pot.is_zero() {
            let sp = Spectral::new(grid);
            let kernel: Vec<C64> = grid
                .sample(|x| {
                    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                    pot.value(r)
                })
                .into_iter()
                .map(|w| C64::new(w, 0.0))
                .collect();
            let mut conv = vec![Vec::new(); m * m];
            for j in 0..m {
                for l in j..m {
                    let rho: Vec<C64> = modes[j].iter().zip(&modes[l]).map(|(a, b)| a.conj() * b).collect();
                    let c = sp.convolve(&kernel, &rho);
                    if l != j {
                        conv[l * m + j] = c.iter().map(|z| z.conj()).collect();
                    }
                    conv[j * m + l] = c;
                }
            }
            let dv = grid.cell_volume();
            for i in 0..m {
                for k in 0..m {
                    let rho: Vec<C64> = modes[i].iter().zip(&modes[k]).map(|(a, b)| a.conj() * b).collect();
                    for j in 0..m {
                        for l in 0..m {
                            let val: C64 = rho.iter().zip(&conv[j * m + l]).map(|(a, b)| a * b).sum();
                            v[((i * m + j) * m + k) * m + l] = val * dv;
                        }
                    }
                }
            }
        }
        let mut h = Self { m, t, v, modes };
        h.symmetrize();
        Ok(h)
    }

    /// Abstract Hamiltonian from matrices; `v` is symmetrized.
    pub fn from_parts(t: DMatrix<C64>, v: Vec<C64>) -> Result<Self> {
        let m = t.nrows();
        if t.ncols() != m || v.len() != m * m * m * m {
            return Err(Error::DimensionMismatch("T must be M×M and V must have M⁴ entries".into()));
        }
        let t = (&t + t.adjoint()) * C64::new(0.5, 0.0);
        let mut h = Self { m, t, v, modes: Vec::new() };
        h.symmetrize();
        Ok(h)
    }

    pub fn modes_count(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn v(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        let m = self.m;
        self.v[((i * m + j) * m + k) * m + l]
    }

    /// Enforces invariance under `i↔j`, `k↔l` (which leaves the bosonic operator unchanged)
    /// and Hermiticity `V_ijkl = conj(V_klij)`.
    fn symmetrize(&mut self) {
        let m = self.m;
        let idx = |i: usize, j: usize, k: usize, l: usize| ((i * m + j) * m + k) * m + l;
        let old = self.v.clone();
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let a = old[idx(i, j, k, l)] + old[idx(j, i, k, l)] + old[idx(i, j, l, k)] + old[idx(j, i, l, k)];
                        let b = old[idx(k, l, i, j)] + old[idx(l, k, i, j)] + old[idx(k, l, j, i)] + old[idx(l, k, j, i)];
                        self.v[idx(i, j, k, l)] = (a + b.conj()) * 0.125;
                    }
                }
            }
        }
    }

    /// Largest violation of the declared symmetries of `V` and Hermiticity of `T`.
    pub fn symmetry_defect(&self) -> f64 {
        let m = self.m;
        let mut worst: f64 = (&self.t - self.t.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let x = self.v(i, j, k, l);
                        worst = worst
                            .max((x - self.v(j, i, k, l)).norm())
                            .max((x - self.v(i, j, l, k)).norm())
                            .max((x - self.v(k, l, i, j).conj()).norm());
                    }
                }
            }
        }
        worst
    }

    /// Sparse matrix of `H` on the `N`-particle basis.
    pub fn assemble(&self, basis: &SymmetricBasis) -> Result<SparseMatrix> {
        if basis.modes() != self.m {
            return Err(Error::DimensionMismatch(format!("basis has {} modes, Hamiltonian {}", basis.modes(), self.m)));
        }
        let m = self.m;
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); basis.dim()];
        let mut occ = vec![0u8; m];
        for col in 0..basis.dim() {
            let s = basis.state(col);
            // one-body part
            for j in 0..m {
                if s[j] == 0 {
                    continue;
                }
                let aj = (s[j] as f64).sqrt();
                for i in 0..m {
                    let tij = self.t[(i, j)];
                    if tij == C64::new(0.0, 0.0) {
                        continue;
                    }
                    occ.copy_from_slice(s);
                    occ[j] -= 1;
                    let ai = ((occ[i] + 1) as f64).sqrt();
                    occ[i] += 1;
                    let row = basis.index(&occ).expect("one-body target in basis");
                    *rows[row].entry(col).or_default() += tij * aj * ai;
                }
            }
            // two-body part, ½ V_ijkl a†_i a†_j a_l a_k
            for k in 0..m {
                if s[k] == 0 {
                    continue;
                }
                for l in 0..m {
                    let nl = if l == k { s[l] as i32 - 1 } else { s[l] as i32 };
                    if nl <= 0 {
                        continue;
                    }
                    let amp_kl = (s[k] as f64).sqrt() * (nl as f64).sqrt();
                    for i in 0..m {
                        for j in 0..m {
                            let vijkl = self.v(i, j, k, l);
                            if vijkl == C64::new(0.0, 0.0) {
                                continue;
                            }
                            occ.copy_from_slice(s);
                            occ[k] -= 1;
                            occ[l] -= 1;
                            let aj = ((occ[j] + 1) as f64).sqrt();
                            occ[j] += 1;
                            let ai = ((occ[i] + 1) as f64).sqrt();
                            occ[i] += 1;
                            let row = basis.index(&occ).expect("two-body target in basis");
                            *rows[row].entry(col).or_default() += vijkl * (0.5 * amp_kl * aj * ai);
                        }
                    }
                }
            }
        }
        Ok(SparseMatrix::from_rows(basis.dim(), basis.dim(), rows))
    }

    /// `Σ V_ijkl conj(c_i c_j) c_k c_l`.
    pub fn direct_energy(&self, c: &[C64]) -> f64 {
        let m = self.m;
        let mut total = C64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                let cij = (c[i] * c[j]).conj();
                if cij == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        total += self.v(i, j, k, l) * cij * c[k] * c[l];
                    }
                }
            }
        }
        total.re
    }

    pub fn one_body_energy(&self, c: &[C64]) -> f64 {
        let cv = nalgebra::DVector::from_column_slice(c);
        (cv.adjoint() * &self.t * &cv)[(0, 0)].re
    }

    /// `⟨u^{⊗N}, H u^{⊗N}⟩` for normalized mode coefficients `c`.
    pub fn product_energy(&self, c: &[C64], n: usize) -> f64 {
        let nf = n as f64;
        nf * self.one_body_energy(c) + 0.5 * nf * (nf - 1.0) * self.direct_energy(c)
    }

    /// Minimizes `c†Tc + (λ/2)·Σ V conj(c c) c c` over normalized `c`, from the condensate in
    /// mode 0 and a few random starts.
    pub fn hartree(&self, lambda: f64, seed: u64) -> HartreeResult {
        let m = self.m;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut starts = vec![{
            let mut c = vec![C64::new(0.0, 0.0); m];
            c[0] = C64::new(1.0, 0.0);
            c
        }];
        for _ in 0..4 {
            starts.push((0..m).map(|i| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) / (1.0 + i as f64)).collect());
        }
        let mut best: Option<HartreeResult> = None;
        for s in starts {
            let r = self.hartree_descent(lambda, s);
            if best.as_ref().is_none_or(|b| r.energy < b.energy) {
                best = Some(r);
            }
        }
        best.expect("at least one start")
    }

    fn hartree_functional(&self, lambda: f64, c: &[C64]) -> f64 {
        self.one_body_energy(c) + 0.5 * lambda * self.direct_energy(c)
    }

    /// `F_ik = T_ik + λ Σ_jl V_ijkl conj(c_j) c_l`; minimizers satisfy `F c = μ c`.
    fn fock(&self, lambda: f64, c: &[C64]) -> DMatrix<C64> {
        let m = self.m;
        let mut f = self.t.clone();
        for i in 0..m {
            for k in 0..m {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..m {
                    let cj = c[j].conj();
                    for l in 0..m {
                        acc += self.v(i, j, k, l) * cj * c[l];
                    }
                }
                f[(i, k)] += acc * lambda;
            }
        }
        (&f + f.adjoint()) * C64::new(0.5, 0.0)
    }

    fn hartree_gradient(&self, lambda: f64, c: &[C64]) -> Vec<C64> {
        let m = self.m;
        let mut g: Vec<C64> = (0..m).map(|i| (0..m).map(|j| self.t[(i, j)] * c[j]).sum()).collect();
        for (i, gi) in g.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..m {
                let cj = c[j].conj();
                for k in 0..m {
                    for l in 0..m {
                        acc += self.v(i, j, k, l) * cj * c[k] * c[l];
                    }
                }
            }
            *gi += acc * lambda;
        }
        let proj: C64 = c.iter().zip(&g).map(|(a, b)| a.conj() * b).sum();
        for (gi, ci) in g.iter_mut().zip(c) {
            *gi -= ci * proj.re;
        }
        g
    }

    fn hartree_descent(&self, lambda: f64, mut c: Vec<C64>) -> HartreeResult {
        let normalize = |c: &mut Vec<C64>| {
            let n = linalg::norm(c);
            for z in c.iter_mut() {
                *z /= n;
            }
        };
        normalize(&mut c);
        let mut e = self.hartree_functional(lambda, &c);
        let mut g = self.hartree_gradient(lambda, &c);
        let mut gnorm = linalg::norm(&g);
        let mut tau = 0.1;
        let mut flat = 0;
        let mut stalled = 0;
        for _ in 0..20_000 {
            if gnorm < 1e-10 || flat >= 3 || stalled >= 20 {
                break;
            }
            let mut t = tau;
            let mut next = None;
            for _ in 0..60 {
                let mut trial: Vec<C64> = c.iter().zip(&g).map(|(a, b)| a - b * t).collect();
                normalize(&mut trial);
                let et = self.hartree_functional(lambda, &trial);
                if et <= e - 1e-4 * t * gnorm * gnorm {
                    next = Some((trial, et, false));
                    break;
                }
                if t * gnorm * gnorm < 1e-14 * e.abs().max(1.0) && et <= e {
                    next = Some((trial, et, true));
                    break;
                }
                t *= 0.5;
            }
            let Some((trial, et, is_flat)) = next else { break };
            flat = if is_flat { flat + 1 } else { 0 };
            stalled = if e - et > 1e-14 * e.abs().max(1.0) { 0 } else { stalled + 1 };
            let gt = self.hartree_gradient(lambda, &trial);
            // Barzilai–Borwein step for the next iteration
            let (mut ss, mut sy) = (0.0, 0.0);
            for ((a, b), (ga, gb)) in trial.iter().zip(&c).zip(gt.iter().zip(&g)) {
                let sv = a - b;
                ss += sv.norm_sqr();
                sy += (sv.conj() * (ga - gb)).re;
            }
            tau = if sy > 0.0 { (ss / sy).clamp(1e-6, 1e3) } else { 2.0 * t };
            c = trial;
            e = et;
            g = gt;
            gnorm = linalg::norm(&g);
        }
        // polish with damped self-consistent steps, judged by the gradient
        for _ in 0..50 {
            if gnorm < 1e-12 {
                break;
            }
            let fock = self.fock(lambda, &c);
            let (_, vecs) = linalg::hermitian_eigen(&fock);
            let v: Vec<C64> = vecs.column(0).iter().copied().collect();
            let overlap: C64 = v.iter().zip(&c).map(|(a, b)| a.conj() * b).sum();
            let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
            let mut alpha = 1.0;
            let mut improved = false;
            for _ in 0..12 {
                let mut trial: Vec<C64> = c.iter().zip(&v).map(|(a, b)| a * (1.0 - alpha) + b * phase * alpha).collect();
                normalize(&mut trial);
                let gt = self.hartree_gradient(lambda, &trial);
                let gn = linalg::norm(&gt);
                let et = self.hartree_functional(lambda, &trial);
                if gn < gnorm && et <= e + 1e-13 * e.abs().max(1.0) {
                    c = trial;
                    e = et;
                    gnorm = gn;
                    improved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !improved {
                break;
            }
        }
        HartreeResult { energy: e, coeffs: c, gradient_norm: gnorm }
    }
}

#[derive(Clone, Debug)]
pub struct HartreeResult {
    pub energy: f64,
    pub coeffs: Vec<C64>,
    pub gradient_norm: f64,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Occupation coefficients of `u^{⊗N}`: `√(N!/Π n_i!) Π c_i^{n_i}`.
pub fn product_state(basis: &SymmetricBasis, c: &[C64]) -> Vec<C64> {
    let nf = factorial(basis.particles());
    basis
        .states()
        .iter()
        .map(|s| {
            let mut amp = C64::new(1.0, 0.0);
            let mut denom = 1.0;
            for (ci, &ni) in c.iter().zip(s) {
                amp *= ci.powu(ni as u32);
                denom *= factorial(ni as usize);
            }
            amp * (nf / denom).sqrt()
        })
        .collect()
}

/// Lowest eigenpair of a many-body operator.
pub fn ground_state<T: LinearOperator + ?Sized>(op: &T, tol: f64) -> Result<(f64, Vec<C64>)> {
    let pairs = linalg::lowest_eigenpairs(op, 1, tol, &EigenOptions::default())?;
    let p = pairs.into_iter().next().expect("one pair");
    Ok((p.value, p.vector))
}

/// As [`ground_state`], additionally checking the energy against a variational witness.
pub fn ground_state_with_witness<T: LinearOperator + ?Sized>(op: &T, tol: f64, witness: f64) -> Result<(f64, Vec<C64>)> {
    let (e, psi) = ground_state(op, tol)?;
    if e > witness + 1e-9 * witness.abs().max(1.0) {
        return Err(Error::NonConvergence { what: "ground state above variational witness", residual: e - witness });
    }
    Ok((e, psi))
}

/// `k`-particle reduced density matrix in the mode basis, indexed by ordered mode tuples.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub order: usize,
    pub modes: usize,
    pub matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Trace over the last particle.
    pub fn partial_trace(&self) -> Result<DensityMatrix> {
        if self.order == 0 {
            return Err(Error::InvalidParameter("cannot trace out of a zero-order matrix".into()));
        }
        let m = self.modes;
        let d = m.pow(self.order as u32 - 1);
        let out = DMatrix::from_fn(d, d, |i, j| (0..m).map(|q| self.matrix[(i * m + q, j * m + q)]).sum());
        Ok(DensityMatrix { order: self.order - 1, modes: m, matrix: out })
    }
}

/// `γ^(k)_{IJ} = ⟨a_J Ψ, a_I Ψ⟩ / (N!/(N-k)!)`, normalized to trace one.
pub fn rdm(basis: &SymmetricBasis, psi: &[C64], k: usize) -> Result<DensityMatrix> {
    let n = basis.particles();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("order {k} outside 1..={n}")));
    }
    let m = basis.modes();
    let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let mut level = vec![psi.to_vec()];
    let mut from = basis.clone();
    for _ in 0..k {
        let to = SymmetricBasis::new(from.particles() - 1, m)?;
        let mut next = Vec::with_capacity(level.len() * m);
        for v in &level {
            for i in 0..m {
                next.push(annihilate(&from, &to, i, v));
            }
        }
        level = next;
        from = to;
    }
    let falling: f64 = (0..k).map(|j| (n - j) as f64).product();
    let scale = 1.0 / (falling * norm2);
    let dim = level.len();
    let mut mat = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let x = linalg::dot(&level[j], &level[i]) * scale;
            mat[(i, j)] = x;
            mat[(j, i)] = x.conj();
        }
    }
    Ok(DensityMatrix { order: k, modes: m, matrix: mat })
}

/// `u^{⊗k}` in ordered-tuple indexing.
pub fn tensor_power(u: &[C64], k: usize) -> Vec<C64> {
    let mut out = vec![C64::new(1.0, 0.0)];
    for _ in 0..k {
        out = out.iter().flat_map(|a| u.iter().map(move |b| a * b)).collect();
    }
    out
}

/// Trace norm `‖γ^(k) - |u^{⊗k}⟩⟨u^{⊗k}|‖₁`.
pub fn condensate_distance(gamma: &DensityMatrix, u: &[C64]) -> Result<f64> {
    if u.len() != gamma.modes {
        return Err(Error::DimensionMismatch("condensate has the wrong number of modes".into()));
    }
    let nu = linalg::norm(u);
    if (nu - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm: nu });
    }
    let w = tensor_power(u, gamma.order);
    let wv = nalgebra::DVector::from_column_slice(&w);
    let diff = &gamma.matrix - &wv * wv.adjoint();
    Ok(linalg::hermitian_eigenvalues(&diff).iter().map(|x| x.abs()).sum())
}

/// `1 - λ_max(γ^(1))`.
pub fn depletion(gamma1: &DensityMatrix) -> f64 {
    1.0 - gamma1.eigenvalues().last().copied().unwrap_or(0.0)
}

/// `S_{v,ℓ} = ℓ!/N^{ℓ-1} Σ_{i_1<…<i_ℓ} |v^{⊗ℓ}⟩⟨v^{⊗ℓ}|`, with `v` given by mode coefficients.
#[derive(Clone, Debug)]
pub struct PerturbationSpec {
    pub v: Vec<C64>,
    pub ell: usize,
}

#[derive(Clone, Debug)]
pub struct PerturbationReport {
    /// `⟨Ψ, S_{v,ℓ} Ψ⟩ = ‖a(v)^ℓ Ψ‖² / N^{ℓ-1}`.
    pub expectation: f64,
    /// `Tr(|v^{⊗ℓ}⟩⟨v^{⊗ℓ}| γ^(ℓ))` from the reduced density matrix.
    pub trace_term: f64,
    /// `N!/((N-ℓ)! N^ℓ)`, so that `⟨S⟩ = N · factor · trace_term` exactly.
    pub combinatorial_factor: f64,
    pub identity_residual: f64,
    /// `|⟨S⟩ - N·trace_term|`, which vanishes only for `ℓ = 1` or as `N → ∞`.
    pub asymptotic_residual: f64,
}

pub fn perturbation_expectation(basis: &SymmetricBasis, psi: &[C64], spec: &PerturbationSpec) -> Result<PerturbationReport> {
    let n = basis.particles();
    let ell = spec.ell;
    if ell == 0 || ell > n {
        return Err(Error::InvalidParameter(format!("perturbation order {ell} outside 1..={n}")));
    }
    if spec.v.len() != basis.modes() {
        return Err(Error::DimensionMismatch("perturbation vector has the wrong number of modes".into()));
    }
    let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let mut from = basis.clone();
    let mut phi = psi.to_vec();
    for _ in 0..ell {
        let to = SymmetricBasis::new(from.particles() - 1, basis.modes())?;
        phi = annihilate_state(&from, &to, &spec.v, &phi);
        from = to;
    }
    let nf = n as f64;
    let expectation = phi.iter().map(|z| z.norm_sqr()).sum::<f64>() / norm2 / nf.powi(ell as i32 - 1);
    let gamma = rdm(basis, psi, ell)?;
    let w = nalgebra::DVector::from_column_slice(&tensor_power(&spec.v, ell));
    let trace_term = (w.adjoint() * &gamma.matrix * &w)[(0, 0)].re;
    let combinatorial_factor = (0..ell).map(|j| (n - j) as f64 / nf).product::<f64>();
    Ok(PerturbationReport {
        expectation,
        trace_term,
        combinatorial_factor,
        identity_residual: (expectation - nf * combinatorial_factor * trace_term).abs(),
        asymptotic_residual: (expectation - nf * trace_term).abs(),
    })
}

/// Matrix of `a(v)^ℓ` from the `N`-particle basis to the `(N-ℓ)`-particle basis.
fn annihilator_power(basis: &SymmetricBasis, target: &SymmetricBasis, v: &[C64], ell: usize) -> SparseMatrix {
    let m = basis.modes();
    let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); target.dim()];
    for col in 0..basis.dim() {
        let mut terms: BTreeMap<Vec<u8>, C64> = BTreeMap::new();
        terms.insert(basis.state(col).to_vec(), C64::new(1.0, 0.0));
        for _ in 0..ell {
            let mut next: BTreeMap<Vec<u8>, C64> = BTreeMap::new();
            for (occ, amp) in &terms {
                for i in 0..m {
                    if occ[i] == 0 || v[i] == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut o = occ.clone();
                    o[i] -= 1;
                    *next.entry(o).or_default() += amp * v[i].conj() * (occ[i] as f64).sqrt();
                }
            }
            terms = next;
        }
        for (occ, amp) in terms {
            let row = target.index(&occ).expect("annihilated state in target basis");
            *rows[row].entry(col).or_default() += amp;
        }
    }
    SparseMatrix::from_rows(target.dim(), basis.dim(), rows)
}

/// `H - λ S_{v,ℓ}` as a matrix-free operator, for Hellmann–Feynman studies.
pub struct PerturbedHamiltonian<'a> {
    h: &'a SparseMatrix,
    x: SparseMatrix,
    scale: f64,
    pub lambda: f64,
}

impl<'a> PerturbedHamiltonian<'a> {
    pub fn new(h: &'a SparseMatrix, basis: &SymmetricBasis, spec: &PerturbationSpec, lambda: f64) -> Result<Self> {
        let n = basis.particles();
        if spec.ell == 0 || spec.ell > n {
            return Err(Error::InvalidParameter(format!("perturbation order {} outside 1..={n}", spec.ell)));
        }
        if h.nrows() != basis.dim() {
            return Err(Error::DimensionMismatch("Hamiltonian does not match the basis".into()));
        }
        let target = SymmetricBasis::new(n - spec.ell, basis.modes())?;
        let x = annihilator_power(basis, &target, &spec.v, spec.ell);
        Ok(Self { h, x, scale: 1.0 / (n as f64).powi(spec.ell as i32 - 1), lambda })
    }

    /// `⟨Ψ, S Ψ⟩` for normalized `Ψ`.
    pub fn s_expectation(&self, psi: &[C64]) -> f64 {
        self.x.mul_vec(psi).iter().map(|z| z.norm_sqr()).sum::<f64>() * self.scale
    }
}

impl LinearOperator for PerturbedHamiltonian<'_> {
    fn dim(&self) -> usize {
        self.h.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.h.apply(x, y);
        let s = self.x.adjoint_mul_vec(&self.x.mul_vec(x));
        for (yi, si) in y.iter_mut().zip(s) {
            *yi -= si * (self.lambda * self.scale);
        }
    }
}
