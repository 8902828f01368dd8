//! Occupation-number basis of the symmetric `N`-boson space over `M` modes, and sparse
//! matrices acting on it.

use num_complex::Complex64 as C64;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::LinearOperator;

/// Largest basis dimension assembled by default.
pub const MAX_BASIS_DIM: usize = 2_000_000;

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r as usize
}

/// Occupation vectors `(n_0, …, n_{M-1})` with `Σ n_i = N`, ordered so that larger `n_0`
/// comes first (index 0 is the full condensate in mode 0). Ranking is combinatorial.
#[derive(Clone, Debug)]
pub struct SymmetricBasis {
    particles: usize,
    modes: usize,
    states: Vec<Vec<u8>>,
    /// `count[i][k]`: vectors on modes `i..M` summing to `k`.
    count: Vec<Vec<usize>>,
}

impl SymmetricBasis {
    pub fn new(particles: usize, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidParameter("mode count must be positive".into()));
        }
        if particles > u8::MAX as usize {
            return Err(Error::InvalidParameter(format!("{particles} particles exceed the occupation range")));
        }
        let dim = binomial(particles + modes - 1, particles);
        if dim > MAX_BASIS_DIM {
            return Err(Error::MemoryBudget { required: dim, limit: MAX_BASIS_DIM });
        }
        let mut count = vec![vec![0usize; particles + 1]; modes + 1];
        count[modes][0] = 1;
        for i in (0..modes).rev() {
            for k in 0..=particles {
                count[i][k] = binomial(k + modes - i - 1, k);
            }
        }
        let mut states = Vec::with_capacity(dim);
        let mut current = vec![0u8; modes];
        enumerate(0, particles, &mut current, &mut states);
        debug_assert_eq!(states.len(), dim);
        Ok(Self { particles, modes, states, count })
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, index: usize) -> &[u8] {
        &self.states[index]
    }

    pub fn states(&self) -> &[Vec<u8>] {
        &self.states
    }

    /// Inverse of [`state`](Self::state); `None` for vectors outside the basis.
    pub fn index(&self, occ: &[u8]) -> Option<usize> {
        if occ.len() != self.modes || occ.iter().map(|&x| x as usize).sum::<usize>() != self.particles {
            return None;
        }
        let mut rank = 0;
        let mut rem = self.particles;
        for (i, &ni) in occ.iter().enumerate().take(self.modes - 1) {
            let ni = ni as usize;
            for v in ni + 1..=rem {
                rank += self.count[i + 1][rem - v];
            }
            rem -= ni;
        }
        Some(rank)
    }
}

fn enumerate(mode: usize, rem: usize, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    let m = current.len();
    if mode == m - 1 {
        current[mode] = rem as u8;
        out.push(current.clone());
        current[mode] = 0;
        return;
    }
    for v in (0..=rem).rev() {
        current[mode] = v as u8;
        enumerate(mode + 1, rem - v, current, out);
    }
    current[mode] = 0;
}

/// Compressed sparse row matrix, possibly rectangular.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Builds from per-row maps `column -> value`; zero entries are dropped.
    pub fn from_rows(nrows: usize, ncols: usize, rows: Vec<BTreeMap<usize, C64>>) -> Self {
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v != C64::new(0.0, 0.0) {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { nrows, ncols, indptr, indices, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        match self.indices[a..b].binary_search(&c) {
            Ok(p) => self.values[a + p],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// `y = A x` for rectangular `A`.
    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.nrows)
            .map(|r| {
                let (a, b) = (self.indptr[r], self.indptr[r + 1]);
                self.indices[a..b].iter().zip(&self.values[a..b]).map(|(&c, v)| v * x[c]).sum()
            })
            .collect()
    }

    /// `y = A† x`.
    pub fn adjoint_mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.ncols];
        for r in 0..self.nrows {
            let (a, b) = (self.indptr[r], self.indptr[r + 1]);
            for (&c, v) in self.indices[a..b].iter().zip(&self.values[a..b]) {
                y[c] += v.conj() * x[r];
            }
        }
        y
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        let mut m = nalgebra::DMatrix::<C64>::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for p in self.indptr[r]..self.indptr[r + 1] {
                m[(r, self.indices[p])] += self.values[p];
            }
        }
        m
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.nrows {
            for p in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[p];
                worst = worst.max((self.values[p] - self.get(c, r).conj()).norm());
            }
        }
        worst
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            let (a, b) = (self.indptr[r], self.indptr[r + 1]);
            *yr = self.indices[a..b].iter().zip(&self.values[a..b]).map(|(&c, v)| v * x[c]).sum();
        }
    }
}

/// `a_i` from the `N`-particle basis `from` into the `(N-1)`-particle basis `to`.
pub fn annihilate(from: &SymmetricBasis, to: &SymmetricBasis, mode: usize, psi: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); to.dim()];
    let mut occ = vec![0u8; from.modes()];
    for (idx, amp) in psi.iter().enumerate() {
        let s = from.state(idx);
        if s[mode] == 0 || *amp == C64::new(0.0, 0.0) {
            continue;
        }
        occ.copy_from_slice(s);
        occ[mode] -= 1;
        let j = to.index(&occ).expect("annihilated state in target basis");
        out[j] += amp * (s[mode] as f64).sqrt();
    }
    out
}

/// `a(v) = Σ_i conj(v_i) a_i`, the annihilator of the one-body state with mode coefficients `v`.
pub fn annihilate_state(from: &SymmetricBasis, to: &SymmetricBasis, v: &[C64], psi: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); to.dim()];
    for (i, vi) in v.iter().enumerate() {
        if *vi == C64::new(0.0, 0.0) {
            continue;
        }
        let part = annihilate(from, to, i, psi);
        crate::linalg::axpy(vi.conj(), &part, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_and_bijection() {
        for (n, m) in [(1, 1), (3, 1), (2, 6), (4, 5), (6, 4)] {
            let b = SymmetricBasis::new(n, m).unwrap();
            assert_eq!(b.dim(), binomial(n + m - 1, n));
            for i in 0..b.dim() {
                assert_eq!(b.index(b.state(i)), Some(i));
            }
            for w in b.states().windows(2) {
                assert!(w[0] > w[1], "enumeration must be strictly ordered");
            }
        }
        let b = SymmetricBasis::new(3, 4).unwrap();
        assert_eq!(b.state(0), &[3, 0, 0, 0]);
        assert_eq!(b.index(&[1, 1, 1, 1]), None);
    }

    #[test]
    fn rejects_oversized_basis() {
        assert!(matches!(SymmetricBasis::new(20, 30), Err(Error::MemoryBudget { .. })));
        assert!(SymmetricBasis::new(2, 0).is_err());
    }

    #[test]
    fn sparse_products() {
        let mut rows = vec![BTreeMap::new(); 2];
        rows[0].insert(0, C64::new(1.0, 0.0));
        rows[0].insert(2, C64::new(0.0, 2.0));
        rows[1].insert(1, C64::new(3.0, 0.0));
        let a = SparseMatrix::from_rows(2, 3, rows);
        let x = vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        assert_eq!(a.mul_vec(&x), vec![C64::new(1.0, 2.0), C64::new(3.0, 0.0)]);
        let y = a.adjoint_mul_vec(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        assert_eq!(y, vec![C64::new(1.0, 0.0), C64::new(0.0, 3.0), C64::new(0.0, -2.0)]);
    }

    #[test]
    fn annihilation_norm_counts_particles() {
        let b3 = SymmetricBasis::new(3, 3).unwrap();
        let b2 = SymmetricBasis::new(2, 3).unwrap();
        let psi: Vec<C64> = (0..b3.dim()).map(|i| C64::new(1.0 + i as f64, 0.5 * i as f64)).collect();
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let total: f64 = (0..3).map(|i| annihilate(&b3, &b2, i, &psi).iter().map(|z| z.norm_sqr()).sum::<f64>()).sum();
        assert!((total - 3.0 * norm2).abs() < 1e-10 * norm2);
    }
}
