//! Linear operators, dense Hermitian diagonalization and a matrix-free block Lanczos
//! eigensolver with full reorthogonalization and thick restarts.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A linear map on `ℂ^n`, applied with the Euclidean inner product.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);

    fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply(x, &mut y);
        y
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        (**self).apply(x, y)
    }
}

impl LinearOperator for DMatrix<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let n = self.nrows();
        for v in y.iter_mut() {
            *v = C64::new(0.0, 0.0);
        }
        for (j, &xj) in x.iter().enumerate() {
            if xj == C64::new(0.0, 0.0) {
                continue;
            }
            let col = self.column(j);
            for i in 0..n {
                y[i] += col[i] * xj;
            }
        }
    }
}

/// `-A`, used to get the top of a spectrum from a lowest-eigenpair solver.
pub struct Negated<T>(pub T);

impl<T: LinearOperator> LinearOperator for Negated<T> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.0.apply(x, y);
        for v in y.iter_mut() {
            *v = -*v;
        }
    }
}

pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: C64, x: &mut [C64]) {
    for v in x.iter_mut() {
        *v *= alpha;
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Krylov basis size before a thick restart.
    pub max_basis: usize,
    /// Block size of the Krylov expansion.
    pub block: usize,
    pub max_restarts: usize,
    /// Dimensions at or below this are diagonalized densely.
    pub dense_threshold: usize,
    pub seed: u64,
    /// Optional starting vectors, used before random ones.
    pub start: Vec<Vec<C64>>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { max_basis: 64, block: 2, max_restarts: 2000, dense_threshold: 600, seed: 0x5eed, start: Vec::new() }
    }
}

/// Assembles the dense matrix of `op` column by column.
pub fn assemble_dense<T: LinearOperator + ?Sized>(op: &T) -> DMatrix<C64> {
    let n = op.dim();
    let mut m = DMatrix::<C64>::zeros(n, n);
    let mut e = vec![C64::new(0.0, 0.0); n];
    let mut y = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        op.apply(&e, &mut y);
        m.column_mut(j).copy_from_slice(&y);
        e[j] = C64::new(0.0, 0.0);
    }
    m
}

/// Eigen-decomposition of a Hermitian matrix (its Hermitian part is used), ascending.
/// Purely real input takes the real symmetric path.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let max_abs = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_im = h.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let (vals, vecs): (Vec<f64>, DMatrix<C64>) = if max_im <= 1e-15 * max_abs {
        let re = h.map(|z| z.re);
        let eig = re.symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors.map(|x| C64::new(x, 0.0)))
    } else {
        let eig = h.symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = DMatrix::<C64>::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        sorted_vecs.set_column(new, &vecs.column(old));
    }
    (sorted_vals, sorted_vecs)
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let max_abs = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_im = h.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let mut vals: Vec<f64> = if max_im <= 1e-15 * max_abs {
        h.map(|z| z.re).symmetric_eigenvalues().iter().copied().collect()
    } else {
        h.symmetric_eigenvalues().iter().copied().collect()
    };
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()
}

/// Orthogonalizes `v` against `basis` (two classical Gram-Schmidt passes) and normalizes.
/// Returns `false` if `v` is numerically inside the span.
fn orthonormalize(basis: &[Vec<C64>], v: &mut [C64]) -> bool {
    let initial = norm(v);
    if initial == 0.0 {
        return false;
    }
    for _ in 0..2 {
        let coeffs: Vec<C64> = basis.iter().map(|b| dot(b, v)).collect();
        for (b, c) in basis.iter().zip(coeffs) {
            axpy(-c, b, v);
        }
    }
    let nv = norm(v);
    if nv <= 1e-10 * initial {
        return false;
    }
    scale(C64::new(1.0 / nv, 0.0), v);
    true
}

fn dense_lowest<T: LinearOperator + ?Sized>(op: &T, k: usize) -> Vec<Eigenpair> {
    let m = assemble_dense(op);
    let (vals, vecs) = hermitian_eigen(&m);
    (0..k.min(vals.len()))
        .map(|i| {
            let v: Vec<C64> = vecs.column(i).iter().copied().collect();
            let av = op.apply_vec(&v);
            let r: f64 = av.iter().zip(&v).map(|(a, b)| (a - b * vals[i]).norm_sqr()).sum::<f64>().sqrt();
            Eigenpair { value: vals[i], vector: v, residual: r }
        })
        .collect()
}

/// The `k` lowest eigenpairs of a self-adjoint operator, with Euclidean-normalized vectors
/// and residuals `‖Av - λv‖ <= tol`.
pub fn lowest_eigenpairs<T: LinearOperator + ?Sized>(
    op: &T,
    k: usize,
    tol: f64,
    opts: &EigenOptions,
) -> Result<Vec<Eigenpair>> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("requested {k} eigenpairs of a dimension-{n} operator")));
    }
    if n <= opts.dense_threshold {
        return Ok(dense_lowest(op, k));
    }
    block_lanczos(op, k, tol, opts)
}

/// Forces the matrix-free path regardless of the dense threshold.
pub fn block_lanczos<T: LinearOperator + ?Sized>(
    op: &T,
    k: usize,
    tol: f64,
    opts: &EigenOptions,
) -> Result<Vec<Eigenpair>> {
    let n = op.dim();
    let block = opts.block.max(1).min(n);
    let m = opts.max_basis.max(2 * k + 2 * block + 4).min(n);
    let keep = (k + block + k / 2).min(m.saturating_sub(block)).max(k.min(m));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut v: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut av: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut h = DMatrix::<C64>::zeros(m, m);
    let mut pending: Vec<Vec<C64>> = opts.start.iter().filter(|s| s.len() == n).cloned().collect();
    while pending.len() < block {
        pending.push(random_vector(&mut rng, n));
    }
    let mut best_residual = f64::INFINITY;

    for _restart in 0..opts.max_restarts {
        // Krylov expansion with full reorthogonalization.
        while v.len() < m {
            let mut added = Vec::new();
            for mut p in pending.drain(..) {
                if v.len() == m {
                    break;
                }
                if orthonormalize(&v, &mut p) {
                    v.push(p);
                    added.push(v.len() - 1);
                }
            }
            if added.is_empty() {
                if v.len() == n {
                    break;
                }
                pending.push(random_vector(&mut rng, n));
                continue;
            }
            for &j in &added {
                let w = op.apply_vec(&v[j]);
                for i in 0..=j {
                    let hij = dot(&v[i], &w);
                    h[(i, j)] = hij;
                    h[(j, i)] = hij.conj();
                }
                av.push(w);
            }
            // entries between new columns and earlier new columns were set above (i <= j)
            pending = added.iter().map(|&j| av[j].clone()).collect();
        }

        // Rayleigh-Ritz on the current basis.
        let size = v.len();
        let hs = h.view((0, 0), (size, size)).into_owned();
        let (theta, y) = hermitian_eigen(&hs);
        let nkeep = keep.min(size);
        let mut x: Vec<Vec<C64>> = Vec::with_capacity(nkeep);
        let mut ax: Vec<Vec<C64>> = Vec::with_capacity(nkeep);
        let mut res = Vec::with_capacity(nkeep);
        let mut resid_vecs = Vec::with_capacity(nkeep);
        for c in 0..nkeep {
            let mut xi = vec![C64::new(0.0, 0.0); n];
            let mut axi = vec![C64::new(0.0, 0.0); n];
            for j in 0..size {
                let yj = y[(j, c)];
                axpy(yj, &v[j], &mut xi);
                axpy(yj, &av[j], &mut axi);
            }
            let mut r = axi.clone();
            axpy(C64::new(-theta[c], 0.0), &xi, &mut r);
            res.push(norm(&r));
            resid_vecs.push(r);
            x.push(xi);
            ax.push(axi);
        }
        let worst = res[..k].iter().cloned().fold(0.0, f64::max);
        best_residual = best_residual.min(worst);
        if worst <= tol || size == n {
            return Ok((0..k)
                .map(|i| Eigenpair { value: theta[i], vector: x[i].clone(), residual: res[i] })
                .collect());
        }

        // Thick restart: keep the lowest Ritz pairs, continue from their residuals.
        pending = (0..nkeep).filter(|&i| res[i] > tol).take(block).map(|i| resid_vecs[i].clone()).collect();
        v = x;
        av = ax;
        h.fill(C64::new(0.0, 0.0));
        for i in 0..nkeep {
            h[(i, i)] = C64::new(theta[i], 0.0);
        }
    }
    Err(Error::NonConvergence { what: "block Lanczos eigensolver", residual: best_residual })
}

/// Lowest eigenpair by locally optimal preconditioned iteration: Rayleigh-Ritz on
/// `{x, T r, p}` each step. `precond` applies `T ≈ (A - σ)^{-1}` in place.
pub fn preconditioned_lowest<T: LinearOperator + ?Sized, P: Fn(&mut [C64])>(
    op: &T,
    precond: P,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<Eigenpair> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = random_vector(&mut rng, n);
    let nx = norm(&x);
    scale(C64::new(1.0 / nx, 0.0), &mut x);
    let mut ax = op.apply_vec(&x);
    let mut lambda = dot(&x, &ax).re;
    let mut dir: Option<(Vec<C64>, Vec<C64>)> = None;
    let mut best = f64::INFINITY;
    for _ in 0..max_iter {
        let mut r = ax.clone();
        axpy(C64::new(-lambda, 0.0), &x, &mut r);
        let rn = norm(&r);
        best = best.min(rn);
        if rn <= tol {
            return Ok(Eigenpair { value: lambda, vector: x, residual: rn });
        }
        precond(&mut r);
        let mut basis = vec![x.clone()];
        let mut images = vec![ax.clone()];
        for (mut q, mut aq) in std::iter::once((r, None)).chain(dir.take().map(|(p, ap)| (p, Some(ap)))) {
            // Gram-Schmidt twice; the image follows the same combination when it is known
            for _ in 0..2 {
                for (b, ab) in basis.iter().zip(&images) {
                    let c = dot(b, &q);
                    axpy(-c, b, &mut q);
                    if let Some(aq) = aq.as_mut() {
                        axpy(-c, ab, aq);
                    }
                }
            }
            let qn = norm(&q);
            if qn < 1e-12 {
                continue;
            }
            scale(C64::new(1.0 / qn, 0.0), &mut q);
            let aq = match aq {
                Some(mut v) => {
                    scale(C64::new(1.0 / qn, 0.0), &mut v);
                    v
                }
                None => op.apply_vec(&q),
            };
            basis.push(q);
            images.push(aq);
        }
        let k = basis.len();
        let g = DMatrix::from_fn(k, k, |i, j| dot(&basis[i], &images[j]));
        let g = (&g + g.adjoint()) * C64::new(0.5, 0.0);
        let (vals, vecs) = hermitian_eigen(&g);
        let mut xn = vec![C64::new(0.0, 0.0); n];
        let mut axn = vec![C64::new(0.0, 0.0); n];
        let mut p = vec![C64::new(0.0, 0.0); n];
        let mut ap = vec![C64::new(0.0, 0.0); n];
        for j in 0..k {
            let c = vecs[(j, 0)];
            axpy(c, &basis[j], &mut xn);
            axpy(c, &images[j], &mut axn);
            if j > 0 {
                axpy(c, &basis[j], &mut p);
                axpy(c, &images[j], &mut ap);
            }
        }
        let xnn = norm(&xn);
        scale(C64::new(1.0 / xnn, 0.0), &mut xn);
        scale(C64::new(1.0 / xnn, 0.0), &mut axn);
        x = xn;
        ax = axn;
        lambda = vals[0];
        if k > 1 {
            dir = Some((p, ap));
        }
    }
    Err(Error::NonConvergence { what: "preconditioned eigensolver", residual: best })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::<C64>::from_fn(n, n, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    }

    #[test]
    fn dense_eigen_is_sorted_and_accurate() {
        let m = random_hermitian(30, 1);
        let (vals, vecs) = hermitian_eigen(&m);
        for w in vals.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for i in 0..30 {
            let v = vecs.column(i).into_owned();
            let r = &m * &v - v.map(|z| z * vals[i]);
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn lanczos_matches_dense() {
        let m = random_hermitian(200, 2);
        let (vals, _) = hermitian_eigen(&m);
        let opts = EigenOptions { max_basis: 40, ..Default::default() };
        let pairs = block_lanczos(&m, 4, 1e-10, &opts).unwrap();
        for (i, p) in pairs.iter().enumerate() {
            assert!((p.value - vals[i]).abs() < 1e-10, "{} vs {}", p.value, vals[i]);
            assert!(p.residual <= 1e-10);
        }
        for i in 0..4 {
            for j in 0..4 {
                let d = dot(&pairs[i].vector, &pairs[j].vector);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - C64::new(expect, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn lanczos_resolves_degenerate_levels() {
        let diag: Vec<f64> = vec![1.0, 1.0, 1.0, 2.0, 3.0, 3.0].into_iter().chain((0..300).map(|i| 4.0 + i as f64 * 0.01)).collect();
        let n = diag.len();
        let m = DMatrix::<C64>::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { C64::new(0.0, 0.0) });
        let opts = EigenOptions { block: 3, ..Default::default() };
        let pairs = block_lanczos(&m, 6, 1e-10, &opts).unwrap();
        let got: Vec<f64> = pairs.iter().map(|p| p.value).collect();
        for (g, e) in got.iter().zip(&diag[..6]) {
            assert!((g - e).abs() < 1e-10, "{got:?}");
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let m = random_hermitian(5, 3);
        assert!(lowest_eigenpairs(&m, 0, 1e-8, &EigenOptions::default()).is_err());
        assert!(lowest_eigenpairs(&m, 6, 1e-8, &EigenOptions::default()).is_err());
    }
}
