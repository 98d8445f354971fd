//! Smallest eigenpairs of a symmetric definite pencil `A x = λ B x`.
//!
//! Large problems use a block Krylov method on the shift-invert operator
//! `A⁻¹B` (self-adjoint in the B-inner product) with full
//! B-reorthogonalization, Rayleigh–Ritz on the pencil, and restarts that keep
//! the best Ritz block. `A` is factored once with an envelope Cholesky.
//! The block is wider than the number of wanted pairs, so degenerate
//! eigenvalues (up to the block width) are captured. Tiny problems go
//! through a dense solve.

use nalgebra::{DMatrix, DMatrixView, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cholesky::{CholeskyError, EnvelopeCholesky, Ordering};
use crate::sparse::SparseSym;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 20_061_024;

/// Problems up to this dimension are solved densely and may ask for any
/// number of pairs; above it `m ≤ dim / 4` is required.
pub const DENSE_LIMIT: usize = 200;

/// Consecutive restarts without halving the worst residual before the solver
/// gives up (the residual has reached its rounding floor).
const STALL_RESTARTS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("requested {m} eigenpairs of a dimension-{dim} problem")]
    InvalidRequest { m: usize, dim: usize },
    #[error("pencil matrices have dimensions {a} and {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("stiffness matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("mass matrix is indefinite (pivot {pivot} at row {row})")]
    IndefiniteMass { row: usize, pivot: f64 },
    #[error("no convergence after {applications} operator applications; worst residual {worst:.3e}")]
    NotConverged { applications: usize, worst: f64, residuals: Vec<f64> },
    #[error("vector {index} is linearly dependent on the previous ones")]
    RankDeficient { index: usize },
}

/// Right-hand matrix of the pencil.
#[derive(Debug, Clone, Copy)]
pub enum Mass<'a> {
    Identity,
    Matrix(&'a SparseSym),
}

impl Mass<'_> {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Mass::Identity => y.copy_from_slice(x),
            Mass::Matrix(b) => b.mul_vec_into(x, y),
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Mass::Identity => None,
            Mass::Matrix(b) => Some(b.dim()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Bound on `‖Ax − λBx‖ / (|λ| ‖Bx‖)` for every returned pair.
    pub tol: f64,
    pub seed: u64,
    /// Cap on shift-invert applications; defaults to `10·m·√dim`.
    pub max_applications: Option<usize>,
    pub ordering: Ordering,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, seed: DEFAULT_SEED, max_applications: None, ordering: Ordering::Auto }
    }
}

impl EigenOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// B-normalized eigenvector.
    pub vector: Vec<f64>,
    /// Relative residual `‖Ax − λBx‖ / (|λ| ‖Bx‖)`.
    pub residual: f64,
}

fn relative_residual(a: &SparseSym, b: Mass, value: f64, x: &[f64]) -> f64 {
    let n = x.len();
    let ax = a.mul_vec(x);
    let mut bx = vec![0.0; n];
    b.apply(x, &mut bx);
    let r: f64 = ax.iter().zip(&bx).map(|(p, q)| (p - value * q).powi(2)).sum::<f64>().sqrt();
    let s = value.abs() * bx.iter().map(|v| v * v).sum::<f64>().sqrt();
    if s > 0.0 {
        r / s
    } else {
        r
    }
}

/// The `m` smallest eigenpairs of `A x = λ B x`, eigenvalues nondecreasing,
/// vectors B-orthonormal.
pub fn smallest_eigenpairs(
    a: &SparseSym,
    b: Mass,
    m: usize,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>, EigenError> {
    let n = a.dim();
    if let Some(bd) = b.dim() {
        if bd != n {
            return Err(EigenError::DimensionMismatch { a: n, b: bd });
        }
    }
    if m == 0 || m > n || (n > DENSE_LIMIT && 4 * m > n) {
        return Err(EigenError::InvalidRequest { m, dim: n });
    }
    if n <= DENSE_LIMIT {
        return dense_eigenpairs(a, b, m);
    }
    let chol = EnvelopeCholesky::factor(a, opts.ordering).map_err(|e| match e {
        CholeskyError::NotPositiveDefinite { row, pivot } => EigenError::NotPositiveDefinite { row, pivot },
        CholeskyError::Dimension { .. } => unreachable!(),
    })?;
    if let Mass::Matrix(bm) = b {
        if let Err(CholeskyError::NotPositiveDefinite { row, pivot }) = EnvelopeCholesky::factor(bm, Ordering::Auto) {
            return Err(EigenError::IndefiniteMass { row, pivot });
        }
    }
    BlockKrylov::new(a, b, &chol, m, opts).run()
}

struct BlockKrylov<'a> {
    a: &'a SparseSym,
    b: Mass<'a>,
    chol: &'a EnvelopeCholesky,
    n: usize,
    m: usize,
    block: usize,
    cap: usize,
    tol: f64,
    max_applications: usize,
    rng: ChaCha8Rng,
    /// B-orthonormal basis, column-major n × k
    v: Vec<f64>,
    /// B · basis
    bv: Vec<f64>,
    /// projected stiffness Vᵀ A V, cap × cap, column-major
    h: DMatrix<f64>,
    k: usize,
}

impl<'a> BlockKrylov<'a> {
    fn new(a: &'a SparseSym, b: Mass<'a>, chol: &'a EnvelopeCholesky, m: usize, opts: &EigenOptions) -> Self {
        let n = a.dim();
        let block = (m + (m / 4).max(6)).min(n / 3).max(m);
        let cap = (3 * block).min(n);
        let max_applications =
            opts.max_applications.unwrap_or_else(|| ((10 * m) as f64 * (n as f64).sqrt()).ceil() as usize);
        Self {
            a,
            b,
            chol,
            n,
            m,
            block,
            cap,
            tol: opts.tol,
            max_applications,
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            v: Vec::with_capacity(n * cap),
            bv: Vec::with_capacity(n * cap),
            h: DMatrix::zeros(cap, cap),
            k: 0,
        }
    }

    fn random_block(&mut self, cols: usize) -> Vec<f64> {
        (0..self.n * cols).map(|_| self.rng.random_range(-1.0..1.0)).collect()
    }

    /// B-orthogonalizes `w` (column-major, `cols` columns) against the basis
    /// and itself, appends the surviving columns, and extends `h`.
    fn append(&mut self, mut w: Vec<f64>, cols: usize) -> usize {
        let n = self.n;
        let norms0: Vec<f64> = w.chunks(n).map(norm).collect();
        for _ in 0..2 {
            if self.k == 0 {
                break;
            }
            let bv = DMatrixView::from_slice(&self.bv, n, self.k);
            let vv = DMatrixView::from_slice(&self.v, n, self.k);
            let mut wm = DMatrix::from_column_slice(n, cols, &w);
            let c = bv.tr_mul(&wm);
            wm.gemm(-1.0, &vv, &c, 1.0);
            w.copy_from_slice(wm.as_slice());
        }
        let start = self.k;
        let mut bw = vec![0.0; n];
        for j in 0..cols {
            let mut col = w[j * n..(j + 1) * n].to_vec();
            for _ in 0..2 {
                for i in start..self.k {
                    let c = dot(&self.bv[i * n..(i + 1) * n], &col);
                    axpy(-c, &self.v[i * n..(i + 1) * n], &mut col);
                }
            }
            if norm(&col) <= 1e-10 * norms0[j] || self.k == self.cap {
                continue;
            }
            self.b.apply(&col, &mut bw);
            let nb = dot(&col, &bw);
            if !(nb > 0.0) {
                continue;
            }
            let s = 1.0 / nb.sqrt();
            col.iter_mut().for_each(|x| *x *= s);
            self.v.extend_from_slice(&col);
            self.bv.extend(bw.iter().map(|x| x * s));
            self.k += 1;
        }
        let added = self.k - start;
        if added > 0 {
            let mut aw = vec![0.0; n * added];
            for (j, col) in aw.chunks_mut(n).enumerate() {
                self.a.mul_vec_into(&self.v[(start + j) * n..(start + j + 1) * n], col);
            }
            let vv = DMatrixView::from_slice(&self.v, n, self.k);
            let awm = DMatrixView::from_slice(&aw, n, added);
            let proj = vv.tr_mul(&awm);
            for j in 0..added {
                for i in 0..self.k {
                    let x = proj[(i, j)];
                    self.h[(i, start + j)] = x;
                    self.h[(start + j, i)] = x;
                }
            }
        }
        added
    }

    /// Rayleigh–Ritz on the current basis: ascending Ritz values and the
    /// coefficient matrix (k × k).
    fn ritz(&self) -> (Vec<f64>, DMatrix<f64>) {
        let k = self.k;
        let hk = self.h.view((0, 0), (k, k));
        let sym = (hk + hk.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, idx[c])]);
        (values, vectors)
    }

    fn run(mut self) -> Result<Vec<EigenPair>, EigenError> {
        let n = self.n;
        let mut applications = 0usize;
        let first = self.random_block(self.block);
        let mut added = self.append(first, self.block);
        let mut last_residuals = vec![f64::INFINITY; self.m];
        let mut best_worst = f64::INFINITY;
        let mut stalled = 0usize;
        loop {
            if added == 0 {
                // invariant subspace reached; continue from fresh directions
                let extra = self.random_block(self.block);
                added = self.append(extra, self.block);
                if added == 0 {
                    break;
                }
            }
            if self.k >= self.m {
                let (theta, y) = self.ritz();
                let vv = DMatrixView::from_slice(&self.v, n, self.k);
                let x = vv * y.columns(0, self.m);
                let residuals: Vec<f64> =
                    (0..self.m).map(|j| relative_residual(self.a, self.b, theta[j], x.column(j).as_slice())).collect();
                if residuals.iter().all(|&r| r <= self.tol) {
                    return Ok((0..self.m)
                        .map(|j| EigenPair {
                            value: theta[j],
                            vector: x.column(j).as_slice().to_vec(),
                            residual: residuals[j],
                        })
                        .collect());
                }
                let worst = residuals.iter().copied().fold(0.0, f64::max);
                last_residuals = residuals;
                if applications >= self.max_applications {
                    break;
                }
                if self.k + self.block > self.cap {
                    // stop once restarts no longer halve the worst residual
                    if worst < 0.5 * best_worst {
                        best_worst = worst;
                        stalled = 0;
                    } else {
                        stalled += 1;
                        if stalled >= STALL_RESTARTS {
                            break;
                        }
                    }
                    self.restart(&theta, &y);
                    // the next block is built from every kept Ritz vector
                    added = self.k;
                }
            }
            if applications >= self.max_applications {
                break;
            }
            // next Krylov block: A⁻¹ B applied to the newest basis columns
            let from = self.k - added;
            let mut w = self.bv[from * n..self.k * n].to_vec();
            self.chol.solve_columns(&mut w, added).expect("factor dimension matches");
            applications += added;
            added = self.append(w, added);
        }
        let worst = last_residuals.iter().copied().fold(0.0, f64::max);
        Err(EigenError::NotConverged { applications, worst, residuals: last_residuals })
    }

    fn restart(&mut self, theta: &[f64], y: &DMatrix<f64>) {
        let n = self.n;
        let keep = self.block.min(self.k);
        let vv = DMatrixView::from_slice(&self.v, n, self.k);
        let bvv = DMatrixView::from_slice(&self.bv, n, self.k);
        let yk = y.columns(0, keep);
        let v_new = vv * yk;
        let bv_new = bvv * yk;
        self.v.clear();
        self.v.extend_from_slice(v_new.as_slice());
        self.bv.clear();
        self.bv.extend_from_slice(bv_new.as_slice());
        self.h.fill(0.0);
        for i in 0..keep {
            self.h[(i, i)] = theta[i];
        }
        self.k = keep;
    }
}

fn dense_eigenpairs(a: &SparseSym, b: Mass, m: usize) -> Result<Vec<EigenPair>, EigenError> {
    let n = a.dim();
    let ad = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
    let bd = match b {
        Mass::Identity => DMatrix::identity(n, n),
        Mass::Matrix(bm) => DMatrix::from_fn(n, n, |i, j| bm.get(i, j)),
    };
    if let Some(row) = first_bad_pivot(&ad) {
        return Err(EigenError::NotPositiveDefinite { row: row.0, pivot: row.1 });
    }
    if let Some(row) = first_bad_pivot(&bd) {
        return Err(EigenError::IndefiniteMass { row: row.0, pivot: row.1 });
    }
    let l = bd.clone().cholesky().expect("checked above").l();
    let linv = l.try_inverse().ok_or(EigenError::IndefiniteMass { row: 0, pivot: 0.0 })?;
    let c = &linv * &ad * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lt_inv = linv.transpose();
    Ok(idx
        .into_iter()
        .take(m)
        .map(|i| {
            let x = &lt_inv * eig.eigenvectors.column(i);
            let vector = x.as_slice().to_vec();
            let value = eig.eigenvalues[i];
            EigenPair { residual: relative_residual(a, b, value, &vector), value, vector }
        })
        .collect())
}

fn first_bad_pivot(m: &DMatrix<f64>) -> Option<(usize, f64)> {
    // plain Cholesky to locate the failing row
    let n = m.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum();
            if i == j {
                let p = m[(i, i)] - s;
                if !(p > 0.0) {
                    return Some((i, p));
                }
                l[(i, i)] = p.sqrt();
            } else {
                l[(i, j)] = (m[(i, j)] - s) / l[(j, j)];
            }
        }
    }
    None
}

/// Gram–Schmidt (two passes) in the B-inner product.
pub fn b_orthonormalize(vectors: &[Vec<f64>], b: Mass) -> Result<Vec<Vec<f64>>, EigenError> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    let mut bout: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        let mut w = v.clone();
        let mut bw = vec![0.0; w.len()];
        b.apply(&w, &mut bw);
        let n0 = dot(&w, &bw);
        if !(n0 > 0.0) {
            return Err(if n0 < 0.0 {
                EigenError::IndefiniteMass { row: index, pivot: n0 }
            } else {
                EigenError::RankDeficient { index }
            });
        }
        for _ in 0..2 {
            for (u, bu) in out.iter().zip(&bout) {
                let c = dot(bu, &w);
                axpy(-c, u, &mut w);
            }
        }
        b.apply(&w, &mut bw);
        let n1 = dot(&w, &bw);
        if !(n1 > 1e-20 * n0) {
            return Err(EigenError::RankDeficient { index });
        }
        let s = 1.0 / n1.sqrt();
        w.iter_mut().for_each(|x| *x *= s);
        bw.iter_mut().for_each(|x| *x *= s);
        out.push(w);
        bout.push(bw);
    }
    Ok(out)
}

/// Gram matrix `[xᵢᵀ B xⱼ]`.
pub fn b_gram(vectors: &[Vec<f64>], b: Mass) -> DMatrix<f64> {
    let k = vectors.len();
    let bx: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            let mut y = vec![0.0; v.len()];
            b.apply(v, &mut y);
            y
        })
        .collect();
    DMatrix::from_fn(k, k, |i, j| dot(&vectors[i], &bx[j]))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (t, s) in y.iter_mut().zip(x) {
        *t += alpha * s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn laplacian_5pt(n: usize) -> SparseSym {
        // unit square with n cells per side, scaled by 1/h²
        let m = n - 1;
        let h = 1.0 / n as f64;
        let s = 1.0 / (h * h);
        let id = |i: usize, j: usize| i * m + j;
        let mut t = Vec::new();
        for i in 0..m {
            for j in 0..m {
                t.push((id(i, j), id(i, j), 4.0 * s));
                if i + 1 < m {
                    t.push((id(i, j), id(i + 1, j), -s));
                }
                if j + 1 < m {
                    t.push((id(i, j), id(i, j + 1), -s));
                }
            }
        }
        SparseSym::from_triplets(m * m, t).unwrap()
    }

    fn exact_discrete(n: usize, count: usize) -> Vec<f64> {
        let h = 1.0 / n as f64;
        let mut v = Vec::new();
        for p in 1..n {
            for q in 1..n {
                let sp = (p as f64 * PI * h / 2.0).sin();
                let sq = (q as f64 * PI * h / 2.0).sin();
                v.push(4.0 / (h * h) * (sp * sp + sq * sq));
            }
        }
        v.sort_by(f64::total_cmp);
        v.truncate(count);
        v
    }

    #[test]
    fn diagonal_case() {
        let a = SparseSym::from_diagonal(&[1.0, 2.0, 3.0]);
        let pairs = smallest_eigenpairs(&a, Mass::Identity, 2, &EigenOptions::default()).unwrap();
        assert!((pairs[0].value - 1.0).abs() < 1e-14);
        assert!((pairs[1].value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn identity_pencil_gives_unit_eigenvalues() {
        let a = laplacian_5pt(24);
        let pairs = smallest_eigenpairs(&a, Mass::Matrix(&a), 5, &EigenOptions::default()).unwrap();
        for p in &pairs {
            assert!((p.value - 1.0).abs() < 1e-8, "{}", p.value);
        }
    }

    #[test]
    fn reproduces_closed_form_discrete_spectrum() {
        let n = 40;
        let a = laplacian_5pt(n);
        let opts = EigenOptions::default();
        let pairs = smallest_eigenpairs(&a, Mass::Identity, 12, &opts).unwrap();
        let exact = exact_discrete(n, 12);
        for (p, e) in pairs.iter().zip(&exact) {
            assert!(((p.value - e) / e).abs() < opts.tol, "{} vs {}", p.value, e);
            assert!(p.residual <= opts.tol);
        }
        let mu1 = 2.0 * PI * PI;
        assert!((pairs[0].value - mu1).abs() / mu1 < 2e-3);
        let vecs: Vec<Vec<f64>> = pairs.iter().map(|p| p.vector.clone()).collect();
        let g = b_gram(&vecs, Mass::Identity);
        assert!((g - DMatrix::identity(12, 12)).abs().max() < 1e-10);
    }

    #[test]
    fn invariant_under_symmetric_permutation() {
        let a = laplacian_5pt(22);
        let n = a.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let pa = a.permuted(&perm).unwrap();
        let opts = EigenOptions::default();
        let x = smallest_eigenpairs(&a, Mass::Identity, 8, &opts).unwrap();
        let y = smallest_eigenpairs(&pa, Mass::Identity, 8, &opts).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p.value - q.value).abs() <= 10.0 * opts.tol * p.value);
        }
    }

    #[test]
    fn rejects_too_many_pairs_and_bad_mass() {
        let a = laplacian_5pt(20);
        assert!(matches!(
            smallest_eigenpairs(&a, Mass::Identity, a.dim() / 4 + 1, &EigenOptions::default()),
            Err(EigenError::InvalidRequest { .. })
        ));
        let neg = SparseSym::from_diagonal(&vec![-1.0; a.dim()]);
        assert!(matches!(
            smallest_eigenpairs(&a, Mass::Matrix(&neg), 2, &EigenOptions::default()),
            Err(EigenError::IndefiniteMass { .. })
        ));
        let small_neg = SparseSym::from_diagonal(&[1.0, -1.0, 2.0]);
        assert!(matches!(
            smallest_eigenpairs(&small_neg, Mass::Identity, 1, &EigenOptions::default()),
            Err(EigenError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let a = laplacian_5pt(30);
        let opts = EigenOptions { tol: 1e-14, max_applications: Some(5), ..EigenOptions::default() };
        match smallest_eigenpairs(&a, Mass::Identity, 4, &opts) {
            Err(EigenError::NotConverged { residuals, .. }) => assert_eq!(residuals.len(), 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn b_orthonormalize_cases() {
        let b = SparseSym::from_diagonal(&[1.0, 2.0, 3.0, 4.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vs: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let q = b_orthonormalize(&vs, Mass::Matrix(&b)).unwrap();
        let g = b_gram(&q, Mass::Matrix(&b));
        assert!((g - DMatrix::identity(3, 3)).abs().max() < 1e-12);

        let again = b_orthonormalize(&q, Mass::Matrix(&b)).unwrap();
        for (x, y) in q.iter().zip(&again) {
            let same = x.iter().zip(y).all(|(p, r)| (p - r).abs() < 1e-12);
            let flipped = x.iter().zip(y).all(|(p, r)| (p + r).abs() < 1e-12);
            assert!(same || flipped);
        }

        let dup = vec![vs[0].clone(), vs[0].clone()];
        assert_eq!(b_orthonormalize(&dup, Mass::Identity), Err(EigenError::RankDeficient { index: 1 }));
    }
}
