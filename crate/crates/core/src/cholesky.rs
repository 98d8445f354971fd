//! Envelope (profile) Cholesky factorization for grid-structured SPD matrices.
//!
//! Rows are reordered by reverse Cuthill–McKee when that shrinks the envelope.
//! Only entries between the first nonzero of each row and the diagonal are
//! stored, and fill stays inside that profile.

use std::collections::VecDeque;

use thiserror::Error;

use crate::sparse::SparseSym;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CholeskyError {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("right-hand side has length {got}, expected {dim}")]
    Dimension { got: usize, dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    Natural,
    ReverseCuthillMcKee,
    /// Whichever of the two gives the smaller envelope.
    Auto,
}

#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    dim: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    first: Vec<usize>,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

/// Reverse Cuthill–McKee ordering of an undirected graph; `result[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let seed = (0..n).filter(|&v| !visited[v]).min_by_key(|&v| degree[v]).unwrap();
        let start = pseudo_peripheral(adj, seed);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let mut level = vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    level
}

fn pseudo_peripheral(adj: &[Vec<usize>], seed: usize) -> usize {
    let mut v = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let level = bfs_levels(adj, v);
        let far = level
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != usize::MAX)
            .max_by_key(|(w, &l)| (l, std::cmp::Reverse(adj[*w].len())))
            .map(|(w, &l)| (w, l))
            .unwrap();
        if far.1 <= ecc {
            break;
        }
        ecc = far.1;
        v = far.0;
    }
    v
}

fn envelope_size(a: &SparseSym, perm: &[usize]) -> usize {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut first: Vec<usize> = (0..a.dim()).collect();
    for i in 0..a.dim() {
        for (j, _) in a.row(i) {
            let (p, q) = (inv[i], inv[j]);
            let (lo, hi) = (p.min(q), p.max(q));
            first[hi] = first[hi].min(lo);
        }
    }
    first.iter().enumerate().map(|(i, &f)| i - f + 1).sum()
}

impl EnvelopeCholesky {
    pub fn factor(a: &SparseSym, ordering: Ordering) -> Result<Self, CholeskyError> {
        let n = a.dim();
        let natural: Vec<usize> = (0..n).collect();
        let perm = match ordering {
            Ordering::Natural => natural,
            Ordering::ReverseCuthillMcKee => reverse_cuthill_mckee(&a.adjacency()),
            Ordering::Auto => {
                let rcm = reverse_cuthill_mckee(&a.adjacency());
                if envelope_size(a, &rcm) < envelope_size(a, &natural) {
                    rcm
                } else {
                    natural
                }
            }
        };
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        let mut entries = Vec::with_capacity(a.nnz());
        for i in 0..n {
            for (j, v) in a.row(i) {
                let (p, q) = (inv[i], inv[j]);
                let (lo, hi) = (p.min(q), p.max(q));
                first[hi] = first[hi].min(lo);
                entries.push((hi, lo, v));
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            offsets.push(offsets[i] + i - first[i] + 1);
        }
        let mut data = vec![0.0; offsets[n]];
        for (row, col, v) in entries {
            data[offsets[row] + col - first[row]] += v;
        }

        for i in 0..n {
            let fi = first[i];
            let (done, rest) = data.split_at_mut(offsets[i]);
            let row = &mut rest[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let lj = &done[offsets[j]..offsets[j + 1]];
                let s: f64 = row[k0 - fi..j - fi].iter().zip(&lj[k0 - fj..j - fj]).map(|(x, y)| x * y).sum();
                let ljj = lj[j - fj];
                row[j - fi] = (row[j - fi] - s) / ljj;
            }
            let s: f64 = row[..i - fi].iter().map(|x| x * x).sum();
            let pivot = row[i - fi] - s;
            if !(pivot > 0.0) {
                return Err(CholeskyError::NotPositiveDefinite { row: perm[i], pivot });
            }
            row[i - fi] = pivot.sqrt();
        }
        Ok(Self { dim: n, perm, first, offsets, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored factor entries.
    pub fn envelope(&self) -> usize {
        self.data.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<(), CholeskyError> {
        self.solve_columns(b, 1)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, CholeskyError> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// Solves for `ncols` right-hand sides stored column-major in `cols`.
    pub fn solve_columns(&self, cols: &mut [f64], ncols: usize) -> Result<(), CholeskyError> {
        let n = self.dim;
        if cols.len() != n * ncols {
            return Err(CholeskyError::Dimension { got: cols.len(), dim: n * ncols });
        }
        if n == 0 {
            return Ok(());
        }
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            const CHUNK: usize = 8;
            cols.par_chunks_mut(n * CHUNK).for_each(|chunk| self.solve_chunk(chunk));
        }
        #[cfg(not(feature = "parallel"))]
        for chunk in cols.chunks_mut(n * 8) {
            self.solve_chunk(chunk);
        }
        Ok(())
    }

    fn solve_chunk(&self, chunk: &mut [f64]) {
        let n = self.dim;
        let k = chunk.len() / n;
        let mut work: Vec<Vec<f64>> = (0..k)
            .map(|c| {
                let col = &chunk[c * n..(c + 1) * n];
                self.perm.iter().map(|&old| col[old]).collect()
            })
            .collect();
        // L y = b
        for i in 0..n {
            let fi = self.first[i];
            let row = self.row(i);
            let (off, diag) = (&row[..i - fi], row[i - fi]);
            for y in work.iter_mut() {
                let s: f64 = off.iter().zip(&y[fi..i]).map(|(a, b)| a * b).sum();
                y[i] = (y[i] - s) / diag;
            }
        }
        // Lᵀ x = y
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = self.row(i);
            let (off, diag) = (&row[..i - fi], row[i - fi]);
            for y in work.iter_mut() {
                let xi = y[i] / diag;
                y[i] = xi;
                for (t, a) in y[fi..i].iter_mut().zip(off) {
                    *t -= a * xi;
                }
            }
        }
        for (c, y) in work.iter().enumerate() {
            let col = &mut chunk[c * n..(c + 1) * n];
            for (new, &old) in self.perm.iter().enumerate() {
                col[old] = y[new];
            }
        }
    }
}
