//! Symmetric sparse matrices stored as the upper triangle in CSR form.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("entry ({row}, {col}) outside a {dim}×{dim} matrix")]
    OutOfBounds { row: usize, col: usize, dim: usize },
    #[error("entry ({row}, {col}) = {upper} but ({col}, {row}) = {lower}")]
    Asymmetric { row: usize, col: usize, upper: f64, lower: f64 },
    #[error("permutation of length {got} for a matrix of dimension {dim}")]
    BadPermutation { got: usize, dim: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSym {
    /// Assembles from triplets given in either triangle; `(i, j)` and `(j, i)`
    /// are treated as the same entry and summed.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, SparseError> {
        let mut upper = Vec::new();
        for (i, j, v) in triplets {
            if i >= dim || j >= dim {
                return Err(SparseError::OutOfBounds { row: i, col: j, dim });
            }
            upper.push((i.min(j), i.max(j), v));
        }
        Ok(Self::compress(dim, upper))
    }

    /// Assembles from a full (both triangles) triplet list and verifies that
    /// the assembled matrix is exactly symmetric before folding.
    pub fn from_full_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, SparseError> {
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        for (i, j, v) in triplets {
            if i >= dim || j >= dim {
                return Err(SparseError::OutOfBounds { row: i, col: j, dim });
            }
            if i <= j {
                upper.push((i, j, v));
            }
            if i >= j {
                lower.push((j, i, v));
            }
        }
        let up = Self::compress(dim, upper);
        let lo = Self::compress(dim, lower);
        if up != lo {
            for i in 0..dim {
                for (j, a) in up.row(i) {
                    let b = lo.get(i, j);
                    if a != b {
                        return Err(SparseError::Asymmetric { row: i, col: j, upper: a, lower: b });
                    }
                }
                for (j, b) in lo.row(i) {
                    let a = up.get(i, j);
                    if a != b {
                        return Err(SparseError::Asymmetric { row: i, col: j, upper: a, lower: b });
                    }
                }
            }
        }
        Ok(up)
    }

    fn compress(dim: usize, mut upper: Vec<(usize, usize, f64)>) -> Self {
        upper.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(upper.len());
        let mut vals: Vec<f64> = Vec::with_capacity(upper.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in upper {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            cols.push(j);
            vals.push(v);
            row_ptr[i + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { dim, row_ptr, cols, vals }
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, row_ptr: (0..=dim).collect(), cols: (0..dim).collect(), vals: vec![1.0; dim] }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::identity(diag.len());
        m.vals.copy_from_slice(diag);
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored (upper-triangle) entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Upper-triangle entries `(col, value)` of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = (i.min(j), i.max(j));
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(p) => self.vals[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.dim {
            let xi = x[i];
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p];
                let a = self.vals[p];
                acc += a * x[j];
                if j != i {
                    y[j] += a * xi;
                }
            }
            y[i] += acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `P A Pᵀ` where row `i` of the result is row `perm[i]` of `A`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, SparseError> {
        if perm.len() != self.dim {
            return Err(SparseError::BadPermutation { got: perm.len(), dim: self.dim });
        }
        let mut inv = vec![usize::MAX; self.dim];
        for (new, &old) in perm.iter().enumerate() {
            if old >= self.dim || inv[old] != usize::MAX {
                return Err(SparseError::BadPermutation { got: perm.len(), dim: self.dim });
            }
            inv[old] = new;
        }
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                trip.push((inv[i], inv[j], v));
            }
        }
        Self::from_triplets(self.dim, trip)
    }

    /// Neighbor lists of the symmetric sparsity graph (diagonal excluded).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.dim];
        for i in 0..self.dim {
            for (j, _) in self.row(i) {
                if j != i {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        adj
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim]; self.dim];
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_triangles_folded() {
        let a = SparseSym::from_triplets(3, [(0, 1, 1.0), (1, 0, 2.0), (2, 2, 5.0)]).unwrap();
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(1, 0), 3.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn full_triplets_detect_asymmetry() {
        let err = SparseSym::from_full_triplets(2, [(0, 1, 1.0), (1, 0, 1.5)]).unwrap_err();
        assert!(matches!(err, SparseError::Asymmetric { .. }));
        let ok = SparseSym::from_full_triplets(2, [(0, 1, 1.0), (1, 0, 1.0), (0, 0, 2.0)]);
        assert!(ok.is_ok());
    }

    #[test]
    fn matvec_matches_dense() {
        let a =
            SparseSym::from_triplets(3, [(0, 0, 2.0), (0, 2, -1.0), (1, 1, 3.0), (1, 2, 0.5), (2, 2, 4.0)]).unwrap();
        let x = [1.0, -2.0, 0.5];
        let d = a.to_dense();
        let y = a.mul_vec(&x);
        for i in 0..3 {
            let e: f64 = (0..3).map(|j| d[i][j] * x[j]).sum();
            assert!((y[i] - e).abs() < 1e-15);
        }
    }

    #[test]
    fn permutation_roundtrip() {
        let a = SparseSym::from_triplets(3, [(0, 0, 1.0), (0, 1, 2.0), (2, 2, 3.0)]).unwrap();
        let p = a.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.get(0, 0), 3.0);
        assert_eq!(p.get(1, 2), 2.0);
        assert!(a.permuted(&[0, 0, 1]).is_err());
    }
}
