//! Compressed sparse row matrices.
//!
//! Incidence matrices are stored with `i64` entries so that products of
//! them stay exact; metric matrices use `f64`.

use std::ops::{Add, Mul};

use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_traits::{One, Zero};

/// A CSR matrix. Column indices in each row are sorted and unique.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<T>,
}

pub type CsrI = Csr<i64>;
pub type CsrF = Csr<f64>;

pub trait Scalar: Copy + Zero + One + Add<Output = Self> + Mul<Output = Self> + PartialEq {}
impl<T: Copy + Zero + One + Add<Output = T> + Mul<Output = T> + PartialEq> Scalar for T {}

impl<T: Scalar> Csr<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![T::one(); n],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed and exact zeros are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trips: Vec<(usize, usize, T)>) -> Self {
        trips.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut data: Vec<T> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trips {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                let d = data.last_mut().unwrap();
                *d = *d + v;
            } else {
                indptr[r + 1] += 1;
                indices.push(c);
                data.push(v);
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        let mut m = Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        };
        m.prune(|v| v == T::zero());
        m
    }

    /// Builds a matrix from a row-wise closure returning `(col, value)` pairs.
    pub fn from_rows<I>(nrows: usize, ncols: usize, mut row: impl FnMut(usize) -> I) -> Self
    where
        I: IntoIterator<Item = (usize, T)>,
    {
        let mut trips = Vec::new();
        for r in 0..nrows {
            for (c, v) in row(r) {
                trips.push((r, c, v));
            }
        }
        Self::from_triplets(nrows, ncols, trips)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[a..b]
            .iter()
            .copied()
            .zip(self.data[a..b].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        match self.indices[a..b].binary_search(&c) {
            Ok(k) => self.data[a + k],
            Err(_) => T::zero(),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// Drops stored entries for which `drop` returns true.
    pub fn prune(&mut self, drop: impl Fn(T) -> bool) {
        let mut w = 0;
        let mut start = 0;
        for r in 0..self.nrows {
            let end = self.indptr[r + 1];
            for k in start..end {
                if !drop(self.data[k]) {
                    self.indices[w] = self.indices[k];
                    self.data[w] = self.data[k];
                    w += 1;
                }
            }
            start = end;
            self.indptr[r + 1] = w;
        }
        self.indices.truncate(w);
        self.data.truncate(w);
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut data = vec![T::zero(); self.nnz()];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                let k = next[c];
                indices[k] = r;
                data[k] = v;
                next[c] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr,
            indices,
            data,
        }
    }

    /// Sparse product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.ncols, rhs.nrows, "matmul dimension mismatch");
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        let mut acc = vec![T::zero(); rhs.ncols];
        let mut mark = vec![usize::MAX; rhs.ncols];
        let mut cols: Vec<usize> = Vec::new();
        for r in 0..self.nrows {
            cols.clear();
            for (k, a) in self.row(r) {
                for (c, b) in rhs.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = T::zero();
                        cols.push(c);
                    }
                    acc[c] = acc[c] + a * b;
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                if acc[c] != T::zero() {
                    indices.push(c);
                    data.push(acc[c]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        Self {
            nrows: self.nrows,
            ncols: rhs.ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.axpby(T::one(), rhs, T::one())
    }

    /// `alpha * self + beta * rhs`.
    pub fn axpby(&self, alpha: T, rhs: &Self, beta: T) -> Self {
        assert_eq!((self.nrows, self.ncols), (rhs.nrows, rhs.ncols));
        let mut trips: Vec<_> = self.triplets().map(|(r, c, v)| (r, c, alpha * v)).collect();
        trips.extend(rhs.triplets().map(|(r, c, v)| (r, c, beta * v)));
        Self::from_triplets(self.nrows, self.ncols, trips)
    }

    pub fn scale(&self, alpha: T) -> Self {
        let mut m = self.clone();
        for v in &mut m.data {
            *v = alpha * *v;
        }
        m
    }

    pub fn map<U>(&self, f: impl Fn(T) -> U) -> Csr<U> {
        Csr {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_rows(rows.len(), self.ncols, |i| {
            self.row(rows[i]).collect::<Vec<_>>()
        })
    }

    /// Keeps the listed columns, renumbered in the given order.
    pub fn select_cols(&self, cols: &[usize]) -> Self {
        let mut newc = vec![usize::MAX; self.ncols];
        for (i, &c) in cols.iter().enumerate() {
            newc[c] = i;
        }
        Self::from_rows(self.nrows, cols.len(), |r| {
            self.row(r)
                .filter(|&(c, _)| newc[c] != usize::MAX)
                .map(|(c, v)| (newc[c], v))
                .collect::<Vec<_>>()
        })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == T::zero())
    }

    pub fn vstack(blocks: &[&Self]) -> Self {
        let ncols = blocks.first().map_or(0, |b| b.ncols);
        let mut trips = Vec::new();
        let mut off = 0;
        for b in blocks {
            assert_eq!(b.ncols, ncols, "vstack column mismatch");
            trips.extend(b.triplets().map(|(r, c, v)| (r + off, c, v)));
            off += b.nrows;
        }
        Self::from_triplets(off, ncols, trips)
    }

    pub fn hstack(blocks: &[&Self]) -> Self {
        let nrows = blocks.first().map_or(0, |b| b.nrows);
        let mut trips = Vec::new();
        let mut off = 0;
        for b in blocks {
            assert_eq!(b.nrows, nrows, "hstack row mismatch");
            trips.extend(b.triplets().map(|(r, c, v)| (r, c + off, v)));
            off += b.ncols;
        }
        Self::from_triplets(nrows, off, trips)
    }
}

impl<T: Scalar> Csr<T> {
    /// `y = self * x`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols, "mul_vec dimension mismatch");
        (0..self.nrows)
            .map(|r| self.row(r).fold(T::zero(), |acc, (c, v)| acc + v * x[c]))
            .collect()
    }

    /// `y = selfᵀ * x`.
    pub fn tmul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows, "tmul_vec dimension mismatch");
        let mut y = vec![T::zero(); self.ncols];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                y[c] = y[c] + v * x[r];
            }
        }
        y
    }
}

impl CsrI {
    pub fn to_f64(&self) -> CsrF {
        self.map(|v| v as f64)
    }

    pub fn max_abs(&self) -> i64 {
        self.data.iter().map(|v| v.abs()).max().unwrap_or(0)
    }
}

impl CsrF {
    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Drops entries with `|v| <= tol`.
    pub fn drop_small(&mut self, tol: f64) {
        self.prune(|v| v.abs() <= tol);
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// Converts a dense matrix, dropping entries with `|v| <= tol`.
    pub fn from_dense(m: faer::MatRef<'_, f64>, tol: f64) -> Self {
        let mut trips = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v.abs() > tol {
                    trips.push((r, c, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), trips)
    }

    /// `self * B` for a dense right-hand side.
    pub fn mul_dense(&self, b: faer::MatRef<'_, f64>) -> Mat<f64> {
        assert_eq!(b.nrows(), self.ncols);
        let mut out = Mat::zeros(self.nrows, b.ncols());
        for j in 0..b.ncols() {
            for r in 0..self.nrows {
                let mut s = 0.0;
                for (c, v) in self.row(r) {
                    s += v * b[(c, j)];
                }
                out[(r, j)] = s;
            }
        }
        out
    }

    /// Converts to a faer column-major sparse matrix.
    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        let trips: Vec<_> = self
            .triplets()
            .map(|(r, c, v)| Triplet::new(r, c, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trips)
            .expect("valid triplets")
    }

    /// `(self + selfᵀ) / 2`.
    pub fn sym_part(&self) -> Self {
        self.axpby(0.5, &self.transpose(), 0.5)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = CsrI::from_triplets(2, 3, vec![(0, 1, 2), (0, 1, -2), (1, 2, 1), (1, 0, 4), (1, 2, 1)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 2), 2);
        assert_eq!(m.get(1, 0), 4);
        assert_eq!(m.get(0, 1), 0);
    }

    #[test]
    fn matmul_matches_dense() {
        let a = CsrF::from_triplets(2, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]);
        let b = CsrF::from_triplets(3, 2, vec![(0, 1, 1.0), (1, 0, -1.0), (2, 0, 0.5), (2, 1, 4.0)]);
        let c = a.matmul(&b).to_dense();
        let d = a.to_dense() * b.to_dense();
        assert_eq!(c, d);
        assert_eq!(a.transpose().transpose(), a);
    }
}
