//! Exact rational and integer linear algebra for topological computations.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::sparse::CsrI;

type SparseRow = BTreeMap<usize, BigRational>;

/// Incremental row echelon basis over the rationals.
///
/// Rows are kept with distinct leading columns, so reducing a vector
/// against the basis is a single pass.
#[derive(Clone, Debug, Default)]
pub struct RowReducer {
    /// Pivot column -> row with leading entry 1 in that column.
    rows: BTreeMap<usize, SparseRow>,
}

impl RowReducer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Residual of `v` after eliminating all pivot columns.
    pub fn reduce(&self, v: &SparseRow) -> SparseRow {
        let mut v = v.clone();
        loop {
            // Smallest column of v that is a pivot.
            let Some((&col, coef)) = v.iter().find(|(c, _)| self.rows.contains_key(c)) else {
                return v;
            };
            let coef = coef.clone();
            for (&c, x) in &self.rows[&col] {
                let e = v.entry(c).or_insert_with(BigRational::zero);
                *e -= &coef * x;
                if e.is_zero() {
                    v.remove(&c);
                }
            }
        }
    }

    /// Adds `v` to the span; returns false if it was already in it.
    pub fn insert(&mut self, v: &SparseRow) -> bool {
        let r = self.reduce(v);
        let Some((&lead, a)) = r.iter().next() else {
            return false;
        };
        let inv = a.recip();
        let r: SparseRow = r.iter().map(|(&c, x)| (c, x * &inv)).collect();
        // Keep every stored row free of the new pivot column so that
        // `reduce` never reintroduces eliminated columns.
        for row in self.rows.values_mut() {
            if let Some(coef) = row.get(&lead).cloned() {
                for (&c, x) in &r {
                    let e = row.entry(c).or_insert_with(BigRational::zero);
                    *e -= &coef * x;
                    if e.is_zero() {
                        row.remove(&c);
                    }
                }
            }
        }
        self.rows.insert(lead, r);
        true
    }
}

pub fn sparse_row(entries: impl IntoIterator<Item = (usize, i128)>) -> SparseRow {
    entries
        .into_iter()
        .filter(|(_, v)| *v != 0)
        .map(|(c, v)| (c, BigRational::from_integer(BigInt::from(v))))
        .collect()
}

/// Rank of an integer matrix over the rationals.
pub fn rank_rational(m: &CsrI) -> usize {
    // Eliminate rows in order of increasing length to limit fill.
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by_key(|&r| (m.row(r).count(), r));
    let mut red = RowReducer::new();
    for r in order {
        red.insert(&sparse_row(m.row(r).map(|(c, v)| (c, v as i128))));
    }
    red.rank()
}

/// Column echelon form of an integer matrix by unimodular column operations.
///
/// Returns `(rank, u)` where `u` is an `n x n` unimodular matrix (as
/// columns) such that `a * u` has its nonzero columns first; the last
/// `n - rank` columns of `u` are a lattice basis of the integer kernel.
pub fn integer_column_echelon(a: &[Vec<BigInt>], n: usize) -> (usize, Vec<Vec<BigInt>>) {
    let mut cols: Vec<Vec<BigInt>> = (0..n)
        .map(|j| a.iter().map(|row| row[j].clone()).collect())
        .collect();
    let mut u: Vec<Vec<BigInt>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    let nrows = a.len();
    let mut rank = 0;
    for r in 0..nrows {
        if rank == n {
            break;
        }
        // Euclid on entries (r, rank..n) until a single nonzero remains.
        loop {
            let nz: Vec<usize> = (rank..n).filter(|&j| !cols[j][r].is_zero()).collect();
            if nz.len() <= 1 {
                if let Some(&j) = nz.first() {
                    cols.swap(rank, j);
                    u.swap(rank, j);
                    rank += 1;
                }
                break;
            }
            let p = *nz.iter().min_by_key(|&&j| cols[j][r].abs()).unwrap();
            for &j in &nz {
                if j == p {
                    continue;
                }
                let q = cols[j][r].div_floor(&cols[p][r]);
                let (cp, up) = (cols[p].clone(), u[p].clone());
                for i in 0..nrows {
                    cols[j][i] -= &q * &cp[i];
                }
                for i in 0..n {
                    u[j][i] -= &q * &up[i];
                }
            }
        }
    }
    (rank, u)
}
