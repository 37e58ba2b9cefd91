//! Finite-dimensional symplectic algebra: bases, Lagrangian predicates,
//! symplectic orthogonals and partition Lagrangians.

use faer::{Mat, MatRef};

use crate::error::SymplecticError;
use crate::linalg::{inf_norm, max_abs, null_space, orth, rank, svd_right};

/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-8;
/// Relative tolerance of the Lagrangian predicate.
pub const LAGRANGIAN_TOL: f64 = 1e-12;

/// A real vector space with a non-degenerate skew form `J`.
#[derive(Debug, Clone)]
pub struct SymplecticSpace {
    j: Mat<f64>,
}

impl SymplecticSpace {
    pub fn new(j: Mat<f64>) -> Result<Self, SymplecticError> {
        let n = j.nrows();
        if j.ncols() != n {
            return Err(SymplecticError::Shape(format!("form is {}x{}", n, j.ncols())));
        }
        if n % 2 != 0 {
            return Err(SymplecticError::DegeneratePairing(format!("odd dimension {n}")));
        }
        let scale = max_abs(j.as_ref());
        let skew = Mat::from_fn(n, n, |a, b| j[(a, b)] + j[(b, a)]);
        if max_abs(skew.as_ref()) > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(SymplecticError::DegeneratePairing("form is not skew".into()));
        }
        if n > 0 && rank(j.as_ref(), RANK_TOL) < n {
            return Err(SymplecticError::DegeneratePairing("form is singular".into()));
        }
        Ok(Self { j })
    }

    /// The standard form `[[0, I], [-I, 0]]` on `R^{2n}`.
    pub fn standard(n: usize) -> Self {
        Self { j: canonical_j(n) }
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn form(&self) -> MatRef<'_, f64> {
        self.j.as_ref()
    }

    pub fn pairing(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += u[a] * self.j[(a, b)] * v[b];
            }
        }
        s
    }
}

/// `[[0, I], [-I, 0]]` of size `2n`.
pub fn canonical_j(n: usize) -> Mat<f64> {
    Mat::from_fn(2 * n, 2 * n, |i, j| {
        if i < n && j == i + n {
            1.0
        } else if i >= n && j + n == i {
            -1.0
        } else {
            0.0
        }
    })
}

/// Column span of an independent set of vectors.
#[derive(Debug, Clone)]
pub struct Subspace {
    pub basis: Mat<f64>,
}

impl Subspace {
    pub fn new(basis: Mat<f64>) -> Result<Self, SymplecticError> {
        if basis.ncols() > 0 && rank(basis.as_ref(), RANK_TOL) < basis.ncols() {
            return Err(SymplecticError::DependentBasis);
        }
        Ok(Self { basis })
    }

    pub fn zero(ambient: usize) -> Self {
        Self { basis: Mat::zeros(ambient, 0) }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    /// Largest distance of a unit vector of `self` from `other`, i.e. the
    /// sine of the largest angle; zero iff `self ⊆ other`.
    pub fn containment_residual(&self, other: &Subspace) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let qa = orth(self.basis.as_ref(), 1e-12);
        let qb = orth(other.basis.as_ref(), 1e-12);
        let r = &qa - &qb * (qb.transpose() * &qa);
        svd_right(r.as_ref()).0.first().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagrangianVerdict {
    No,
    Lagrangian,
    CompleteLagrangian,
}

fn check_shape(space: &SymplecticSpace, sub: &Subspace) -> Result<(), SymplecticError> {
    if sub.ambient() != space.dim() {
        return Err(SymplecticError::Shape(format!(
            "subspace lives in R^{}, space has dimension {}",
            sub.ambient(),
            space.dim()
        )));
    }
    Ok(())
}

/// Largest entry of `QᵀJQ` for an orthonormal basis `Q` of `sub`, relative
/// to `‖J‖∞`.
pub fn isotropy_defect(space: &SymplecticSpace, sub: &Subspace) -> Result<f64, SymplecticError> {
    check_shape(space, sub)?;
    if sub.dim() == 0 {
        return Ok(0.0);
    }
    let q = orth(sub.basis.as_ref(), 1e-12);
    let g = q.transpose() * &space.j * &q;
    Ok(max_abs(g.as_ref()) / inf_norm(space.j.as_ref()))
}

pub fn is_lagrangian(space: &SymplecticSpace, sub: &Subspace) -> Result<LagrangianVerdict, SymplecticError> {
    if isotropy_defect(space, sub)? > LAGRANGIAN_TOL {
        return Ok(LagrangianVerdict::No);
    }
    if 2 * sub.dim() == space.dim() {
        Ok(LagrangianVerdict::CompleteLagrangian)
    } else {
        Ok(LagrangianVerdict::Lagrangian)
    }
}

/// `L^♯ = {u : [u, L] = 0}`.
pub fn symplectic_orthogonal(space: &SymplecticSpace, sub: &Subspace) -> Result<Subspace, SymplecticError> {
    check_shape(space, sub)?;
    let n = space.dim();
    if sub.dim() == 0 {
        return Ok(Subspace { basis: Mat::identity(n, n) });
    }
    let rows = sub.basis.transpose() * &space.j;
    Ok(Subspace { basis: null_space(rows.as_ref(), RANK_TOL) })
}

/// Skew Gram–Schmidt. Returns `U` whose columns `(e_1..e_n, f_1..f_n)`
/// satisfy `UᵀJU = [[0, I], [-I, 0]]`.
pub fn symplectic_basis(space: &SymplecticSpace) -> Result<Mat<f64>, SymplecticError> {
    let dim = space.dim();
    let n = dim / 2;
    let scale = max_abs(space.j.as_ref());
    let mut pool: Vec<Vec<f64>> = (0..dim).map(|k| (0..dim).map(|i| (i == k) as u8 as f64).collect()).collect();
    let mut es = Vec::with_capacity(n);
    let mut fs = Vec::with_capacity(n);
    while !pool.is_empty() {
        let u = pool.remove(0);
        let (best, c) = pool
            .iter()
            .enumerate()
            .map(|(k, v)| (k, space.pairing(&u, v)))
            .fold((usize::MAX, 0.0f64), |acc, (k, c)| if c.abs() > acc.1.abs() { (k, c) } else { acc });
        if best == usize::MAX || c.abs() <= 1e-10 * scale {
            return Err(SymplecticError::DegeneratePairing("no partner for basis vector".into()));
        }
        let mut v = pool.remove(best);
        if c < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let s = c.abs().sqrt();
        let e: Vec<f64> = u.iter().map(|x| x / s).collect();
        let f: Vec<f64> = v.iter().map(|x| x / s).collect();
        for w in pool.iter_mut() {
            // Two passes keep the skew orthogonality at roundoff level.
            for _ in 0..2 {
                let we = space.pairing(w, &e);
                let wf = space.pairing(w, &f);
                for i in 0..dim {
                    w[i] += -wf * e[i] + we * f[i];
                }
            }
        }
        es.push(e);
        fs.push(f);
    }
    let u = Mat::from_fn(dim, dim, |i, k| if k < n { es[k][i] } else { fs[k - n][i] });
    let g = u.transpose() * &space.j * &u;
    let err = max_abs((&g - canonical_j(n)).as_ref());
    if err > 1e-10 {
        return Err(SymplecticError::DegeneratePairing(format!("basis residual {err:e}")));
    }
    Ok(u)
}

/// Partition `I ∪ I' = {1..g}` (1-based indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSpec {
    pub i: Vec<usize>,
    pub i_prime: Vec<usize>,
}

impl PartitionSpec {
    pub fn new(g: usize, mut i: Vec<usize>, mut i_prime: Vec<usize>) -> Result<Self, SymplecticError> {
        i.sort_unstable();
        i_prime.sort_unstable();
        let mut seen = vec![false; g];
        for &k in i.iter().chain(&i_prime) {
            if k == 0 || k > g {
                return Err(SymplecticError::BadPartition(format!("index {k} outside 1..={g}")));
            }
            if seen[k - 1] {
                return Err(SymplecticError::BadPartition(format!("index {k} listed twice")));
            }
            seen[k - 1] = true;
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(SymplecticError::BadPartition(format!("index {} missing", k + 1)));
        }
        Ok(Self { i, i_prime })
    }

    /// `I` as given, `I'` its complement.
    pub fn from_i(g: usize, i: Vec<usize>) -> Result<Self, SymplecticError> {
        let set: std::collections::BTreeSet<usize> = i.iter().copied().collect();
        if set.len() != i.len() {
            return Err(SymplecticError::BadPartition("repeated index in I".into()));
        }
        let rest = (1..=g).filter(|k| !set.contains(k)).collect();
        Self::new(g, i, rest)
    }

    /// All `2^g` partitions, ordered by the bitmask of `I`.
    pub fn all(g: usize) -> Vec<Self> {
        (0..1usize << g)
            .map(|mask| {
                let i = (1..=g).filter(|k| mask >> (k - 1) & 1 == 1).collect();
                Self::from_i(g, i).expect("complement partition is valid")
            })
            .collect()
    }

    pub fn genus(&self) -> usize {
        self.i.len() + self.i_prime.len()
    }
}

/// `span{κ_i : i ∈ I} ∪ {−κ'_i : i ∈ I'}` where the columns of `basis` are
/// ordered `(κ_1..κ_g, κ'_1..κ'_g)`.
pub fn lagrangian_from_partition(basis: MatRef<'_, f64>, p: &PartitionSpec) -> Result<Subspace, SymplecticError> {
    let g = p.genus();
    if basis.ncols() != 2 * g {
        return Err(SymplecticError::BadPartition(format!(
            "partition of genus {g} for a basis with {} columns",
            basis.ncols()
        )));
    }
    let mut cols: Vec<(usize, f64)> = p.i.iter().map(|&k| (k - 1, 1.0)).collect();
    cols.extend(p.i_prime.iter().map(|&k| (g + k - 1, -1.0)));
    let b = Mat::from_fn(basis.nrows(), cols.len(), |r, c| cols[c].1 * basis[(r, cols[c].0)]);
    Ok(Subspace { basis: b })
}
