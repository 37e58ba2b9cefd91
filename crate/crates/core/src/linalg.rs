//! Dense and sparse floating-point linear algebra on top of faer.

use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Par, Side};

use crate::sparse::CsrF;

/// Sets the number of threads used by the dense and sparse kernels.
/// `0` or `1` runs sequentially.
pub fn set_threads(n: usize) {
    faer::set_global_parallelism(if n <= 1 { Par::Seq } else { Par::rayon(n) });
}

/// Sparse symmetric positive definite solver.
pub struct SpdSolver {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
    n: usize,
}

impl SpdSolver {
    pub fn new(a: &CsrF) -> Result<Self, String> {
        let m = a.to_faer();
        let llt = m.sp_cholesky(Side::Lower).map_err(|e| format!("{e:?}"))?;
        Ok(Self { llt, n: a.nrows() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(x.as_mut());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    pub fn solve_mat(&self, b: MatRef<'_, f64>) -> Mat<f64> {
        let mut x = b.to_owned();
        self.llt.solve_in_place(x.as_mut());
        x
    }
}

/// Sparse LU solver for general square systems.
pub struct LuSolver {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl LuSolver {
    pub fn new(a: &CsrF) -> Result<Self, String> {
        let m = a.to_faer();
        let lu = m.sp_lu().map_err(|e| format!("{e:?}"))?;
        Ok(Self { lu, n: a.nrows() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

/// Singular values in decreasing order together with right singular vectors.
pub fn svd_right(a: MatRef<'_, f64>) -> (Vec<f64>, Mat<f64>) {
    let svd = a.svd().expect("svd converges");
    let s = svd.S().column_vector();
    let k = a.nrows().min(a.ncols());
    ((0..k).map(|i| s[i]).collect(), svd.V().to_owned())
}

/// Orthonormal basis of the null space of `a`; singular values at or
/// below `rel_tol * σmax` count as zero.
pub fn null_space(a: MatRef<'_, f64>, rel_tol: f64) -> Mat<f64> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return Mat::identity(n, n);
    }
    let (s, v) = svd_right(a);
    let smax = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&x| x > rel_tol * smax && x > 0.0).count();
    v.subcols(rank, n - rank).to_owned()
}

/// Orthonormal basis of the null space of `a` from a column-pivoted QR of
/// `aᵀ`; diagonal entries of `R` at or below `rel_tol * |R00|` count as zero.
pub fn null_space_qr(a: MatRef<'_, f64>, rel_tol: f64) -> Mat<f64> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return Mat::identity(n, n);
    }
    let qr = a.transpose().col_piv_qr();
    let r = qr.R();
    let k = r.nrows().min(r.ncols());
    let r00 = if k > 0 { r[(0, 0)].abs() } else { 0.0 };
    let rank = (0..k).take_while(|&i| r[(i, i)].abs() > rel_tol * r00 && r[(i, i)] != 0.0).count();
    qr.compute_Q().subcols(rank, n - rank).to_owned()
}

/// Numerical rank with a relative singular-value threshold.
pub fn rank(a: MatRef<'_, f64>, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let (s, _) = svd_right(a);
    let smax = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > rel_tol * smax && x > 0.0).count()
}

/// Orthonormal basis of the column space.
pub fn orth(a: MatRef<'_, f64>, rel_tol: f64) -> Mat<f64> {
    if a.ncols() == 0 {
        return Mat::zeros(a.nrows(), 0);
    }
    let svd = a.thin_svd().expect("svd converges");
    let s = svd.S().column_vector();
    let k = a.nrows().min(a.ncols());
    let smax = if k > 0 { s[0] } else { 0.0 };
    let r = (0..k).filter(|&i| s[i] > rel_tol * smax && s[i] > 0.0).count();
    svd.U().subcols(0, r).to_owned()
}

/// Largest principal angle between the column spans of `a` and `b`, in
/// radians. Spans of different dimension give `π/2`.
pub fn max_principal_angle(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    let qa = orth(a, 1e-12);
    let qb = orth(b, 1e-12);
    if qa.ncols() != qb.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if qa.ncols() == 0 {
        return 0.0;
    }
    // sin θmax = ‖(I - Qb Qbᵀ) Qa‖₂, accurate for small angles where the
    // cosine form loses half the digits.
    let resid = &qa - &qb * (qb.transpose() * &qa);
    let (s, _) = svd_right(resid.as_ref());
    s.first().copied().unwrap_or(0.0).clamp(0.0, 1.0).asin()
}

/// Largest absolute entry.
pub fn max_abs(a: MatRef<'_, f64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

/// Maximum absolute row sum.
pub fn inf_norm(a: MatRef<'_, f64>) -> f64 {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Symmetric generalized eigenproblem `A x = λ B x` with `B` positive
/// definite. Eigenvalues ascend; eigenvectors are `B`-orthonormal columns.
pub fn generalized_symmetric_eigen(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>), String> {
    let n = a.nrows();
    let llt = b.llt(Side::Lower).map_err(|_| "mass matrix is not positive definite".to_string())?;
    let l = llt.L();
    // C = L⁻¹ A L⁻ᵀ
    let mut c = a.to_owned();
    solve_lower_triangular_in_place(l, c.as_mut(), Par::Seq);
    let mut ct = c.transpose().to_owned();
    solve_lower_triangular_in_place(l, ct.as_mut(), Par::Seq);
    // Symmetrize against roundoff.
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (ct[(i, j)] + ct[(j, i)]));
    let eig = c.self_adjoint_eigen(Side::Lower).map_err(|e| format!("{e:?}"))?;
    let s = eig.S().column_vector();
    let vals: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let mut x = eig.U().to_owned();
    solve_upper_triangular_in_place(l.transpose(), x.as_mut(), Par::Seq);
    Ok((vals, x))
}

/// `aᵀ b` for dense column blocks.
pub fn gram(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    a.transpose() * b
}

/// Column `j` of a dense matrix as a vector.
pub fn col(a: MatRef<'_, f64>, j: usize) -> Vec<f64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

/// Dense matrix from column vectors.
pub fn from_cols(nrows: usize, cols: &[Vec<f64>]) -> Mat<f64> {
    Mat::from_fn(nrows, cols.len(), |i, j| cols[j][i])
}
