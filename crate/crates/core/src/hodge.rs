//! Discrete Hodge theory on the boundary surface: harmonic fields, the
//! Hodge splitting of boundary 1-cochains, and the harmonic basis dual to
//! the canonical cycles.

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::complex::SurfaceComplex;
use crate::error::HodgeError;
use crate::forms::{surface_mass0, surface_mass1, surface_mass2, wedge_pairing};
use crate::homology::{tree_cotree, CycleBasis};
use crate::linalg::{col, SpdSolver};
use crate::sparse::{dot, CsrF};

/// Metric and pairing matrices of the boundary surface.
pub struct BoundaryForms {
    pub m0: CsrF,
    pub m1: CsrF,
    pub m2: CsrF,
    /// Skew wedge pairing `C∂`.
    pub wedge: CsrF,
    d0: CsrF,
    d1: CsrF,
    lap0: PinnedLaplacian,
    lap2: PinnedLaplacian,
    m1_solver: SpdSolver,
    /// `M0` row sums: integrals of the nodal hat functions.
    vertex_weights: Vec<f64>,
}

/// Graph-type Laplacian made definite by pinning one unknown per component.
struct PinnedLaplacian {
    keep: Vec<usize>,
    solver: SpdSolver,
    n: usize,
}

impl PinnedLaplacian {
    fn new(a: &CsrF, component: &[usize], n_components: usize) -> Result<Self, HodgeError> {
        let n = a.nrows();
        let mut pinned = vec![false; n_components];
        let mut keep = Vec::with_capacity(n);
        for i in 0..n {
            if pinned[component[i]] {
                keep.push(i);
            } else {
                pinned[component[i]] = true;
            }
        }
        let sub = a.select_rows(&keep).select_cols(&keep);
        let solver = SpdSolver::new(&sub).map_err(HodgeError::Solver)?;
        Ok(Self { keep, solver, n })
    }

    /// A solution of `A x = b` with the pinned unknowns set to zero.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let bk: Vec<f64> = self.keep.iter().map(|&i| b[i]).collect();
        let xk = self.solver.solve(&bk);
        let mut x = vec![0.0; self.n];
        for (&i, v) in self.keep.iter().zip(xk) {
            x[i] = v;
        }
        x
    }
}

impl BoundaryForms {
    pub fn new(s: &SurfaceComplex) -> Result<Self, HodgeError> {
        let m0 = surface_mass0(s);
        let m1 = surface_mass1(s);
        let m2 = surface_mass2(s);
        let wedge = wedge_pairing(s);
        let d0 = s.d0.to_f64();
        let d1 = s.d1.to_f64();
        let l0 = d0.transpose().matmul(&m1).matmul(&d0);
        let lap0 = PinnedLaplacian::new(&l0, &s.vertex_component, s.n_components)?;
        let l2 = d1.matmul(&d1.transpose());
        let tri_comp: Vec<usize> = (0..s.n_triangles()).map(|t| s.triangle_component(t)).collect();
        let lap2 = PinnedLaplacian::new(&l2, &tri_comp, s.n_components)?;
        let m1_solver = SpdSolver::new(&m1).map_err(HodgeError::Solver)?;
        let vertex_weights = (0..s.n_vertices()).map(|v| m0.row(v).map(|(_, x)| x).sum()).collect();
        Ok(Self {
            m0,
            m1,
            m2,
            wedge,
            d0,
            d1,
            lap0,
            lap2,
            m1_solver,
            vertex_weights,
        })
    }

    pub fn n_edges(&self) -> usize {
        self.m1.nrows()
    }

    /// `uᵀ C∂ v`.
    pub fn pairing(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(u, &self.wedge.mul_vec(v))
    }

    /// `uᵀ M1 v`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(u, &self.m1.mul_vec(v))
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    /// Pairing of `M1`-normalised copies of `u` and `v`.
    pub fn normalized_pairing(&self, u: &[f64], v: &[f64]) -> f64 {
        let (nu, nv) = (self.norm(u), self.norm(v));
        if nu == 0.0 || nv == 0.0 {
            return 0.0;
        }
        self.pairing(u, v) / (nu * nv)
    }

    /// Applies `M1⁻¹`.
    pub fn m1_solve(&self, b: &[f64]) -> Vec<f64> {
        self.m1_solver.solve(b)
    }

    /// Galerkin quarter rotation `⋆h = -M1⁻¹ C∂`, characterised by
    /// `(⋆u, v)_M1 = [u, v]`.
    pub fn rotate(&self, u: &[f64]) -> Vec<f64> {
        let cu = self.wedge.tmul_vec(u);
        self.m1_solve(&cu)
    }

    /// `d0` on the boundary.
    pub fn grad(&self, p: &[f64]) -> Vec<f64> {
        self.d0.mul_vec(p)
    }

    /// `d1` on the boundary.
    pub fn curl(&self, u: &[f64]) -> Vec<f64> {
        self.d1.mul_vec(u)
    }

    /// `d0ᵀ M1 u`, the weak divergence.
    pub fn codiff(&self, u: &[f64]) -> Vec<f64> {
        self.d0.tmul_vec(&self.m1.mul_vec(u))
    }
}

/// `M1`-orthonormal basis of discrete harmonic 1-cochains.
#[derive(Clone, Debug)]
pub struct HarmonicSpace {
    /// `Eb x 2g`.
    pub basis: Mat<f64>,
}

impl HarmonicSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `M1`-orthogonal projection onto the harmonic space.
    pub fn project(&self, forms: &BoundaryForms, u: &[f64]) -> Vec<f64> {
        let mu = forms.m1.mul_vec(u);
        let mut out = vec![0.0; u.len()];
        for k in 0..self.dim() {
            let hk = col(self.basis.as_ref(), k);
            let c = dot(&hk, &mu);
            for (o, h) in out.iter_mut().zip(&hk) {
                *o += c * h;
            }
        }
        out
    }
}

fn orthonormalize_m1(forms: &BoundaryForms, cols: Vec<Vec<f64>>) -> Result<Mat<f64>, HodgeError> {
    let n = forms.n_edges();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    let scale = cols.iter().map(|c| forms.norm(c)).fold(0.0, f64::max);
    for mut v in cols {
        // Two passes of modified Gram–Schmidt.
        for _ in 0..2 {
            for q in &out {
                let c = forms.inner(q, &v);
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        let nv = forms.norm(&v);
        if nv <= 1e-10 * scale {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        out.push(v);
    }
    Ok(Mat::from_fn(n, out.len(), |i, j| out[j][i]))
}

/// Harmonic 1-cochains: closed and co-closed, `d1 h = 0`, `d0ᵀ M1 h = 0`.
///
/// Each tree–cotree cocycle is made co-closed by subtracting its
/// `M1`-projection onto gradients; the results are orthonormalised.
pub fn harmonic_space(s: &SurfaceComplex, forms: &BoundaryForms) -> Result<HarmonicSpace, HodgeError> {
    let expected = crate::homology::betti(s).b1;
    let tc = tree_cotree(s);
    let mut cols = Vec::with_capacity(tc.cocycles.len());
    for z in &tc.cocycles {
        let z: Vec<f64> = z.iter().map(|&x| x as f64).collect();
        let p = forms.lap0.solve(&forms.codiff(&z));
        let dp = forms.grad(&p);
        cols.push(z.iter().zip(&dp).map(|(a, b)| a - b).collect());
    }
    let basis = orthonormalize_m1(forms, cols)?;
    if basis.ncols() != expected {
        return Err(HodgeError::DimensionMismatch {
            got: basis.ncols(),
            expected,
        });
    }
    Ok(HarmonicSpace { basis })
}

/// Largest residual of the harmonic conditions, relative to the size of
/// the operators applied.
pub fn harmonic_residual(forms: &BoundaryForms, h: &HarmonicSpace) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..h.dim() {
        let v = col(h.basis.as_ref(), k);
        let vmax = crate::sparse::max_abs(&v);
        let curl = crate::sparse::max_abs(&forms.curl(&v)) / vmax;
        let div = crate::sparse::max_abs(&forms.codiff(&v)) / (forms.m1.inf_norm() * vmax);
        worst = worst.max(curl).max(div);
    }
    worst
}

/// Hodge splitting `ω = d α + M1⁻¹ d1ᵀ M2 β + h`.
#[derive(Clone, Debug)]
pub struct HodgeSplit {
    /// Boundary 0-cochain, zero mean on each component.
    pub alpha: Vec<f64>,
    /// Boundary 2-cochain, zero total on each component.
    pub beta: Vec<f64>,
    pub exact: Vec<f64>,
    pub coexact: Vec<f64>,
    pub harmonic: Vec<f64>,
}

impl HodgeSplit {
    /// `‖ω - (exact + coexact + harmonic)‖∞ / ‖ω‖∞`.
    pub fn reconstruction_error(&self, omega: &[f64]) -> f64 {
        let scale = crate::sparse::max_abs(omega).max(f64::MIN_POSITIVE);
        omega
            .iter()
            .enumerate()
            .map(|(i, &w)| (w - self.exact[i] - self.coexact[i] - self.harmonic[i]).abs())
            .fold(0.0, f64::max)
            / scale
    }
}

pub fn hodge_decompose(
    s: &SurfaceComplex,
    forms: &BoundaryForms,
    harm: &HarmonicSpace,
    omega: &[f64],
) -> Result<HodgeSplit, HodgeError> {
    if omega.len() != s.n_edges() {
        return Err(HodgeError::SizeMismatch {
            got: omega.len(),
            expected: s.n_edges(),
        });
    }
    // Exact part: d0ᵀ M1 d0 α = d0ᵀ M1 ω.
    let mut alpha = forms.lap0.solve(&forms.codiff(omega));
    let mut wsum = vec![0.0; s.n_components];
    let mut asum = vec![0.0; s.n_components];
    for v in 0..s.n_vertices() {
        let c = s.vertex_component[v];
        wsum[c] += forms.vertex_weights[v];
        asum[c] += forms.vertex_weights[v] * alpha[v];
    }
    for v in 0..s.n_vertices() {
        let c = s.vertex_component[v];
        alpha[v] -= asum[c] / wsum[c];
    }
    let exact = forms.grad(&alpha);
    let harmonic = harm.project(forms, omega);

    // The remainder is M1-orthogonal to all closed cochains, hence of the
    // form M1⁻¹ d1ᵀ γ; recover γ by least squares and β = M2⁻¹ γ.
    let rest: Vec<f64> = (0..omega.len()).map(|i| omega[i] - exact[i] - harmonic[i]).collect();
    let rhs = forms.d1.mul_vec(&forms.m1.mul_vec(&rest));
    let gamma = forms.lap2.solve(&rhs);
    let mut beta: Vec<f64> = (0..s.n_triangles()).map(|t| gamma[t] * s.area(t)).collect();
    let mut bsum = vec![0.0; s.n_components];
    let mut area = vec![0.0; s.n_components];
    for t in 0..s.n_triangles() {
        let c = s.triangle_component(t);
        bsum[c] += beta[t];
        area[c] += s.area(t);
    }
    for t in 0..s.n_triangles() {
        let c = s.triangle_component(t);
        beta[t] -= bsum[c] * s.area(t) / area[c];
    }
    let coexact = forms.m1_solve(&forms.d1.tmul_vec(&forms.m2.mul_vec(&beta)));
    Ok(HodgeSplit {
        alpha,
        beta,
        exact,
        coexact,
        harmonic,
    })
}

/// Harmonic fields `κ_1..κ_g, κ'_1..κ'_g` whose periods over the canonical
/// cycles `∂S_1..∂S_g, ∂S'_1..∂S'_g` form the identity matrix.
#[derive(Clone, Debug)]
pub struct SymplecticHarmonicBasis {
    /// `Eb x 2g`, columns `κ_1..κ_g, κ'_1..κ'_g`.
    pub fields: Mat<f64>,
    /// Periods: row = cycle, column = field.
    pub periods: Mat<f64>,
    /// `fieldsᵀ C∂ fields`.
    pub gram: Mat<f64>,
    pub genus: usize,
}

impl SymplecticHarmonicBasis {
    /// Field `k` (0-based over all `2g`).
    pub fn field(&self, k: usize) -> Vec<f64> {
        col(self.fields.as_ref(), k)
    }
}

/// Periods of the columns of `fields` over `cycles`.
pub fn period_matrix(cycles: &[Vec<i64>], fields: faer::MatRef<'_, f64>) -> Mat<f64> {
    Mat::from_fn(cycles.len(), fields.ncols(), |c, k| {
        cycles[c]
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0)
            .map(|(e, &x)| x as f64 * fields[(e, k)])
            .sum()
    })
}

pub fn symplectic_harmonic_basis(
    forms: &BoundaryForms,
    harm: &HarmonicSpace,
    cycles: &CycleBasis,
) -> Result<SymplecticHarmonicBasis, HodgeError> {
    let n = harm.dim();
    if cycles.cycles.len() != n {
        return Err(HodgeError::DimensionMismatch {
            got: cycles.cycles.len(),
            expected: n,
        });
    }
    let p = period_matrix(&cycles.cycles, harm.basis.as_ref());
    if n > 0 {
        let (s, _) = crate::linalg::svd_right(p.as_ref());
        let smin = *s.last().unwrap();
        if smin <= 1e-12 * s[0] {
            return Err(HodgeError::SingularPeriods(smin));
        }
    }
    let x = if n > 0 {
        p.partial_piv_lu().solve(Mat::<f64>::identity(n, n))
    } else {
        Mat::zeros(0, 0)
    };
    let fields = &harm.basis * &x;
    let periods = period_matrix(&cycles.cycles, fields.as_ref());
    let wk = forms.wedge.mul_dense(fields.as_ref());
    let gram = fields.transpose() * &wk;
    Ok(SymplecticHarmonicBasis {
        fields,
        periods,
        gram,
        genus: cycles.genus,
    })
}

/// Relative harmonic defect of the rotated harmonic fields:
/// `max_k ‖⋆h_k - P_H ⋆h_k‖_M1 / ‖⋆h_k‖_M1`.
pub fn rotation_defect(forms: &BoundaryForms, harm: &HarmonicSpace) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..harm.dim() {
        let h = col(harm.basis.as_ref(), k);
        let r = forms.rotate(&h);
        let p = harm.project(forms, &r);
        let d: Vec<f64> = r.iter().zip(&p).map(|(a, b)| a - b).collect();
        worst = worst.max(forms.norm(&d) / forms.norm(&r));
    }
    worst
}
