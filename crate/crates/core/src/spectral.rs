//! Self-adjoint curl: boundary constraints on volume edge cochains, the
//! restricted operator and its spectrum.

use faer::{Mat, Side};

use crate::complex::OrientedComplex3;
use crate::eigen::{b_gram_error, compact_inverse, dense_pencil, relative_residual, shift_invert, spectral_radius};
use crate::error::{SpectralError, SymplecticError};
use crate::forms::{curl_curl_direct, mass1, weak_curl};
use crate::hodge::{
    harmonic_space, period_matrix, symplectic_harmonic_basis, BoundaryForms, HarmonicSpace, SymplecticHarmonicBasis,
};
use crate::homology::{canonical_dual_pairs, CycleBasis, VolumeCohomology};
use crate::linalg::{max_abs, null_space, null_space_qr};
use crate::sparse::{dot, CsrF};
use crate::symplectic::{
    is_lagrangian, lagrangian_from_partition, symplectic_orthogonal, LagrangianVerdict, PartitionSpec, Subspace,
    SymplecticSpace,
};

/// Smallest positive root of `tan x = x`; the lowest curl eigenvalue of the
/// unit ball with closed traces.
pub const BALL_BELTRAMI: f64 = 4.493409457909064;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceClass {
    /// `d1∂ (T1 u) = 0`.
    Closed,
    /// `d0∂ᵀ M1∂ (T1 u) = 0`.
    Coclosed,
}

impl TraceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceClass::Closed => "closed",
            TraceClass::Coclosed => "coclosed",
        }
    }
}

/// Harmonic part of admissible traces.
#[derive(Debug, Clone)]
pub enum HarmonicSelection {
    Partition(PartitionSpec),
    /// Columns are harmonic boundary 1-cochains.
    Explicit(Mat<f64>),
}

#[derive(Debug, Clone)]
pub struct BoundaryConditionSpec {
    pub trace: TraceClass,
    pub harmonic: HarmonicSelection,
}

impl BoundaryConditionSpec {
    pub fn partition(trace: TraceClass, p: PartitionSpec) -> Self {
        Self { trace, harmonic: HarmonicSelection::Partition(p) }
    }
}

/// Boundary data shared by all boundary conditions on one complex.
pub struct BoundaryData {
    pub forms: BoundaryForms,
    pub harmonic: HarmonicSpace,
    pub cycles: CycleBasis,
    pub basis: SymplecticHarmonicBasis,
}

impl BoundaryData {
    pub fn new(c: &OrientedComplex3) -> Result<Self, SpectralError> {
        let s = &c.boundary;
        let forms = BoundaryForms::new(s)?;
        let harmonic = harmonic_space(s, &forms)?;
        let cycles = canonical_dual_pairs(c, &VolumeCohomology::new(c))?;
        let basis = symplectic_harmonic_basis(&forms, &harmonic, &cycles)?;
        Ok(Self { forms, harmonic, cycles, basis })
    }

    pub fn genus(&self) -> usize {
        self.basis.genus
    }

    /// `(Ch¹, C∂)` in the coordinates of the symplectic harmonic basis.
    pub fn space(&self) -> Result<SymplecticSpace, SymplecticError> {
        SymplecticSpace::new(self.basis.gram.clone())
    }

    /// Coordinates of harmonic cochains in the symplectic harmonic basis.
    /// The basis has identity periods, so coordinates are periods.
    pub fn coordinates(&self, fields: &Mat<f64>) -> Result<Mat<f64>, SymplecticError> {
        let nb = self.forms.n_edges();
        if fields.nrows() != nb {
            return Err(SymplecticError::Shape(format!("cochains have {} rows, boundary has {nb} edges", fields.nrows())));
        }
        let coords = period_matrix(&self.cycles.cycles, fields.as_ref());
        let back = &self.basis.fields * &coords;
        let scale = max_abs(fields.as_ref()).max(f64::MIN_POSITIVE);
        if max_abs((&back - fields).as_ref()) > 1e-8 * scale {
            return Err(SymplecticError::InvalidLagrangian("selection is not harmonic".into()));
        }
        Ok(coords)
    }

    /// The selected harmonic subspace in coordinates.
    pub fn selection(&self, sel: &HarmonicSelection) -> Result<Subspace, SymplecticError> {
        let g = self.genus();
        match sel {
            HarmonicSelection::Partition(p) => {
                if p.genus() != g {
                    return Err(SymplecticError::BadPartition(format!(
                        "partition covers {} handles, surface has genus {g}",
                        p.genus()
                    )));
                }
                lagrangian_from_partition(Mat::<f64>::identity(2 * g, 2 * g).as_ref(), p)
            }
            HarmonicSelection::Explicit(m) => Subspace::new(self.coordinates(m)?),
        }
    }
}

/// Linear constraints on volume edge cochains.
#[derive(Clone, Debug)]
pub struct Constraints {
    pub trace: TraceClass,
    /// Trace rows followed by symplectic rows, over volume edges.
    pub rows: CsrF,
    pub n_trace_rows: usize,
    /// Harmonic coordinates of the `κ` in the symplectic rows `κᵀ C∂ T1`.
    pub symplectic: Mat<f64>,
    pub verdict: LagrangianVerdict,
}

impl Constraints {
    pub fn n_symplectic_rows(&self) -> usize {
        self.symplectic.ncols()
    }

    /// Removes the last symplectic row. Negative control only: the
    /// remaining constraints no longer select a Lagrangian.
    pub fn drop_symplectic_row(&mut self) -> bool {
        let r = self.symplectic.ncols();
        if r == 0 {
            return false;
        }
        self.symplectic = self.symplectic.subcols(0, r - 1).to_owned();
        let keep: Vec<usize> = (0..self.rows.nrows() - 1).collect();
        self.rows = self.rows.select_rows(&keep);
        true
    }
}

fn trace_block(c: &OrientedComplex3, bd: &BoundaryData, trace: TraceClass) -> CsrF {
    let s = &c.boundary;
    match trace {
        TraceClass::Closed => s.d1.to_f64(),
        TraceClass::Coclosed => s.d0.to_f64().transpose().matmul(&bd.forms.m1),
    }
}

/// Constraint rows for a harmonic selection `L`. The symplectic rows are
/// `κᵀ C∂ T1` for `κ` spanning `L^♯` inside the harmonic space, which is
/// `L` itself when `L` is a complete Lagrangian.
fn rows_for(c: &OrientedComplex3, bd: &BoundaryData, trace: TraceClass, l: &Subspace) -> Result<Constraints, SpectralError> {
    let space_verdict = if bd.genus() == 0 {
        LagrangianVerdict::CompleteLagrangian
    } else {
        is_lagrangian(&bd.space()?, l)?
    };
    let sharp = if bd.genus() == 0 {
        Mat::zeros(0, 0)
    } else {
        symplectic_orthogonal(&bd.space()?, l)?.basis
    };
    let block = trace_block(c, bd, trace);
    let n_trace_rows = block.nrows();
    let kappas = &bd.basis.fields * &sharp;
    let t1 = c.t1.to_f64();
    let mut trips: Vec<(usize, usize, f64)> = block.matmul(&t1).triplets().collect();
    for r in 0..kappas.ncols() {
        let kap: Vec<f64> = (0..kappas.nrows()).map(|i| kappas[(i, r)]).collect();
        let row = bd.forms.wedge.tmul_vec(&kap);
        for (e, v) in row.into_iter().enumerate() {
            if v != 0.0 {
                trips.push((n_trace_rows + r, c.bedge_parent[e], v));
            }
        }
    }
    let rows = CsrF::from_triplets(n_trace_rows + kappas.ncols(), c.n_edges(), trips);
    Ok(Constraints { trace, rows, n_trace_rows, symplectic: sharp, verdict: space_verdict })
}

/// Constraint rows for a boundary condition. Explicit selections must be
/// complete Lagrangians.
pub fn constraint_rows(c: &OrientedComplex3, bd: &BoundaryData, spec: &BoundaryConditionSpec) -> Result<Constraints, SpectralError> {
    let l = bd.selection(&spec.harmonic)?;
    let cons = rows_for(c, bd, spec.trace, &l)?;
    if cons.verdict != LagrangianVerdict::CompleteLagrangian {
        return Err(SymplecticError::InvalidLagrangian(format!("verdict {:?}", cons.verdict)).into());
    }
    Ok(cons)
}

/// Columns spanning the admissible volume edge cochains.
#[derive(Clone, Debug)]
pub struct ConstrainedSpace {
    /// `E x n`.
    pub basis: CsrF,
    /// Largest `|rows · basis|` relative to the row and column scales.
    pub residual: f64,
    /// Gradient fields known to lie in the space: a lower bound on the
    /// kernel dimension.
    pub gradients: usize,
}

/// Basis of the constrained space.
///
/// Closed traces: interior edges, gradients of boundary hat functions (one
/// per boundary component dropped) and zero extensions of the admissible
/// harmonic fields. Co-closed traces: interior edges and zero extensions of
/// a dense null-space basis of the boundary constraints.
pub fn constrained_space(c: &OrientedComplex3, bd: &BoundaryData, cons: &Constraints) -> ConstrainedSpace {
    let s = &c.boundary;
    let ne = c.n_edges();
    let mut cols: Vec<Vec<(usize, f64)>> = c.interior_edges().into_iter().map(|e| vec![(e, 1.0)]).collect();
    let n_int_vertices = c.interior_vertices().len();
    let gradients;
    let gram = &bd.basis.gram;
    let boundary_cols: Mat<f64> = match cons.trace {
        TraceClass::Closed => {
            let d0t = c.d0.transpose();
            let mut dropped = vec![false; s.n_components];
            for (bv, &v) in c.bvert_parent.iter().enumerate() {
                let comp = s.vertex_component[bv];
                if !dropped[comp] {
                    dropped[comp] = true;
                    continue;
                }
                cols.push(d0t.row(v).map(|(e, x)| (e, x as f64)).collect());
            }
            // All gradients: interior-vertex gradients are already spanned.
            gradients = c.n_vertices() - 1;
            let g2 = gram.nrows();
            let y = if cons.symplectic.ncols() == 0 {
                Mat::<f64>::identity(g2, g2)
            } else {
                let rows = cons.symplectic.transpose() * gram;
                null_space(rows.as_ref(), 1e-8)
            };
            &bd.basis.fields * &y
        }
        TraceClass::Coclosed => {
            gradients = n_int_vertices + s.n_components - 1;
            let block = trace_block(c, bd, TraceClass::Coclosed).to_dense();
            let kappas = &bd.basis.fields * &cons.symplectic;
            let wk = bd.forms.wedge.transpose().mul_dense(kappas.as_ref());
            let nb = s.n_edges();
            let nr = block.nrows() + wk.ncols();
            let stacked = Mat::from_fn(nr, nb, |i, j| {
                if i < block.nrows() {
                    block[(i, j)]
                } else {
                    wk[(j, i - block.nrows())]
                }
            });
            null_space_qr(stacked.as_ref(), 1e-10)
        }
    };
    for k in 0..boundary_cols.ncols() {
        let mut col: Vec<(usize, f64)> = (0..boundary_cols.nrows())
            .filter(|&i| boundary_cols[(i, k)] != 0.0)
            .map(|i| (c.bedge_parent[i], boundary_cols[(i, k)]))
            .collect();
        col.sort_by_key(|p| p.0);
        cols.push(col);
    }
    let trips = cols.iter().enumerate().flat_map(|(j, col)| col.iter().map(move |&(e, v)| (e, j, v))).collect();
    let basis = CsrF::from_triplets(ne, cols.len(), trips);
    let prod = cons.rows.matmul(&basis);
    let mut residual = 0.0f64;
    let row_scale: Vec<f64> = (0..cons.rows.nrows()).map(|r| cons.rows.row(r).map(|(_, v)| v.abs()).sum::<f64>()).collect();
    let col_scale: Vec<f64> = {
        let bt = basis.transpose();
        (0..basis.ncols()).map(|j| bt.row(j).map(|(_, v)| v.abs()).fold(0.0, f64::max)).collect()
    };
    for (r, j, v) in prod.triplets() {
        let sc = (row_scale[r] * col_scale[j]).max(f64::MIN_POSITIVE);
        residual = residual.max(v.abs() / sc);
    }
    ConstrainedSpace { basis, residual, gradients }
}

/// `C_L = Nᵀ C3 N`, `M_L = Nᵀ M1 N`, `K_L = Nᵀ D1ᵀ M2 D1 N` and the GKN
/// certificate.
#[derive(Clone, Debug)]
pub struct RestrictedOperator {
    pub c: CsrF,
    pub m: CsrF,
    pub k: CsrF,
    /// Rows `(D0 p)ᵀ M1 N` for a basis of the admissible potentials `p`:
    /// `x` is `M1`-orthogonal to the gradients in the space iff these vanish.
    pub gradient_rows: CsrF,
    /// `‖C_L - C_Lᵀ‖∞ / ‖C_L‖∞`.
    pub asymmetry: f64,
    pub space: ConstrainedSpace,
    pub constraints: Constraints,
}

impl RestrictedOperator {
    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    /// Symmetric part of `C_L`.
    pub fn symmetric(&self) -> CsrF {
        self.c.sym_part()
    }
}

/// Row-sum norm of the antisymmetric part relative to the matrix.
pub fn asymmetry(a: &CsrF) -> f64 {
    let diff = a.axpby(1.0, &a.transpose(), -1.0);
    diff.inf_norm() / a.inf_norm().max(f64::MIN_POSITIVE)
}

pub fn restrict(c: &OrientedComplex3, bd: &BoundaryData, constraints: Constraints) -> RestrictedOperator {
    let space = constrained_space(c, bd, &constraints);
    let n = &space.basis;
    let nt = n.transpose();
    let m1 = mass1(c);
    let cl = nt.matmul(&weak_curl(c).matmul(n));
    let m1n = m1.matmul(n);
    let ml = nt.matmul(&m1n);
    let kl = nt.matmul(&curl_curl_direct(c).matmul(n));
    let gradient_rows = admissible_gradients(c, constraints.trace).transpose().matmul(&m1n);
    let asym = asymmetry(&cl);
    RestrictedOperator { c: cl, m: ml, k: kl, gradient_rows, asymmetry: asym, space, constraints }
}

/// Columns `D0 p` for a basis of the potentials whose gradients satisfy the
/// trace constraints: all vertices for closed traces, interior vertices and
/// boundary-component indicators for co-closed ones. One potential per
/// connected component is dropped.
fn admissible_gradients(c: &OrientedComplex3, trace: TraceClass) -> CsrF {
    let s = &c.boundary;
    let (comp, n_comp) = c.vertex_components();
    let mut pots: Vec<Vec<usize>> = match trace {
        TraceClass::Closed => (0..c.n_vertices()).map(|v| vec![v]).collect(),
        TraceClass::Coclosed => {
            let mut p: Vec<Vec<usize>> = c.interior_vertices().into_iter().map(|v| vec![v]).collect();
            let mut by_bcomp = vec![Vec::new(); s.n_components];
            for (bv, &v) in c.bvert_parent.iter().enumerate() {
                by_bcomp[s.vertex_component[bv]].push(v);
            }
            p.extend(by_bcomp);
            p
        }
    };
    let mut seen = vec![false; n_comp];
    pots.retain(|p| {
        let k = comp[p[0]];
        let first = !seen[k];
        seen[k] = true;
        !first
    });
    let d0 = c.d0.to_f64();
    let d0t = d0.transpose();
    let mut trips = Vec::new();
    for (j, p) in pots.iter().enumerate() {
        for &v in p {
            trips.extend(d0t.row(v).map(|(e, x)| (e, j, x)));
        }
    }
    CsrF::from_triplets(c.n_edges(), pots.len(), trips)
}

/// Restricted operator for a boundary condition; `drop_symplectic_row`
/// removes one harmonic constraint (negative control).
pub fn restricted_operator(
    c: &OrientedComplex3,
    bd: &BoundaryData,
    spec: &BoundaryConditionSpec,
    drop_symplectic_row: bool,
) -> Result<RestrictedOperator, SpectralError> {
    let mut cons = constraint_rows(c, bd, spec)?;
    if drop_symplectic_row && !cons.drop_symplectic_row() {
        return Err(SymplecticError::Shape("no symplectic row to drop (genus 0)".into()).into());
    }
    Ok(restrict(c, bd, cons))
}

/// Lagrangian verdict of an arbitrary harmonic selection together with the
/// measured asymmetry of the operator it induces.
pub fn validate_gkn(
    c: &OrientedComplex3,
    bd: &BoundaryData,
    trace: TraceClass,
    selection: &HarmonicSelection,
) -> Result<(LagrangianVerdict, f64), SpectralError> {
    let l = bd.selection(selection)?;
    let cons = rows_for(c, bd, trace, &l)?;
    let verdict = cons.verdict;
    let op = restrict(c, bd, cons);
    Ok((verdict, op.asymmetry))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverMethod {
    Dense,
    ShiftInvert { shift: f64 },
    /// Lanczos on the compact inverse; no shift.
    Lanczos,
}

/// Which discrete eigenproblem is solved on the constrained space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Formulation {
    /// `C_L x = λ M_L x`.
    #[default]
    Galerkin,
    /// `K_L x = λ C_L x` on the `M_L`-orthogonal complement of `ker K_L`.
    /// Free of the spurious modes the Galerkin pencil has on refined
    /// meshes. Eigenvectors of one eigenvalue are `M_L`-orthonormal; across
    /// eigenvalues they are orthogonal in the `K_L` inner product only.
    Inverse,
}

impl Formulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Formulation::Galerkin => "galerkin",
            Formulation::Inverse => "inverse",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumOptions {
    /// Number of nonzero eigenvalues to report.
    pub k: usize,
    /// Eigenvalues with `|λ| ≤ zero_tol · ρ` are kernel modes. For the
    /// inverse formulation the same cut applies to the eigenvalues of `K_L`.
    pub zero_tol: f64,
    /// Largest constrained dimension solved densely.
    pub dense_threshold: usize,
    /// Shift for the iterative Galerkin path; `None` picks `0.8 · 4.4934 / R`
    /// with `R` the volume-equivalent radius.
    pub shift: Option<f64>,
    pub seed: u64,
    pub formulation: Formulation,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { k: 6, zero_tol: 1e-6, dense_threshold: 5000, shift: None, seed: 0, formulation: Formulation::Galerkin }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Nonzero eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// `M_L`-normalised columns in constrained-space coordinates;
    /// `M_L`-orthonormal for the Galerkin pencil.
    pub eigenvectors: Mat<f64>,
    /// Galerkin: `‖C x - λ M x‖ / (‖C‖∞ ‖x‖)`. Inverse:
    /// `‖K x - λ C x‖ / (‖K‖∞ ‖x‖)`.
    pub residuals: Vec<f64>,
    /// `max |XᵀM_LX - I|`.
    pub gram_error: f64,
    /// Counted on the dense paths; on the iterative paths the structural
    /// gradient count (a lower bound).
    pub zero_mode_count: usize,
    pub zero_modes_counted: bool,
    /// Largest `|λ|` of the Galerkin pencil; not computed for the inverse
    /// formulation.
    pub spectral_radius: Option<f64>,
    pub asymmetry: f64,
    pub dimension: usize,
    pub method: SolverMethod,
    pub formulation: Formulation,
}

/// Volume-equivalent radius `(3 V / 4π)^{1/3}`.
pub fn equivalent_radius(c: &OrientedComplex3) -> f64 {
    let v: f64 = (0..c.n_tets()).map(|t| c.volume(t)).sum();
    (3.0 * v / (4.0 * std::f64::consts::PI)).cbrt()
}

pub fn default_shift(c: &OrientedComplex3) -> f64 {
    0.8 * BALL_BELTRAMI / equivalent_radius(c)
}

pub fn solve_spectrum(
    c: &OrientedComplex3,
    op: &RestrictedOperator,
    opts: &SpectrumOptions,
) -> Result<SpectrumReport, SpectralError> {
    match opts.formulation {
        Formulation::Galerkin => solve_galerkin(c, op, opts),
        Formulation::Inverse => solve_inverse(op, opts),
    }
}

fn solve_galerkin(c: &OrientedComplex3, op: &RestrictedOperator, opts: &SpectrumOptions) -> Result<SpectrumReport, SpectralError> {
    let a = op.symmetric();
    let b = &op.m;
    let n = op.dim();
    let residual = |lambda: f64, x: &[f64]| relative_residual(&a, b, lambda, x);
    if n <= opts.dense_threshold {
        let ep = dense_pencil(&a, b).map_err(|e| {
            if e.contains("positive definite") {
                SpectralError::IndefiniteMass
            } else {
                SpectralError::SolverFailure(e)
            }
        })?;
        let rho = ep.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let cut = opts.zero_tol * rho;
        let zero = ep.values.iter().filter(|x| x.abs() <= cut).count();
        let (values, vectors) = smallest_magnitude(&ep.values, &ep.vectors, |x| x.abs() > cut, opts.k);
        let head = Head { zero_mode_count: zero, zero_modes_counted: true, spectral_radius: Some(rho), method: SolverMethod::Dense };
        return Ok(finish(op, opts, values, vectors, head, residual));
    }
    let shift = opts.shift.unwrap_or_else(|| default_shift(c));
    let rho = spectral_radius(&a, b, 80, opts.seed).map_err(SpectralError::SolverFailure)?;
    let cut = opts.zero_tol * rho;
    let up = opts.k.div_ceil(2);
    let down = opts.k / 2;
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::new();
    for (sigma, nev, seed) in [(shift, up, opts.seed), (-shift, down, opts.seed.wrapping_add(1))] {
        let ep = shift_invert(&a, b, sigma, nev, seed).map_err(SpectralError::SolverFailure)?;
        for j in 0..ep.values.len() {
            let x: Vec<f64> = (0..n).map(|i| ep.vectors[(i, j)]).collect();
            if ep.values[j].abs() <= cut {
                continue;
            }
            let bx = b.mul_vec(&x);
            if pairs.iter().any(|(_, y)| dot(y, &bx).abs() > 0.5) {
                continue;
            }
            pairs.push((ep.values[j], x));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let vectors = Mat::from_fn(n, pairs.len(), |i, j| pairs[j].1[i]);
    let values = pairs.into_iter().map(|p| p.0).collect();
    let head = Head {
        zero_mode_count: op.space.gradients,
        zero_modes_counted: false,
        spectral_radius: Some(rho),
        method: SolverMethod::ShiftInvert { shift },
    };
    Ok(finish(op, opts, values, vectors, head, residual))
}

fn solve_inverse(op: &RestrictedOperator, opts: &SpectrumOptions) -> Result<SpectrumReport, SpectralError> {
    let a = op.symmetric();
    let k = &op.k;
    let n = op.dim();
    let residual = |lambda: f64, x: &[f64]| relative_residual(k, &a, lambda, x);
    if n <= opts.dense_threshold {
        // Diagonalise K_L, drop its kernel and solve the reduced problem
        // `W C W s = μ s` with `W = Q κ^{-1/2}`, `λ = 1/μ`.
        let eig = k.to_dense().self_adjoint_eigen(Side::Lower).map_err(|e| SpectralError::SolverFailure(format!("{e:?}")))?;
        let kappa = eig.S().column_vector();
        let kmax = (0..n).fold(0.0f64, |m, i| m.max(kappa[i].abs()));
        let live: Vec<usize> = (0..n).filter(|&i| kappa[i] > opts.zero_tol * kmax).collect();
        let zero = n - live.len();
        let u = eig.U();
        let w = Mat::from_fn(n, live.len(), |r, j| u[(r, live[j])] / kappa[live[j]].sqrt());
        let reduced = w.transpose() * a.mul_dense(w.as_ref());
        let reduced = Mat::from_fn(live.len(), live.len(), |i, j| 0.5 * (reduced[(i, j)] + reduced[(j, i)]));
        let red = reduced.self_adjoint_eigen(Side::Lower).map_err(|e| SpectralError::SolverFailure(format!("{e:?}")))?;
        let mu = red.S().column_vector();
        let mumax = (0..live.len()).fold(0.0f64, |m, i| m.max(mu[i].abs()));
        // μ = 0 is the kernel of C on the complement: λ = ∞.
        let lambdas: Vec<f64> =
            (0..live.len()).map(|i| if mu[i].abs() > 1e-12 * mumax { 1.0 / mu[i] } else { f64::INFINITY }).collect();
        let x = &w * red.U();
        let (values, vectors) = smallest_magnitude(&lambdas, &x, |l| l.is_finite(), opts.k);
        let vectors = m_orthonormalize_clusters(&op.m, &values, vectors);
        let head = Head { zero_mode_count: zero, zero_modes_counted: true, spectral_radius: None, method: SolverMethod::Dense };
        return Ok(finish(op, opts, values, vectors, head, residual));
    }
    let ep = compact_inverse(k, &a, &op.gradient_rows, opts.k, opts.seed).map_err(|e| {
        SpectralError::SolverFailure(format!("{e} (the inverse formulation needs ker K_L to consist of gradients)"))
    })?;
    let vectors = m_orthonormalize_clusters(&op.m, &ep.values, ep.vectors);
    let head = Head {
        zero_mode_count: op.gradient_rows.nrows(),
        zero_modes_counted: false,
        spectral_radius: None,
        method: SolverMethod::Lanczos,
    };
    Ok(finish(op, opts, ep.values, vectors, head, residual))
}

/// The `k` admissible values of smallest magnitude with their columns,
/// ascending by value; ties keep index order.
fn smallest_magnitude(values: &[f64], vectors: &Mat<f64>, admit: impl Fn(f64) -> bool, k: usize) -> (Vec<f64>, Mat<f64>) {
    let mut idx: Vec<usize> = (0..values.len()).filter(|&i| admit(values[i])).collect();
    idx.sort_by(|&i, &j| values[i].abs().total_cmp(&values[j].abs()).then(i.cmp(&j)));
    idx.truncate(k);
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let out = Mat::from_fn(vectors.nrows(), idx.len(), |r, c| vectors[(r, idx[c])]);
    (idx.iter().map(|&i| values[i]).collect(), out)
}

/// `M`-orthonormalises the columns within each cluster of equal values
/// (relative gap `1e-8`); `values` ascend. Columns of different clusters
/// are left alone.
fn m_orthonormalize_clusters(m: &CsrF, values: &[f64], x: Mat<f64>) -> Mat<f64> {
    let n = x.nrows();
    let mut cols: Vec<Vec<f64>> = (0..x.ncols()).map(|j| (0..n).map(|i| x[(i, j)]).collect()).collect();
    let mut start = 0;
    while start < cols.len() {
        let mut end = start + 1;
        while end < cols.len() && (values[end] - values[start]).abs() <= 1e-8 * values[start].abs() {
            end += 1;
        }
        for j in start..end {
            for _ in 0..2 {
                for i in start..j {
                    let mi = m.mul_vec(&cols[i]);
                    let cij = dot(&mi, &cols[j]);
                    let (head, tail) = cols.split_at_mut(j);
                    for (a, b) in tail[0].iter_mut().zip(&head[i]) {
                        *a -= cij * b;
                    }
                }
            }
            let nrm = dot(&cols[j], &m.mul_vec(&cols[j])).sqrt();
            if nrm > 0.0 {
                cols[j].iter_mut().for_each(|v| *v /= nrm);
            }
        }
        start = end;
    }
    Mat::from_fn(n, cols.len(), |i, j| cols[j][i])
}

struct Head {
    zero_mode_count: usize,
    zero_modes_counted: bool,
    spectral_radius: Option<f64>,
    method: SolverMethod,
}

fn finish(
    op: &RestrictedOperator,
    opts: &SpectrumOptions,
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<f64>,
    head: Head,
    residual: impl Fn(f64, &[f64]) -> f64,
) -> SpectrumReport {
    let residuals = (0..eigenvalues.len())
        .map(|j| {
            let x: Vec<f64> = (0..eigenvectors.nrows()).map(|i| eigenvectors[(i, j)]).collect();
            residual(eigenvalues[j], &x)
        })
        .collect();
    let gram_error = b_gram_error(&op.m, &eigenvectors);
    SpectrumReport {
        eigenvalues,
        eigenvectors,
        residuals,
        gram_error,
        zero_mode_count: head.zero_mode_count,
        zero_modes_counted: head.zero_modes_counted,
        spectral_radius: head.spectral_radius,
        asymmetry: op.asymmetry,
        dimension: op.dim(),
        method: head.method,
        formulation: opts.formulation,
    }
}

/// Largest `|λ_k + λ_{-k}| / |λ_k|` after matching the k-th smallest
/// positive eigenvalue with the k-th negative one of smallest magnitude.
pub fn pm_pairing_defect(values: &[f64]) -> f64 {
    let mut pos: Vec<f64> = values.iter().copied().filter(|&x| x > 0.0).collect();
    let mut neg: Vec<f64> = values.iter().copied().filter(|&x| x < 0.0).map(|x| -x).collect();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    pos.iter().zip(&neg).map(|(p, q)| (p - q).abs() / p).fold(0.0, f64::max)
}
