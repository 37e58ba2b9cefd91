//! Classical curl-curl operators and their relation to the self-adjoint
//! curls.
//!
//! The operator whose domain adds fields outside `H(curl)` to the minimal
//! one is not assembled: those fields have no Whitney representation.

use faer::linalg::solvers::Solve;
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Mat, Par, Side};

use crate::complex::OrientedComplex3;
use crate::eigen::compact_inverse;
use crate::error::SpectralError;
use crate::forms::{mass1, mass2};
use crate::linalg::{generalized_symmetric_eigen, svd_right};
use crate::sparse::CsrF;
use crate::spectral::{
    restricted_operator, solve_spectrum, BoundaryConditionSpec, BoundaryData, RestrictedOperator, SpectrumOptions,
    TraceClass,
};
use crate::symplectic::PartitionSpec;

/// Printed with every mismatch report.
pub const MISMATCH_NOTE: &str = "Illustration only: a numerical gap is not a proof.";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurlCurlBc {
    /// Zero tangential trace: interior edges only.
    Dirichlet,
    /// Free: all edges.
    Neumann,
}

impl CurlCurlBc {
    pub fn as_str(self) -> &'static str {
        match self {
            CurlCurlBc::Dirichlet => "dirichlet",
            CurlCurlBc::Neumann => "neumann",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CurlCurlOperator {
    /// `D1ᵀ M2 D1` restricted to `edges`.
    pub k: CsrF,
    pub m: CsrF,
    pub bc: CurlCurlBc,
    /// Volume edges carrying the unknowns, ascending.
    pub edges: Vec<usize>,
    /// Gradients of a basis of the admissible potentials (one potential per
    /// component dropped for Neumann), over `edges`.
    pub gradients: CsrF,
}

impl CurlCurlOperator {
    pub fn dim(&self) -> usize {
        self.edges.len()
    }
}

pub fn assemble_curlcurl(c: &OrientedComplex3, bc: CurlCurlBc) -> CurlCurlOperator {
    let d1 = c.d1.to_f64();
    // Averaging with the transpose makes K symmetric to the last bit.
    let k_full = d1.transpose().matmul(&mass2(c).matmul(&d1)).sym_part();
    let m_full = mass1(c);
    let d0t = c.d0.to_f64().transpose();
    let (edges, potentials): (Vec<usize>, Vec<usize>) = match bc {
        CurlCurlBc::Dirichlet => (c.interior_edges(), c.interior_vertices()),
        CurlCurlBc::Neumann => {
            let (comp, n_comp) = c.vertex_components();
            let mut seen = vec![false; n_comp];
            let pots = (0..c.n_vertices())
                .filter(|&v| {
                    let first = !seen[comp[v]];
                    seen[comp[v]] = true;
                    !first
                })
                .collect();
            ((0..c.n_edges()).collect(), pots)
        }
    };
    let mut local = vec![usize::MAX; c.n_edges()];
    for (i, &e) in edges.iter().enumerate() {
        local[e] = i;
    }
    let mut trips = Vec::new();
    for (j, &v) in potentials.iter().enumerate() {
        for (e, x) in d0t.row(v) {
            // Interior-vertex gradients never touch boundary edges.
            debug_assert!(local[e] != usize::MAX);
            trips.push((local[e], j, x));
        }
    }
    let gradients = CsrF::from_triplets(edges.len(), potentials.len(), trips);
    let k = k_full.select_rows(&edges).select_cols(&edges);
    let m = m_full.select_rows(&edges).select_cols(&edges);
    CurlCurlOperator { k, m, bc, edges, gradients }
}

#[derive(Debug, Clone)]
pub struct CurlCurlSpectrum {
    /// Smallest nonzero eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Counted on the dense path; the gradient count otherwise.
    pub zero_mode_count: usize,
    pub zero_modes_counted: bool,
    /// Smallest eigenvalue relative to the largest (dense path only).
    pub min_relative: Option<f64>,
}

/// The `k` smallest nonzero eigenvalues of `K x = μ M x`. Above
/// `dense_threshold` unknowns, Lanczos on the compact inverse restricted to
/// fields `M`-orthogonal to the gradients; that path needs the kernel of
/// `K` to consist of gradients.
pub fn curlcurl_spectrum(
    op: &CurlCurlOperator,
    k: usize,
    zero_tol: f64,
    dense_threshold: usize,
    seed: u64,
) -> Result<CurlCurlSpectrum, SpectralError> {
    if op.dim() <= dense_threshold {
        let (vals, _) = generalized_symmetric_eigen(op.k.to_dense().as_ref(), op.m.to_dense().as_ref())
            .map_err(|e| if e.contains("positive definite") { SpectralError::IndefiniteMass } else { SpectralError::SolverFailure(e) })?;
        let top = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let cut = zero_tol * top;
        let zero = vals.iter().filter(|x| x.abs() <= cut).count();
        let values = vals.iter().copied().filter(|x| x.abs() > cut).take(k).collect();
        let min = vals.first().copied().unwrap_or(0.0);
        return Ok(CurlCurlSpectrum {
            values,
            zero_mode_count: zero,
            zero_modes_counted: true,
            min_relative: Some(min / top.max(f64::MIN_POSITIVE)),
        });
    }
    let rows = op.gradients.transpose().matmul(&op.m);
    let ep = compact_inverse(&op.k, &op.m, &rows, k, seed).map_err(SpectralError::SolverFailure)?;
    Ok(CurlCurlSpectrum {
        values: ep.values,
        zero_mode_count: op.gradients.ncols(),
        zero_modes_counted: false,
        min_relative: None,
    })
}

/// Comparison of the squared restricted curl with the squares of its
/// eigenvalues.
#[derive(Debug, Clone)]
pub struct SquareCheck {
    /// Squares of the nonzero eigenvalues of `(C_L, M_L)`, ascending.
    pub lambda_sq: Vec<f64>,
    /// Nonzero eigenvalues of `(C_L M_L⁻¹ C_L, M_L)`, ascending, from the
    /// factored form.
    pub squared: Vec<f64>,
    /// The same eigenvalues from a symmetric eigensolve of the explicitly
    /// formed product.
    pub squared_explicit: Vec<f64>,
    pub zero_lambda: usize,
    pub zero_squared: usize,
    /// Largest relative difference of matched eigenvalues; infinite when
    /// the counts differ.
    pub max_rel_mismatch: f64,
    /// As above for `squared_explicit`. Its absolute error is of order
    /// `ε ‖S‖`, so near-kernel eigenvalues lose relative accuracy.
    pub max_rel_mismatch_explicit: f64,
}

fn matched_mismatch(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x).fold(0.0, f64::max)
}

/// Solves `(C_L, M_L)` and the squared pencil `(C_L M_L⁻¹ C_L, M_L)` (both
/// with the symmetric part of `C_L`), densely.
///
/// With `M_L = L Lᵀ` the squared pencil is `Aᵀ A` for `A = L⁻¹ C_L L⁻ᵀ`,
/// whose eigenvalues are the squared singular values of `A`; that route
/// keeps relative accuracy for small eigenvalues. Eigenvalues with
/// `|λ| ≤ zero_tol · ρ` are zero modes, with the squared cut
/// `(zero_tol · ρ)²`.
pub fn square_check(op: &RestrictedOperator, zero_tol: f64) -> Result<SquareCheck, SpectralError> {
    let c = op.symmetric().to_dense();
    let m = op.m.to_dense();
    let n = c.nrows();
    let fail = |e: String| if e.contains("positive definite") { SpectralError::IndefiniteMass } else { SpectralError::SolverFailure(e) };
    let (lam, _) = generalized_symmetric_eigen(c.as_ref(), m.as_ref()).map_err(fail)?;
    let llt = m.llt(Side::Lower).map_err(|_| SpectralError::IndefiniteMass)?;
    let rho = lam.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let cut = zero_tol * rho;
    let mut lambda_sq: Vec<f64> = lam.iter().filter(|x| x.abs() > cut).map(|x| x * x).collect();
    lambda_sq.sort_by(f64::total_cmp);

    // Explicit product.
    let minv_c = llt.solve(&c);
    let s = c.transpose() * &minv_c;
    let s = Mat::from_fn(n, n, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
    let (nu, _) = generalized_symmetric_eigen(s.as_ref(), m.as_ref()).map_err(fail)?;
    let squared_explicit: Vec<f64> = nu.iter().copied().filter(|x| x.abs() > cut * cut).collect();

    // Factored form.
    let l = llt.L();
    let mut a = c.clone();
    solve_lower_triangular_in_place(l, a.as_mut(), Par::Seq);
    let mut a = a.transpose().to_owned();
    solve_lower_triangular_in_place(l, a.as_mut(), Par::Seq);
    let (sv, _) = svd_right(a.as_ref());
    let mut squared: Vec<f64> = sv.iter().filter(|x| **x > cut).map(|x| x * x).collect();
    squared.sort_by(f64::total_cmp);

    Ok(SquareCheck {
        zero_lambda: lam.len() - lambda_sq.len(),
        zero_squared: n - squared.len(),
        max_rel_mismatch: matched_mismatch(&lambda_sq, &squared),
        max_rel_mismatch_explicit: matched_mismatch(&lambda_sq, &squared_explicit),
        lambda_sq,
        squared,
        squared_explicit,
    })
}

/// Largest distance from a point of one finite set to the other set.
pub fn hausdorff(a: &[f64], b: &[f64]) -> f64 {
    let one = |x: &[f64], y: &[f64]| {
        x.iter().map(|p| y.iter().map(|q| (p - q).abs()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    one(a, b).max(one(b, a))
}

/// One list of eigenvalues followed over the refinement levels.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    /// `values[level][k]`, ascending within a level.
    pub values: Vec<Vec<f64>>,
    /// `|v_finest - v_previous|` per index: the error bar of the finest
    /// value.
    pub error_bars: Vec<f64>,
}

impl Series {
    fn new(name: &str, values: Vec<Vec<f64>>) -> Self {
        let error_bars = match values.len() {
            0 | 1 => vec![f64::INFINITY; values.last().map_or(0, Vec::len)],
            l => values[l - 1]
                .iter()
                .enumerate()
                .map(|(i, v)| values[l - 2].get(i).map_or(f64::INFINITY, |p| (v - p).abs()))
                .collect(),
        };
        Self { name: name.to_string(), values, error_bars }
    }

    pub fn finest(&self) -> &[f64] {
        self.values.last().map_or(&[], Vec::as_slice)
    }
}

/// Finest-level comparison of a curl-curl series with a squared curl series.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub curlcurl: String,
    pub curl: String,
    pub hausdorff: f64,
    /// Lowest curl-curl eigenvalue minus lowest squared curl eigenvalue.
    pub lowest_gap: f64,
    /// Sum of the two error bars of the lowest values.
    pub combined_error_bar: f64,
    pub separated: bool,
}

#[derive(Debug, Clone)]
pub struct MismatchReport {
    pub tets: Vec<usize>,
    pub mesh_sizes: Vec<f64>,
    /// Curl-curl series (`dirichlet`, `neumann`) then squared curl series
    /// (`closed`, `coclosed`).
    pub series: Vec<Series>,
    pub comparisons: Vec<Comparison>,
    /// Relative asymmetry of the restricted curl per trace class at the
    /// finest level.
    pub curl_asymmetry: Vec<(String, f64)>,
    pub note: &'static str,
}

/// Eigenvalues of the curl-curl operators and squared self-adjoint curls on
/// a sequence of refinements of a genus-0 domain. `opts` selects the curl
/// solver; `opts.k` eigenvalues are kept per list.
pub fn dirichlet_mismatch_demo(levels: &[OrientedComplex3], opts: &SpectrumOptions) -> Result<MismatchReport, SpectralError> {
    if levels.is_empty() {
        return Err(SpectralError::Unsupported("no refinement levels".into()));
    }
    let mut cc: [Vec<Vec<f64>>; 2] = Default::default();
    let mut sq: [Vec<Vec<f64>>; 2] = Default::default();
    let mut asym = [0.0; 2];
    for c in levels {
        let bd = BoundaryData::new(c)?;
        if bd.genus() != 0 {
            return Err(SpectralError::Unsupported(format!("boundary genus {}; the demo needs a ball", bd.genus())));
        }
        for (i, bc) in [CurlCurlBc::Dirichlet, CurlCurlBc::Neumann].into_iter().enumerate() {
            let op = assemble_curlcurl(c, bc);
            let sp = curlcurl_spectrum(&op, opts.k, opts.zero_tol, opts.dense_threshold, opts.seed)?;
            cc[i].push(sp.values);
        }
        for (i, trace) in [TraceClass::Closed, TraceClass::Coclosed].into_iter().enumerate() {
            let spec = BoundaryConditionSpec::partition(trace, PartitionSpec::from_i(0, vec![]).expect("genus 0"));
            let op = restricted_operator(c, &bd, &spec, false)?;
            let rep = solve_spectrum(c, &op, opts)?;
            let mut v: Vec<f64> = rep.eigenvalues.iter().map(|x| x * x).collect();
            v.sort_by(f64::total_cmp);
            sq[i].push(v);
            asym[i] = op.asymmetry;
        }
    }
    let [dir, neu] = cc;
    let [clo, coc] = sq;
    let series = vec![
        Series::new("dirichlet", dir),
        Series::new("neumann", neu),
        Series::new("closed", clo),
        Series::new("coclosed", coc),
    ];
    let mut comparisons = Vec::new();
    for a in &series[..2] {
        for b in &series[2..] {
            let (fa, fb) = (a.finest(), b.finest());
            let (gap, bar) = match (fa.first(), fb.first()) {
                (Some(x), Some(y)) => (x - y, a.error_bars[0] + b.error_bars[0]),
                _ => (f64::NAN, f64::INFINITY),
            };
            comparisons.push(Comparison {
                curlcurl: a.name.clone(),
                curl: b.name.clone(),
                hausdorff: hausdorff(fa, fb),
                lowest_gap: gap,
                combined_error_bar: bar,
                separated: gap.abs() > bar,
            });
        }
    }
    Ok(MismatchReport {
        tets: levels.iter().map(|c| c.n_tets()).collect(),
        mesh_sizes: levels.iter().map(|c| c.mesh_size()).collect(),
        series,
        comparisons,
        curl_asymmetry: vec![("closed".into(), asym[0]), ("coclosed".into(), asym[1])],
        note: MISMATCH_NOTE,
    })
}
