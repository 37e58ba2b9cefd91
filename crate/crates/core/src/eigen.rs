//! Symmetric generalized eigensolvers for sparse pencils `A x = λ B x`
//! with `B` positive definite, and for `K x = λ C x` with `K` semidefinite.

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{generalized_symmetric_eigen, LuSolver, SpdSolver};
use crate::sparse::{dot, CsrF};

/// Eigenpairs; vectors are `B`-orthonormal columns.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

/// All eigenpairs of a (small) pencil, ascending.
pub fn dense_pencil(a: &CsrF, b: &CsrF) -> Result<EigenPairs, String> {
    let (values, vectors) = generalized_symmetric_eigen(a.to_dense().as_ref(), b.to_dense().as_ref())?;
    Ok(EigenPairs { values, vectors })
}

/// `‖A x - λ B x‖₂ / (‖A‖∞ ‖x‖₂)`.
pub fn relative_residual(a: &CsrF, b: &CsrF, lambda: f64, x: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let bx = b.mul_vec(x);
    let r: f64 = ax.iter().zip(&bx).map(|(p, q)| (p - lambda * q).powi(2)).sum::<f64>().sqrt();
    let nx = dot(x, x).sqrt();
    r / (a.inf_norm().max(f64::MIN_POSITIVE) * nx.max(f64::MIN_POSITIVE))
}

/// `‖XᵀBX - I‖` entrywise maximum.
pub fn b_gram_error(b: &CsrF, x: &Mat<f64>) -> f64 {
    let bx = b.mul_dense(x.as_ref());
    let g = x.transpose() * bx;
    let mut err = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let want = if i == j { 1.0 } else { 0.0 };
            err = err.max((g[(i, j)] - want).abs());
        }
    }
    err
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// `B`-orthogonalises `w` against `basis` (whose `B`-images are `bbasis`),
/// two passes.
fn b_orthogonalize(w: &mut [f64], basis: &[Vec<f64>], bbasis: &[Vec<f64>]) {
    for _ in 0..2 {
        for (q, bq) in basis.iter().zip(bbasis) {
            let c = dot(bq, w);
            for (x, y) in w.iter_mut().zip(q) {
                *x -= c * y;
            }
        }
    }
}

/// The `nev` eigenpairs closest to `sigma`, by shift-invert Lanczos with
/// full reorthogonalisation and locking of converged pairs. The start
/// vectors are drawn from a ChaCha stream seeded with `seed`.
pub fn shift_invert(a: &CsrF, b: &CsrF, sigma: f64, nev: usize, seed: u64) -> Result<EigenPairs, String> {
    let n = a.nrows();
    if nev > n {
        return Err(format!("asked for {nev} eigenpairs of a pencil of size {n}"));
    }
    if nev == 0 {
        return Ok(EigenPairs { values: vec![], vectors: Mat::zeros(n, 0) });
    }
    let shifted = a.axpby(1.0, b, -sigma);
    let lu = LuSolver::new(&shifted)?;
    let problem = Krylov {
        n,
        dim: n,
        op: &|v: &[f64]| lu.solve(&b.mul_vec(v)),
        inner: &|v: &[f64]| b.mul_vec(v),
        start: &|v: Vec<f64>| v,
        value: &|theta: f64| sigma + 1.0 / theta,
        rayleigh: &|x: &[f64]| dot(x, &a.mul_vec(x)),
        residual: &|lambda: f64, x: &[f64]| relative_residual(a, b, lambda, x),
    };
    let what = format!("A - {sigma}·B");
    locked_lanczos(&problem, sigma, nev, seed, &what)
}

/// Eigenpairs of `K x = λ C x` with the `nev` smallest `|λ|`, restricted to
/// the complement of `ker K`, where `K` is positive semidefinite and `C`
/// symmetric.
///
/// `constraints` are rows `R` whose null space is a complement of `ker K`;
/// each step solves the saddle system `[K Rᵀ; R 0] [x; y] = [C v; 0]` and
/// Lanczos runs on `v ↦ x` in the `K` inner product. The largest `|μ|` of
/// `C x = μ K x` converge first, so no shift is needed.
pub fn compact_inverse(k: &CsrF, c: &CsrF, constraints: &CsrF, nev: usize, seed: u64) -> Result<EigenPairs, String> {
    let n = k.nrows();
    let p = constraints.nrows();
    if nev > n.saturating_sub(p) {
        return Err(format!("asked for {nev} eigenpairs with {} free directions", n.saturating_sub(p)));
    }
    if nev == 0 {
        return Ok(EigenPairs { values: vec![], vectors: Mat::zeros(n, 0) });
    }
    let rt = constraints.transpose();
    let mut trips: Vec<(usize, usize, f64)> = k.triplets().collect();
    trips.extend(rt.triplets().map(|(i, j, v)| (i, n + j, v)));
    trips.extend(constraints.triplets().map(|(i, j, v)| (n + i, j, v)));
    let saddle = CsrF::from_triplets(n + p, n + p, trips);
    let lu = LuSolver::new(&saddle)?;
    let solve = |v: &[f64]| -> Vec<f64> {
        let mut rhs = c.mul_vec(v);
        rhs.resize(n + p, 0.0);
        let mut x = lu.solve(&rhs);
        x.truncate(n);
        x
    };
    let problem = Krylov {
        n,
        dim: n - p,
        op: &solve,
        inner: &|v: &[f64]| k.mul_vec(v),
        start: &|v: Vec<f64>| solve(&v),
        value: &|theta: f64| 1.0 / theta,
        rayleigh: &|x: &[f64]| dot(x, &k.mul_vec(x)) / dot(x, &c.mul_vec(x)),
        residual: &|lambda: f64, x: &[f64]| relative_residual(k, c, lambda, x),
    };
    locked_lanczos(&problem, 0.0, nev, seed, "the constrained curl-curl saddle system")
}

/// A symmetric operator `op` in the inner product `inner`, with the maps
/// from its eigenvalues `θ` back to the pencil.
struct Krylov<'a> {
    n: usize,
    /// Dimension of the subspace the iteration lives in.
    dim: usize,
    op: &'a dyn Fn(&[f64]) -> Vec<f64>,
    inner: &'a dyn Fn(&[f64]) -> Vec<f64>,
    /// Maps a random vector into the subspace the iteration lives in.
    start: &'a dyn Fn(Vec<f64>) -> Vec<f64>,
    value: &'a dyn Fn(f64) -> f64,
    /// Pencil eigenvalue of a normalised Ritz vector.
    rayleigh: &'a dyn Fn(&[f64]) -> f64,
    residual: &'a dyn Fn(f64, &[f64]) -> f64,
}

fn locked_lanczos(pb: &Krylov<'_>, sigma: f64, nev: usize, seed: u64, what: &str) -> Result<EigenPairs, String> {
    let n = pb.n;
    let dim = pb.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut locked: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut locked_x: Vec<Vec<f64>> = Vec::new();
    let mut locked_bx: Vec<Vec<f64>> = Vec::new();
    // A couple of extra pairs guard against missing one copy of a
    // degenerate eigenvalue.
    let target = (nev + 2).min(dim);
    let mut m = (2 * target + 20).max(40).min(dim);
    let mut stalls = 0;
    while locked.len() < target {
        let free = dim - locked.len();
        let steps = m.min(free);
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut bq: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut w_cols: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut v = (pb.start)(random_vector(n, &mut rng));
        b_orthogonalize(&mut v, &locked_x, &locked_bx);
        for _ in 0..steps {
            let bv = (pb.inner)(&v);
            let nv = dot(&v, &bv).sqrt();
            if !(nv > 0.0) {
                break;
            }
            let v_n: Vec<f64> = v.iter().map(|x| x / nv).collect();
            let bv_n: Vec<f64> = bv.iter().map(|x| x / nv).collect();
            let w = (pb.op)(&v_n);
            if w.iter().any(|x| !x.is_finite()) {
                return Err(format!("{what} is numerically singular"));
            }
            q.push(v_n);
            bq.push(bv_n);
            w_cols.push(w.clone());
            let mut next = w;
            b_orthogonalize(&mut next, &locked_x, &locked_bx);
            b_orthogonalize(&mut next, &q, &bq);
            let bn = (pb.inner)(&next);
            let beta = dot(&next, &bn).max(0.0).sqrt();
            let last = w_cols.last().unwrap();
            let scale = dot(last, &(pb.inner)(last)).max(0.0).sqrt();
            if beta <= 1e-12 * scale {
                // Invariant subspace; restart from a fresh direction.
                next = (pb.start)(random_vector(n, &mut rng));
                b_orthogonalize(&mut next, &locked_x, &locked_bx);
                b_orthogonalize(&mut next, &q, &bq);
            }
            v = next;
        }
        let k = q.len();
        // Rayleigh–Ritz in the inner product.
        let t = Mat::from_fn(k, k, |i, j| 0.5 * (dot(&bq[i], &w_cols[j]) + dot(&bq[j], &w_cols[i])));
        let eig = t.self_adjoint_eigen(Side::Lower).map_err(|e| format!("{e:?}"))?;
        let theta = eig.S().column_vector();
        let s = eig.U();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| theta[j].abs().total_cmp(&theta[i].abs()));
        let mut gained = 0;
        for &i in &order {
            if locked.len() >= target || theta[i] == 0.0 {
                break;
            }
            let lambda = (pb.value)(theta[i]);
            let mut x = vec![0.0; n];
            for (j, qj) in q.iter().enumerate() {
                let c = s[(j, i)];
                for (xi, qi) in x.iter_mut().zip(qj) {
                    *xi += c * qi;
                }
            }
            if (pb.residual)(lambda, &x) > 1e-10 {
                // Keep locking in order of distance from σ.
                break;
            }
            b_orthogonalize(&mut x, &locked_x, &locked_bx);
            let bx = (pb.inner)(&x);
            let nx = dot(&x, &bx).sqrt();
            if !(nx > 1e-8) {
                continue;
            }
            x.iter_mut().for_each(|v| *v /= nx);
            let bx: Vec<f64> = bx.iter().map(|v| v / nx).collect();
            let lambda = (pb.rayleigh)(&x);
            locked.push((lambda, x.clone()));
            locked_x.push(x);
            locked_bx.push(bx);
            gained += 1;
        }
        if gained == 0 {
            stalls += 1;
            if m >= free || stalls > 6 {
                return Err(format!("Lanczos converged {} of {} pairs near {sigma}", locked.len(), target));
            }
            m = (2 * m).min(dim);
        }
    }
    locked.sort_by(|x, y| (x.0 - sigma).abs().total_cmp(&(y.0 - sigma).abs()));
    locked.truncate(nev);
    locked.sort_by(|x, y| x.0.total_cmp(&y.0));
    let values = locked.iter().map(|p| p.0).collect();
    let vectors = Mat::from_fn(n, locked.len(), |i, j| locked[j].1[i]);
    Ok(EigenPairs { values, vectors })
}

/// Estimate of the largest `|λ|` of the pencil, by Lanczos on `B⁻¹A`.
pub fn spectral_radius(a: &CsrF, b: &CsrF, steps: usize, seed: u64) -> Result<f64, String> {
    let n = a.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let chol = SpdSolver::new(b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut bq: Vec<Vec<f64>> = Vec::new();
    let mut aq: Vec<Vec<f64>> = Vec::new();
    let mut v = random_vector(n, &mut rng);
    for _ in 0..steps.min(n) {
        let bv = b.mul_vec(&v);
        let nv = dot(&v, &bv).sqrt();
        if !(nv > 0.0) {
            break;
        }
        let v_n: Vec<f64> = v.iter().map(|x| x / nv).collect();
        let bv_n: Vec<f64> = bv.iter().map(|x| x / nv).collect();
        let av = a.mul_vec(&v_n);
        let mut next = chol.solve(&av);
        q.push(v_n);
        bq.push(bv_n);
        aq.push(av);
        b_orthogonalize(&mut next, &q, &bq);
        v = next;
    }
    let k = q.len();
    let t = Mat::from_fn(k, k, |i, j| 0.5 * (dot(&q[i], &aq[j]) + dot(&q[j], &aq[i])));
    let vals = t.self_adjoint_eigenvalues(Side::Lower).map_err(|e| format!("{e:?}"))?;
    Ok(vals.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}
