//! Homology of the boundary surface: Betti numbers, tree–cotree cycle
//! bases, intersection numbers and symplectically dual cycle pairs.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::complex::{OrientedComplex3, SurfaceComplex};
use crate::error::HomologyError;
use crate::exact::{integer_column_echelon, sparse_row, RowReducer};
use crate::sparse::CsrI;

/// Betti numbers of a closed oriented surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Betti {
    pub b0: usize,
    pub b1: usize,
    pub b2: usize,
}

impl Betti {
    /// Total genus, summed over components.
    pub fn genus(&self) -> usize {
        self.b1 / 2
    }
}

/// Betti numbers of a surface.
///
/// Surfaces are closed and consistently oriented by construction, so
/// `b0 = b2` is the number of components and `b1` follows from the Euler
/// characteristic; both are exact.
pub fn betti(s: &SurfaceComplex) -> Betti {
    let c = s.n_components;
    let chi = s.n_vertices() as i64 - s.n_edges() as i64 + s.n_triangles() as i64;
    Betti {
        b0: c,
        b1: (2 * c as i64 - chi) as usize,
        b2: c,
    }
}

/// Cycle and cocycle generators from a tree–cotree decomposition.
#[derive(Clone, Debug)]
pub struct TreeCotree {
    /// `2g` edge cycles generating `H1`.
    pub cycles: Vec<Vec<i64>>,
    /// Closed edge cochains with `⟨cocycles[k], cycles[j]⟩ = δkj`,
    /// vanishing on the primal tree.
    pub cocycles: Vec<Vec<i64>>,
    /// Generator edges, one per cycle.
    pub generators: Vec<usize>,
}

/// Tree–cotree decomposition, deterministic in the vertex and edge order.
pub fn tree_cotree(s: &SurfaceComplex) -> TreeCotree {
    let nv = s.n_vertices();
    let ne = s.n_edges();
    let nt = s.n_triangles();
    let adj = s.d0.transpose(); // V x E

    // Primal BFS spanning forest.
    let mut parent_edge = vec![usize::MAX; nv];
    let mut depth = vec![0usize; nv];
    let mut seen = vec![false; nv];
    let mut in_tree = vec![false; ne];
    for root in 0..nv {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut q = VecDeque::from([root]);
        while let Some(v) = q.pop_front() {
            for (e, _) in adj.row(v) {
                let [a, b] = s.edges[e];
                let w = if a == v { b } else { a };
                if !seen[w] {
                    seen[w] = true;
                    in_tree[e] = true;
                    parent_edge[w] = e;
                    depth[w] = depth[v] + 1;
                    q.push_back(w);
                }
            }
        }
    }

    // Dual BFS spanning forest through non-tree edges.
    let edge_tris = s.d1.transpose(); // E x F
    let mut in_cotree = vec![false; ne];
    let mut tseen = vec![false; nt];
    for root in 0..nt {
        if tseen[root] {
            continue;
        }
        tseen[root] = true;
        let mut q = VecDeque::from([root]);
        while let Some(t) = q.pop_front() {
            for e in s.tri_edges[t] {
                if in_tree[e] {
                    continue;
                }
                for (u, _) in edge_tris.row(e) {
                    if !tseen[u] {
                        tseen[u] = true;
                        in_cotree[e] = true;
                        q.push_back(u);
                    }
                }
            }
        }
    }

    let generators: Vec<usize> = (0..ne).filter(|&e| !in_tree[e] && !in_cotree[e]).collect();

    // Cycle of a generator: the edge plus the tree path closing it.
    let path_to_root = |mut v: usize, chain: &mut [i64], sign: i64| {
        while parent_edge[v] != usize::MAX {
            let e = parent_edge[v];
            let [a, b] = s.edges[e];
            // Walking from v towards its parent.
            let (from, to) = if b == v { (b, a) } else { (a, b) };
            chain[e] += sign * if from < to { 1 } else { -1 };
            v = to;
        }
    };
    let cycles: Vec<Vec<i64>> = generators
        .iter()
        .map(|&g| {
            let [a, b] = s.edges[g];
            let mut chain = vec![0i64; ne];
            chain[g] = 1;
            // a -> b along g, then b -> root, then root -> a.
            path_to_root(b, &mut chain, 1);
            path_to_root(a, &mut chain, -1);
            chain
        })
        .collect();

    let mut fixed = vec![None; ne];
    for e in 0..ne {
        if in_tree[e] {
            fixed[e] = Some(Vec::new());
        }
    }
    for (k, &g) in generators.iter().enumerate() {
        fixed[g] = Some(vec![(k, 1i128)]);
    }
    let prop = propagate_closed(&s.d1, fixed, generators.len());
    debug_assert_eq!(prop.n_params, generators.len());
    let cocycles: Vec<Vec<i64>> = (0..generators.len())
        .map(|k| {
            prop.values
                .iter()
                .map(|v| {
                    v.iter()
                        .find(|(p, _)| *p == k)
                        .map_or(0, |&(_, x)| x as i64)
                })
                .collect()
        })
        .collect();

    TreeCotree {
        cycles,
        cocycles,
        generators,
    }
}

/// Generators of `H1` of the surface, `2g` edge cycles.
pub fn fundamental_cycles(s: &SurfaceComplex) -> Vec<Vec<i64>> {
    tree_cotree(s).cycles
}

/// Sparse linear combination of parameters with integer coefficients.
type Combo = Vec<(usize, i128)>;

fn combo_axpy(acc: &mut Combo, a: i128, x: &Combo) {
    for &(p, v) in x {
        match acc.binary_search_by_key(&p, |&(q, _)| q) {
            Ok(i) => {
                acc[i].1 += a * v;
                if acc[i].1 == 0 {
                    acc.remove(i);
                }
            }
            Err(i) => acc.insert(i, (p, a * v)),
        }
    }
}

/// Result of solving `rows · z = 0` by peeling.
struct Propagation {
    /// Value of each column as a combination of parameters.
    values: Vec<Combo>,
    /// Constraint rows not used to determine a column, evaluated on the
    /// parameters; their common kernel is the true solution space.
    relations: Vec<Combo>,
    n_params: usize,
}

/// Solves the homogeneous system `rows · z = 0` (entries ±1) given fixed
/// columns, introducing a new free parameter whenever no row has exactly
/// one undetermined column.
fn propagate_closed(rows: &CsrI, mut fixed: Vec<Option<Combo>>, n_params0: usize) -> Propagation {
    let ncols = rows.ncols();
    let cols = rows.transpose();
    let mut unknown: Vec<usize> = (0..rows.nrows())
        .map(|r| rows.row(r).filter(|&(c, _)| fixed[c].is_none()).count())
        .collect();
    let mut used = vec![false; rows.nrows()];
    let mut n_params = n_params0;
    let mut queue: VecDeque<usize> = (0..rows.nrows()).filter(|&r| unknown[r] == 1).collect();
    let mut remaining = fixed.iter().filter(|f| f.is_none()).count();

    let settle = |c: usize, fixed: &mut Vec<Option<Combo>>, unknown: &mut Vec<usize>, queue: &mut VecDeque<usize>, val: Combo| {
        fixed[c] = Some(val);
        for (r, _) in cols.row(c) {
            unknown[r] -= 1;
            if unknown[r] == 1 {
                queue.push_back(r);
            }
        }
    };

    while remaining > 0 {
        while let Some(r) = queue.pop_front() {
            if used[r] || unknown[r] != 1 {
                continue;
            }
            let (c, coef) = rows.row(r).find(|&(c, _)| fixed[c].is_none()).unwrap();
            let mut acc: Combo = Vec::new();
            for (c2, v) in rows.row(r) {
                if c2 != c {
                    combo_axpy(&mut acc, v as i128, fixed[c2].as_ref().unwrap());
                }
            }
            // coef * z_c + acc = 0 with coef = ±1.
            let val: Combo = acc.into_iter().map(|(p, x)| (p, -x * coef as i128)).collect();
            used[r] = true;
            settle(c, &mut fixed, &mut unknown, &mut queue, val);
            remaining -= 1;
        }
        if remaining == 0 {
            break;
        }
        // Stuck: free the smallest undetermined column of a row with the
        // fewest undetermined columns.
        let r = (0..rows.nrows())
            .filter(|&r| unknown[r] > 1)
            .min_by_key(|&r| (unknown[r], r));
        let c = match r {
            Some(r) => rows.row(r).find(|&(c, _)| fixed[c].is_none()).unwrap().0,
            None => (0..ncols).find(|&c| fixed[c].is_none()).unwrap(),
        };
        settle(c, &mut fixed, &mut unknown, &mut queue, vec![(n_params, 1)]);
        n_params += 1;
        remaining -= 1;
    }

    let values: Vec<Combo> = fixed.into_iter().map(|f| f.unwrap()).collect();
    let mut relations = Vec::new();
    for r in 0..rows.nrows() {
        if used[r] {
            continue;
        }
        let mut acc: Combo = Vec::new();
        for (c, v) in rows.row(r) {
            combo_axpy(&mut acc, v as i128, &values[c]);
        }
        if !acc.is_empty() {
            relations.push(acc);
        }
    }
    Propagation {
        values,
        relations,
        n_params,
    }
}

/// Closed 1-cochains of the volume modulo exact ones, parametrised so that
/// the pairing with any edge cycle can be evaluated exactly.
#[derive(Clone, Debug)]
pub struct VolumeCohomology {
    values: Vec<Combo>,
    relations: RowReducer,
    n_params: usize,
}

impl VolumeCohomology {
    pub fn new(c: &OrientedComplex3) -> Self {
        let nv = c.n_vertices();
        let adj = c.d0.transpose();
        let mut fixed: Vec<Option<Combo>> = vec![None; c.n_edges()];
        let mut seen = vec![false; nv];
        for root in 0..nv {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut q = VecDeque::from([root]);
            while let Some(v) = q.pop_front() {
                for (e, _) in adj.row(v) {
                    let [a, b] = c.edges[e];
                    let w = if a == v { b } else { a };
                    if !seen[w] {
                        seen[w] = true;
                        fixed[e] = Some(Vec::new());
                        q.push_back(w);
                    }
                }
            }
        }
        let prop = propagate_closed(&c.d1, fixed, 0);
        let mut relations = RowReducer::new();
        for rel in &prop.relations {
            relations.insert(&sparse_row(rel.iter().copied()));
        }
        Self {
            values: prop.values,
            relations,
            n_params: prop.n_params,
        }
    }

    /// First Betti number of the volume.
    pub fn b1(&self) -> usize {
        self.n_params - self.relations.rank()
    }

    /// Obstruction of a volume edge cycle to bounding; zero iff it bounds.
    pub fn obstruction(&self, cycle: &[i64]) -> std::collections::BTreeMap<usize, BigRational> {
        let mut acc: Combo = Vec::new();
        for (e, &x) in cycle.iter().enumerate() {
            if x != 0 {
                combo_axpy(&mut acc, x as i128, &self.values[e]);
            }
        }
        self.relations.reduce(&sparse_row(acc))
    }

    pub fn bounds(&self, cycle: &[i64]) -> bool {
        self.obstruction(cycle).is_empty()
    }
}

/// Algebraic intersection number of two surface edge cycles.
///
/// `c1` is pushed off to its right into the corners of the triangles it
/// passes (a curve in the barycentric subdivision), which makes it
/// transverse to `c2`. Positive when `(c1, c2)` is a positively oriented
/// frame with respect to the surface orientation.
pub fn intersection_number(s: &SurfaceComplex, c1: &[i64], c2: &[i64]) -> Result<i64, HomologyError> {
    for c in [c1, c2] {
        if c.len() != s.n_edges() {
            return Err(HomologyError::ChainLength {
                got: c.len(),
                expected: s.n_edges(),
            });
        }
        if s.chain_boundary(c).iter().any(|&x| x != 0) {
            return Err(HomologyError::OpenChain);
        }
    }
    let phi = crossing_cochain(s, &s.vertex_stars(), c1);
    Ok(c2.iter().zip(&phi).map(|(a, b)| a * b).sum())
}

/// Closed cochain counting signed crossings of the pushed-off cycle.
fn crossing_cochain(s: &SurfaceComplex, stars: &[Vec<(usize, usize)>], c: &[i64]) -> Vec<i64> {
    // cnt[v][k]: signed number of strands of c crossing edge star[v][k]
    // near v, left to right as seen walking out of v.
    let mut phi = vec![0i64; s.n_edges()];
    for (v, star) in stars.iter().enumerate() {
        let flow: Vec<i64> = star
            .iter()
            .map(|&(e, _)| {
                let [a, _] = s.edges[e];
                // outward flow of c along e at v
                if a == v { c[e] } else { -c[e] }
            })
            .collect();
        if flow.iter().all(|&f| f == 0) {
            continue;
        }
        let mut inflow_before = 0i64;
        for (k, &(e, _)) in star.iter().enumerate() {
            // Strands entering v are pushed right, leaving strands pushed
            // right too; a strand passing v from edge i to edge j sweeps the
            // edges strictly between them on its right side.
            let cnt = inflow_before - flow[k].max(0);
            let sign = if s.edges[e][0] == v { -1 } else { 1 };
            phi[e] += sign * cnt;
            inflow_before -= flow[k];
        }
    }
    phi
}

/// Intersection matrix `Ω[i][j] = Int(ci, cj)`.
pub fn intersection_matrix(s: &SurfaceComplex, cycles: &[Vec<i64>]) -> Result<Vec<Vec<i64>>, HomologyError> {
    let stars = s.vertex_stars();
    let phis: Vec<Vec<i64>> = cycles.iter().map(|c| crossing_cochain(s, &stars, c)).collect();
    for c in cycles {
        if s.chain_boundary(c).iter().any(|&x| x != 0) {
            return Err(HomologyError::OpenChain);
        }
    }
    Ok(phis
        .iter()
        .map(|p| cycles.iter().map(|c| c.iter().zip(p).map(|(a, b)| a * b).sum()).collect())
        .collect())
}

/// Topological role of a boundary cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleClass {
    /// Bounds a 2-chain inside the volume.
    InteriorBounding,
    /// Homologous to a combination of the complementary (exterior) cycles
    /// of the canonical basis.
    ExteriorBounding,
    Neither,
}

/// Canonical symplectic basis of `H1` of the boundary.
#[derive(Clone, Debug)]
pub struct CycleBasis {
    /// `∂S_1..∂S_g` (interior bounding) followed by `∂S'_1..∂S'_g`.
    pub cycles: Vec<Vec<i64>>,
    pub labels: Vec<CycleClass>,
    /// Index of each cycle's dual partner.
    pub pair_index: Vec<usize>,
    /// Intersection matrix in this basis; equal to `[[0, I], [-I, 0]]`.
    pub omega: Vec<Vec<i64>>,
    pub genus: usize,
}

impl CycleBasis {
    /// Coordinates of a cycle's homology class in this basis.
    pub fn coordinates(&self, s: &SurfaceComplex, c: &[i64]) -> Result<Vec<i64>, HomologyError> {
        // Int(c, A_k) = -y_k and Int(c, B_k) = x_k for c ~ Σ x A + y B.
        let g = self.genus;
        let mut x = vec![0i64; 2 * g];
        for k in 0..g {
            x[k] = intersection_number(s, c, &self.cycles[g + k])?;
            x[g + k] = -intersection_number(s, c, &self.cycles[k])?;
        }
        Ok(x)
    }

    /// Classifies a cycle: interior bounding if it bounds in the volume,
    /// exterior bounding if it lies in the span of the dual cycles.
    pub fn classify(
        &self,
        complex: &OrientedComplex3,
        vc: &VolumeCohomology,
        c: &[i64],
    ) -> Result<CycleClass, HomologyError> {
        if vc.bounds(&complex.lift_edge_chain(c)) {
            return Ok(CycleClass::InteriorBounding);
        }
        let x = self.coordinates(&complex.boundary, c)?;
        let g = self.genus;
        Ok(if x[..g].iter().all(|&v| v == 0) {
            CycleClass::ExteriorBounding
        } else {
            CycleClass::Neither
        })
    }
}

fn combine(cycles: &[Vec<i64>], coef: &[BigInt]) -> Vec<i64> {
    let n = cycles[0].len();
    (0..n)
        .map(|e| {
            let mut s = BigInt::zero();
            for (c, a) in cycles.iter().zip(coef) {
                s += a * c[e];
            }
            s.to_i64().expect("cycle coefficients fit in i64")
        })
        .collect()
}

fn omega_of(omega: &[Vec<i64>], a: &[BigInt], b: &[BigInt]) -> BigInt {
    let mut s = BigInt::zero();
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if omega[i][j] != 0 {
                s += ai * bj * omega[i][j];
            }
        }
    }
    s
}

/// Reorders and recombines the tree–cotree cycles into dual pairs
/// `(∂S_i, ∂S'_i)` with `Int(∂S_i, ∂S'_j) = δij`, where every `∂S_i`
/// bounds inside the volume.
pub fn canonical_dual_pairs(
    complex: &OrientedComplex3,
    vc: &VolumeCohomology,
) -> Result<CycleBasis, HomologyError> {
    let s = &complex.boundary;
    let raw = fundamental_cycles(s);
    let n = raw.len();
    let g = n / 2;
    if n == 0 {
        return Ok(CycleBasis {
            cycles: Vec::new(),
            labels: Vec::new(),
            pair_index: Vec::new(),
            omega: Vec::new(),
            genus: 0,
        });
    }
    let omega = intersection_matrix(s, &raw)?;

    // Obstruction map: cycle -> rational vector; its integer kernel is
    // the lattice of interior-bounding classes.
    let obs: Vec<_> = raw.iter().map(|c| vc.obstruction(&complex.lift_edge_chain(c))).collect();
    let mut keys: Vec<usize> = obs.iter().flat_map(|o| o.keys().copied()).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    for &k in &keys {
        let vals: Vec<BigRational> = obs
            .iter()
            .map(|o| o.get(&k).cloned().unwrap_or_else(BigRational::zero))
            .collect();
        let lcm = vals
            .iter()
            .fold(BigInt::from(1), |l, v| num_integer::Integer::lcm(&l, v.denom()));
        rows.push(vals.iter().map(|v| (v * BigRational::from_integer(lcm.clone())).to_integer()).collect());
    }
    let (rank, u) = integer_column_echelon(&rows, n);
    // u columns: first `rank` span a complement, the rest span the lattice.
    let mut lat: Vec<Vec<BigInt>> = u[rank..].to_vec();
    let mut rest: Vec<Vec<BigInt>> = u[..rank].to_vec();

    let mut a_vecs = Vec::new();
    let mut b_vecs = Vec::new();
    let mut a_labels = Vec::new();
    while a_vecs.len() < g {
        let (a, interior) = if !lat.is_empty() {
            (lat.remove(0), true)
        } else if !rest.is_empty() {
            (rest.remove(0), false)
        } else {
            return Err(HomologyError::SingularPairing("ran out of basis vectors".into()));
        };
        // Euclid on the pairings with the remaining complement vectors.
        loop {
            let w: Vec<BigInt> = rest.iter().map(|r| omega_of(&omega, &a, r)).collect();
            let nz: Vec<usize> = (0..rest.len()).filter(|&j| !w[j].is_zero()).collect();
            if nz.len() <= 1 {
                break;
            }
            let p = *nz.iter().min_by_key(|&&j| num_traits::Signed::abs(&w[j])).unwrap();
            for &j in &nz {
                if j == p {
                    continue;
                }
                let q = num_integer::Integer::div_floor(&w[j], &w[p]);
                let rp = rest[p].clone();
                for (x, y) in rest[j].iter_mut().zip(&rp) {
                    *x -= &q * y;
                }
            }
        }
        let w: Vec<BigInt> = rest.iter().map(|r| omega_of(&omega, &a, r)).collect();
        let Some(p) = (0..rest.len()).find(|&j| !w[j].is_zero()) else {
            // Pair with a lattice vector only if the complement is exhausted.
            return Err(HomologyError::SingularPairing(
                "no dual partner for an interior-bounding cycle".into(),
            ));
        };
        let mut b = rest.remove(p);
        let d = &w[p];
        if d.magnitude() != &num_bigint::BigUint::from(1u32) {
            return Err(HomologyError::SingularPairing(format!("pairing {d} is not unimodular")));
        }
        if d < &BigInt::zero() {
            for x in &mut b {
                *x = -x.clone();
            }
        }
        // Make every remaining vector orthogonal to (a, b).
        for v in lat.iter_mut().chain(rest.iter_mut()) {
            let vb = omega_of(&omega, v, &b);
            let va = omega_of(&omega, v, &a);
            for i in 0..n {
                v[i] = &v[i] - &vb * &a[i] + &va * &b[i];
            }
        }
        a_vecs.push(a);
        b_vecs.push(b);
        a_labels.push(interior);
    }

    let mut cycles: Vec<Vec<i64>> = a_vecs.iter().map(|a| combine(&raw, a)).collect();
    cycles.extend(b_vecs.iter().map(|b| combine(&raw, b)));
    let basis_vecs: Vec<&Vec<BigInt>> = a_vecs.iter().chain(b_vecs.iter()).collect();
    let omega_new: Vec<Vec<i64>> = basis_vecs
        .iter()
        .map(|x| basis_vecs.iter().map(|y| omega_of(&omega, x, y).to_i64().unwrap()).collect())
        .collect();
    for i in 0..n {
        for j in 0..n {
            let want = if j == i + g && i < g {
                1
            } else if i == j + g && j < g {
                -1
            } else {
                0
            };
            if omega_new[i][j] != want {
                return Err(HomologyError::SingularPairing(format!(
                    "canonical reduction failed at ({i}, {j})"
                )));
            }
        }
    }
    let mut labels: Vec<CycleClass> = a_labels
        .iter()
        .map(|&i| if i { CycleClass::InteriorBounding } else { CycleClass::Neither })
        .collect();
    labels.extend(std::iter::repeat(CycleClass::ExteriorBounding).take(g));
    let pair_index = (0..n).map(|i| if i < g { i + g } else { i - g }).collect();
    Ok(CycleBasis {
        cycles,
        labels,
        pair_index,
        omega: omega_new,
        genus: g,
    })
}

/// Classifies a boundary cycle, building the canonical basis on the way.
pub fn classify_cycle(complex: &OrientedComplex3, c: &[i64]) -> Result<CycleClass, HomologyError> {
    let vc = VolumeCohomology::new(complex);
    let basis = canonical_dual_pairs(complex, &vc)?;
    basis.classify(complex, &vc, c)
}
