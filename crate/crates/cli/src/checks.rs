//! Invariant checks, grouped by the library module they exercise.

use faer::Mat;
use hodgecurl_core::curlcurl::{assemble_curlcurl, curlcurl_spectrum, square_check, CurlCurlBc};
use hodgecurl_core::forms::{mass0, mass1, mass2, weak_curl};
use hodgecurl_core::homology::{fundamental_cycles, intersection_matrix, CycleClass, VolumeCohomology};
use hodgecurl_core::hodge::hodge_decompose;
use hodgecurl_core::linalg::{col, max_abs, SpdSolver};
use hodgecurl_core::spectral::{
    validate_gkn, BoundaryData, HarmonicSelection, RestrictedOperator, SpectrumReport, TraceClass,
};
use hodgecurl_core::symplectic::{
    canonical_j, is_lagrangian, lagrangian_from_partition, symplectic_basis, symplectic_orthogonal, LagrangianVerdict,
    PartitionSpec,
};
use hodgecurl_core::{OrientedComplex3, TetMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::report::num;

pub const GKN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// `measured ≤ bound`.
    AtMost,
    /// `measured ≥ bound`.
    AtLeast,
    /// `measured == bound`, integers.
    Equal,
    /// Not run; `note` says why. Counts as passing.
    Skipped,
}

impl Kind {
    fn as_str(self) -> &'static str {
        match self {
            Kind::AtMost => "le",
            Kind::AtLeast => "ge",
            Kind::Equal => "eq",
            Kind::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub group: &'static str,
    pub name: &'static str,
    pub kind: Kind,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
    pub note: Option<String>,
}

impl Check {
    pub fn at_most(group: &'static str, name: &'static str, measured: f64, bound: f64) -> Self {
        Self { group, name, kind: Kind::AtMost, measured, bound, pass: measured <= bound, note: None }
    }

    pub fn at_least(group: &'static str, name: &'static str, measured: f64, bound: f64) -> Self {
        Self { group, name, kind: Kind::AtLeast, measured, bound, pass: measured >= bound, note: None }
    }

    pub fn equal(group: &'static str, name: &'static str, got: i64, want: i64) -> Self {
        Self { group, name, kind: Kind::Equal, measured: got as f64, bound: want as f64, pass: got == want, note: None }
    }

    pub fn skipped(group: &'static str, name: &'static str, why: String) -> Self {
        Self { group, name, kind: Kind::Skipped, measured: f64::NAN, bound: f64::NAN, pass: true, note: Some(why) }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "group": self.group,
            "name": self.name,
            "kind": self.kind.as_str(),
            "pass": self.pass,
        });
        match self.kind {
            Kind::Equal => {
                v["measured"] = json!(self.measured as i64);
                v["bound"] = json!(self.bound as i64);
            }
            Kind::Skipped => {}
            _ => {
                v["measured"] = num(self.measured);
                v["bound"] = num(self.bound);
            }
        }
        if let Some(n) = &self.note {
            v["note"] = json!(n);
        }
        v
    }
}

pub fn summary(checks: &[Check]) -> Value {
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    json!({
        "total": checks.len(),
        "passed": checks.len() - failed.len(),
        "failed": failed,
        "all_pass": failed.is_empty(),
    })
}

fn rel(x: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        x
    } else {
        x / scale
    }
}

const MESH: &str = "mesh_complex";

pub fn mesh_checks(c: &OrientedComplex3, mesh: &TetMesh) -> Vec<Check> {
    let b = &c.boundary;
    let mut out = vec![
        Check::equal(MESH, "d1_d0_zero", c.d1.matmul(&c.d0).max_abs(), 0),
        Check::equal(MESH, "d2_d1_zero", c.d2.matmul(&c.d1).max_abs(), 0),
        Check::equal(MESH, "boundary_d1_d0_zero", b.d1.matmul(&b.d0).max_abs(), 0),
        Check::equal(
            MESH,
            "trace_commutes_with_d",
            c.t1.matmul(&c.d0).axpby(1, &b.d0.matmul(&c.t0), -1).max_abs(),
            0,
        ),
    ];

    // Each interior face is shared by two tets with opposite induced
    // orientation; boundary faces are hit once.
    let mut hits = vec![0i64; c.n_faces()];
    let mut net = vec![0i64; c.n_faces()];
    for (t, f, s) in c.d2.triplets() {
        let _ = t;
        hits[f] += 1;
        net[f] += s;
    }
    let bad_faces = (0..c.n_faces()).filter(|&f| !((hits[f] == 2 && net[f] == 0) || (hits[f] == 1 && net[f].abs() == 1))).count();
    out.push(Check::equal(MESH, "orientation_consistent", bad_faces as i64, 0));
    let min_vol = (0..c.n_tets()).map(|t| c.volume(t)).fold(f64::INFINITY, f64::min);
    out.push(Check::at_least(MESH, "oriented_volumes_positive", min_vol, f64::MIN_POSITIVE));

    let c3 = weak_curl(c);
    let c3n = c3.inf_norm();
    let grad_curl = c.d0.to_f64().transpose().matmul(&c3);
    out.push(Check::at_most(MESH, "weak_curl_kills_gradients", rel(grad_curl.inf_norm(), c3n), 1e-12));
    let cb = &wedge(c);
    let t1 = c.t1.to_f64();
    let green = c3.axpby(1.0, &c3.transpose(), -1.0).axpby(1.0, &t1.transpose().matmul(cb).matmul(&t1), -1.0);
    out.push(Check::at_most(MESH, "green_identity", rel(green.inf_norm(), c3n), 1e-12));

    let masses = [mass0(c), mass1(c), mass2(c)];
    let not_spd = masses.iter().filter(|m| SpdSolver::new(m).is_err()).count();
    out.push(Check::equal(MESH, "masses_positive_definite", not_spd as i64, 0));
    let asym = masses.iter().map(|m| rel(m.axpby(1.0, &m.transpose(), -1.0).max_abs(), m.max_abs())).fold(0.0, f64::max);
    out.push(Check::at_most(MESH, "masses_symmetric", asym, 1e-15));

    // Same mesh with tets listed backwards and vertices rotated within each
    // tet: identical matrices up to summation order.
    let shuffled: Vec<[usize; 4]> = mesh.tets.iter().rev().map(|t| [t[1], t[2], t[3], t[0]]).collect();
    let order = match OrientedComplex3::build(mesh.vertices.clone(), &shuffled) {
        Ok(c2) => {
            let pairs = [(weak_curl(c), weak_curl(&c2)), (mass1(c), mass1(&c2)), (mass2(c), mass2(&c2))];
            pairs.iter().map(|(a, b)| rel(a.axpby(1.0, b, -1.0).max_abs(), a.max_abs())).fold(0.0, f64::max)
        }
        Err(_) => f64::INFINITY,
    };
    out.push(Check::at_most(MESH, "assembly_order_independent", order, 1e-13));
    out
}

fn wedge(c: &OrientedComplex3) -> hodgecurl_core::sparse::CsrF {
    hodgecurl_core::forms::wedge_pairing(&c.boundary)
}

const HOMOLOGY: &str = "surface_homology";

pub fn homology_checks(c: &OrientedComplex3, bd: &BoundaryData, vc: &VolumeCohomology) -> Result<Vec<Check>, CliError> {
    let s = &c.boundary;
    let betti = hodgecurl_core::homology::betti(s);
    let g = betti.genus();
    let cycles = &bd.cycles;
    let mut out = vec![
        Check::equal(HOMOLOGY, "fundamental_cycle_count", fundamental_cycles(s).len() as i64, betti.b1 as i64),
        Check::equal(HOMOLOGY, "canonical_cycle_count", cycles.cycles.len() as i64, 2 * g as i64),
        Check::equal(HOMOLOGY, "volume_b1_is_genus", vc.b1() as i64, g as i64),
    ];
    let open = cycles.cycles.iter().map(|z| s.chain_boundary(z).iter().map(|x| x.abs()).max().unwrap_or(0)).max().unwrap_or(0);
    out.push(Check::equal(HOMOLOGY, "cycles_closed", open, 0));
    let omega = intersection_matrix(s, &cycles.cycles)?;
    let j = canonical_j(g);
    let mismatched = (0..2 * g)
        .flat_map(|a| (0..2 * g).map(move |b| (a, b)))
        .filter(|&(a, b)| omega[a][b] as f64 != j[(a, b)])
        .count();
    out.push(Check::equal(HOMOLOGY, "intersection_matrix_canonical", mismatched as i64, 0));
    let mut interior = 0i64;
    let mut exterior = 0i64;
    for (k, z) in cycles.cycles.iter().enumerate() {
        let cls = cycles.classify(c, vc, z)?;
        // ∂S_i must bound inside, ∂S'_i must not.
        match (k < g, cls) {
            (true, CycleClass::InteriorBounding) => interior += 1,
            (false, CycleClass::ExteriorBounding) => exterior += 1,
            _ => {}
        }
    }
    out.push(Check::equal(HOMOLOGY, "interior_bounding_cycles", interior, g as i64));
    out.push(Check::equal(HOMOLOGY, "exterior_bounding_cycles", exterior, g as i64));
    Ok(out)
}

/// Largest normalized wedge pairings between the parts of Hodge splittings
/// of random boundary cochains.
#[derive(Debug, Clone, Default)]
pub struct PairingStats {
    pub samples: usize,
    pub exact_exact: f64,
    pub coexact_coexact: f64,
    pub exact_coexact: f64,
    pub harmonic_exact: f64,
    pub harmonic_coexact: f64,
    /// Hodge split `‖ω - (e + c + h)‖∞ / ‖ω‖∞`.
    pub reconstruction: f64,
    /// `|[ω, η] - ([e, c'] + [c, e'] + [h, h'])| / (‖ω‖ ‖η‖)`.
    pub pairing_reconstruction: f64,
}

impl PairingStats {
    pub fn to_json(&self) -> Value {
        json!({
            "samples": self.samples,
            "exact_exact": num(self.exact_exact),
            "coexact_coexact": num(self.coexact_coexact),
            "exact_coexact": num(self.exact_coexact),
            "harmonic_exact": num(self.harmonic_exact),
            "harmonic_coexact": num(self.harmonic_coexact),
            "reconstruction": num(self.reconstruction),
            "pairing_reconstruction": num(self.pairing_reconstruction),
        })
    }
}

pub fn pairing_stats(c: &OrientedComplex3, bd: &BoundaryData, samples: usize, seed: u64) -> Result<PairingStats, CliError> {
    let s = &c.boundary;
    let f = &bd.forms;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut splits = Vec::with_capacity(samples);
    let mut omegas = Vec::with_capacity(samples);
    let mut st = PairingStats { samples, ..Default::default() };
    for _ in 0..samples {
        let w: Vec<f64> = (0..s.n_edges()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sp = hodge_decompose(s, f, &bd.harmonic, &w)?;
        st.reconstruction = st.reconstruction.max(sp.reconstruction_error(&w));
        splits.push(sp);
        omegas.push(w);
    }
    let fields: Vec<Vec<f64>> = (0..bd.harmonic.dim()).map(|k| col(bd.harmonic.basis.as_ref(), k)).collect();
    for (a, sa) in splits.iter().enumerate() {
        for sb in &splits[a + 1..] {
            st.exact_exact = st.exact_exact.max(f.normalized_pairing(&sa.exact, &sb.exact).abs());
            st.coexact_coexact = st.coexact_coexact.max(f.normalized_pairing(&sa.coexact, &sb.coexact).abs());
            st.exact_coexact = st.exact_coexact.max(f.normalized_pairing(&sa.exact, &sb.coexact).abs());
        }
        for (b, sb) in splits.iter().enumerate().skip(a + 1) {
            let (wa, wb) = (&omegas[a], &omegas[b]);
            let parts = f.pairing(&sa.exact, &sb.coexact) + f.pairing(&sa.coexact, &sb.exact) + f.pairing(&sa.harmonic, &sb.harmonic);
            let err = (f.pairing(wa, wb) - parts).abs() / (f.norm(wa) * f.norm(wb)).max(f64::MIN_POSITIVE);
            st.pairing_reconstruction = st.pairing_reconstruction.max(err);
        }
        for h in &fields {
            st.harmonic_exact = st.harmonic_exact.max(f.normalized_pairing(h, &sa.exact).abs());
            st.harmonic_coexact = st.harmonic_coexact.max(f.normalized_pairing(h, &sa.coexact).abs());
        }
    }
    Ok(st)
}

const HODGE: &str = "boundary_hodge";

pub fn hodge_checks(c: &OrientedComplex3, bd: &BoundaryData, stats: &PairingStats) -> Vec<Check> {
    let g = bd.genus();
    let b1 = hodgecurl_core::homology::betti(&c.boundary).b1;
    let wedge = &bd.forms.wedge;
    let basis = &bd.basis;
    let eye = Mat::<f64>::identity(2 * g, 2 * g);
    let det = if g == 0 { 1.0 } else { basis.gram.determinant() };
    vec![
        Check::equal(HODGE, "harmonic_dimension", bd.harmonic.dim() as i64, b1 as i64),
        Check::at_most(HODGE, "harmonic_residual", hodgecurl_core::hodge::harmonic_residual(&bd.forms, &bd.harmonic), 1e-9),
        Check::at_most(HODGE, "wedge_skew", wedge.axpby(1.0, &wedge.transpose(), 1.0).max_abs(), 0.0),
        Check::at_most(HODGE, "hodge_reconstruction", stats.reconstruction, 1e-9),
        Check::at_most(HODGE, "exact_isotropic", stats.exact_exact, 1e-12),
        Check::at_most(HODGE, "coexact_isotropic", stats.coexact_coexact, 1e-9)
            .with_note("pairings of discrete co-exact parts shrink with the mesh size rather than vanishing"),
        Check::at_most(HODGE, "pairing_reconstruction", stats.pairing_reconstruction, 1e-9)
            .with_note("the identity drops the co-exact cross pairings"),
        Check::at_most(HODGE, "harmonic_exact_pairing", stats.harmonic_exact, 1e-9),
        Check::at_most(HODGE, "harmonic_coexact_pairing", stats.harmonic_coexact, 1e-9)
            .with_note("pairings of discrete co-exact parts shrink with the mesh size rather than vanishing"),
        Check::at_most(HODGE, "periods_identity", max_abs((&basis.periods - &eye).as_ref()), 1e-8),
        Check::at_most(HODGE, "gram_canonical", max_abs((&basis.gram - canonical_j(g)).as_ref()), 1e-8),
        Check::at_least(HODGE, "gram_determinant", det.abs(), 0.5),
    ]
}

const SYMPLECTIC: &str = "symplectic_core";

pub fn symplectic_checks(bd: &BoundaryData) -> Result<Vec<Check>, CliError> {
    let g = bd.genus();
    if g == 0 {
        return Ok(vec![Check::skipped(SYMPLECTIC, "partition_lagrangians", "genus 0: the harmonic space is trivial".into())]);
    }
    let space = bd.space()?;
    let eye = Mat::<f64>::identity(2 * g, 2 * g);
    let mut incomplete = 0i64;
    let mut sharp_defect = 0.0f64;
    for p in PartitionSpec::all(g) {
        let l = lagrangian_from_partition(eye.as_ref(), &p)?;
        if is_lagrangian(&space, &l)? != LagrangianVerdict::CompleteLagrangian {
            incomplete += 1;
        }
        let sharp = symplectic_orthogonal(&space, &l)?;
        let double = symplectic_orthogonal(&space, &sharp)?;
        sharp_defect = sharp_defect.max(l.containment_residual(&double)).max(sharp.containment_residual(&l));
    }
    let u = symplectic_basis(&space)?;
    let form = u.transpose() * space.form() * &u;
    Ok(vec![
        Check::equal(SYMPLECTIC, "partition_lagrangians", incomplete, 0),
        Check::at_most(SYMPLECTIC, "lagrangian_sharp_closure", sharp_defect, 1e-10),
        Check::at_most(SYMPLECTIC, "symplectic_basis_canonical", max_abs((&form - canonical_j(g)).as_ref()), 1e-10),
    ])
}

const SPECTRAL: &str = "curl_spectral";

/// Checks on the restricted operator and its spectrum. `gkn` is the
/// self-adjointness certificate of the operator actually solved.
pub fn operator_checks(
    c: &OrientedComplex3,
    bd: &BoundaryData,
    trace: TraceClass,
    op: &RestrictedOperator,
    spectrum: &SpectrumReport,
) -> Result<Vec<Check>, CliError> {
    let mut out = vec![Check::at_most(SPECTRAL, "gkn", op.asymmetry, GKN_TOL)];
    let g = bd.genus();
    let mut worst = 0.0f64;
    for p in PartitionSpec::all(g) {
        let (_, a) = validate_gkn(c, bd, trace, &HarmonicSelection::Partition(p))?;
        worst = worst.max(a);
    }
    out.push(Check::at_most(SPECTRAL, "gkn_all_partitions", worst, GKN_TOL));
    out.push(Check::at_most(SPECTRAL, "constraint_residual", op.space.residual, 1e-10));

    // Gradients of potentials vanishing on the boundary (or of any
    // potential, for closed traces) satisfy every constraint row.
    let pots: Vec<usize> = match trace {
        TraceClass::Closed => (0..c.n_vertices()).collect(),
        TraceClass::Coclosed => c.interior_vertices(),
    };
    let grads = c.d0.to_f64().select_cols(&pots);
    let rows = &op.constraints.rows;
    let hit = rows.matmul(&grads);
    out.push(Check::at_most(
        SPECTRAL,
        "gradients_admissible",
        rel(hit.max_abs(), rows.inf_norm() * grads.inf_norm()),
        1e-10,
    ));

    let resid = spectrum.residuals.iter().copied().fold(0.0, f64::max);
    out.push(Check::at_most(SPECTRAL, "eigen_residuals", resid, 1e-8));
    out.push(Check::at_most(SPECTRAL, "eigen_m_gram", spectrum.gram_error, 1e-8));
    out.push(
        Check::at_least(SPECTRAL, "kernel_holds_gradients", spectrum.zero_mode_count as f64, op.space.gradients as f64)
            .with_note(if spectrum.zero_modes_counted { "counted" } else { "structural count on the iterative path" }),
    );
    Ok(out)
}

const CURLCURL: &str = "curlcurl_compare";

pub fn curlcurl_checks(
    c: &OrientedComplex3,
    op: &RestrictedOperator,
    zero_tol: f64,
    dense_threshold: usize,
    seed: u64,
) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    let mut asym = 0.0f64;
    let mut kg = 0.0f64;
    let mut min_rel = f64::INFINITY;
    for bc in [CurlCurlBc::Dirichlet, CurlCurlBc::Neumann] {
        let cc = assemble_curlcurl(c, bc);
        let kn = cc.k.max_abs();
        asym = asym.max(rel(cc.k.axpby(1.0, &cc.k.transpose(), -1.0).max_abs(), kn));
        kg = kg.max(rel(cc.k.matmul(&cc.gradients).max_abs(), kn));
        if cc.dim() == 0 {
            continue;
        }
        let sp = curlcurl_spectrum(&cc, 1, zero_tol, dense_threshold, seed)?;
        let m = sp.min_relative.unwrap_or_else(|| sp.values.first().copied().unwrap_or(0.0).min(0.0));
        min_rel = min_rel.min(m);
    }
    out.push(Check::at_most(CURLCURL, "curlcurl_symmetric", asym, 1e-15));
    out.push(Check::at_most(CURLCURL, "curlcurl_kills_gradients", kg, 1e-12));
    out.push(Check::at_least(CURLCURL, "curlcurl_semidefinite", if min_rel.is_finite() { min_rel } else { 0.0 }, -1e-10));
    if op.dim() > dense_threshold {
        out.push(Check::skipped(
            CURLCURL,
            "squared_spectrum",
            format!("constrained dimension {} above the dense threshold {dense_threshold}", op.dim()),
        ));
    } else {
        let sc = square_check(op, zero_tol)?;
        out.push(Check::at_most(CURLCURL, "squared_spectrum", sc.max_rel_mismatch, 1e-7));
        out.push(Check::equal(CURLCURL, "squared_kernel", sc.zero_squared as i64, sc.zero_lambda as i64));
    }
    Ok(out)
}
