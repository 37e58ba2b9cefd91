mod common;

use common::*;
use hodgecurl_core::complex::{cross, dot3, OrientedComplex3, Point};
use hodgecurl_core::forms::*;
use hodgecurl_core::meshgen::{self, HexSplit, TetMesh};
use hodgecurl_core::sparse::CsrI;
use hodgecurl_core::MeshError;
use proptest::prelude::*;

fn test_meshes() -> Vec<(&'static str, TetMesh)> {
    vec![
        ("tet", meshgen::single_tet()),
        ("two-tets", meshgen::two_tets()),
        ("cube5", meshgen::cube(2, 2.0, HexSplit::Five)),
        ("cube6", meshgen::cube(2, 2.0, HexSplit::Six)),
        ("ball", meshgen::ball(4, 1.0)),
        ("solid-torus", meshgen::solid_torus(2.0, 1.0, 6, 4, 1)),
        ("genus2", meshgen::genus2_slab(1)),
    ]
}

fn is_zero_i(m: &CsrI) -> bool {
    m.is_zero()
}

fn check_exactness(c: &OrientedComplex3) {
    assert!(is_zero_i(&c.d1.matmul(&c.d0)), "D1 D0 != 0");
    assert!(is_zero_i(&c.d2.matmul(&c.d1)), "D2 D1 != 0");
    let b = &c.boundary;
    assert!(is_zero_i(&b.d1.matmul(&b.d0)), "d1 d0 != 0 on the boundary");
    assert_eq!(c.t1.matmul(&c.d0), b.d0.matmul(&c.t0), "trace does not commute with d");
    let c3 = weak_curl(c);
    let grad_curl = c.d0.to_f64().transpose().matmul(&c3);
    assert!(grad_curl.max_abs() <= 1e-12 * c3.inf_norm(), "curl of gradient");
}

fn green_defect(c: &OrientedComplex3) -> (f64, f64) {
    let c3 = weak_curl(c);
    let cb = wedge_pairing(&c.boundary);
    let t1 = c.t1.to_f64();
    let rhs = t1.transpose().matmul(&cb).matmul(&t1);
    let lhs = c3.axpby(1.0, &c3.transpose(), -1.0);
    (lhs.axpby(1.0, &rhs, -1.0).max_abs(), c3.max_abs())
}

#[test]
fn two_tets_counts() {
    let c = meshgen::two_tets().complex().unwrap();
    assert_eq!(c.n_edges(), 9);
    assert_eq!(c.n_faces(), 7);
    assert_eq!(c.boundary.n_triangles(), 6);
}

#[test]
fn single_tet_weak_curl_is_6x6() {
    let c = meshgen::single_tet().complex().unwrap();
    let c3 = weak_curl(&c);
    assert_eq!((c3.nrows(), c3.ncols()), (6, 6));
}

#[test]
fn exactness_on_all_meshes() {
    for (name, m) in test_meshes() {
        let c = m.complex().unwrap_or_else(|e| panic!("{name}: {e}"));
        check_exactness(&c);
    }
}

#[test]
fn green_identity_on_all_meshes() {
    for (name, m) in test_meshes() {
        let c = m.complex().unwrap();
        let (defect, scale) = green_defect(&c);
        assert!(defect <= 1e-12 * scale, "{name}: defect {defect:e}");
    }
}

fn skewed_tet() -> [Point; 4] {
    [[0.1, -0.2, 0.05], [1.3, 0.1, -0.1], [0.2, 0.9, 0.3], [0.4, 0.3, 1.1]]
}

/// Element matrices of one tet against pointwise quadrature.
#[test]
fn element_matrices_match_quadrature() {
    let p = skewed_tet();
    let c = OrientedComplex3::build(p.to_vec(), &[[0, 1, 2, 3]]).unwrap();
    let q = tet_quad(&p);
    let edges = c.edges.clone();
    let w = |e: usize, x: Point| whitney1(&p, edges[e][0], edges[e][1], x);

    let m1 = mass1(&c).to_dense();
    let c3 = weak_curl(&c).to_dense();
    let k = curl_curl_direct(&c).to_dense();
    let centre = centroid4(&p);
    for i in 0..6 {
        let curl_i = curl_fd(|x| w(i, x), centre);
        for j in 0..6 {
            let curl_j = curl_fd(|x| w(j, x), centre);
            let mut mass = 0.0;
            let mut weak = 0.0;
            for &(x, wt) in &q {
                mass += wt * dot3(w(i, x), w(j, x));
                weak += wt * dot3(curl_i, w(j, x));
            }
            let kk = signed_volume_abs(&p) * dot3(curl_i, curl_j);
            assert!((m1[(i, j)] - mass).abs() < 1e-7, "M1[{i},{j}]");
            assert!((c3[(i, j)] - weak).abs() < 1e-6, "C3[{i},{j}]: {} vs {weak}", c3[(i, j)]);
            assert!((k[(i, j)] - kk).abs() < 1e-5, "K[{i},{j}]");
        }
    }

    let m0 = mass0(&c).to_dense();
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.0;
            for &(x, wt) in &q {
                let l = tet_bary(&p, x);
                s += wt * l[i] * l[j];
            }
            assert!((m0[(i, j)] - s).abs() < 1e-12);
        }
    }
}

fn signed_volume_abs(p: &[Point; 4]) -> f64 {
    hodgecurl_core::complex::signed_volume(p).abs()
}

#[test]
fn face_mass_matches_quadrature() {
    let p = skewed_tet();
    let c = OrientedComplex3::build(p.to_vec(), &[[0, 1, 2, 3]]).unwrap();
    let q = tet_quad(&p);
    let grads: Vec<Point> = (0..4).map(|i| tet_bary_grad(&p, i)).collect();
    let w2 = |f: usize, x: Point| {
        let l = tet_bary(&p, x);
        let [a, b, cc] = c.faces[f];
        let mut out = [0.0; 3];
        for (u, v, z) in [(a, b, cc), (b, cc, a), (cc, a, b)] {
            let cr = cross(grads[v], grads[z]);
            for k in 0..3 {
                out[k] += 2.0 * l[u] * cr[k];
            }
        }
        out
    };
    let m2 = mass2(&c).to_dense();
    for i in 0..4 {
        for j in 0..4 {
            let s: f64 = q.iter().map(|&(x, wt)| wt * dot3(w2(i, x), w2(j, x))).sum();
            assert!((m2[(i, j)] - s).abs() < 1e-6 * s.abs().max(1.0), "M2[{i},{j}]");
        }
    }
}

#[test]
fn curl_curl_factorises_through_face_mass() {
    let c = meshgen::ball(2, 1.0).complex().unwrap();
    let d1 = c.d1.to_f64();
    let k = d1.transpose().matmul(&mass2(&c)).matmul(&d1);
    let kd = curl_curl_direct(&c);
    assert!(k.axpby(1.0, &kd, -1.0).max_abs() <= 1e-12 * kd.max_abs());
}

#[test]
fn boundary_wedge_matches_quadrature() {
    let p = skewed_tet();
    let c = OrientedComplex3::build(p.to_vec(), &[[0, 1, 2, 3]]).unwrap();
    let s = &c.boundary;
    let cb = wedge_pairing(s).to_dense();
    let mut want = faer::Mat::<f64>::zeros(s.n_edges(), s.n_edges());
    for (t, tri) in s.triangles.iter().enumerate() {
        let pts = tri.map(|v| s.vertices[v]);
        let n = tri_area_vec(&pts);
        let nn = dot3(n, n).sqrt();
        let nh = n.map(|x| x / nn);
        for &ei in &s.tri_edges[t] {
            for &ej in &s.tri_edges[t] {
                let slot = |v: usize| tri.iter().position(|&w| w == v).unwrap();
                let [a, b] = s.edges[ei].map(slot);
                let [cc, d] = s.edges[ej].map(slot);
                let val: f64 = tri_quad(&pts)
                    .iter()
                    .map(|&(x, wt)| wt * dot3(cross(tri_whitney1(&pts, a, b, x), tri_whitney1(&pts, cc, d, x)), nh))
                    .sum();
                want[(ei, ej)] += val;
            }
        }
    }
    assert!(dense_max_abs_diff(&cb, &want) < 1e-6);
}

#[test]
fn boundary_masses_match_quadrature() {
    let p = skewed_tet();
    let c = OrientedComplex3::build(p.to_vec(), &[[0, 1, 2, 3]]).unwrap();
    let s = &c.boundary;
    let m1 = surface_mass1(s).to_dense();
    let m0 = surface_mass0(s).to_dense();
    let mut w1 = faer::Mat::<f64>::zeros(s.n_edges(), s.n_edges());
    let mut w0 = faer::Mat::<f64>::zeros(s.n_vertices(), s.n_vertices());
    for (t, tri) in s.triangles.iter().enumerate() {
        let pts = tri.map(|v| s.vertices[v]);
        let slot = |v: usize| tri.iter().position(|&w| w == v).unwrap();
        for &ei in &s.tri_edges[t] {
            for &ej in &s.tri_edges[t] {
                let [a, b] = s.edges[ei].map(slot);
                let [cc, d] = s.edges[ej].map(slot);
                w1[(ei, ej)] += tri_quad(&pts)
                    .iter()
                    .map(|&(x, wt)| wt * dot3(tri_whitney1(&pts, a, b, x), tri_whitney1(&pts, cc, d, x)))
                    .sum::<f64>();
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                w0[(tri[i], tri[j])] += tri_quad(&pts)
                    .iter()
                    .map(|&(x, wt)| {
                        let l = tri_bary(&pts, x);
                        wt * l[i] * l[j]
                    })
                    .sum::<f64>();
            }
        }
    }
    assert!(dense_max_abs_diff(&m1, &w1) < 1e-6);
    assert!(dense_max_abs_diff(&m0, &w0) < 1e-12);
}

#[test]
fn wedge_is_skew_and_metric_free() {
    let m = meshgen::solid_torus(2.0, 1.0, 6, 4, 1);
    let c = m.complex().unwrap();
    let cb = wedge_pairing(&c.boundary);
    assert!(cb.add(&cb.transpose()).max_abs() == 0.0);
    for (_, _, v) in cb.triplets() {
        let six = 6.0 * v;
        assert!((six - six.round()).abs() < 1e-12);
    }
    let stretched: Vec<Point> = m.vertices.iter().map(|p| [3.0 * p[0], 0.5 * p[1], p[2] + p[0] * 0.2]).collect();
    let c2 = OrientedComplex3::build(stretched, &m.tets).unwrap();
    assert_eq!(wedge_pairing(&c2.boundary), cb);
}

#[test]
fn masses_are_positive_definite() {
    let c = meshgen::cube(2, 1.0, HexSplit::Six).complex().unwrap();
    for m in [mass0(&c), mass1(&c), mass2(&c)] {
        let d = m.to_dense();
        let eig = d.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        assert!(eig[0] > 0.0, "min eigenvalue {}", eig[0]);
        assert!(m.axpby(1.0, &m.transpose(), -1.0).max_abs() < 1e-15 * m.max_abs());
    }
}

#[test]
fn cube_splits_conform() {
    for split in [HexSplit::Five, HexSplit::Six] {
        let c = meshgen::cube(3, 1.0, split).complex().unwrap();
        // A cube boundary is a sphere: V - E + F = 2.
        let b = &c.boundary;
        assert_eq!(b.n_vertices() as i64 - b.n_edges() as i64 + b.n_triangles() as i64, 2);
        let vol: f64 = (0..c.n_tets()).map(|t| c.volume(t)).sum();
        assert!((vol - 1.0).abs() < 1e-12);
    }
}

#[test]
fn ball_is_reflection_symmetric() {
    let m = meshgen::ball(4, 1.0);
    let mut pts: Vec<[i64; 3]> = m.vertices.iter().map(|p| p.map(|x| (x * 1e9).round() as i64)).collect();
    pts.sort_unstable();
    let mut refl: Vec<[i64; 3]> = m.vertices.iter().map(|p| [-p[0], p[1], p[2]].map(|x| (x * 1e9).round() as i64)).collect();
    refl.sort_unstable();
    assert_eq!(pts, refl);
}

#[test]
fn rejects_degenerate_and_nonmanifold_input() {
    let r = OrientedComplex3::build(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0]], &[[0, 1, 2, 3]]);
    assert!(matches!(r, Err(MeshError::DegenerateTet { .. })));
    // Two tets sharing only a vertex: pinched boundary.
    let v = vec![
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, -1.0],
    ];
    let r = OrientedComplex3::build(v, &[[0, 1, 2, 3], [0, 4, 5, 6]]);
    assert!(matches!(r, Err(MeshError::NonManifold(_))), "{r:?}");
}

fn jittered_cube(seed_offsets: &[f64]) -> TetMesh {
    let mut m = meshgen::cube(3, 1.0, HexSplit::Six);
    let mut k = 0;
    for p in &mut m.vertices {
        let interior = p.iter().all(|x| x.abs() < 0.49);
        if interior {
            for x in p.iter_mut() {
                *x += 0.08 * seed_offsets[k % seed_offsets.len()];
                k += 1;
            }
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exactness_and_green_hold_on_jittered_meshes(offsets in prop::collection::vec(-1.0f64..1.0, 24)) {
        let c = jittered_cube(&offsets).complex().unwrap();
        check_exactness(&c);
        let (defect, scale) = green_defect(&c);
        prop_assert!(defect <= 1e-12 * scale);
    }

    #[test]
    fn weak_curl_pairs_gradients_to_zero(offsets in prop::collection::vec(-1.0f64..1.0, 24), p in prop::collection::vec(-1.0f64..1.0, 64)) {
        let c = jittered_cube(&offsets).complex().unwrap();
        let c3 = weak_curl(&c);
        let pv: Vec<f64> = (0..c.n_vertices()).map(|i| p[i % p.len()]).collect();
        let grad = c.d0.to_f64().mul_vec(&pv);
        let row = c3.tmul_vec(&grad);
        let scale = c3.inf_norm() * hodgecurl_core::sparse::max_abs(&grad);
        prop_assert!(hodgecurl_core::sparse::max_abs(&row) <= 1e-12 * scale);
    }
}
