//! Whitney-form mass matrices, the weak curl and the boundary wedge pairing.
//!
//! All integrals are exact for the lowest-order Whitney spaces: products of
//! barycentric coordinates are integrated with
//! `∫ λi λj = |K| (1 + δij) / ((n + 1)(n + 2))` on an `n`-simplex `K`.

use crate::complex::{cross, dot3, sub, OrientedComplex3, Point, SurfaceComplex};
use crate::sparse::CsrF;

/// Gradients of the barycentric coordinates of a positively oriented tet,
/// together with its volume.
pub fn tet_gradients(p: &[Point; 4]) -> ([Point; 4], f64) {
    let a = sub(p[1], p[0]);
    let b = sub(p[2], p[0]);
    let c = sub(p[3], p[0]);
    let det = dot3(a, cross(b, c));
    let g1 = cross(b, c).map(|x| x / det);
    let g2 = cross(c, a).map(|x| x / det);
    let g3 = cross(a, b).map(|x| x / det);
    let g0 = [
        -(g1[0] + g2[0] + g3[0]),
        -(g1[1] + g2[1] + g3[1]),
        -(g1[2] + g2[2] + g3[2]),
    ];
    ([g0, g1, g2, g3], det / 6.0)
}

/// Tangential gradients of the barycentric coordinates of a triangle,
/// together with its area.
pub fn tri_gradients(p: &[Point; 3]) -> ([Point; 3], f64) {
    let n = cross(sub(p[1], p[0]), sub(p[2], p[0]));
    let twice = dot3(n, n).sqrt();
    let nh = n.map(|x| x / twice);
    let g = [0, 1, 2].map(|i| cross(nh, sub(p[(i + 2) % 3], p[(i + 1) % 3])).map(|x| x / twice));
    (g, 0.5 * twice)
}

fn lam2(i: usize, j: usize, measure: f64, denom: f64) -> f64 {
    measure * if i == j { 2.0 } else { 1.0 } / denom
}

/// Local data of one tetrahedron: slots of the global edges and faces in the
/// positively oriented vertex order.
struct TetLocal {
    g: [Point; 4],
    vol: f64,
    /// Local slots `(a, b)` of global edge `(u < v)`.
    edges: [[usize; 2]; 6],
    /// Local slots of the sorted global face vertices.
    faces: [[usize; 3]; 4],
}

fn tet_local(c: &OrientedComplex3, t: usize) -> TetLocal {
    let mut order = c.tets[t];
    if c.tet_sign[t] < 0 {
        order.swap(2, 3);
    }
    let (g, vol) = tet_gradients(&order.map(|v| c.vertices[v]));
    let slot = |v: usize| order.iter().position(|&w| w == v).unwrap();
    let edges = c.tet_edges[t].map(|e| c.edges[e].map(slot));
    let faces = c.tet_faces[t].map(|f| c.faces[f].map(slot));
    TetLocal { g, vol, edges, faces }
}

fn whitney1_dot(l: &TetLocal, e: [usize; 2], f: [usize; 2]) -> f64 {
    let [a, b] = e;
    let [c, d] = f;
    let i = |x, y| lam2(x, y, l.vol, 20.0);
    let g = &l.g;
    i(a, c) * dot3(g[b], g[d]) - i(a, d) * dot3(g[b], g[c]) - i(b, c) * dot3(g[a], g[d])
        + i(b, d) * dot3(g[a], g[c])
}

/// Constant curl of the Whitney 1-form of local edge `(a, b)`.
fn whitney1_curl(l: &TetLocal, e: [usize; 2]) -> Point {
    cross(l.g[e[0]], l.g[e[1]]).map(|x| 2.0 * x)
}

/// Integral of the Whitney 1-form of local edge `(a, b)` over the tet.
fn whitney1_integral(l: &TetLocal, e: [usize; 2]) -> Point {
    let [a, b] = e;
    [0, 1, 2].map(|k| l.vol / 4.0 * (l.g[b][k] - l.g[a][k]))
}

/// 0-form mass matrix `M0`.
pub fn mass0(c: &OrientedComplex3) -> CsrF {
    let mut trips = Vec::with_capacity(16 * c.n_tets());
    for t in 0..c.n_tets() {
        let vol = c.volume(t);
        let v = c.tets[t];
        for i in 0..4 {
            for j in 0..4 {
                trips.push((v[i], v[j], lam2(i, j, vol, 20.0)));
            }
        }
    }
    CsrF::from_triplets(c.n_vertices(), c.n_vertices(), trips)
}

/// 1-form (edge element) mass matrix `M1`.
pub fn mass1(c: &OrientedComplex3) -> CsrF {
    let mut trips = Vec::with_capacity(36 * c.n_tets());
    for t in 0..c.n_tets() {
        let l = tet_local(c, t);
        for i in 0..6 {
            for j in 0..6 {
                let v = whitney1_dot(&l, l.edges[i], l.edges[j]);
                trips.push((c.tet_edges[t][i], c.tet_edges[t][j], v));
            }
        }
    }
    CsrF::from_triplets(c.n_edges(), c.n_edges(), trips)
}

/// 2-form (face element) mass matrix `M2`.
pub fn mass2(c: &OrientedComplex3) -> CsrF {
    let mut trips = Vec::with_capacity(16 * c.n_tets());
    for t in 0..c.n_tets() {
        let l = tet_local(c, t);
        let g = &l.g;
        let i = |x, y| lam2(x, y, l.vol, 20.0);
        for fi in 0..4 {
            for fj in 0..4 {
                let mut s = 0.0;
                for k in 0..3 {
                    let [p, q, r] = rot(l.faces[fi], k);
                    for m in 0..3 {
                        let [pp, qq, rr] = rot(l.faces[fj], m);
                        s += i(p, pp) * dot3(cross(g[q], g[r]), cross(g[qq], g[rr]));
                    }
                }
                trips.push((c.tet_faces[t][fi], c.tet_faces[t][fj], 4.0 * s));
            }
        }
    }
    CsrF::from_triplets(c.n_faces(), c.n_faces(), trips)
}

fn rot(f: [usize; 3], k: usize) -> [usize; 3] {
    [f[k % 3], f[(k + 1) % 3], f[(k + 2) % 3]]
}

/// Weak curl `C3[i, j] = ∫ curl wi · wj` over the volume.
///
/// With this index order, `C3 - C3ᵀ = T1ᵀ C∂ T1` and `D0ᵀ C3 = 0`.
pub fn weak_curl(c: &OrientedComplex3) -> CsrF {
    let mut trips = Vec::with_capacity(36 * c.n_tets());
    for t in 0..c.n_tets() {
        let l = tet_local(c, t);
        let ints = l.edges.map(|e| whitney1_integral(&l, e));
        for i in 0..6 {
            let curl = whitney1_curl(&l, l.edges[i]);
            for j in 0..6 {
                trips.push((c.tet_edges[t][i], c.tet_edges[t][j], dot3(curl, ints[j])));
            }
        }
    }
    CsrF::from_triplets(c.n_edges(), c.n_edges(), trips)
}

/// Curl-curl stiffness `∫ curl wi · curl wj`, assembled element by element.
pub fn curl_curl_direct(c: &OrientedComplex3) -> CsrF {
    let mut trips = Vec::with_capacity(36 * c.n_tets());
    for t in 0..c.n_tets() {
        let l = tet_local(c, t);
        let curls = l.edges.map(|e| whitney1_curl(&l, e));
        for i in 0..6 {
            for j in 0..6 {
                trips.push((c.tet_edges[t][i], c.tet_edges[t][j], l.vol * dot3(curls[i], curls[j])));
            }
        }
    }
    CsrF::from_triplets(c.n_edges(), c.n_edges(), trips)
}

/// Local slots `(a, b)` of the global edges of a surface triangle, in
/// `tri_edges` order, and the triangle's vertex positions.
fn tri_local(s: &SurfaceComplex, t: usize) -> ([[usize; 2]; 3], [Point; 3]) {
    let tr = s.triangles[t];
    let slot = |v: usize| tr.iter().position(|&w| w == v).unwrap();
    let edges = s.tri_edges[t].map(|e| s.edges[e].map(slot));
    (edges, tr.map(|v| s.vertices[v]))
}

/// Boundary 0-form mass matrix.
pub fn surface_mass0(s: &SurfaceComplex) -> CsrF {
    let mut trips = Vec::with_capacity(9 * s.n_triangles());
    for t in 0..s.n_triangles() {
        let area = s.area(t);
        let v = s.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                trips.push((v[i], v[j], lam2(i, j, area, 12.0)));
            }
        }
    }
    CsrF::from_triplets(s.n_vertices(), s.n_vertices(), trips)
}

/// Boundary 1-form mass matrix.
pub fn surface_mass1(s: &SurfaceComplex) -> CsrF {
    let mut trips = Vec::with_capacity(9 * s.n_triangles());
    for t in 0..s.n_triangles() {
        let (edges, pts) = tri_local(s, t);
        let (g, area) = tri_gradients(&pts);
        let i = |x, y| lam2(x, y, area, 12.0);
        for p in 0..3 {
            for q in 0..3 {
                let [a, b] = edges[p];
                let [c, d] = edges[q];
                let v = i(a, c) * dot3(g[b], g[d]) - i(a, d) * dot3(g[b], g[c])
                    - i(b, c) * dot3(g[a], g[d])
                    + i(b, d) * dot3(g[a], g[c]);
                trips.push((s.tri_edges[t][p], s.tri_edges[t][q], v));
            }
        }
    }
    CsrF::from_triplets(s.n_edges(), s.n_edges(), trips)
}

/// Boundary 2-form mass matrix (diagonal, `1 / area`).
pub fn surface_mass2(s: &SurfaceComplex) -> CsrF {
    CsrF::from_rows(s.n_triangles(), s.n_triangles(), |t| [(t, 1.0 / s.area(t))])
}

/// `∫ dλi ∧ dλj` in units of the oriented triangle, for local slots.
fn eps(i: usize, j: usize) -> f64 {
    if i == j {
        0.0
    } else if (i + 1) % 3 == j {
        1.0
    } else {
        -1.0
    }
}

/// Wedge of the Whitney 1-forms of local edges `e` and `f` on an oriented
/// triangle. Metric free: the result is a multiple of 1/6.
pub fn local_wedge(e: [usize; 2], f: [usize; 2]) -> f64 {
    let [a, b] = e;
    let [c, d] = f;
    // ∫ λi λj dλk∧dλl = (1 + δij) / 12 · A · eps(k, l) / (2A)
    let i = |x: usize, y: usize| if x == y { 2.0 } else { 1.0 } / 24.0;
    i(a, c) * eps(b, d) - i(a, d) * eps(b, c) - i(b, c) * eps(a, d) + i(b, d) * eps(a, c)
}

/// Skew wedge pairing `C∂[i, j] = ∫ wi ∧ wj` on the boundary surface.
pub fn wedge_pairing(s: &SurfaceComplex) -> CsrF {
    let mut trips = Vec::with_capacity(9 * s.n_triangles());
    for t in 0..s.n_triangles() {
        let (edges, _) = tri_local(s, t);
        for p in 0..3 {
            for q in 0..3 {
                trips.push((s.tri_edges[t][p], s.tri_edges[t][q], local_wedge(edges[p], edges[q])));
            }
        }
    }
    CsrF::from_triplets(s.n_edges(), s.n_edges(), trips)
}
