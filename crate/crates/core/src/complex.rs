//! Oriented simplicial complexes of a tetrahedral mesh and of its boundary
//! surface.
//!
//! Orientation conventions: edges point from the lower to the higher vertex
//! index, faces and tetrahedra are stored as sorted tuples, and every
//! tetrahedron carries the sign of its sorted vertex order relative to the
//! right-handed orientation of space. Boundary triangles are stored with
//! their outward orientation.

use std::collections::HashMap;

use crate::error::{HomologyError, MeshError};
use crate::sparse::CsrI;

pub type Point = [f64; 3];

/// Relative volume threshold below which a tetrahedron counts as degenerate.
pub const DEGENERATE_TOL: f64 = 1e-14;

/// Oriented 3-complex with incidence matrices and its boundary surface.
#[derive(Clone, Debug)]
pub struct OrientedComplex3 {
    pub vertices: Vec<Point>,
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<[usize; 3]>,
    /// Sorted vertex tuples.
    pub tets: Vec<[usize; 4]>,
    /// `+1` if the sorted tuple is positively oriented, `-1` otherwise.
    pub tet_sign: Vec<i8>,
    pub tet_edges: Vec<[usize; 6]>,
    pub tet_faces: Vec<[usize; 4]>,
    /// Edge-vertex incidence (gradient), `E x V`.
    pub d0: CsrI,
    /// Face-edge incidence (curl), `F x E`.
    pub d1: CsrI,
    /// Tet-face incidence (divergence), `T x F`.
    pub d2: CsrI,
    pub boundary: SurfaceComplex,
    /// Volume vertex of each boundary vertex.
    pub bvert_parent: Vec<usize>,
    /// Volume edge of each boundary edge.
    pub bedge_parent: Vec<usize>,
    /// Volume face of each boundary triangle.
    pub bface_parent: Vec<usize>,
    /// Restriction of 0-cochains to the boundary, `Vb x V`.
    pub t0: CsrI,
    /// Restriction of 1-cochains to the boundary, `Eb x E`.
    pub t1: CsrI,
}

/// Closed, oriented triangulated surface.
#[derive(Clone, Debug)]
pub struct SurfaceComplex {
    pub vertices: Vec<Point>,
    pub edges: Vec<[usize; 2]>,
    /// Oriented triangles.
    pub triangles: Vec<[usize; 3]>,
    /// Edge ids of `(t1 t2), (t0 t2), (t0 t1)` for triangle `[t0, t1, t2]`.
    pub tri_edges: Vec<[usize; 3]>,
    /// `Eb x Vb`.
    pub d0: CsrI,
    /// `Fb x Eb`.
    pub d1: CsrI,
    /// Connected component of each vertex.
    pub vertex_component: Vec<usize>,
    pub n_components: usize,
}

/// Local edges of a tetrahedron in terms of local vertex slots.
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];
/// Local faces of a tetrahedron; face `k` omits vertex `k`.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

pub fn signed_volume(p: &[Point; 4]) -> f64 {
    let a = sub(p[1], p[0]);
    let b = sub(p[2], p[0]);
    let c = sub(p[3], p[0]);
    dot3(a, cross(b, c)) / 6.0
}

pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn dot3(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3(a: Point) -> f64 {
    dot3(a, a).sqrt()
}

fn bbox_scale(vertices: &[Point]) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in vertices {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max)
}

fn sort_perm_sign<const N: usize>(v: [usize; N]) -> ([usize; N], i8) {
    let mut s = v;
    let mut sign = 1i8;
    for i in 0..N {
        for j in 0..N - 1 - i {
            if s[j] > s[j + 1] {
                s.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    (s, sign)
}

fn index_of<K: Copy + Eq + std::hash::Hash + Ord>(items: &[K]) -> HashMap<K, usize> {
    items.iter().enumerate().map(|(i, &k)| (k, i)).collect()
}

impl OrientedComplex3 {
    /// Builds the oriented complex of a tetrahedral mesh.
    ///
    /// Tetrahedra may be given in either orientation; their sign is taken
    /// from the geometry.
    pub fn build(vertices: Vec<Point>, tets_in: &[[usize; 4]]) -> Result<Self, MeshError> {
        if tets_in.is_empty() {
            return Err(MeshError::Empty);
        }
        let nv = vertices.len();
        let scale = bbox_scale(&vertices);
        let vol_tol = DEGENERATE_TOL * scale.powi(3);

        let mut tets = Vec::with_capacity(tets_in.len());
        let mut tet_sign = Vec::with_capacity(tets_in.len());
        for (t, tet) in tets_in.iter().enumerate() {
            for &v in tet {
                if v >= nv {
                    return Err(MeshError::BadVertex { index: v, count: nv });
                }
            }
            let (sorted, _) = sort_perm_sign(*tet);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(MeshError::DegenerateTet { tet: t, volume: 0.0 });
            }
            let vol = signed_volume(&sorted.map(|v| vertices[v]));
            if vol.abs() <= vol_tol {
                return Err(MeshError::DegenerateTet { tet: t, volume: vol });
            }
            tets.push(sorted);
            tet_sign.push(if vol > 0.0 { 1 } else { -1 });
        }

        let mut edges: Vec<[usize; 2]> = tets
            .iter()
            .flat_map(|t| TET_EDGES.map(|[a, b]| [t[a], t[b]]))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let mut faces: Vec<[usize; 3]> = tets
            .iter()
            .flat_map(|t| TET_FACES.map(|[a, b, c]| [t[a], t[b], t[c]]))
            .collect();
        faces.sort_unstable();
        faces.dedup();
        let edge_id = index_of(&edges);
        let face_id = index_of(&faces);

        let tet_edges: Vec<[usize; 6]> = tets
            .iter()
            .map(|t| TET_EDGES.map(|[a, b]| edge_id[&[t[a], t[b]]]))
            .collect();
        let tet_faces: Vec<[usize; 4]> = tets
            .iter()
            .map(|t| TET_FACES.map(|[a, b, c]| face_id[&[t[a], t[b], t[c]]]))
            .collect();

        // Incidences.
        let d0 = CsrI::from_rows(edges.len(), nv, |e| [(edges[e][0], -1), (edges[e][1], 1)]);
        let d1 = CsrI::from_rows(faces.len(), edges.len(), |f| {
            let [p, q, r] = faces[f];
            [
                (edge_id[&[q, r]], 1),
                (edge_id[&[p, r]], -1),
                (edge_id[&[p, q]], 1),
            ]
        });
        let d2 = CsrI::from_rows(tets.len(), faces.len(), |t| {
            let s = tet_sign[t] as i64;
            (0..4)
                .map(|k| (tet_faces[t][k], if k % 2 == 0 { s } else { -s }))
                .collect::<Vec<_>>()
        });

        // Face adjacency and boundary faces.
        let mut face_tets: Vec<Vec<(usize, i64)>> = vec![Vec::new(); faces.len()];
        for t in 0..tets.len() {
            for (f, s) in d2.row(t) {
                face_tets[f].push((t, s));
            }
        }
        let mut btris_global = Vec::new();
        let mut bface_parent = Vec::new();
        for (f, adj) in face_tets.iter().enumerate() {
            match adj.len() {
                1 => {
                    let [p, q, r] = faces[f];
                    btris_global.push(if adj[0].1 > 0 { [p, q, r] } else { [p, r, q] });
                    bface_parent.push(f);
                }
                2 => {
                    if adj[0].1 == adj[1].1 {
                        return Err(MeshError::NonManifold(format!(
                            "face {:?} has inconsistent neighbours",
                            faces[f]
                        )));
                    }
                }
                n => {
                    return Err(MeshError::NonManifold(format!(
                        "face {:?} is shared by {n} tetrahedra",
                        faces[f]
                    )))
                }
            }
        }
        if btris_global.is_empty() {
            return Err(MeshError::NonManifold("mesh has no boundary".into()));
        }

        let mut bvert_parent: Vec<usize> = btris_global.iter().flatten().copied().collect();
        bvert_parent.sort_unstable();
        bvert_parent.dedup();
        let mut local = vec![usize::MAX; nv];
        for (i, &v) in bvert_parent.iter().enumerate() {
            local[v] = i;
        }
        let btris: Vec<[usize; 3]> = btris_global.iter().map(|t| t.map(|v| local[v])).collect();
        let bpos: Vec<Point> = bvert_parent.iter().map(|&v| vertices[v]).collect();
        let boundary = SurfaceComplex::from_triangles(bpos, btris).map_err(|e| match e {
            SurfaceBuildError::Mesh(m) => m,
            SurfaceBuildError::Homology(h) => MeshError::NonManifold(h.to_string()),
        })?;
        // Local vertex order is monotone in the global order, so edge
        // orientations agree with the volume ones.
        let bedge_parent: Vec<usize> = boundary
            .edges
            .iter()
            .map(|&[a, b]| edge_id[&[bvert_parent[a], bvert_parent[b]]])
            .collect();

        let t0 = CsrI::from_rows(bvert_parent.len(), nv, |i| [(bvert_parent[i], 1)]);
        let t1 = CsrI::from_rows(bedge_parent.len(), edges.len(), |i| [(bedge_parent[i], 1)]);

        Ok(Self {
            vertices,
            edges,
            faces,
            tets,
            tet_sign,
            tet_edges,
            tet_faces,
            d0,
            d1,
            d2,
            boundary,
            bvert_parent,
            bedge_parent,
            bface_parent,
            t0,
            t1,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    /// Positions of the tet's vertices in positively oriented order.
    pub fn tet_points(&self, t: usize) -> [Point; 4] {
        let mut v = self.tets[t];
        if self.tet_sign[t] < 0 {
            v.swap(2, 3);
        }
        v.map(|i| self.vertices[i])
    }

    pub fn volume(&self, t: usize) -> f64 {
        signed_volume(&self.tet_points(t))
    }

    /// Longest edge length.
    pub fn mesh_size(&self) -> f64 {
        self.edges
            .iter()
            .map(|&[a, b]| norm3(sub(self.vertices[a], self.vertices[b])))
            .fold(0.0, f64::max)
    }

    /// Edges that are not on the boundary.
    pub fn interior_edges(&self) -> Vec<usize> {
        let mut on = vec![false; self.n_edges()];
        for &e in &self.bedge_parent {
            on[e] = true;
        }
        (0..self.n_edges()).filter(|&e| !on[e]).collect()
    }

    /// Vertices that are not on the boundary.
    pub fn interior_vertices(&self) -> Vec<usize> {
        let mut on = vec![false; self.n_vertices()];
        for &v in &self.bvert_parent {
            on[v] = true;
        }
        (0..self.n_vertices()).filter(|&v| !on[v]).collect()
    }

    /// Connected components of the volume mesh, per vertex.
    pub fn vertex_components(&self) -> (Vec<usize>, usize) {
        components(self.n_vertices(), &self.edges)
    }

    /// Lifts a boundary edge chain to a volume edge chain.
    pub fn lift_edge_chain(&self, c: &[i64]) -> Vec<i64> {
        let mut out = vec![0; self.n_edges()];
        for (i, &v) in c.iter().enumerate() {
            out[self.bedge_parent[i]] += v;
        }
        out
    }
}

#[derive(Debug)]
pub(crate) enum SurfaceBuildError {
    Mesh(MeshError),
    Homology(HomologyError),
}

fn components(n: usize, edges: &[[usize; 2]]) -> (Vec<usize>, usize) {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &[a, b] in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut comp = vec![0; n];
    let mut count = 0;
    for v in 0..n {
        let r = find(&mut parent, v);
        if label[r] == usize::MAX {
            label[r] = count;
            count += 1;
        }
        comp[v] = label[r];
    }
    (comp, count)
}

impl SurfaceComplex {
    /// Builds a closed oriented surface from consistently oriented triangles.
    pub(crate) fn from_triangles(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self, SurfaceBuildError> {
        let nv = vertices.len();
        for t in &triangles {
            for &v in t {
                if v >= nv {
                    return Err(SurfaceBuildError::Mesh(MeshError::BadVertex { index: v, count: nv }));
                }
            }
        }
        let mut edges: Vec<[usize; 2]> = triangles
            .iter()
            .flat_map(|t| [[t[1], t[2]], [t[0], t[2]], [t[0], t[1]]])
            .map(|[a, b]| [a.min(b), a.max(b)])
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let edge_id = index_of(&edges);
        let key = |a: usize, b: usize| edge_id[&[a.min(b), a.max(b)]];
        let tri_edges: Vec<[usize; 3]> = triangles
            .iter()
            .map(|t| [key(t[1], t[2]), key(t[0], t[2]), key(t[0], t[1])])
            .collect();

        // Each edge must be traversed once in each direction.
        let mut uses = vec![(0u32, 0u32); edges.len()];
        for t in &triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let e = key(a, b);
                if a < b {
                    uses[e].0 += 1;
                } else {
                    uses[e].1 += 1;
                }
            }
        }
        for (e, &(f, r)) in uses.iter().enumerate() {
            if f + r != 2 {
                let msg = format!("edge {:?} lies on {} triangles", edges[e], f + r);
                return Err(if f + r < 2 {
                    SurfaceBuildError::Homology(HomologyError::NotClosedSurface(msg))
                } else {
                    SurfaceBuildError::Mesh(MeshError::NonManifold(msg))
                });
            }
            if f != 1 {
                return Err(SurfaceBuildError::Homology(HomologyError::NotClosedSurface(
                    format!("edge {:?} has inconsistent orientation", edges[e]),
                )));
            }
        }

        let d0 = CsrI::from_rows(edges.len(), nv, |e| [(edges[e][0], -1), (edges[e][1], 1)]);
        let d1 = CsrI::from_rows(triangles.len(), edges.len(), |t| {
            let tr = triangles[t];
            (0..3)
                .map(|k| {
                    let (a, b) = (tr[k], tr[(k + 1) % 3]);
                    (key(a, b), if a < b { 1 } else { -1 })
                })
                .collect::<Vec<_>>()
        });
        let (vertex_component, n_components) = components(nv, &edges);
        let s = Self {
            vertices,
            edges,
            triangles,
            tri_edges,
            d0,
            d1,
            vertex_component,
            n_components,
        };
        s.check_vertex_links().map_err(SurfaceBuildError::Mesh)?;
        Ok(s)
    }

    /// Public constructor for standalone surfaces.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self, HomologyError> {
        Self::from_triangles(vertices, triangles).map_err(|e| match e {
            SurfaceBuildError::Homology(h) => h,
            SurfaceBuildError::Mesh(m) => HomologyError::NotClosedSurface(m.to_string()),
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Component of each triangle.
    pub fn triangle_component(&self, t: usize) -> usize {
        self.vertex_component[self.triangles[t][0]]
    }

    /// Component of each edge.
    pub fn edge_component(&self, e: usize) -> usize {
        self.vertex_component[self.edges[e][0]]
    }

    /// Edges around each vertex in counter-clockwise order (seen from the
    /// side the orientation points to), each with the triangle that lies
    /// between it and the next edge.
    pub fn vertex_stars(&self) -> Vec<Vec<(usize, usize)>> {
        let nv = self.n_vertices();
        // For vertex a of triangle (a, b, c), the ccw successor of edge ab is ac.
        let mut next: Vec<HashMap<usize, (usize, usize)>> = vec![HashMap::new(); nv];
        for (t, tr) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tr[k];
                let b = tr[(k + 1) % 3];
                let c = tr[(k + 2) % 3];
                next[a].insert(b, (c, t));
            }
        }
        let mut stars = Vec::with_capacity(nv);
        for (a, nx) in next.iter().enumerate() {
            let mut star = Vec::with_capacity(nx.len());
            let Some(&start) = nx.keys().min() else {
                stars.push(star);
                continue;
            };
            let mut b = start;
            loop {
                let (c, t) = nx[&b];
                star.push((self.edge_between(a, b), t));
                b = c;
                if b == start || star.len() > nx.len() {
                    break;
                }
            }
            stars.push(star);
        }
        stars
    }

    fn check_vertex_links(&self) -> Result<(), MeshError> {
        let mut degree = vec![0usize; self.n_vertices()];
        for &[a, b] in &self.edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        for (v, star) in self.vertex_stars().iter().enumerate() {
            if star.len() != degree[v] {
                return Err(MeshError::NonManifold(format!(
                    "boundary vertex {v} has a pinched neighbourhood"
                )));
            }
        }
        Ok(())
    }

    /// Id of the edge joining `a` and `b`.
    pub fn edge_between(&self, a: usize, b: usize) -> usize {
        let k = [a.min(b), a.max(b)];
        self.edges.binary_search(&k).expect("edge exists")
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * norm3(cross(sub(b, a), sub(c, a)))
    }

    /// Boundary of an edge chain, as a vertex chain.
    pub fn chain_boundary(&self, c: &[i64]) -> Vec<i64> {
        self.d0.tmul_vec(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_tet() -> OrientedComplex3 {
        OrientedComplex3::build(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            &[[0, 1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn single_tet_counts() {
        let c = single_tet();
        assert_eq!((c.n_vertices(), c.n_edges(), c.n_faces(), c.n_tets()), (4, 6, 4, 1));
        assert_eq!(c.boundary.n_triangles(), 4);
        assert_eq!(c.boundary.n_edges(), 6);
    }

    #[test]
    fn boundary_triangles_point_outward() {
        let c = single_tet();
        let centroid = [0.25; 3];
        let b = &c.boundary;
        for t in &b.triangles {
            let [p, q, r] = t.map(|v| b.vertices[v]);
            let n = cross(sub(q, p), sub(r, p));
            assert!(dot3(n, sub(p, centroid)) > 0.0);
        }
    }

    #[test]
    fn reversed_tet_gets_negative_sign() {
        let c = OrientedComplex3::build(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            &[[0, 2, 1, 3]],
        )
        .unwrap();
        assert_eq!(c.tet_sign[0], 1);
        let c = OrientedComplex3::build(
            vec![[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
            &[[0, 1, 2, 3]],
        )
        .unwrap();
        assert_eq!(c.tet_sign[0], -1);
        assert!(c.volume(0) > 0.0);
    }

    #[test]
    fn flat_tet_rejected() {
        let r = OrientedComplex3::build(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]],
            &[[0, 1, 2, 3]],
        );
        assert!(matches!(r, Err(MeshError::DegenerateTet { tet: 0, .. })));
    }

    #[test]
    fn three_tets_on_a_face_rejected() {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
            [0.3, 0.3, 0.5],
        ];
        let r = OrientedComplex3::build(v, &[[0, 1, 2, 3], [0, 1, 2, 4], [0, 1, 2, 5]]);
        assert!(matches!(r, Err(MeshError::NonManifold(_))));
    }
}
