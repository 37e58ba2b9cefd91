//! Built-in tetrahedral meshes: single and double tetrahedra, cubes, balls,
//! solid tori and voxel slabs with holes.

use crate::complex::Point;

/// Vertex positions and tetrahedra.
#[derive(Clone, Debug, Default)]
pub struct TetMesh {
    pub vertices: Vec<Point>,
    pub tets: Vec<[usize; 4]>,
}

/// How a hexahedral cell is cut into tetrahedra.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HexSplit {
    /// Five tets, alternating with the cell parity.
    Five,
    /// Six tets coned from the cell's lowest-numbered vertex.
    Six,
}

/// Hex corners are indexed by bits `x | y << 1 | z << 2`.
fn split_hex(corners: [usize; 8], parity: usize, split: HexSplit, out: &mut Vec<[usize; 4]>) {
    let c = corners;
    match split {
        HexSplit::Five => {
            let tets: [[usize; 4]; 5] = if parity % 2 == 0 {
                [[0, 3, 5, 6], [1, 0, 3, 5], [2, 0, 3, 6], [4, 0, 5, 6], [7, 3, 5, 6]]
            } else {
                [[1, 2, 4, 7], [0, 1, 2, 4], [3, 1, 2, 7], [5, 1, 4, 7], [6, 2, 4, 7]]
            };
            out.extend(tets.iter().map(|t| t.map(|k| c[k])));
        }
        HexSplit::Six => six_tets(c, out),
    }
}

/// Cone from the lowest-numbered corner over the three faces not containing
/// it; each of those faces is cut along the diagonal through its own
/// lowest-numbered corner. Neighbouring cells agree on shared faces because
/// the rule only depends on global vertex numbers.
fn six_tets(c: [usize; 8], out: &mut Vec<[usize; 4]>) {
    let m = (0..8).min_by_key(|&k| c[k]).unwrap();
    // Faces of the cube as corner-bit quads in cyclic order.
    let faces: [[usize; 4]; 6] = [
        [0, 1, 3, 2],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 3, 7, 6],
        [0, 2, 6, 4],
        [1, 3, 7, 5],
    ];
    for f in faces {
        if f.contains(&m) {
            continue;
        }
        let k = (0..4).min_by_key(|&i| c[f[i]]).unwrap();
        let q = [f[k], f[(k + 1) % 4], f[(k + 2) % 4], f[(k + 3) % 4]];
        out.push([c[m], c[q[0]], c[q[1]], c[q[2]]]);
        out.push([c[m], c[q[0]], c[q[2]], c[q[3]]]);
    }
}

/// Regular grid of hexahedra over `[0, nx] x [0, ny] x [0, nz]` with cells
/// kept by `keep`, mapped through `map` and split into tets.
pub fn hex_grid(
    n: [usize; 3],
    split: HexSplit,
    keep: impl Fn(usize, usize, usize) -> bool,
    map: impl Fn(usize, usize, usize) -> Point,
) -> TetMesh {
    let [nx, ny, nz] = n;
    let id = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut tets = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if !keep(i, j, k) {
                    continue;
                }
                let corners = [0, 1, 2, 3, 4, 5, 6, 7].map(|b| id(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1)));
                split_hex(corners, i + j + k, split, &mut tets);
            }
        }
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(map(i, j, k));
            }
        }
    }
    compact(TetMesh { vertices, tets })
}

/// Drops vertices not used by any tet and renumbers monotonically.
pub fn compact(mesh: TetMesh) -> TetMesh {
    let mut used = vec![false; mesh.vertices.len()];
    for t in &mesh.tets {
        for &v in t {
            used[v] = true;
        }
    }
    let mut new_id = vec![usize::MAX; mesh.vertices.len()];
    let mut vertices = Vec::new();
    for (v, p) in mesh.vertices.iter().enumerate() {
        if used[v] {
            new_id[v] = vertices.len();
            vertices.push(*p);
        }
    }
    let tets = mesh.tets.iter().map(|t| t.map(|v| new_id[v])).collect();
    TetMesh { vertices, tets }
}

/// The unit right tetrahedron.
pub fn single_tet() -> TetMesh {
    TetMesh {
        vertices: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        tets: vec![[0, 1, 2, 3]],
    }
}

/// Two tetrahedra glued along a face.
pub fn two_tets() -> TetMesh {
    TetMesh {
        vertices: vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ],
        tets: vec![[0, 1, 2, 3], [0, 2, 1, 4]],
    }
}

/// The cube `[-s, s]^3` with `n` cells per side.
pub fn cube(n: usize, side: f64, split: HexSplit) -> TetMesh {
    let h = side / n as f64;
    hex_grid([n; 3], split, |_, _, _| true, |i, j, k| {
        [i, j, k].map(|a| -0.5 * side + h * a as f64)
    })
}

/// A ball of the given radius from an `n^3` cube grid (`n` even) pushed
/// onto the sphere.
///
/// Grid coordinates are exactly antisymmetric and the five-tet split
/// alternates with cell parity, so for even `n` the mesh is invariant under
/// the three coordinate reflections.
pub fn ball(n: usize, radius: f64) -> TetMesh {
    assert!(n >= 2 && n % 2 == 0, "ball grid needs an even cell count");
    hex_grid([n; 3], HexSplit::Five, |_, _, _| true, |i, j, k| {
        let p = [i, j, k].map(|a| (2 * a as i64 - n as i64) as f64 / n as f64);
        let s = p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let r2 = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let f = if r2 == 0.0 { 1.0 } else { (1.0 - s) + s * s / r2 };
        p.map(|x| radius * f * x)
    })
}

/// Cell count per side for a ball at refinement level `refine`.
pub fn ball_cells_for_refine(refine: usize) -> usize {
    2usize << refine
}

/// Solid torus with major radius `big_r` and minor radius `r`.
///
/// The disc cross-section is an O-grid: a core square of `(nv/4)^2` cells
/// surrounded by `nw` layers of `nv` cells reaching the circle; it is swept
/// through `nu` segments around the axis.
pub fn solid_torus(big_r: f64, r: f64, nu: usize, nv: usize, nw: usize) -> TetMesh {
    assert!(nu >= 3 && nv >= 4 && nv % 4 == 0 && nw >= 1, "bad solid torus resolution");
    let m = nv / 4;
    let a = 0.5 * r / std::f64::consts::SQRT_2;
    // 2D section points and quads.
    let mut pts2: Vec<[f64; 2]> = Vec::new();
    let core = |i: usize, j: usize| i + (m + 1) * j;
    for j in 0..=m {
        for i in 0..=m {
            pts2.push([-a + 2.0 * a * i as f64 / m as f64, -a + 2.0 * a * j as f64 / m as f64]);
        }
    }
    let mut quads: Vec<[usize; 4]> = Vec::new();
    for j in 0..m {
        for i in 0..m {
            quads.push([core(i, j), core(i + 1, j), core(i + 1, j + 1), core(i, j + 1)]);
        }
    }
    // Core boundary, counter-clockwise from the lower-left corner.
    let mut ring0: Vec<usize> = Vec::with_capacity(nv);
    ring0.extend((0..m).map(|i| core(i, 0)));
    ring0.extend((0..m).map(|j| core(m, j)));
    ring0.extend((0..m).map(|i| core(m - i, m)));
    ring0.extend((0..m).map(|j| core(0, m - j)));
    let mut prev = ring0.clone();
    for l in 1..=nw {
        let t = l as f64 / nw as f64;
        let mut ring = Vec::with_capacity(nv);
        for &q in &ring0 {
            let p = pts2[q];
            let len = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let c = [r * p[0] / len, r * p[1] / len];
            ring.push(pts2.len());
            pts2.push([p[0] + t * (c[0] - p[0]), p[1] + t * (c[1] - p[1])]);
        }
        for s in 0..nv {
            let s1 = (s + 1) % nv;
            quads.push([prev[s], prev[s1], ring[s1], ring[s]]);
        }
        prev = ring;
    }

    let np = pts2.len();
    let mut vertices = Vec::with_capacity(np * nu);
    for k in 0..nu {
        let u = 2.0 * std::f64::consts::PI * k as f64 / nu as f64;
        for p in &pts2 {
            let rho = big_r + p[0];
            vertices.push([rho * u.cos(), rho * u.sin(), p[1]]);
        }
    }
    let mut tets = Vec::new();
    for k in 0..nu {
        let k1 = (k + 1) % nu;
        for q in &quads {
            let lo = q.map(|v| v + np * k);
            let hi = q.map(|v| v + np * k1);
            // bits: x along quad edge 0->1, y towards 3, z around the axis.
            let corners = [lo[0], lo[1], lo[3], lo[2], hi[0], hi[1], hi[3], hi[2]];
            six_tets(corners, &mut tets);
        }
    }
    TetMesh { vertices, tets }
}

/// A slab of `nx x ny x 1` unit voxels, each cut into `m^3` cells, with the
/// listed voxel columns removed. Removing `g` separated interior columns
/// gives a handlebody of genus `g`.
pub fn holed_slab(nx: usize, ny: usize, holes: &[(usize, usize)], m: usize) -> TetMesh {
    let h = 1.0 / m as f64;
    hex_grid(
        [nx * m, ny * m, m],
        HexSplit::Six,
        |i, j, _| !holes.contains(&(i / m, j / m)),
        |i, j, k| [h * i as f64, h * j as f64, h * k as f64],
    )
}

/// Genus-2 slab: a 5 x 3 block with two holes.
pub fn genus2_slab(m: usize) -> TetMesh {
    holed_slab(5, 3, &[(1, 1), (3, 1)], m)
}
