//! Independent reference computations shared by the integration tests.
//!
//! Whitney fields are evaluated pointwise from barycentric coordinates
//! obtained as sub-simplex volume ratios, their gradients by central
//! differences, and integrals with low-order quadrature that is exact for
//! the polynomial degrees involved.

#![allow(dead_code)]

use hodgecurl_core::complex::{cross, dot3, signed_volume, sub, Point};

pub fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
}

/// Barycentric coordinates of `x` in a tet, by volume ratios.
pub fn tet_bary(p: &[Point; 4], x: Point) -> [f64; 4] {
    let v = signed_volume(p);
    [0, 1, 2, 3].map(|i| {
        let mut q = *p;
        q[i] = x;
        signed_volume(&q) / v
    })
}

/// Gradient of barycentric coordinate `i` by central differences.
pub fn tet_bary_grad(p: &[Point; 4], i: usize) -> Point {
    let c = centroid4(p);
    let h = 1e-3;
    [0, 1, 2].map(|k| {
        let mut a = c;
        let mut b = c;
        a[k] += h;
        b[k] -= h;
        (tet_bary(p, a)[i] - tet_bary(p, b)[i]) / (2.0 * h)
    })
}

pub fn centroid4(p: &[Point; 4]) -> Point {
    [0, 1, 2].map(|k| (p[0][k] + p[1][k] + p[2][k] + p[3][k]) / 4.0)
}

/// Whitney 1-form of local edge `(a, b)` evaluated at `x`.
pub fn whitney1(p: &[Point; 4], a: usize, b: usize, x: Point) -> Point {
    let l = tet_bary(p, x);
    let ga = tet_bary_grad(p, a);
    let gb = tet_bary_grad(p, b);
    [0, 1, 2].map(|k| l[a] * gb[k] - l[b] * ga[k])
}

/// Curl of a vector field by central differences at `x`.
pub fn curl_fd(f: impl Fn(Point) -> Point, x: Point) -> Point {
    let h = 1e-4;
    let d = |k: usize, comp: usize| {
        let mut a = x;
        let mut b = x;
        a[k] += h;
        b[k] -= h;
        (f(a)[comp] - f(b)[comp]) / (2.0 * h)
    };
    [d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0)]
}

/// Four-point tetrahedral rule, exact for quadratics.
pub fn tet_quad(p: &[Point; 4]) -> Vec<(Point, f64)> {
    let a = 0.585_410_196_624_968_5;
    let b = 0.138_196_601_125_010_5;
    let vol = signed_volume(p).abs();
    (0..4)
        .map(|i| {
            let w: [f64; 4] = std::array::from_fn(|j| if i == j { a } else { b });
            let x = [0, 1, 2].map(|k| (0..4).map(|j| w[j] * p[j][k]).sum());
            (x, vol / 4.0)
        })
        .collect()
}

/// Edge-midpoint triangle rule, exact for quadratics.
pub fn tri_quad(p: &[Point; 3]) -> Vec<(Point, f64)> {
    let area = 0.5 * dot3(cross(sub(p[1], p[0]), sub(p[2], p[0])), cross(sub(p[1], p[0]), sub(p[2], p[0]))).sqrt();
    (0..3)
        .map(|i| (lerp(p[i], p[(i + 1) % 3], 0.5), area / 3.0))
        .collect()
}

pub fn tri_area_vec(p: &[Point; 3]) -> Point {
    cross(sub(p[1], p[0]), sub(p[2], p[0])).map(|x| 0.5 * x)
}

/// Barycentric coordinates in a triangle by signed area ratios.
pub fn tri_bary(p: &[Point; 3], x: Point) -> [f64; 3] {
    let n = tri_area_vec(p);
    let nn = dot3(n, n);
    [0, 1, 2].map(|i| {
        let mut q = *p;
        q[i] = x;
        dot3(tri_area_vec(&q), n) / nn
    })
}

/// Tangential gradient of triangle barycentric `i` by central differences
/// along the two edge directions.
pub fn tri_bary_grad(p: &[Point; 3], i: usize) -> Point {
    let c = [0, 1, 2].map(|k| (p[0][k] + p[1][k] + p[2][k]) / 3.0);
    let t1 = sub(p[1], p[0]);
    let n = cross(t1, sub(p[2], p[0]));
    let t2 = cross(n, t1);
    let unit = |v: Point| {
        let l = dot3(v, v).sqrt();
        v.map(|x| x / l)
    };
    let (u1, u2) = (unit(t1), unit(t2));
    let h = 1e-4;
    let dd = |u: Point| {
        let a = [0, 1, 2].map(|k| c[k] + h * u[k]);
        let b = [0, 1, 2].map(|k| c[k] - h * u[k]);
        (tri_bary(p, a)[i] - tri_bary(p, b)[i]) / (2.0 * h)
    };
    let (d1, d2) = (dd(u1), dd(u2));
    [0, 1, 2].map(|k| d1 * u1[k] + d2 * u2[k])
}

/// Surface Whitney 1-form of local edge `(a, b)` at `x`.
pub fn tri_whitney1(p: &[Point; 3], a: usize, b: usize, x: Point) -> Point {
    let l = tri_bary(p, x);
    let ga = tri_bary_grad(p, a);
    let gb = tri_bary_grad(p, b);
    [0, 1, 2].map(|k| l[a] * gb[k] - l[b] * ga[k])
}

pub fn dense_max_abs_diff(a: &faer::Mat<f64>, b: &faer::Mat<f64>) -> f64 {
    let mut m = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            m = m.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    m
}
