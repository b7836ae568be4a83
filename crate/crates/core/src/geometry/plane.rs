//! Small planar helpers shared by the hull and the CSV dump.

use std::f64::consts::TAU;

pub type P2 = [f64; 2];

#[inline]
pub fn cross(o: P2, a: P2, b: P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

#[inline]
pub fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn unit(phi: f64) -> P2 {
    let (s, c) = phi.sin_cos();
    [c, s]
}

/// Shoelace area of a polygon given in counter-clockwise order.
pub fn polygon_area(poly: &[P2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        twice += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * twice
}

/// Convex hull (monotone chain) of labelled points, counter-clockwise,
/// dropping collinear points. Returns the labels of the hull vertices.
pub fn convex_hull<L: Copy>(points: &[(P2, L)]) -> Vec<(P2, L)> {
    let mut pts: Vec<(P2, L)> = points.to_vec();
    pts.sort_by(|a, b| {
        a.0[0]
            .partial_cmp(&b.0[0])
            .unwrap()
            .then(a.0[1].partial_cmp(&b.0[1]).unwrap())
    });
    pts.dedup_by(|a, b| (a.0[0] - b.0[0]).abs() < 1e-15 && (a.0[1] - b.0[1]).abs() < 1e-15);
    if pts.len() < 3 {
        return pts;
    }
    let scale = pts
        .iter()
        .fold(1.0f64, |m, p| m.max(p.0[0].abs()).max(p.0[1].abs()));
    let eps = 1e-14 * scale * scale;
    let turn = |h: &[(P2, L)], p: P2| {
        let n = h.len();
        n >= 2 && cross(h[n - 2].0, h[n - 1].0, p) <= eps
    };
    let mut lower: Vec<(P2, L)> = Vec::with_capacity(pts.len());
    for p in &pts {
        while turn(&lower, p.0) {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<(P2, L)> = Vec::with_capacity(pts.len());
    for p in pts.iter().rev() {
        while turn(&upper, p.0) {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Whether `p` lies inside (or within `tol` of) a counter-clockwise convex polygon.
pub fn in_convex_polygon(poly: &[P2], p: P2, tol: f64) -> bool {
    let n = poly.len();
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let e = sub(b, a);
        let len = dot(e, e).sqrt();
        cross(a, b, p) >= -tol * len
    })
}

/// Representative of `phi` in `[base, base + 2π)`.
#[inline]
pub fn wrap_from(phi: f64, base: f64) -> f64 {
    base + (phi - base).rem_euclid(TAU)
}

/// Angle normalized to `(-π, π]`.
pub fn normalize_angle(phi: f64) -> f64 {
    let mut a = phi.rem_euclid(TAU);
    if a > std::f64::consts::PI {
        a -= TAU;
    }
    a
}
