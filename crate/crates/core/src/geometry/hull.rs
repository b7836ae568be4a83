//! Lower boundary of `conv(points ∪ ∂Ω × {0})` over the unit disc.
//!
//! The construction has two stages. A sweep over the rim angle `φ` finds, for
//! every boundary point `(cos φ, sin φ, 0)`, the generators touched by the
//! supporting plane `z = t (x cos φ + y sin φ - 1)` with the smallest
//! admissible slope `t`. Intervals of `φ` with a single contact are exact cone
//! fans; isolated angles with several contacts are planar rim facets. The
//! rest of the disc is covered by facets spanned by generators only: the
//! lower facets of `conv(points)`, found by gift wrapping, whose planes pass
//! below the base circle.

use std::collections::HashSet;
use std::f64::consts::TAU;

use serde::Serialize;

use super::plane::{self, convex_hull, cross, dot, polygon_area, sub, unit, wrap_from, P2};
use crate::error::{invalid, ResistError, Result};

/// Relative tolerance for two generators touching the same supporting plane.
const TIE_REL: f64 = 1e-11;
/// Fans narrower than this are rounding slivers and are dropped.
const MIN_ARC: f64 = 1e-13;
const MIN_AREA: f64 = 1e-16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FacetKind {
    /// Spanned by generators only.
    Central,
    /// Touches the base circle in exactly one point.
    Rim,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Vertex {
    Point { index: usize },
    Rim { angle: f64 },
}

/// A planar piece of the lower boundary.
#[derive(Clone, Debug, Serialize)]
pub struct Facet {
    pub kind: FacetKind,
    pub vertices: Vec<Vertex>,
    /// Plan-view polygon, counter-clockwise.
    pub plan: Vec<P2>,
    /// `u(x) = gradient · x + offset` on the facet.
    pub gradient: P2,
    pub offset: f64,
    pub plan_area: f64,
}

impl Facet {
    #[inline]
    pub fn value(&self, p: P2) -> f64 {
        dot(self.gradient, p) + self.offset
    }

    /// Unit normal pointing into the body.
    pub fn inner_normal(&self) -> [f64; 3] {
        let [gx, gy] = self.gradient;
        let n = (1.0 + gx * gx + gy * gy).sqrt();
        [-gx / n, -gy / n, 1.0 / n]
    }
}

/// Cone surface joining generator `apex` to the base arc `[alpha, beta]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ArcFan {
    pub apex: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl ArcFan {
    pub fn width(&self) -> f64 {
        self.beta - self.alpha
    }

    /// Whether the base angle `phi` lies on the arc (modulo 2π).
    pub fn contains(&self, phi: f64, tol: f64) -> bool {
        wrap_from(phi, self.alpha - tol) <= self.beta + tol
    }
}

/// Slope of the supporting plane through the rim point `c` that touches `p`.
#[inline]
fn weight(p: &[f64; 3], c: P2) -> f64 {
    -p[2] / (1.0 - p[0] * c[0] - p[1] * c[1])
}

#[inline]
fn weight_rate(p: &[f64; 3], phi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    let den = 1.0 - p[0] * c - p[1] * s;
    p[2] * (p[0] * s - p[1] * c) / (den * den)
}

/// The generator among `cands` whose weight is largest just after `phi`.
fn best_after(points: &[[f64; 3]], cands: &[usize], phi: f64) -> usize {
    let c = unit(phi);
    let wmax = cands
        .iter()
        .map(|&i| weight(&points[i], c))
        .fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = cands
        .iter()
        .copied()
        .filter(|&i| weight(&points[i], c) >= wmax * (1.0 - TIE_REL))
        .collect();
    if tied.len() == 1 {
        return tied[0];
    }
    let rate = |i: usize| weight_rate(&points[i], phi);
    let rmax = tied.iter().map(|&i| rate(i)).fold(f64::NEG_INFINITY, f64::max);
    let rtol = 1e-9 * (1.0 + rmax.abs());
    let tied2: Vec<usize> = tied.into_iter().filter(|&i| rate(i) >= rmax - rtol).collect();
    if tied2.len() == 1 {
        return tied2[0];
    }
    let c2 = unit(phi + 1e-6);
    *tied2
        .iter()
        .max_by(|&&a, &&b| weight(&points[a], c2).partial_cmp(&weight(&points[b], c2)).unwrap())
        .unwrap()
}

/// First angle after `after` at which `q` overtakes the current contact `p`.
fn takeover(p: &[f64; 3], q: &[f64; 3], after: f64) -> Option<f64> {
    let (dp, dq) = (-p[2], -q[2]);
    // q wins where dq (1 - p·c) - dp (1 - q·c) = a + b cos φ + c sin φ > 0
    let a = dq - dp;
    let b = dp * q[0] - dq * p[0];
    let c = dp * q[1] - dq * p[1];
    let r = b.hypot(c);
    if r <= 0.0 {
        return None;
    }
    let ratio = -a / r;
    if !(ratio > -1.0 && ratio < 1.0) {
        return None;
    }
    let phi = c.atan2(b) - ratio.acos();
    Some(wrap_from(phi, after + 1e-12))
}

/// Lower convex hull of a finite generator set and the base circle.
#[derive(Clone, Debug)]
pub struct HullBody {
    points: Vec<[f64; 3]>,
    facets: Vec<Facet>,
    fans: Vec<ArcFan>,
}

impl HullBody {
    pub fn new(generators: &[[f64; 3]]) -> Result<Self> {
        if generators.is_empty() {
            return Err(invalid("empty point list"));
        }
        let mut points: Vec<[f64; 3]> = Vec::with_capacity(generators.len());
        for &[x, y, z] in generators {
            if !(x.is_finite() && y.is_finite() && z.is_finite()) {
                return Err(invalid("non-finite coordinate"));
            }
            let r2 = x * x + y * y;
            if r2 > 1.0 + 1e-12 || z > 0.0 {
                return Err(ResistError::OutsideCylinder { x, y, z });
            }
            if z >= 0.0 {
                // on the top face; never below the hull
                continue;
            }
            if r2 >= 1.0 - 1e-12 {
                return Err(ResistError::OutsideCylinder { x, y, z });
            }
            let dup = points.iter().any(|q| {
                (q[0] - x).abs() < 1e-14 && (q[1] - y).abs() < 1e-14 && (q[2] - z).abs() < 1e-14
            });
            if !dup {
                points.push([x, y, z]);
            }
        }
        if points.is_empty() {
            return Err(invalid("at least one point must lie strictly below z = 0"));
        }

        let (fans, contacts) = rim_sweep(&points)?;
        let mut facets: Vec<Facet> = contacts
            .iter()
            .filter_map(|(phi, tied)| rim_facet(&points, *phi, tied))
            .collect();
        facets.extend(central_facets(&points));
        Ok(Self { points, facets, fans })
    }

    /// Generators after dropping points on `z = 0` and duplicates.
    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn arc_fans(&self) -> &[ArcFan] {
        &self.fans
    }

    pub fn height(&self) -> f64 {
        self.points.iter().map(|p| -p[2]).fold(0.0, f64::max)
    }

    /// Plan area of a fan: `½ ∫ (1 - x₀cos φ - y₀sin φ) dφ` over its arc.
    pub fn fan_area(&self, fan: &ArcFan) -> f64 {
        let p = self.points[fan.apex];
        let (a, b) = (fan.alpha, fan.beta);
        0.5 * ((b - a) - p[0] * (b.sin() - a.sin()) + p[1] * (b.cos() - a.cos()))
    }

    /// Value and gradient of the supporting plane of `fan` nearest to `x`;
    /// the gradient is `None` at the apex.
    fn fan_plane(&self, fan: &ArcFan, x: P2) -> (f64, Option<P2>) {
        let p = self.points[fan.apex];
        let pp = [p[0], p[1]];
        let v = sub(x, pp);
        let vv = dot(v, v);
        if vv < 1e-28 {
            return (p[2], None);
        }
        let pv = dot(pp, v);
        let s = (-pv + (pv * pv + vv * (1.0 - dot(pp, pp))).sqrt()) / vv;
        let hit = [pp[0] + s * v[0], pp[1] + s * v[1]];
        let phi = hit[1].atan2(hit[0]);
        let off = wrap_from(phi, fan.alpha) - fan.alpha;
        let w = fan.width();
        let ang = if off <= w {
            fan.alpha + off
        } else if off - w < TAU - off {
            fan.beta
        } else {
            fan.alpha
        };
        let c = unit(ang);
        let t = weight(&p, c);
        (t * (dot(c, x) - 1.0), Some([t * c[0], t * c[1]]))
    }

    /// `u(x)`: the maximum over all supporting planes of the pieces.
    pub fn value_at(&self, x: P2) -> f64 {
        let a = self.facets.iter().map(|f| f.value(x));
        let b = self.fans.iter().map(|f| self.fan_plane(f, x).0);
        a.chain(b).fold(f64::NEG_INFINITY, f64::max).min(0.0)
    }

    /// Gradient of `u`, or `None` on the skeleton where active pieces disagree.
    pub fn gradient_at(&self, x: P2) -> Option<P2> {
        let mut vals: Vec<(f64, Option<P2>)> = Vec::with_capacity(self.facets.len() + self.fans.len());
        vals.extend(self.facets.iter().map(|f| (f.value(x), Some(f.gradient))));
        vals.extend(self.fans.iter().map(|f| self.fan_plane(f, x)));
        let vmax = vals.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-12 * (1.0 + vmax.abs());
        let mut grad: Option<P2> = None;
        for (v, g) in vals {
            if v < vmax - tol {
                continue;
            }
            let g = g?;
            match grad {
                None => grad = Some(g),
                Some(h) => {
                    let scale = 1.0 + h[0].abs().max(h[1].abs());
                    if (g[0] - h[0]).abs() > 1e-9 * scale || (g[1] - h[1]).abs() > 1e-9 * scale {
                        return None;
                    }
                }
            }
        }
        grad
    }
}

type Contacts = Vec<(f64, Vec<usize>)>;

fn rim_sweep(points: &[[f64; 3]]) -> Result<(Vec<ArcFan>, Contacts)> {
    let n = points.len();
    let all: Vec<usize> = (0..n).collect();
    let start = 0.0;
    let end = start + TAU;
    let mut apex = best_after(points, &all, start);
    let mut phi = start;
    let mut arcs: Vec<ArcFan> = Vec::new();
    let mut contacts: Contacts = Vec::new();
    let mut finished = false;
    for _ in 0..(8 * n + 64) {
        let mut next = f64::INFINITY;
        let mut movers: Vec<(usize, f64)> = Vec::new();
        for q in 0..n {
            if q == apex {
                continue;
            }
            if let Some(t) = takeover(&points[apex], &points[q], phi) {
                movers.push((q, t));
                next = next.min(t);
            }
        }
        if next >= end {
            arcs.push(ArcFan { apex, alpha: phi, beta: end });
            finished = true;
            break;
        }
        arcs.push(ArcFan { apex, alpha: phi, beta: next });
        let c = unit(next);
        let wa = weight(&points[apex], c);
        let mut tied: Vec<usize> = (0..n)
            .filter(|&r| weight(&points[r], c) >= wa * (1.0 - TIE_REL))
            .collect();
        tied.extend(movers.iter().filter(|m| m.1 <= next + 1e-10).map(|m| m.0));
        tied.sort_unstable();
        tied.dedup();
        let others: Vec<usize> = tied.iter().copied().filter(|&i| i != apex).collect();
        let successor = best_after(points, &others, next);
        contacts.push((next, tied));
        apex = successor;
        phi = next;
    }
    if !finished {
        return Err(ResistError::Numerical("rim sweep did not close".into()));
    }

    // merge same-apex neighbours, including across φ = 0
    let mut merged: Vec<ArcFan> = Vec::new();
    for a in arcs {
        match merged.last_mut() {
            Some(last) if last.apex == a.apex && (last.beta - a.alpha).abs() < 1e-12 => last.beta = a.beta,
            _ => merged.push(a),
        }
    }
    if merged.len() > 1 && merged[0].apex == merged[merged.len() - 1].apex {
        let last = merged.pop().unwrap();
        merged[0].alpha = last.alpha - TAU;
    }
    let fans = merged
        .into_iter()
        .filter(|f| f.width() > MIN_ARC)
        .map(|mut f| {
            let a = plane::normalize_angle(f.alpha);
            f.beta = a + (f.beta - f.alpha);
            f.alpha = a;
            f
        })
        .collect();
    Ok((fans, contacts))
}

fn rim_facet(points: &[[f64; 3]], phi: f64, tied: &[usize]) -> Option<Facet> {
    let c = unit(phi);
    let t = tied
        .iter()
        .map(|&i| weight(&points[i], c))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut labelled: Vec<(P2, Vertex)> = tied
        .iter()
        .map(|&i| ([points[i][0], points[i][1]], Vertex::Point { index: i }))
        .collect();
    labelled.push((c, Vertex::Rim { angle: phi }));
    let hull = convex_hull(&labelled);
    let plan: Vec<P2> = hull.iter().map(|h| h.0).collect();
    let area = polygon_area(&plan);
    if hull.len() < 3 || area <= MIN_AREA {
        return None;
    }
    Some(Facet {
        kind: FacetKind::Rim,
        vertices: hull.iter().map(|h| h.1).collect(),
        plan,
        gradient: [t * c[0], t * c[1]],
        offset: -t,
        plan_area: area,
    })
}

/// Facets spanned by generators alone: the lower facets of `conv(points)`
/// whose plane passes strictly below the base circle. Planes touching the
/// circle belong to rim facets, which already cover their point part.
fn central_facets(points: &[[f64; 3]]) -> Vec<Facet> {
    let labelled: Vec<(P2, usize)> = (0..points.len()).map(|i| ([points[i][0], points[i][1]], i)).collect();
    let boundary = convex_hull(&labelled);
    let poly: Vec<P2> = boundary.iter().map(|b| b.0).collect();
    if boundary.len() < 3 || polygon_area(&poly) <= MIN_AREA {
        return Vec::new();
    }
    let cands: Vec<usize> = (0..points.len()).collect();
    let depth = points.iter().map(|p| -p[2]).fold(0.0, f64::max);
    let plane_tol = 1e-10 * (1.0 + depth);

    let mut done: HashSet<(usize, usize)> = HashSet::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut stack: Vec<(usize, usize)> = (0..boundary.len())
        .map(|i| (boundary[i].1, boundary[(i + 1) % boundary.len()].1))
        .collect();
    let mut facets = Vec::new();
    let xy = |i: usize| -> P2 { [points[i][0], points[i][1]] };

    while let Some((a, b)) = stack.pop() {
        if !done.insert((a, b)) {
            continue;
        }
        let (pa, pb) = (xy(a), xy(b));
        let e = sub(pb, pa);
        let len2 = dot(e, e);
        let len = len2.sqrt();
        let (za, zb) = (points[a][2], points[b][2]);
        let mut best: Option<(f64, usize)> = None;
        for &c in &cands {
            let pc = xy(c);
            let d = cross(pa, pb, pc) / len;
            if d <= 1e-12 {
                continue;
            }
            let t = dot(e, sub(pc, pa)) / len2;
            let s = (points[c][2] - (za + (zb - za) * t)) / d;
            if best.is_none_or(|(bs, _)| s < bs) {
                best = Some((s, c));
            }
        }
        let Some((_, c)) = best else { continue };
        // plane through a, b, c
        let f = sub(xy(c), pa);
        let det = e[0] * f[1] - e[1] * f[0];
        let (dzb, dzc) = (zb - za, points[c][2] - za);
        let g = [(dzb * f[1] - dzc * e[1]) / det, (e[0] * dzc - f[0] * dzb) / det];
        let off = za - dot(g, pa);
        let mut contact: Vec<usize> = cands
            .iter()
            .copied()
            .filter(|&i| (points[i][2] - (dot(g, xy(i)) + off)).abs() <= plane_tol)
            .collect();
        contact.sort_unstable();
        if !seen.insert(contact.clone()) {
            continue;
        }
        let hull = convex_hull(&contact.iter().map(|&i| (xy(i), i)).collect::<Vec<_>>());
        let plan: Vec<P2> = hull.iter().map(|h| h.0).collect();
        let area = polygon_area(&plan);
        let m = hull.len();
        for i in 0..m {
            let (u, v) = (hull[i].1, hull[(i + 1) % m].1);
            done.insert((u, v));
            if !done.contains(&(v, u)) {
                stack.push((v, u));
            }
        }
        let below_rim = g[0].hypot(g[1]) + off < -plane_tol;
        if area > MIN_AREA && below_rim {
            facets.push(Facet {
                kind: FacetKind::Central,
                vertices: hull.iter().map(|h| Vertex::Point { index: h.1 }).collect(),
                plan,
                gradient: g,
                offset: off,
                plan_area: area,
            });
        }
    }
    facets
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn total_area(h: &HullBody) -> f64 {
        h.facets().iter().map(|f| f.plan_area).sum::<f64>()
            + h.arc_fans().iter().map(|f| h.fan_area(f)).sum::<f64>()
    }

    #[test]
    fn single_apex_is_a_full_cone() {
        let h = HullBody::new(&[[0.0, 0.0, -1.0]]).unwrap();
        assert_eq!(h.arc_fans().len(), 1);
        assert!(h.facets().is_empty());
        let f = h.arc_fans()[0];
        assert!((f.width() - TAU).abs() < 1e-15);
        assert!((h.value_at([0.3, 0.4]) + 0.5).abs() < 1e-14);
        let g = h.gradient_at([0.3, 0.4]).unwrap();
        assert!((g[0] - 0.6).abs() < 1e-14 && (g[1] - 0.8).abs() < 1e-14);
        assert!(h.gradient_at([0.0, 0.0]).is_none());
    }

    #[test]
    fn two_apexes_give_two_fans_and_two_triangles() {
        let a = 0.5;
        let h = HullBody::new(&[[a, 0.0, -1.0], [-a, 0.0, -1.0]]).unwrap();
        assert_eq!(h.arc_fans().len(), 2);
        assert_eq!(h.facets().len(), 2);
        for f in h.facets() {
            assert_eq!(f.kind, FacetKind::Rim);
            assert!((f.plan_area - a).abs() < 1e-12);
            assert!((f.gradient[0]).abs() < 1e-12 && (f.gradient[1].abs() - 1.0).abs() < 1e-12);
        }
        for fan in h.arc_fans() {
            assert!((fan.width() - PI).abs() < 1e-12);
        }
        assert!((total_area(&h) - PI).abs() < 1e-12);
    }

    #[test]
    fn triangle_has_central_facet() {
        let pts: Vec<[f64; 3]> = (0..3)
            .map(|i| {
                let t = TAU * i as f64 / 3.0;
                [0.5 * t.cos(), 0.5 * t.sin(), -1.0]
            })
            .collect();
        let h = HullBody::new(&pts).unwrap();
        assert_eq!(h.arc_fans().len(), 3);
        let central: Vec<_> = h.facets().iter().filter(|f| f.kind == FacetKind::Central).collect();
        assert_eq!(central.len(), 1);
        assert!(central[0].gradient[0].abs() < 1e-12 && central[0].gradient[1].abs() < 1e-12);
        assert!((total_area(&h) - PI).abs() < 1e-12);
    }

    #[test]
    fn points_above_the_cone_are_inactive() {
        let h = HullBody::new(&[[0.0, 0.0, -1.0], [0.5, 0.0, -0.1], [0.2, 0.2, 0.0]]).unwrap();
        assert_eq!(h.arc_fans().len(), 1);
        assert!(h.facets().is_empty());
    }

    #[test]
    fn rejects_bad_points() {
        assert!(HullBody::new(&[]).is_err());
        assert!(HullBody::new(&[[1.2, 0.0, -1.0]]).is_err());
        assert!(HullBody::new(&[[0.0, 0.0, 0.0]]).is_err());
        assert!(HullBody::new(&[[1.0, 0.0, -1.0]]).is_err());
    }
}
