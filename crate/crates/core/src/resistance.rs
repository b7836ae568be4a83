//! Resistance functionals `J_δ(u) = ∫_Ω 1/(|∇u|² + δ) dx`.
//!
//! `δ = M⁻²` turns the classical functional of a body of height `M` into the
//! rescaled `J_M` after normalizing the body; `δ = 0` is the limit `J_∞`.
//! Evaluating a body "as is" with `δ = 1` gives the classical `J`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, ResistError, Result};
use crate::geometry::{ConvexBody, FacetKind, Profile};
use crate::quadrature::{integrate, Tolerance};

/// The regularization `δ ≥ 0` of the integrand.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Delta(f64);

impl Delta {
    pub const LIMIT: Delta = Delta(0.0);

    pub fn new(delta: f64) -> Result<Self> {
        if delta >= 0.0 && delta.is_finite() {
            Ok(Self(delta))
        } else {
            Err(invalid(format!("delta = {delta} must be finite and nonnegative")))
        }
    }

    /// `δ = M⁻²`.
    pub fn from_height(m: f64) -> Result<Self> {
        if m > 0.0 && m.is_finite() {
            Ok(Self(1.0 / (m * m)))
        } else {
            Err(invalid(format!("height M = {m} must be finite and positive")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `M = δ^{-1/2}`, or `None` for the limiting problem.
    pub fn height(self) -> Option<f64> {
        (self.0 > 0.0).then(|| self.0.sqrt().recip())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartKind {
    ConeArc,
    Facet,
    Triangle,
    Radial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub id: String,
    pub kind: PartKind,
    pub value: f64,
}

/// Total resistance with its per-piece contributions. A flat piece under
/// `δ = 0` contributes `f64::INFINITY`, and so does the total.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResistanceBreakdown {
    pub total: f64,
    pub parts: Vec<Part>,
}

impl ResistanceBreakdown {
    pub fn from_parts(parts: Vec<Part>) -> Self {
        let total = parts.iter().map(|p| p.value).sum();
        Self { total, parts }
    }

    pub fn is_infinite(&self) -> bool {
        self.total.is_infinite()
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.parts.iter().find(|p| p.id == id).map(|p| p.value)
    }
}

#[inline]
fn flat_piece(area: f64, grad2: f64, delta: f64) -> f64 {
    let den = grad2 + delta;
    if den > 0.0 {
        area / den
    } else if area > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// `J_δ` of `body` evaluated exactly on its structure.
pub fn resistance(body: &ConvexBody, delta: Delta) -> Result<ResistanceBreakdown> {
    let d = delta.value();
    if let Some(h) = body.as_hull() {
        let mut parts = Vec::with_capacity(h.facets().len() + h.arc_fans().len());
        for (i, f) in h.facets().iter().enumerate() {
            let g = f.gradient;
            let (id, kind) = match f.kind {
                FacetKind::Central => (format!("F{i}"), PartKind::Facet),
                FacetKind::Rim => (format!("T{i}"), PartKind::Triangle),
            };
            parts.push(Part { id, kind, value: flat_piece(f.plan_area, g[0] * g[0] + g[1] * g[1], d) });
        }
        for (i, fan) in h.arc_fans().iter().enumerate() {
            let value = cone_arc_resistance(h.points()[fan.apex], [fan.alpha, fan.beta], delta)?;
            parts.push(Part { id: format!("C{i}"), kind: PartKind::ConeArc, value });
        }
        return Ok(ResistanceBreakdown::from_parts(parts));
    }
    let profile = body.radial_profile().expect("non-hull bodies are radial");
    Ok(ResistanceBreakdown::from_parts(radial_parts(profile, d)))
}

fn radial_parts(profile: &Profile, d: f64) -> Vec<Part> {
    match profile {
        Profile::PiecewiseLinear { knots, values } => knots
            .windows(2)
            .zip(values.windows(2))
            .enumerate()
            .map(|(i, (k, v))| {
                let s = (v[1] - v[0]) / (k[1] - k[0]);
                let ring = PI * (k[1] * k[1] - k[0] * k[0]);
                Part { id: format!("R{i}"), kind: PartKind::Radial, value: flat_piece(ring, s * s, d) }
            })
            .collect(),
        Profile::Power { exponent, depth } => {
            let (e, c) = (*exponent, depth * exponent);
            let value = if d == 0.0 {
                // 2π ∫ r^{3-2e} / c² dr
                if e < 2.0 {
                    2.0 * PI / (c * c * (4.0 - 2.0 * e))
                } else {
                    f64::INFINITY
                }
            } else {
                let f = |r: f64| {
                    let s = c * r.powf(e - 1.0);
                    r / (s * s + d)
                };
                2.0 * PI * integrate(f, 0.0, 1.0, Tolerance::default())
            };
            vec![Part { id: "R0".into(), kind: PartKind::Radial, value }]
        }
    }
}

/// `½ ∫_α^β (1 - x₀cos φ - y₀sin φ)³ / (1 + δ (1 - x₀cos φ - y₀sin φ)²) dφ`:
/// the resistance of the fan from an apex at depth 1 to the arc.
fn unit_depth_fan(x0: f64, y0: f64, arc: [f64; 2], delta: f64) -> f64 {
    let f = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let a = 1.0 - x0 * c - y0 * s;
        a * a * a / (1.0 + delta * a * a)
    };
    0.5 * integrate(f, arc[0], arc[1], Tolerance::default())
}

/// Resistance of the cone surface joining `apex = (x₀, y₀, -z₀)` to the base
/// arc `[α, β]`. Apexes at depth `z₀ ≠ 1` are reduced to depth one through
/// `J_δ(u) = z₀⁻² J_{δ/z₀²}(u/z₀)`.
pub fn cone_arc_resistance(apex: [f64; 3], arc: [f64; 2], delta: Delta) -> Result<f64> {
    let [x0, y0, z] = apex;
    let r0 = x0.hypot(y0);
    if !(r0 < 1.0) {
        return Err(ResistError::ApexOnBoundary(r0));
    }
    let z0 = -z;
    if !(z0 > 0.0) {
        return Err(invalid(format!("apex depth {z0} must be positive")));
    }
    let scale = z0 * z0;
    Ok(unit_depth_fan(x0, y0, arc, delta.value() / scale) / scale)
}

/// Midpoint estimate of `J_δ` on a graded polar grid: `n` rings with
/// radii `(i/n)²` and `n` equal sectors, each cell sampled at its midpoint in
/// `(√r, θ)` and weighted by its exact area. Points where the gradient is
/// undefined are skipped.
pub fn resistance_grid(body: &ConvexBody, delta: Delta, n: usize) -> Result<f64> {
    if n < 16 {
        return Err(invalid(format!("grid resolution {n} must be >= 16")));
    }
    let d = delta.value();
    let nf = n as f64;
    let dtheta = 2.0 * PI / nf;
    let thetas: Vec<(f64, f64)> = (0..n).map(|j| ((j as f64 + 0.5) * dtheta).sin_cos()).collect();
    let ring = |i: usize| -> f64 {
        let (t0, t1) = (i as f64 / nf, (i + 1) as f64 / nf);
        let area = 0.5 * (t1.powi(4) - t0.powi(4)) * dtheta;
        let t = 0.5 * (t0 + t1);
        let r = t * t;
        let mut acc = 0.0;
        for &(s, c) in &thetas {
            if let Ok(Some(g)) = body.gradient_at([r * c, r * s]) {
                acc += flat_piece(area, g[0] * g[0] + g[1] * g[1], d);
            }
        }
        acc
    };
    let rings = crate::parallel::map_indexed(n, ring);
    Ok(rings.iter().sum())
}

/// Eigenvalues `(λ₋, λ₊) = (-2|p|⁻⁴, 6|p|⁻⁴)` of the Hessian of `f(p) = |p|⁻²`,
/// cross-checked against a direct diagonalization of the Hessian matrix.
pub fn hessian_eigenvalues(p: [f64; 2]) -> Result<(f64, f64)> {
    let n2 = p[0] * p[0] + p[1] * p[1];
    if !(n2 > 0.0 && n2.is_finite()) {
        return Err(invalid("Hessian of |p|^-2 needs p != 0"));
    }
    let q = n2 * n2;
    let closed = (-2.0 / q, 6.0 / q);
    let numeric = symmetric_eigenvalues(hessian_of_inverse_square(p));
    let scale = closed.1.abs();
    if (numeric.0 - closed.0).abs() > 1e-8 * scale || (numeric.1 - closed.1).abs() > 1e-8 * scale {
        return Err(ResistError::Numerical(format!(
            "Hessian eigenvalues disagree: closed form {closed:?}, diagonalized {numeric:?}"
        )));
    }
    Ok(closed)
}

/// `∇²|p|⁻² = -2|p|⁻⁴ I + 8|p|⁻⁶ p pᵀ`.
pub fn hessian_of_inverse_square(p: [f64; 2]) -> [[f64; 2]; 2] {
    let n2 = p[0] * p[0] + p[1] * p[1];
    let a = -2.0 / (n2 * n2);
    let b = 8.0 / (n2 * n2 * n2);
    [
        [a + b * p[0] * p[0], b * p[0] * p[1]],
        [b * p[0] * p[1], a + b * p[1] * p[1]],
    ]
}

/// Ascending eigenvalues of a symmetric 2×2 matrix.
pub fn symmetric_eigenvalues(m: [[f64; 2]; 2]) -> (f64, f64) {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half = 0.5 * (m[0][0] - m[1][1]);
    let rad = half.hypot(m[0][1]);
    (mean - rad, mean + rad)
}
