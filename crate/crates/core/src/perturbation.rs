//! Small outward perturbation of a cone near its base rim.
//!
//! Start from the oblique cone with apex `P₀ = (x₀, y₀, -1)` over the whole
//! circle and the point `(x₁, y₁, -M₁)` on its generator through `(1, 0, 0)`.
//! Pushing that point down to `P₁ = (x₁, y₁, -m)`, `m = M₁ + ε²(1 - M₁)`,
//! replaces a thin sliver of the cone by a small cone with apex `P₁` over the
//! arc `[φ₋, φ₊]` and two triangles `P₀ P₁ (cos φ±, sin φ±)`. The change of
//! resistance is odd in `ε` with leading term `c₃ ε³`, whose sign decides
//! whether the cone can be improved.
//!
//! Negative `ε` evaluates the analytic continuation of every closed form
//! (`φ₊(-ε) = φ₋(ε)`), which is what the odd/even fits use.

use serde::Serialize;

use crate::error::{invalid, ResistError, Result};
use crate::parallel::map_indexed;
use crate::quadrature::{integrate, Tolerance};
use crate::resistance::{Delta, Part, PartKind, ResistanceBreakdown};

/// Perturbation grid used by [`fit_coefficients`].
pub const FIT_EPS: [f64; 3] = [0.02, 0.01, 0.005];
/// `|bracket|` below which no sign is asserted.
pub const BRACKET_TOL: f64 = 1e-3;

const QUAD_TOL: Tolerance = Tolerance { abs: 0.0, rel: 1e-15 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerturbationParams {
    pub x0: f64,
    pub y0: f64,
    pub m1: f64,
    pub eps: f64,
    pub delta: Delta,
}

impl PerturbationParams {
    pub fn new(x0: f64, y0: f64, m1: f64, eps: f64, delta: Delta) -> Result<Self> {
        if !(x0 * x0 + y0 * y0 < 1.0) {
            return Err(ResistError::ApexOnBoundary(x0.hypot(y0)));
        }
        if !(y0 >= 0.0) {
            return Err(invalid(format!("y0 = {y0} must be >= 0 (reflect the body first)")));
        }
        if !(m1 > 0.0 && m1 < 1.0) {
            return Err(invalid(format!("M1 = {m1} must lie in (0, 1)")));
        }
        if !(eps.abs() < 1.0) {
            return Err(invalid(format!("|eps| = {} must be below 1", eps.abs())));
        }
        Ok(Self { x0, y0, m1, eps, delta })
    }

    pub fn with_eps(self, eps: f64) -> Result<Self> {
        Self::new(self.x0, self.y0, self.m1, eps, self.delta)
    }

    /// `3y₀² - (1-x₀)² - δ(1-x₀)²((1-x₀)² + y₀²)`, the sign of the variation.
    pub fn bracket(&self) -> f64 {
        let a = 1.0 - self.x0;
        let d = self.delta.value();
        3.0 * self.y0 * self.y0 - a * a - d * a * a * (a * a + self.y0 * self.y0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerturbationGeometry {
    pub m: f64,
    /// Unperturbed touch point on the generator through `(1, 0)`.
    pub p1: [f64; 2],
    /// Where the line `P₀P₁` meets `z = 0`.
    pub p2: [f64; 2],
    pub r2: f64,
    pub theta2: f64,
    pub phi_plus: f64,
    pub phi_minus: f64,
    pub s_plus: f64,
    pub s_minus: f64,
    pub grad_plus: f64,
    pub grad_minus: f64,
}

/// Closed-form geometry of the perturbed body.
pub fn geometry_of(p: &PerturbationParams) -> Result<PerturbationGeometry> {
    let PerturbationParams { x0, y0, m1, eps: e, .. } = *p;
    let e2 = e * e;
    let m = m1 + e2 * (1.0 - m1);
    let (x1, y1) = (1.0 - m1 + x0 * m1, m1 * y0);
    let x2 = (1.0 - e2 * x0) / (1.0 - e2);
    let y2 = -e2 * y0 / (1.0 - e2);
    let r2 = x2.hypot(y2);
    if r2 < 1.0 - 1e-12 {
        return Err(ResistError::NoTangent(r2));
    }
    let theta2 = y2.atan2(x2);

    let w = (2.0 * (1.0 - x0) - (1.0 - x0 * x0 - y0 * y0) * e2).max(0.0).sqrt();
    let den = 1.0 - 2.0 * e2 * x0 + e2 * e2 * (x0 * x0 + y0 * y0);
    let a = 1.0 - x0 * e2;
    let tangent = |sign: f64| {
        let c = (a * (1.0 - e2) + sign * y0 * e2 * e * w) / den;
        let s = (sign * a * e * w - y0 * (1.0 - e2) * e2) / den;
        (c, s)
    };
    let (cp, sp) = tangent(1.0);
    let (cm, sm) = tangent(-1.0);
    let area = |c: f64, s: f64| 0.5 * ((c - x0) * (s - y1) - (c - x1) * (s - y0));
    let grad = |c: f64, s: f64| 1.0 / (1.0 - x0 * c - y0 * s);
    Ok(PerturbationGeometry {
        m,
        p1: [x1, y1],
        p2: [x2, y2],
        r2,
        theta2,
        phi_plus: sp.atan2(cp),
        phi_minus: sm.atan2(cm),
        s_plus: area(cp, sp),
        s_minus: -area(cm, sm),
        grad_plus: grad(cp, sp),
        grad_minus: grad(cm, sm),
    })
}

/// `(1 - x cos φ - y sin φ)³ / (z² + δ (1 - x cos φ - y sin φ)²)`.
#[inline]
fn fan_density(x: f64, y: f64, z: f64, delta: f64, phi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    let a = 1.0 - x * c - y * s;
    a * a * a / (z * z + delta * a * a)
}

/// Resistance of the perturbed body, split into the big cone `R0`, the small
/// cone `R1` and the triangles `T+`, `T-`.
pub fn perturbed_resistance(p: &PerturbationParams) -> Result<ResistanceBreakdown> {
    let g = geometry_of(p)?;
    let d = p.delta.value();
    let (x0, y0) = (p.x0, p.y0);
    let [x1, y1] = g.p1;
    let r0 = 0.5
        * integrate(
            |phi| fan_density(x0, y0, 1.0, d, phi),
            g.phi_plus,
            g.phi_minus + std::f64::consts::TAU,
            QUAD_TOL,
        );
    let r1 = 0.5 * integrate(|phi| fan_density(x1, y1, g.m, d, phi), g.phi_minus, g.phi_plus, QUAD_TOL);
    let tp = g.s_plus / (g.grad_plus * g.grad_plus + d);
    let tm = g.s_minus / (g.grad_minus * g.grad_minus + d);
    let part = |id: &str, kind, value| Part { id: id.into(), kind, value };
    Ok(ResistanceBreakdown::from_parts(vec![
        part("R0", PartKind::ConeArc, r0),
        part("R1", PartKind::ConeArc, r1),
        part("T+", PartKind::Triangle, tp),
        part("T-", PartKind::Triangle, tm),
    ]))
}

/// `𝕽(0)`: the unperturbed cone over the full circle.
pub fn unperturbed_resistance(p: &PerturbationParams) -> f64 {
    let d = p.delta.value();
    0.5 * integrate(|phi| fan_density(p.x0, p.y0, 1.0, d, phi), 0.0, std::f64::consts::TAU, QUAD_TOL)
}

/// `𝕽(ε) - 𝕽(0)` without forming the difference of two O(1) numbers: the
/// big cone only loses the arc `[φ₋, φ₊]`, so the variation is
/// `½∫_{φ₋}^{φ₊} (f₁ - f₀) dφ + T₊ + T₋`.
pub fn resistance_variation(p: &PerturbationParams) -> Result<f64> {
    if p.eps == 0.0 {
        return Ok(0.0);
    }
    let g = geometry_of(p)?;
    let d = p.delta.value();
    let [x1, y1] = g.p1;
    let arc = 0.5
        * integrate(
            |phi| fan_density(x1, y1, g.m, d, phi) - fan_density(p.x0, p.y0, 1.0, d, phi),
            g.phi_minus,
            g.phi_plus,
            QUAD_TOL,
        );
    let tp = g.s_plus / (g.grad_plus * g.grad_plus + d);
    let tm = g.s_minus / (g.grad_minus * g.grad_minus + d);
    Ok(arc + tp + tm)
}

/// Closed-form cubic coefficient `c₃` of `𝕽(ε) - 𝕽(0)`.
pub fn expansion_coefficient(x0: f64, y0: f64, m1: f64, delta: Delta) -> f64 {
    let a = 1.0 - x0;
    let d = delta.value();
    let base = 1.0 + d * a * a;
    let bracket = 3.0 * y0 * y0 - a * a - d * a * a * (a * a + y0 * y0);
    a.powf(2.5) * 4.0 * (1.0 - m1) * std::f64::consts::SQRT_2 / (3.0 * base.powi(3)) * bracket
}

/// Coefficients of `𝕽(ε) - 𝕽(0) ≈ Σ cⱼ εʲ` for `j ≤ 6`, split by parity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FittedCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
}

/// Solves `Σₖ a[i][k] x[k] = b[i]` for a 3×3 system by Cramer's rule.
fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][k] = b[i];
        }
        *xk = det(m) / d;
    }
    x
}

/// Fits odd and even parts of the variation on `±ε` for `ε ∈ eps`; three
/// terms each, which eliminates the `ε⁵` (resp. `ε⁶`) contamination of the
/// leading coefficients.
pub fn fit_coefficients(p: &PerturbationParams, eps: [f64; 3]) -> Result<FittedCoefficients> {
    let mut odd = [0.0; 3];
    let mut even = [0.0; 3];
    for (i, &e) in eps.iter().enumerate() {
        let plus = resistance_variation(&p.with_eps(e)?)?;
        let minus = resistance_variation(&p.with_eps(-e)?)?;
        odd[i] = 0.5 * (plus - minus);
        even[i] = 0.5 * (plus + minus);
    }
    let vo = eps.map(|e| [e, e.powi(3), e.powi(5)]);
    let ve = eps.map(|e| [e * e, e.powi(4), e.powi(6)]);
    let [c1, c3, c5] = solve3(vo, odd);
    let [c2, c4, c6] = solve3(ve, even);
    Ok(FittedCoefficients { c1, c2, c3, c4, c5, c6 })
}

/// One point of the verification sweep.
#[derive(Clone, Debug, Serialize)]
pub struct CubicCheck {
    pub x0: f64,
    pub y0: f64,
    pub m1: f64,
    pub delta: f64,
    pub bracket: f64,
    pub fit: FittedCoefficients,
    pub c3_closed: f64,
    /// `|c₃(fit) / c₃(closed) - 1|`, or `None` when the bracket is below tolerance.
    pub c3_rel_err: Option<f64>,
    /// `𝕽(ε) - 𝕽(0)` at the largest fit `ε`.
    pub variation: f64,
    pub sign_ok: Option<bool>,
    pub pass: bool,
}

/// Tolerances of the sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepTolerance {
    pub c3_rel: f64,
    pub low_order: f64,
    pub bracket: f64,
}

impl Default for SweepTolerance {
    fn default() -> Self {
        Self { c3_rel: 5e-3, low_order: 1e-8, bracket: BRACKET_TOL }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CubicReport {
    pub checks: Vec<CubicCheck>,
    /// Whether the sign of the variation is the same for every `M₁` at each
    /// `(x₀, y₀, δ)` with a decidable bracket.
    pub m1_independent: bool,
    pub pass: bool,
}

/// The default sweep: 5×5 apexes in `[0, 0.6]²`, `M₁ ∈ {¼, ½, ¾}`, `δ ∈ {0, ½, 1}`.
pub fn default_grid() -> Vec<(f64, f64, f64, f64)> {
    let mut g = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            for m1 in [0.25, 0.5, 0.75] {
                for d in [0.0, 0.5, 1.0] {
                    g.push((0.15 * i as f64, 0.15 * j as f64, m1, d));
                }
            }
        }
    }
    g
}

pub fn check_point(x0: f64, y0: f64, m1: f64, delta: f64, tol: SweepTolerance) -> Result<CubicCheck> {
    let d = Delta::new(delta)?;
    let p = PerturbationParams::new(x0, y0, m1, FIT_EPS[0], d)?;
    let fit = fit_coefficients(&p, FIT_EPS)?;
    let c3_closed = expansion_coefficient(x0, y0, m1, d);
    let bracket = p.bracket();
    let variation = resistance_variation(&p)?;
    let decidable = bracket.abs() > tol.bracket;
    let c3_rel_err = decidable.then(|| (fit.c3 / c3_closed - 1.0).abs());
    let sign_ok = decidable.then(|| variation.signum() == bracket.signum() && variation != 0.0);
    let pass = fit.c1.abs() <= tol.low_order
        && fit.c2.abs() <= tol.low_order
        && c3_rel_err.is_none_or(|e| e <= tol.c3_rel)
        && sign_ok.unwrap_or(true);
    Ok(CubicCheck { x0, y0, m1, delta, bracket, fit, c3_closed, c3_rel_err, variation, sign_ok, pass })
}

/// Checks oddness, the cubic coefficient and its sign over a parameter grid.
pub fn verify_odd_cubic(grid: &[(f64, f64, f64, f64)], tol: SweepTolerance) -> Result<CubicReport> {
    let checks: Vec<CubicCheck> = map_indexed(grid.len(), |i| {
        let (x0, y0, m1, d) = grid[i];
        check_point(x0, y0, m1, d, tol)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut m1_independent = true;
    for a in &checks {
        for b in &checks {
            let same = a.x0 == b.x0 && a.y0 == b.y0 && a.delta == b.delta;
            if same && a.sign_ok.is_some() && a.variation.signum() != b.variation.signum() {
                m1_independent = false;
            }
        }
    }
    let pass = m1_independent && checks.iter().all(|c| c.pass);
    Ok(CubicReport { checks, m1_independent, pass })
}

/// Plan-view skeleton of the perturbed body: named nodes and the edges
/// between them.
#[derive(Clone, Debug, Serialize)]
pub struct Skeleton {
    pub nodes: Vec<(String, [f64; 2])>,
    pub edges: Vec<(String, String)>,
}

pub fn skeleton(p: &PerturbationParams) -> Result<Skeleton> {
    let g = geometry_of(p)?;
    let rim = |phi: f64| [phi.cos(), phi.sin()];
    let nodes = vec![
        ("P0".to_string(), [p.x0, p.y0]),
        ("P1".to_string(), g.p1),
        ("P2".to_string(), g.p2),
        ("phi+".to_string(), rim(g.phi_plus)),
        ("phi-".to_string(), rim(g.phi_minus)),
    ];
    let e = |a: &str, b: &str| (a.to_string(), b.to_string());
    let edges = vec![
        e("P0", "P1"),
        e("P1", "P2"),
        e("P0", "phi+"),
        e("P0", "phi-"),
        e("P1", "phi+"),
        e("P1", "phi-"),
        e("P2", "phi+"),
        e("P2", "phi-"),
    ];
    Ok(Skeleton { nodes, edges })
}
