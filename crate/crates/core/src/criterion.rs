//! Non-optimality test for conical parts.
//!
//! A cone with apex `(r₀ cos φ₀, r₀ sin φ₀, -z₀)` over the base arc `[α, β]`
//! can be improved by the rim perturbation of [`crate::perturbation`] as soon
//! as `Z₀(r₀, φ - φ₀) < δ / z₀²` for some `φ` in the arc. For a body of height
//! `M` evaluated with the classical integrand use `δ = 1` and the actual apex
//! depth; for a body normalized to height one use `δ = M⁻²` and `z₀ ≤ 1`.
//! Both describe the same inequality `M z₀ < Z₀^{-1/2}`.

use serde::{Serialize, Serializer};

use crate::error::{ResistError, Result};
use crate::geometry::{ConeSpec, ConvexBody, CONE_TOL};
use crate::quadrature::{bisect, golden_section};
use crate::resistance::Delta;

pub const ARC_SAMPLES: usize = 1024;
/// Margin below `δ/z₀²` required for a certificate.
pub const STRICT_MARGIN: f64 = 1e-12;

/// `Z₀(r₀, Δφ) = [3r₀²sin²Δφ - (1 - r₀cos Δφ)²] / [(1 - r₀cos Δφ)² (1 + r₀² - 2r₀cos Δφ)]`.
pub fn z0(r0: f64, dphi: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r0) {
        return Err(ResistError::ApexOnBoundary(r0));
    }
    let (s, c) = dphi.sin_cos();
    Ok(z0_plan(r0 * c, r0 * s))
}

/// `Z₀` in plan coordinates `(x, y) = (r₀ cos Δφ, r₀ sin Δφ)`.
pub fn z0_plan(x: f64, y: f64) -> f64 {
    let a = 1.0 - x;
    (3.0 * y * y - a * a) / (a * a * (a * a + y * y))
}

/// Threshold on `M z₀` below which the cone is certified non-optimal at
/// `Δφ`: `Z₀^{-1/2}`, or infinity where `Z₀ ≤ 0`.
pub fn critical_height(r0: f64, dphi: f64) -> Result<f64> {
    Ok(threshold_from_z0(z0(r0, dphi)?))
}

fn threshold_from_z0(z: f64) -> f64 {
    if z <= 0.0 {
        f64::INFINITY
    } else {
        z.sqrt().recip()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    NonOptimal,
    Inconclusive,
}

fn extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub verdict: Verdict,
    /// Base angle where `Z₀` is smallest; present for non-optimal cones.
    pub witness_phi: Option<f64>,
    pub min_z0: f64,
    /// `max_φ Z₀^{-1/2}` over the arc: the cone is non-optimal iff `M z₀` is below it.
    #[serde(serialize_with = "extended")]
    pub critical_mz0: f64,
}

impl CriterionResult {
    pub fn is_non_optimal(&self) -> bool {
        self.verdict == Verdict::NonOptimal
    }
}

/// Minimum of `Z₀(r₀, φ - φ₀)` over `φ ∈ [α, β]`: a uniform scan refined by
/// golden-section search around the best sample.
pub fn min_z0_on_arc(cone: &ConeSpec) -> (f64, f64) {
    let f = |phi: f64| z0(cone.r0, phi - cone.phi0).unwrap_or(f64::INFINITY);
    let (a, b) = (cone.alpha, cone.beta);
    let h = (b - a) / ARC_SAMPLES as f64;
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for i in 0..=ARC_SAMPLES {
        let v = f(a + h * i as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let lo = a + h * best_i.saturating_sub(1) as f64;
    let hi = (a + h * (best_i + 1) as f64).min(b);
    let (x, fx, _) = golden_section(f, lo, hi, 1e-12 * (1.0 + b.abs()));
    if fx < best {
        (x, fx)
    } else {
        (a + h * best_i as f64, best)
    }
}

/// Tests `min Z₀ < δ / z₀²` on the arc of `cone`.
pub fn check_cone(cone: &ConeSpec, delta: Delta) -> CriterionResult {
    let (phi, min_z0) = min_z0_on_arc(cone);
    let rhs = delta.value() / (cone.z0 * cone.z0);
    let non_opt = min_z0 < rhs - STRICT_MARGIN;
    CriterionResult {
        verdict: if non_opt { Verdict::NonOptimal } else { Verdict::Inconclusive },
        witness_phi: non_opt.then_some(phi),
        min_z0,
        critical_mz0: threshold_from_z0(min_z0),
    }
}

/// The same test for an unnormalized body in `C_M` with the classical
/// integrand: `min Z₀ < z₀⁻²`.
pub fn check_cone_unscaled(cone: &ConeSpec) -> CriterionResult {
    check_cone(cone, Delta::new(1.0).expect("1 is a valid delta"))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeAudit {
    pub cone: ConeSpec,
    pub result: CriterionResult,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub cones: Vec<ConeAudit>,
    /// Some conical part was found.
    pub flag_c: bool,
    /// Some conical part is certified non-optimal.
    pub flag_n: bool,
}

impl AuditReport {
    /// `"CN"`, `"C"` or `""`.
    pub fn flags(&self) -> String {
        let mut s = String::new();
        if self.flag_c {
            s.push('C');
        }
        if self.flag_n {
            s.push('N');
        }
        s
    }
}

/// Finds the conical parts of `body` and tests each of them.
pub fn audit_body(body: &ConvexBody, delta: Delta) -> AuditReport {
    let cones: Vec<ConeAudit> = body
        .conical_parts(CONE_TOL)
        .into_iter()
        .map(|cone| ConeAudit { cone, result: check_cone(&cone, delta) })
        .collect();
    let flag_c = !cones.is_empty();
    let flag_n = cones.iter().any(|c| c.result.is_non_optimal());
    AuditReport { cones, flag_c, flag_n }
}

/// Plan-view curve `{Z₀^{-1/2} = height}` (`Z₀ = 0` for infinite height).
///
/// `Z₀` increases with `y²` at fixed `x`, so the curve is found by root
/// finding on vertical segments `x = const` across the disc, for `n` values
/// of `x` from the point where the curve leaves the disc towards `(1, 0)`.
/// The polyline runs along the lower branch towards `(1, 0)` and returns on
/// the upper one; `(1, 0)` itself is excluded.
pub fn level_set(height: f64, n: usize) -> Vec<[f64; 2]> {
    if n < 2 || !(height > 0.0) {
        return Vec::new();
    }
    let zeta = if height.is_infinite() { 0.0 } else { 1.0 / (height * height) };
    // on the circle Z₀ = (1 + 2x)/(1 - x)², increasing in x
    let exit = if zeta == 0.0 {
        -0.5
    } else {
        let a = zeta;
        let b = -(2.0 * zeta + 2.0);
        let c = zeta - 1.0;
        (-b - (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)
    };
    let exit = exit.max(-1.0);
    let mut upper: Vec<[f64; 2]> = Vec::with_capacity(n);
    for i in 0..n {
        let x = exit + (1.0 - exit) * i as f64 / n as f64;
        let ymax = (1.0 - x * x).max(0.0).sqrt();
        let y = if i == 0 {
            ymax
        } else {
            match bisect(|y| z0_plan(x, y) - zeta, 0.0, ymax) {
                Some(y) => y,
                None => continue,
            }
        };
        upper.push([x, y]);
    }
    let mut out: Vec<[f64; 2]> = upper.iter().map(|p| [p[0], -p[1]]).collect();
    out.extend(upper.iter().rev());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polygon_body;
    use std::f64::consts::PI;

    #[test]
    fn z0_special_values() {
        assert_eq!(z0(0.0, 1.3).unwrap(), -1.0);
        assert!((z0(0.4, 0.0).unwrap() + 1.0 / 0.36).abs() < 1e-13);
        assert!(z0(1.0, 0.0).is_err());
        let x: f64 = 0.4;
        let y = (1.0 - x) / 3f64.sqrt();
        assert!(z0_plan(x, y).abs() < 1e-15);
    }

    #[test]
    fn critical_height_on_level_curve() {
        let x: f64 = 0.7;
        let a2 = (x - 1.0) * (x - 1.0);
        let y = (1.0 - x) * ((4.0 * a2 + 1.0) / (3.0 - 4.0 * a2)).sqrt();
        let r = x.hypot(y);
        assert!((critical_height(r, y.atan2(x)).unwrap() - 0.5).abs() < 1e-9);
        assert!(critical_height(0.3, 0.0).unwrap().is_infinite());
    }

    #[test]
    fn polygon_cone_fails_at_its_axis() {
        let c = ConeSpec::new(0.5, 0.0, 1.0, -PI / 3.0, PI / 3.0).unwrap();
        let r = check_cone(&c, Delta::LIMIT);
        assert!(r.is_non_optimal());
        assert!(r.witness_phi.unwrap().abs() < 1e-6);
        assert!((r.min_z0 + 4.0).abs() < 1e-12);
        assert!(r.critical_mz0.is_infinite());
    }

    #[test]
    fn equality_is_inconclusive() {
        let c = ConeSpec::new(0.8, 0.0, 1.0, 1.4, 1.7).unwrap();
        let probe = check_cone(&c, Delta::LIMIT);
        assert!(probe.min_z0 > 0.0 && !probe.is_non_optimal());
        let at = check_cone(&c, Delta::new(probe.min_z0).unwrap());
        assert_eq!(at.verdict, Verdict::Inconclusive);
        let above = check_cone(&c, Delta::new(probe.min_z0 + 1e-9).unwrap());
        assert!(above.is_non_optimal());
        assert!((probe.critical_mz0 - probe.min_z0.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn level_sets_stay_on_their_level() {
        for h in [0.25, 0.5, 1.0] {
            let pts = level_set(h, 200);
            assert_eq!(pts.len(), 400);
            for p in pts {
                assert!(p[0] * p[0] + p[1] * p[1] <= 1.0 + 1e-12);
                let z = z0_plan(p[0], p[1]);
                assert!((z.sqrt().recip() - h).abs() < 1e-9, "h = {h}: {p:?}");
            }
        }
        let pts = level_set(0.25, 10);
        assert!(pts.iter().all(|p| p[0] >= 0.6));
        let pts = level_set(f64::INFINITY, 50);
        for p in pts {
            assert!((p[1].abs() - (1.0 - p[0]) / 3f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn polygon_audit() {
        let b = polygon_body(5, 0.5, 1.0).unwrap();
        let a = audit_body(&b, Delta::new(1.0).unwrap());
        assert_eq!(a.cones.len(), 5);
        assert_eq!(a.flags(), "CN");
    }
}
