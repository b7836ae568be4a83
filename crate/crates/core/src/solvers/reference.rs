//! Published reference bodies and the comparison of body families as the
//! height grows.
//!
//! The `E_M` bodies are hulls of the base and one convex curve in the plane
//! `y = 0`. The curve starts with a horizontal segment ending at
//! `(v'(+0), 0, -M)` and then rises with slope `r(p₀)`; the apex of that
//! corner carries a cone fan over `[π/2 - ε, π/2]` with
//! `sin ε = r(p₀) / (M + v'(+0) r(p₀))`.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::criterion::{check_cone, CriterionResult};
use crate::error::{invalid, Result};
use crate::geometry::{hull_body, ConeSpec, ConvexBody};
use crate::resistance::Delta;

use super::{optimize_kfold, optimize_screwdriver, radial_limit_solution, KfoldOptions};

/// Curve parameter `p₀` of the limiting `E₁` body.
pub const E1_P0: f64 = 3.167203701258;
/// Slope `r(p₀)` of the curve after the corner.
pub const E1_SLOPE: f64 = 0.3451623687826;
/// Corner abscissa `v'(+0)`.
pub const E1_CORNER: f64 = 0.5300674211893;
/// `J_∞` of the limiting `E₁` body.
pub const E1_VALUE: f64 = 2.140225047120;

/// Published arc widths of the finite-height bodies, `(M, ε)`.
pub const E_FINITE: [(f64, f64); 2] = [(1.5, 0.574610), (5.0, 0.330507)];

/// `ε = arcsin(r(p₀) / (M + v'(+0) r(p₀)))`.
pub fn footnote_arc_width(m: f64, slope: f64, corner: f64) -> f64 {
    (slope / (m + corner * slope)).asin()
}

/// The cone of the limiting `E₁` body tested with `δ = 0`.
pub fn e1_reference_audit() -> Result<CriterionResult> {
    let eps = footnote_arc_width(1.0, E1_SLOPE, E1_CORNER);
    let cone = ConeSpec::new(E1_CORNER, 0.0, 1.0, FRAC_PI_2 - eps, FRAC_PI_2)?;
    Ok(check_cone(&cone, Delta::LIMIT))
}

/// The cone of a finite-height `E_M` body with published arc width `eps`,
/// apex radius `corner` and apex depth `M`, tested for the classical
/// integrand (`δ = 1`).
pub fn e_body_reference_audit(m: f64, eps: f64, corner: f64) -> Result<CriterionResult> {
    let cone = ConeSpec::new(corner, 0.0, m, FRAC_PI_2 - eps, FRAC_PI_2)?;
    Ok(check_cone(&cone, Delta::new(1.0)?))
}

/// Minimal hull with the corner structure of an `E_M` body: a bottom
/// segment ending at `(corner, 0, -m)` followed by one rising point with the
/// given slope.
pub fn e_style_hull(corner: f64, slope: f64, m: f64) -> Result<ConvexBody> {
    let h = 0.5 * (1.0 - corner);
    if !(corner > 0.0 && corner < 1.0) {
        return Err(invalid(format!("corner {corner} must lie in (0, 1)")));
    }
    hull_body(
        &[[-corner, 0.0, -m], [corner, 0.0, -m], [corner + h, 0.0, -m + h * slope]],
        None,
    )
}

/// One row of the height comparison. `J_M` values refer to bodies
/// normalized to height one.
#[derive(Clone, Debug, Serialize)]
pub struct GapRow {
    pub m: f64,
    pub screwdriver_jm: f64,
    pub kfold_jm: Option<f64>,
    /// Smallest `J_M` found among the families.
    pub best_jm: f64,
    /// `J_∞` of the radial optimum, an upper bound for every `J_M`.
    pub radial_jinf: f64,
    /// `best_jm / radial_jinf`.
    pub ratio_to_radial: f64,
}

/// Best `J_M` found by the screwdriver family and, optionally, by the k-fold
/// optimizer with `(k, cells)`, for each height in `ms`.
pub fn asymptotic_gap(ms: &[f64], kfold: Option<(usize, usize)>) -> Result<Vec<GapRow>> {
    let radial = radial_limit_solution().value;
    ms.iter()
        .map(|&m| {
            let delta = Delta::from_height(m)?;
            let screwdriver_jm = optimize_screwdriver(delta)?.value;
            let kfold_jm = match kfold {
                Some((k, n)) => Some(m * m * optimize_kfold(m, k, n, KfoldOptions::default())?.value),
                None => None,
            };
            let best_jm = kfold_jm.map_or(screwdriver_jm, |v| v.min(screwdriver_jm));
            Ok(GapRow { m, screwdriver_jm, kfold_jm, best_jm, radial_jinf: radial, ratio_to_radial: best_jm / radial })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::detect_conical_parts;

    #[test]
    fn footnote_reproduces_published_width() {
        let eps = footnote_arc_width(1.0, E1_SLOPE, E1_CORNER);
        assert!((eps - 0.296085).abs() < 1e-6);
    }

    #[test]
    fn e_style_hull_has_the_corner_fan() {
        let b = e_style_hull(E1_CORNER, E1_SLOPE, 1.0).unwrap();
        let cones = detect_conical_parts(&b, 1e-9);
        let c = cones
            .iter()
            .find(|c| (c.r0 - E1_CORNER).abs() < 1e-12 && c.phi0 == 0.0 && c.beta > 0.0)
            .unwrap();
        assert!((c.beta - FRAC_PI_2).abs() < 1e-9);
        assert!((c.width() - footnote_arc_width(1.0, E1_SLOPE, E1_CORNER)).abs() < 1e-9);
    }

    #[test]
    fn e1_cone_is_not_optimal() {
        let r = e1_reference_audit().unwrap();
        assert!(r.is_non_optimal());
        assert!((r.witness_phi.unwrap() - FRAC_PI_2).abs() < 1e-6);
    }
}
