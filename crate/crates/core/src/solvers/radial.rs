//! The radially symmetric limiting problem
//! `min 2π ∫₀¹ r / z'(r)² dr` over convex nondecreasing `z` with
//! `z(0) = -1`, `z(1) = 0`, solved with the maximum principle.
//!
//! With the Pontryagin function `H = -r/(2w²) + q₀w`, `w = z'`, and a
//! constant adjoint `q₀ < 0`, the pointwise maximizer is `w = (r/(-q₀))^{1/3}`.
//! Matching `z(1) - z(0) = 1` gives `q₀ = -(3/4)³` and `ẑ = r^{4/3} - 1`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::geometry::Profile;

/// Adjoint constant of the optimal radial profile.
pub const RADIAL_Q0: f64 = -27.0 / 64.0;

#[derive(Clone, Debug, Serialize)]
pub struct RadialSolution {
    pub profile: Profile,
    /// `27π/32`.
    pub value: f64,
    pub q0: f64,
}

pub fn radial_limit_solution() -> RadialSolution {
    RadialSolution {
        profile: Profile::Power { exponent: 4.0 / 3.0, depth: 1.0 },
        value: 27.0 * PI / 32.0,
        q0: RADIAL_Q0,
    }
}

/// `H(r, w) = -r/(2w²) + q₀ w`; `-∞` at `w = 0` for `r > 0`.
pub fn pmp_hamiltonian(r: f64, w: f64, q0: f64) -> f64 {
    if w == 0.0 {
        return if r > 0.0 { f64::NEG_INFINITY } else { 0.0 };
    }
    -r / (2.0 * w * w) + q0 * w
}

/// Maximizer of `H(r, ·)` over `w ≥ 0`: `w = (r/(-q₀))^{1/3}`.
pub fn pmp_control(r: f64, q0: f64) -> Result<f64> {
    if !(q0 < 0.0) {
        return Err(invalid(format!("q0 = {q0}: H has no maximum unless q0 < 0")));
    }
    if !(r >= 0.0) {
        return Err(invalid(format!("r = {r} must be nonnegative")));
    }
    Ok((r / -q0).cbrt())
}
