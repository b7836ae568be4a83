//! Screwdriver bodies: the hull of the base and the segment `(±a, 0, -1)`.

use crate::criterion::audit_body;
use crate::error::Result;
use crate::geometry::screwdriver_body;
use crate::quadrature::golden_section;
use crate::resistance::{resistance, Delta};

use super::OptimizationReport;

/// `J_∞` of the unit-depth screwdriver:
/// two cone fans over half circles and two triangles of area `a` with unit slope.
pub fn screwdriver_limit_value(a: f64) -> f64 {
    std::f64::consts::PI - 4.0 * a + 1.5 * std::f64::consts::PI * a * a - 4.0 / 3.0 * a * a * a
}

/// Minimizes `J_δ` of the unit-depth screwdriver over `a ∈ [0, 1)` by
/// golden-section search down to a bracket of `1e-7`.
pub fn optimize_screwdriver(delta: Delta) -> Result<OptimizationReport> {
    let mut trace = Vec::new();
    let mut failure = None;
    let f = |a: f64| match screwdriver_body(a, 1.0).and_then(|b| resistance(&b, delta)) {
        Ok(r) => {
            trace.push(r.total);
            r.total
        }
        Err(e) => {
            failure.get_or_insert(e);
            f64::INFINITY
        }
    };
    let (a, value, iterations) = golden_section(f, 0.0, 1.0 - 1e-9, 1e-7);
    if let Some(e) = failure {
        return Err(e);
    }
    let body = screwdriver_body(a, 1.0)?;
    let flags = audit_body(&body, delta).flags();
    Ok(OptimizationReport {
        value,
        argument: vec![a],
        body: body.spec().clone(),
        trace,
        iterations,
        converged: true,
        flags,
    })
}
