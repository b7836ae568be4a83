//! Property checks shared by the property suite and the acceptance report.

#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use newton_resist::geometry::{hull_body, ConvexBody};
use newton_resist::resistance::{hessian_eigenvalues, hessian_of_inverse_square, resistance_grid};
use newton_resist::solvers::{pmp_control, pmp_hamiltonian};
use newton_resist::{resistance, Delta};

pub type Check = std::result::Result<(), TestCaseError>;

pub fn point() -> impl Strategy<Value = [f64; 3]> {
    (0.0..0.85f64, 0.0..TAU, 0.2..2.0f64).prop_map(|(r, t, z)| [r * t.cos(), r * t.sin(), -z])
}

pub fn points() -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(point(), 1..7)
}

pub fn disc_point() -> impl Strategy<Value = [f64; 2]> {
    (0.0..0.95f64, 0.0..TAU).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

pub fn hull(points: &[[f64; 3]]) -> ConvexBody {
    hull_body(points, None).unwrap()
}

pub fn total(body: &ConvexBody, d: f64) -> f64 {
    resistance(body, Delta::new(d).unwrap()).unwrap().total
}

/// Deterministic runner so that reports are reproducible.
pub fn runner(cases: u32) -> TestRunner {
    let config = Config { failure_persistence: None, ..Config::with_cases(cases) };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

pub fn convex_along_segments((pts, a, b, t): (Vec<[f64; 3]>, [f64; 2], [f64; 2], f64)) -> Check {
    let body = hull(&pts);
    let m = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    let ua = body.value_at(a).unwrap();
    let ub = body.value_at(b).unwrap();
    let um = body.value_at(m).unwrap();
    prop_assert!(um <= ua + t * (ub - ua) + 1e-9, "{um} above the chord");
    prop_assert!(um >= -body.height() - 1e-12 && um <= 0.0);
    Ok(())
}

pub fn convexity_inputs() -> impl Strategy<Value = (Vec<[f64; 3]>, [f64; 2], [f64; 2], f64)> {
    (points(), disc_point(), disc_point(), 0.0..1.0f64)
}

pub fn areas_partition_the_disc(pts: Vec<[f64; 3]>) -> Check {
    let body = hull(&pts);
    let h = body.as_hull().unwrap();
    let area: f64 = h.facets().iter().map(|f| f.plan_area).sum::<f64>()
        + h.arc_fans().iter().map(|f| h.fan_area(f)).sum::<f64>();
    prop_assert!((area - PI).abs() < 1e-9, "area {area}");
    Ok(())
}

pub fn monotone_inputs() -> impl Strategy<Value = (Vec<[f64; 3]>, f64, f64)> {
    (points(), 0.0..2.0f64, 0.01..1.0f64)
}

/// `J_δ` decreases in `δ`, is at most `π/δ`, and never exceeds the limit value `J_0`.
pub fn decreasing_in_delta((pts, d, dd): (Vec<[f64; 3]>, f64, f64)) -> Check {
    let body = hull(&pts);
    let lo = total(&body, d + dd);
    let hi = total(&body, d);
    prop_assert!(lo < hi);
    prop_assert!(lo <= PI / (d + dd) + 1e-12);
    prop_assert!(hi <= total(&body, 0.0) + 1e-12);
    Ok(())
}

pub fn rescaling_inputs() -> impl Strategy<Value = (Vec<[f64; 3]>, f64, f64)> {
    (points(), 0.3..3.0f64, 0.0..2.0f64)
}

/// `J_δ(λu) = λ⁻² J_{δ/λ²}(u)`, built from two independent hulls.
pub fn vertical_rescaling((pts, lambda, d): (Vec<[f64; 3]>, f64, f64)) -> Check {
    let body = hull(&pts);
    let scaled: Vec<[f64; 3]> = pts.iter().map(|p| [p[0], p[1], lambda * p[2]]).collect();
    let lhs = total(&hull(&scaled), d);
    let rhs = total(&body, d / (lambda * lambda)) / (lambda * lambda);
    prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1.0), "{lhs} vs {rhs}");
    Ok(())
}

pub fn hessian_inputs() -> impl Strategy<Value = [f64; 2]> {
    (0.2..2.0f64, 0.0..TAU).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

/// Hessian of `|p|⁻²` against central differences, and its eigenvalues
/// against `(-2|p|⁻⁴, 6|p|⁻⁴)`.
pub fn hessian_matches_differences(p: [f64; 2]) -> Check {
    let f = |q: [f64; 2]| 1.0 / (q[0] * q[0] + q[1] * q[1]);
    let h = 1e-4;
    let e = |k: usize, s: f64| if k == 0 { [s, 0.0] } else { [0.0, s] };
    let at = |a: [f64; 2], b: [f64; 2]| f([p[0] + a[0] + b[0], p[1] + a[1] + b[1]]);
    let fd = |i: usize, j: usize| {
        (at(e(i, h), e(j, h)) - at(e(i, h), e(j, -h)) - at(e(i, -h), e(j, h)) + at(e(i, -h), e(j, -h)))
            / (4.0 * h * h)
    };
    let m = hessian_of_inverse_square(p);
    let q = (p[0] * p[0] + p[1] * p[1]).powi(2);
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            prop_assert!((v - fd(i, j)).abs() <= 1e-5 * 6.0 / q);
        }
    }
    let (lo, hi) = hessian_eigenvalues(p).unwrap();
    prop_assert!((lo + 2.0 / q).abs() <= 1e-12 / q && (hi - 6.0 / q).abs() <= 1e-12 / q);
    Ok(())
}

pub fn pmp_inputs() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0..1.0f64, -3.0..-0.05f64, 0.0..5.0f64)
}

pub fn pmp_control_is_maximal((r, q0, w): (f64, f64, f64)) -> Check {
    let best = pmp_control(r, q0).unwrap();
    prop_assert!(pmp_hamiltonian(r, best, q0) >= pmp_hamiltonian(r, w, q0) - 1e-12);
    Ok(())
}

/// Errors of the polar grid oracle at increasing resolutions on a fixed hull.
pub fn grid_errors(resolutions: &[usize]) -> (f64, Vec<f64>) {
    let body = hull(&[[0.3, 0.1, -1.0], [-0.4, 0.2, -0.8], [0.0, -0.5, -1.2]]);
    let d = Delta::new(0.5).unwrap();
    let exact = resistance(&body, d).unwrap().total;
    let errs = resolutions.iter().map(|&n| (resistance_grid(&body, d, n).unwrap() - exact).abs()).collect();
    (exact, errs)
}
