//! Profile optimization for k-fold bodies.
//!
//! The profile `g` of height `M` is flat on `[0, r₀]` and piecewise linear
//! on `n` uniform cells of `[r₀, 1]`, with the flat radius `r₀` free.
//! Convexity and monotonicity become `0 ≤ s₁ ≤ … ≤ sₙ`, and `g(0) = -M`
//! fixes `Σ sⱼ = nM/(1 - r₀)`. The objective `J`
//! (classical integrand, body of height `M`) is minimized by spectral
//! projected gradient descent with forward-difference gradients, a monotone
//! Armijo search and isotonic projection of the slopes.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::criterion::audit_body;
use crate::error::{invalid, Result};
use crate::geometry::{BodySpec, ConvexBody, HullBody, Profile};
use crate::resistance::{resistance, Delta};

use super::OptimizationReport;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KfoldOptions {
    pub max_iter: usize,
    /// Stop once `‖P(x - ∇J) - x‖∞` falls below this.
    pub pg_tol: f64,
    /// Stop once ten consecutive steps gain less than this in total.
    pub stall_tol: f64,
    pub fd_step: f64,
}

impl Default for KfoldOptions {
    fn default() -> Self {
        Self { max_iter: 1500, pg_tol: 1e-9, stall_tol: 1e-10, fd_step: 1e-7 }
    }
}

/// Weighted pool-adjacent-violators: the nondecreasing fit to `y` minimizing
/// `Σ wⱼ (sⱼ - yⱼ)²`.
pub fn weighted_isotonic(y: &[f64], w: &[f64]) -> Vec<f64> {
    // blocks of (mean, weight, count)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&v, &wv) in y.iter().zip(w) {
        let mut cur = (v, wv, 1usize);
        while let Some(&(m, cw, c)) = blocks.last() {
            if m <= cur.0 {
                break;
            }
            blocks.pop();
            let tw = cw + cur.1;
            cur = ((m * cw + cur.0 * cur.1) / tw, tw, c + cur.2);
        }
        blocks.push(cur);
    }
    blocks.into_iter().flat_map(|(m, _, c)| std::iter::repeat_n(m, c)).collect()
}

/// Pool-adjacent-violators with unit weights.
pub fn isotonic(y: &[f64]) -> Vec<f64> {
    weighted_isotonic(y, &vec![1.0; y.len()])
}

/// Projection onto `{0 ≤ s₁ ≤ … ≤ sₙ, Σ wⱼ sⱼ = total}` in the `w`-weighted
/// norm: `max(iso_w(y) + λ, 0)` with the shift `λ` found by bisection.
pub fn project_slopes(y: &[f64], w: &[f64], total: f64) -> Vec<f64> {
    let iso = weighted_isotonic(y, w);
    let sum_at = |lam: f64| iso.iter().zip(w).map(|(v, wv)| wv * (v + lam).max(0.0)).sum::<f64>();
    let wsum: f64 = w.iter().sum();
    let hi0 = iso.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo0 = iso.iter().cloned().fold(f64::INFINITY, f64::min);
    // sum_at(lo) ≤ total ≤ sum_at(hi)
    let mut lo = -hi0;
    let mut hi = total / wsum - lo0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sum_at(mid) < total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    let mut s: Vec<f64> = iso.iter().map(|v| (v + lam).max(0.0)).collect();
    // remove the bisection residue on the positive slopes
    let err = total - s.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
    let wpos: f64 = s.iter().zip(w).filter(|(v, _)| **v > 0.0).map(|(_, b)| b).sum();
    if wpos > 0.0 {
        for v in s.iter_mut().filter(|v| **v > 0.0) {
            *v += err / wpos;
        }
    }
    s
}

/// Profile that is flat on `[0, knots[0]]` and has slope `slopes[j]` on
/// `[knots[j], knots[j + 1]]`; the last knot must be 1.
pub fn grid_profile(knots: &[f64], slopes: &[f64]) -> Result<Profile> {
    if knots.len() != slopes.len() + 1 || slopes.is_empty() {
        return Err(invalid("need one slope per cell"));
    }
    let depth: f64 = knots.windows(2).zip(slopes).map(|(w, s)| (w[1] - w[0]) * s).sum();
    let mut ks = Vec::with_capacity(knots.len() + 1);
    let mut vs = Vec::with_capacity(knots.len() + 1);
    if knots[0] > 0.0 {
        ks.push(0.0);
        vs.push(-depth);
    }
    let mut z = -depth;
    for (j, &t) in knots.iter().enumerate() {
        ks.push(t);
        vs.push(if j + 1 == knots.len() { 0.0 } else { z });
        if j < slopes.len() {
            z += slopes[j] * (knots[j + 1] - t);
        }
    }
    Profile::piecewise_linear(ks, vs)
}

/// Generator points of the k-fold hull, without any shape check (the hull
/// convexifies a non-convex profile).
fn kfold_points(k: usize, knots: &[f64], slopes: &[f64]) -> Vec<[f64; 3]> {
    let n = slopes.len();
    let mut g = vec![0.0; n + 1];
    for j in (0..n).rev() {
        g[j] = g[j + 1] - slopes[j] * (knots[j + 1] - knots[j]);
    }
    let mut pts = Vec::with_capacity(k * n + 1);
    pts.push([0.0, 0.0, g[0]]);
    for i in 0..k {
        let (s, c) = (TAU * i as f64 / k as f64).sin_cos();
        for (&r, &z) in knots.iter().zip(&g).take(n) {
            if r > 0.0 {
                pts.push([r * c, r * s, z]);
            }
        }
    }
    pts
}

/// `J_δ` of the k-fold hull whose profile is flat up to `knots[0]` and has
/// the given cell slopes (unchecked).
pub fn kfold_objective(k: usize, knots: &[f64], slopes: &[f64], delta: Delta) -> Result<f64> {
    let hull = HullBody::new(&kfold_points(k, knots, slopes))?;
    let d = delta.value();
    let mut total = 0.0;
    for f in hull.facets() {
        let g2 = f.gradient[0] * f.gradient[0] + f.gradient[1] * f.gradient[1];
        total += f.plan_area / (g2 + d);
    }
    for fan in hull.arc_fans() {
        total += crate::resistance::cone_arc_resistance(hull.points()[fan.apex], [fan.alpha, fan.beta], delta)?;
    }
    Ok(total)
}

const MAX_FLAT: f64 = 0.9;

/// Knots `r₀ + j (1 - r₀)/n`, `j = 0..=n`.
pub fn uniform_knots(r0: f64, n: usize) -> Vec<f64> {
    let h = (1.0 - r0) / n as f64;
    (0..=n).map(|j| if j == n { 1.0 } else { r0 + j as f64 * h }).collect()
}

/// Starting point: flat to 0.4, then linearly increasing slopes.
fn initial_guess(n: usize) -> (f64, Vec<f64>) {
    let r0 = 0.4;
    let shape = (0..n).map(|j| 0.5 + (j as f64 + 0.5) / n as f64).collect();
    (r0, shape)
}

/// Minimizes the classical resistance `J` over k-fold bodies of height `m`
/// whose profile is flat on `[0, r₀]` and piecewise linear on `n` uniform
/// cells of `[r₀, 1]`. The flat radius and the slopes are optimized
/// together; the reported argument is `[r₀, s₁, …, sₙ]`.
pub fn optimize_kfold(m: f64, k: usize, n: usize, opts: KfoldOptions) -> Result<OptimizationReport> {
    if n < 8 {
        return Err(invalid(format!("{n} profile cells; at least 8 are needed")));
    }
    let (r0, shape) = initial_guess(n);
    optimize_kfold_from(m, k, r0, &shape, opts)
}

/// As [`optimize_kfold`], starting from flat radius `r0` and slopes
/// proportional to `shape`.
pub fn optimize_kfold_from(m: f64, k: usize, r0: f64, shape: &[f64], opts: KfoldOptions) -> Result<OptimizationReport> {
    let n = shape.len();
    if !(m > 0.0 && m.is_finite()) {
        return Err(invalid(format!("height M = {m} must be positive")));
    }
    if k < 2 {
        return Err(invalid(format!("symmetry order k = {k} must be >= 2")));
    }
    if n < 4 {
        return Err(invalid(format!("{n} profile cells; at least 4 are needed")));
    }
    if !(0.0..=MAX_FLAT).contains(&r0) {
        return Err(invalid(format!("flat radius {r0} outside [0, {MAX_FLAT}]")));
    }
    let delta = Delta::new(1.0)?;
    let unit = vec![1.0; n];
    // x = (r₀, σ₁..σₙ) with Σσ = n; the slopes are σ M / (1 - r₀), so the
    // feasible set does not depend on r₀.
    let slopes_of = |x: &[f64]| -> Vec<f64> { x[1..].iter().map(|v| v * m / (1.0 - x[0])).collect() };
    let f = |x: &[f64]| kfold_objective(k, &uniform_knots(x[0], n), &slopes_of(x), delta);
    let project = |y: &[f64]| -> Vec<f64> {
        let mut p = Vec::with_capacity(n + 1);
        p.push(y[0].clamp(0.0, MAX_FLAT));
        p.extend(project_slopes(&y[1..], &unit, n as f64));
        p
    };
    let grad = |x: &[f64], fx: f64| -> Result<Vec<f64>> {
        let mut g = vec![0.0; n + 1];
        let mut t = x.to_vec();
        for j in 0..=n {
            let mut step = opts.fd_step * (1.0 + x[j].abs());
            if j == 0 && x[0] + step > MAX_FLAT {
                step = -step;
            }
            t[j] = x[j] + step;
            g[j] = (f(&t)? - fx) / step;
            t[j] = x[j];
        }
        Ok(g)
    };
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let pg_norm = |x: &[f64], g: &[f64]| {
        let y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
        sup(&project(&y).iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>())
    };

    let mut start = vec![r0];
    start.extend_from_slice(shape);
    let mut x = project(&start);
    let mut fx = f(&x)?;
    let mut gx = grad(&x, fx)?;
    let mut lambda = 1.0 / pg_norm(&x, &gx).max(1e-12);
    let mut trace = vec![fx];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if pg_norm(&x, &gx) < opts.pg_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let y: Vec<f64> = x.iter().zip(&gx).map(|(a, b)| a - lambda * b).collect();
        let d: Vec<f64> = project(&y).iter().zip(&x).map(|(p, a)| p - a).collect();
        let slope: f64 = d.iter().zip(&gx).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            converged = true;
            break;
        }
        let mut t = 1.0;
        let accepted = loop {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| (a + t * b).max(0.0)).collect();
            let fxn = f(&xn)?;
            if fxn <= fx + 1e-4 * t * slope {
                break Some((xn, fxn));
            }
            t *= 0.5;
            if t < 1e-12 {
                break None;
            }
        };
        let Some((xn, fxn)) = accepted else {
            converged = true;
            break;
        };
        let gn = grad(&xn, fxn)?;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(gn.iter().zip(&gx)).map(|(a, (b, c))| a * (b - c)).sum();
        let ss: f64 = s.iter().map(|a| a * a).sum();
        lambda = if sy > 0.0 { (ss / sy).clamp(1e-10, 1e10) } else { 1e10 };
        x = xn;
        fx = fxn;
        gx = gn;
        trace.push(fx);
        let len = trace.len();
        if len > 10 && trace[len - 11] - fx < opts.stall_tol {
            converged = true;
            break;
        }
    }

    let slopes = slopes_of(&x);
    let profile = grid_profile(&uniform_knots(x[0], n), &slopes)?;
    let body = ConvexBody::from_spec(BodySpec::Kfold { k, profile, samples: n })?;
    let value = resistance(&body, delta)?.total;
    let flags = audit_body(&body, delta).flags();
    let mut argument = vec![x[0]];
    argument.extend(slopes);
    Ok(OptimizationReport {
        value,
        argument,
        body: body.spec().clone(),
        trace,
        iterations,
        converged,
        flags,
    })
}
