use serde::{Deserialize, Serialize};

use crate::error::{invalid, ResistError, Result};

const SHAPE_TOL: f64 = 1e-12;

/// A convex, nondecreasing profile on `[0, 1]` ending at zero.
///
/// Used both for radial bodies (`z(r)`) and for the extremal curves of k-fold
/// bodies (`g(r)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// Linear interpolant through `(knots[i], values[i])`.
    PiecewiseLinear { knots: Vec<f64>, values: Vec<f64> },
    /// `depth * (r^exponent - 1)`.
    Power { exponent: f64, depth: f64 },
}

impl Profile {
    pub fn piecewise_linear(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let p = Profile::PiecewiseLinear { knots, values };
        p.validate()?;
        Ok(p)
    }

    /// Uniform knots `j / n` with the given segment slopes, starting at `-depth`.
    /// The slopes must sum to `depth * n` so that the profile ends at zero.
    pub fn from_slopes(slopes: &[f64]) -> Result<Self> {
        let n = slopes.len();
        if n == 0 {
            return Err(invalid("empty slope vector"));
        }
        let h = 1.0 / n as f64;
        let depth: f64 = slopes.iter().sum::<f64>() * h;
        let knots: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
        let mut values = Vec::with_capacity(n + 1);
        let mut z = -depth;
        values.push(z);
        for (j, s) in slopes.iter().enumerate() {
            z += s * h;
            values.push(if j + 1 == n { 0.0 } else { z });
        }
        Self::piecewise_linear(knots, values)
    }

    pub fn power(exponent: f64, depth: f64) -> Result<Self> {
        let p = Profile::Power { exponent, depth };
        p.validate()?;
        Ok(p)
    }

    /// Linear profile `depth * (r - 1)`.
    pub fn linear(depth: f64) -> Result<Self> {
        Self::piecewise_linear(vec![0.0, 1.0], vec![-depth, 0.0])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::Power { exponent, depth } => {
                if !(exponent.is_finite() && *exponent >= 1.0) {
                    return Err(ResistError::NotConvex(format!("exponent {exponent} < 1")));
                }
                if !(depth.is_finite() && *depth > 0.0) {
                    return Err(invalid(format!("profile depth {depth} must be positive")));
                }
                Ok(())
            }
            Profile::PiecewiseLinear { knots, values } => {
                if knots.len() < 2 || knots.len() != values.len() {
                    return Err(invalid("piecewise-linear profile needs >= 2 knots and matching values"));
                }
                if knots[0] != 0.0 || (knots[knots.len() - 1] - 1.0).abs() > SHAPE_TOL {
                    return Err(invalid("profile knots must span [0, 1]"));
                }
                if knots.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("profile knots must be strictly increasing"));
                }
                if values[values.len() - 1].abs() > SHAPE_TOL {
                    return Err(invalid("profile must vanish at r = 1"));
                }
                if !(values[0] < 0.0) {
                    return Err(invalid("profile must be negative at r = 0"));
                }
                let scale = values[0].abs().max(1.0);
                let slopes: Vec<f64> = segment_slopes(knots, values).collect();
                if slopes.iter().any(|s| *s < -SHAPE_TOL * scale) {
                    return Err(ResistError::NotConvex("profile decreases".into()));
                }
                if slopes.windows(2).any(|w| w[1] < w[0] - 1e-9 * scale.max(w[0].abs())) {
                    return Err(ResistError::NotConvex("slopes decrease".into()));
                }
                Ok(())
            }
        }
    }

    /// `-z(0)`, the depth of the deepest point.
    pub fn depth(&self) -> f64 {
        match self {
            Profile::Power { depth, .. } => *depth,
            Profile::PiecewiseLinear { values, .. } => -values[0],
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, 1.0);
        match self {
            Profile::Power { exponent, depth } => depth * (r.powf(*exponent) - 1.0),
            Profile::PiecewiseLinear { knots, values } => {
                let i = segment_index(knots, r);
                let t = (r - knots[i]) / (knots[i + 1] - knots[i]);
                values[i] + t * (values[i + 1] - values[i])
            }
        }
    }

    /// Derivative `z'(r)`; on knots the right-hand slope.
    pub fn slope(&self, r: f64) -> f64 {
        match self {
            Profile::Power { exponent, depth } => {
                if r <= 0.0 {
                    if *exponent == 1.0 {
                        *depth
                    } else {
                        0.0
                    }
                } else {
                    depth * exponent * r.powf(exponent - 1.0)
                }
            }
            Profile::PiecewiseLinear { knots, values } => {
                let i = segment_index(knots, r);
                (values[i + 1] - values[i]) / (knots[i + 1] - knots[i])
            }
        }
    }

    /// Whether `r` sits on an interior kink of the profile (within `tol`).
    pub fn is_kink(&self, r: f64, tol: f64) -> bool {
        match self {
            Profile::Power { exponent, .. } => *exponent == 1.0 && r.abs() <= tol,
            Profile::PiecewiseLinear { knots, .. } => {
                knots[1..knots.len() - 1].iter().any(|k| (k - r).abs() <= tol)
            }
        }
    }

    /// Sample radii used when a profile has to be turned into hull points:
    /// the knots of a piecewise-linear profile, or `n` uniform cells otherwise.
    pub fn sample_radii(&self, n: usize) -> Vec<f64> {
        match self {
            Profile::PiecewiseLinear { knots, .. } => knots.clone(),
            Profile::Power { .. } => (0..=n).map(|j| j as f64 / n as f64).collect(),
        }
    }
}

fn segment_slopes<'a>(knots: &'a [f64], values: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
    knots
        .windows(2)
        .zip(values.windows(2))
        .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
}

fn segment_index(knots: &[f64], r: f64) -> usize {
    let n = knots.len() - 1;
    match knots.binary_search_by(|k| k.partial_cmp(&r).unwrap()) {
        Ok(i) => i.min(n - 1),
        Err(i) => i.saturating_sub(1).min(n - 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_linear_eval() {
        let p = Profile::piecewise_linear(vec![0.0, 0.5, 1.0], vec![-1.0, -0.75, 0.0]).unwrap();
        assert_eq!(p.depth(), 1.0);
        assert!((p.value(0.25) + 0.875).abs() < 1e-15);
        assert_eq!(p.slope(0.5), 1.5);
        assert_eq!(p.slope(0.2), 0.5);
        assert!(p.is_kink(0.5, 1e-12) && !p.is_kink(0.3, 1e-12));
    }

    #[test]
    fn rejects_non_convex() {
        let e = Profile::piecewise_linear(vec![0.0, 0.5, 1.0], vec![-1.0, -0.2, 0.0]);
        assert!(matches!(e, Err(ResistError::NotConvex(_))));
        assert!(Profile::power(0.5, 1.0).is_err());
        assert!(Profile::piecewise_linear(vec![0.0, 1.0], vec![-1.0, 0.1]).is_err());
    }

    #[test]
    fn from_slopes_closes_at_zero() {
        let p = Profile::from_slopes(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!((p.depth() - 1.5).abs() < 1e-15);
        assert_eq!(p.value(1.0), 0.0);
    }

    #[test]
    fn power_profile() {
        let p = Profile::power(4.0 / 3.0, 1.0).unwrap();
        assert_eq!(p.value(0.0), -1.0);
        assert_eq!(p.value(1.0), 0.0);
        assert!((p.slope(1.0) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.slope(0.0), 0.0);
    }
}
