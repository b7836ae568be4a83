//! Convex bodies over the unit disc `Ω` and their conical parts.
//!
//! A body is stored as a function `u: Ω → [-height, 0]`; the physical body is
//! the region above its graph. Every representation except the radial one is
//! realised as a lower convex hull ([`HullBody`]), which keeps cone fans over
//! boundary arcs exact.

pub mod hull;
pub mod plane;
pub mod profile;

use std::f64::consts::{PI, TAU};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, ResistError, Result};
pub use hull::{ArcFan, Facet, FacetKind, HullBody, Vertex};
pub use plane::P2;
pub use profile::Profile;

/// Default number of samples per extremal curve for closed-form k-fold profiles.
pub const DEFAULT_KFOLD_SAMPLES: usize = 64;

/// Tolerance used to match fan apexes and arc endpoints in
/// [`ConvexBody::conical_parts`].
pub const CONE_TOL: f64 = 1e-9;

fn default_samples() -> usize {
    DEFAULT_KFOLD_SAMPLES
}

/// Serializable description of a body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BodySpec {
    /// Lower hull of the points and the base circle.
    Hull { points: Vec<[f64; 3]> },
    /// Rotationally symmetric body `u(x) = z(|x|)`.
    Radial { profile: Profile },
    /// Hull of `k` rotated copies of the profile curve `(r cos θᵢ, r sin θᵢ, g(r))`, `θᵢ = 2πi/k`.
    Kfold {
        k: usize,
        profile: Profile,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// Regular `k`-gon of circumradius `rho` at depth `-depth`, one vertex at `(rho, 0)`.
    Polygon { k: usize, rho: f64, depth: f64 },
    /// Segment from `(-a, 0, -depth)` to `(a, 0, -depth)`.
    Screwdriver { a: f64, depth: f64 },
    /// Oblique cone with the given apex `(x₀, y₀, -z₀)`.
    Cone { apex: [f64; 3] },
}

#[derive(Clone, Debug)]
enum Surface {
    Hull(HullBody),
    Radial(Profile),
}

/// A conical part: the hull of the apex `(r₀ cos φ₀, r₀ sin φ₀, -z₀)` and the
/// base arc `[alpha, beta]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub r0: f64,
    pub phi0: f64,
    pub z0: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ConeSpec {
    pub fn new(r0: f64, phi0: f64, z0: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&r0) {
            return Err(ResistError::ApexOnBoundary(r0));
        }
        if !(z0 > 0.0 && z0.is_finite()) {
            return Err(invalid(format!("apex depth {z0} must be positive")));
        }
        if !(beta > alpha && beta - alpha <= TAU + 1e-12) {
            return Err(invalid(format!("arc [{alpha}, {beta}] must be nonempty and at most 2π")));
        }
        Ok(Self { r0, phi0: plane::normalize_angle(phi0), z0, alpha, beta })
    }

    /// Cone spec from an apex given in plan coordinates.
    pub fn from_apex(apex: [f64; 3], alpha: f64, beta: f64) -> Result<Self> {
        let r0 = apex[0].hypot(apex[1]);
        let phi0 = if r0 == 0.0 { 0.0 } else { apex[1].atan2(apex[0]) };
        Self::new(r0, phi0, -apex[2], alpha, beta)
    }

    pub fn apex(&self) -> [f64; 3] {
        [self.r0 * self.phi0.cos(), self.r0 * self.phi0.sin(), -self.z0]
    }

    pub fn width(&self) -> f64 {
        self.beta - self.alpha
    }
}

/// A convex function on the closed unit disc with values in `[-height, 0]`.
#[derive(Clone, Debug)]
pub struct ConvexBody {
    spec: BodySpec,
    surface: Surface,
}

impl ConvexBody {
    pub fn from_spec(spec: BodySpec) -> Result<Self> {
        let surface = match &spec {
            BodySpec::Hull { points } => Surface::Hull(HullBody::new(points)?),
            BodySpec::Radial { profile } => {
                profile.validate()?;
                Surface::Radial(profile.clone())
            }
            BodySpec::Kfold { k, profile, samples } => {
                if *k < 2 {
                    return Err(invalid(format!("symmetry order k = {k} must be >= 2")));
                }
                if *samples < 1 {
                    return Err(invalid("k-fold bodies need at least one sample per curve"));
                }
                profile.validate()?;
                let mut pts = Vec::new();
                for i in 0..*k {
                    let th = TAU * i as f64 / *k as f64;
                    let (s, c) = th.sin_cos();
                    for r in profile.sample_radii(*samples) {
                        if r < 1.0 {
                            pts.push([r * c, r * s, profile.value(r)]);
                        }
                    }
                }
                Surface::Hull(HullBody::new(&pts)?)
            }
            BodySpec::Polygon { k, rho, depth } => {
                if *k < 2 {
                    return Err(invalid(format!("polygon order k = {k} must be >= 2")));
                }
                if !(*rho > 0.0 && *rho < 1.0) {
                    return Err(invalid(format!("circumradius {rho} must lie in (0, 1)")));
                }
                check_depth(*depth)?;
                let pts: Vec<[f64; 3]> = (0..*k)
                    .map(|i| {
                        let th = TAU * i as f64 / *k as f64;
                        [rho * th.cos(), rho * th.sin(), -depth]
                    })
                    .collect();
                Surface::Hull(HullBody::new(&pts)?)
            }
            BodySpec::Screwdriver { a, depth } => {
                if !(0.0..1.0).contains(a) {
                    return Err(invalid(format!("half-length {a} must lie in [0, 1)")));
                }
                check_depth(*depth)?;
                Surface::Hull(HullBody::new(&[[*a, 0.0, -depth], [-a, 0.0, -depth]])?)
            }
            BodySpec::Cone { apex } => {
                if apex[0].hypot(apex[1]) >= 1.0 {
                    return Err(ResistError::ApexOnBoundary(apex[0].hypot(apex[1])));
                }
                check_depth(-apex[2])?;
                Surface::Hull(HullBody::new(&[*apex])?)
            }
        };
        Ok(Self { spec, surface })
    }

    pub fn spec(&self) -> &BodySpec {
        &self.spec
    }

    pub fn as_hull(&self) -> Option<&HullBody> {
        match &self.surface {
            Surface::Hull(h) => Some(h),
            Surface::Radial(_) => None,
        }
    }

    pub fn radial_profile(&self) -> Option<&Profile> {
        match &self.surface {
            Surface::Radial(p) => Some(p),
            Surface::Hull(_) => None,
        }
    }

    /// Depth of the deepest point below `z = 0`.
    pub fn height(&self) -> f64 {
        match &self.surface {
            Surface::Hull(h) => h.height(),
            Surface::Radial(p) => p.depth(),
        }
    }

    fn check_domain(x: P2) -> Result<()> {
        if !(x[0].is_finite() && x[1].is_finite()) || x[0] * x[0] + x[1] * x[1] > 1.0 + 1e-12 {
            return Err(ResistError::OutsideDomain { x: x[0], y: x[1] });
        }
        Ok(())
    }

    pub fn value_at(&self, x: P2) -> Result<f64> {
        Self::check_domain(x)?;
        Ok(match &self.surface {
            Surface::Hull(h) => h.value_at(x),
            Surface::Radial(p) => p.value(x[0].hypot(x[1])),
        })
    }

    /// Gradient of `u` at an interior point; `Ok(None)` on the skeleton
    /// (edges, apexes, kink circles) where it is undefined.
    pub fn gradient_at(&self, x: P2) -> Result<Option<P2>> {
        Self::check_domain(x)?;
        if x[0] * x[0] + x[1] * x[1] >= 1.0 {
            return Err(ResistError::OutsideDomain { x: x[0], y: x[1] });
        }
        Ok(match &self.surface {
            Surface::Hull(h) => h.gradient_at(x),
            Surface::Radial(p) => {
                let r = x[0].hypot(x[1]);
                if r < 1e-14 {
                    (p.slope(0.0) == 0.0).then_some([0.0, 0.0])
                } else if p.is_kink(r, 1e-12) {
                    None
                } else {
                    let s = p.slope(r) / r;
                    Some([s * x[0], s * x[1]])
                }
            }
        })
    }

    /// The same body rotated by `angle` about the vertical axis, as a hull.
    pub fn rotated(&self, angle: f64) -> Result<Self> {
        match &self.surface {
            Surface::Radial(_) => Ok(self.clone()),
            Surface::Hull(h) => {
                let (s, c) = angle.sin_cos();
                let points = h.points().iter().map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]).collect();
                Self::from_spec(BodySpec::Hull { points })
            }
        }
    }

    /// Every maximal conical part `conv{apex, arc × {0}}` of the surface.
    ///
    /// Hull bodies report all their fans wider than `tol`. For k-fold bodies
    /// the fans at intermediate samples of a curved profile only approximate
    /// a smooth surface; there a fan counts as conical only when its apex lies
    /// on an extremal curve and its arc reaches a bisector `θᵢ ± π/k` between
    /// two curves, i.e. the cone closes the gap between neighbouring curves.
    pub fn conical_parts(&self, tol: f64) -> Vec<ConeSpec> {
        match &self.surface {
            Surface::Radial(p) => {
                let d = p.depth();
                let linear = (0..=64).all(|j| {
                    let r = j as f64 / 64.0;
                    (p.value(r) - d * (r - 1.0)).abs() <= 1e-12 * (1.0 + d)
                });
                if linear {
                    ConeSpec::new(0.0, 0.0, d, 0.0, TAU).into_iter().collect()
                } else {
                    Vec::new()
                }
            }
            Surface::Hull(h) => {
                let fans = h.arc_fans().iter().filter(|f| f.width() > tol);
                let keep: Box<dyn Fn(&ArcFan) -> bool> = match &self.spec {
                    BodySpec::Kfold { k, .. } => {
                        let half = PI / *k as f64;
                        let k = *k;
                        Box::new(move |f: &ArcFan| {
                            let p = h.points()[f.apex];
                            let Ok(curve) = extremal_curve(k, [p[0], p[1]]) else {
                                return false;
                            };
                            (0..k).filter(|j| curve.is_none_or(|i| i == *j)).any(|j| {
                                let th = TAU * j as f64 / k as f64;
                                f.contains(th + half, CONE_TOL) || f.contains(th - half, CONE_TOL)
                            })
                        })
                    }
                    _ => Box::new(|_: &ArcFan| true),
                };
                fans.filter(|f| keep(f))
                    .filter_map(|f| ConeSpec::from_apex(h.points()[f.apex], f.alpha, f.beta).ok())
                    .collect()
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.spec).map_err(|e| invalid(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: BodySpec = serde_json::from_str(text).map_err(|e| invalid(format!("body JSON: {e}")))?;
        Self::from_spec(spec)
    }

    /// Plan-view facet table: one row per facet or fan.
    pub fn write_facets_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| ResistError::Numerical(format!("csv: {e}"));
        w.write_record(["id", "kind", "vertices", "gx", "gy", "plan_area"]).map_err(io)?;
        if let Some(h) = self.as_hull() {
            for (i, f) in h.facets().iter().enumerate() {
                let verts: Vec<String> = f.plan.iter().map(|p| format!("{:.15e}:{:.15e}", p[0], p[1])).collect();
                let kind = match f.kind {
                    FacetKind::Central => "facet",
                    FacetKind::Rim => "triangle",
                };
                w.write_record([
                    format!("F{i}"),
                    kind.to_string(),
                    verts.join(";"),
                    format!("{:.15e}", f.gradient[0]),
                    format!("{:.15e}", f.gradient[1]),
                    format!("{:.15e}", f.plan_area),
                ])
                .map_err(io)?;
            }
            for (i, fan) in h.arc_fans().iter().enumerate() {
                let p = h.points()[fan.apex];
                w.write_record([
                    format!("C{i}"),
                    "cone_arc".to_string(),
                    format!("{:.15e}:{:.15e};arc:{:.15e}:{:.15e}", p[0], p[1], fan.alpha, fan.beta),
                    String::new(),
                    String::new(),
                    format!("{:.15e}", h.fan_area(fan)),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| ResistError::Numerical(format!("csv: {e}")))?;
        Ok(())
    }
}

fn check_depth(depth: f64) -> Result<()> {
    if depth > 0.0 && depth.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("depth {depth} must be positive")))
    }
}

/// Index of the extremal curve of a k-fold body through plan point `p`, with
/// `None` for the shared centre; points off every curve give `Err(())`.
fn extremal_curve(k: usize, p: P2) -> std::result::Result<Option<usize>, ()> {
    let r = p[0].hypot(p[1]);
    if r <= CONE_TOL {
        return Ok(None);
    }
    (0..k)
        .find(|&i| {
            let (s, c) = (TAU * i as f64 / k as f64).sin_cos();
            (p[0] * s - p[1] * c).abs() <= CONE_TOL && p[0] * c + p[1] * s > 0.0
        })
        .map(Some)
        .ok_or(())
}

/// Lower hull of the points and the base circle; with `depth` given the
/// points are first scaled vertically so that the deepest one sits at `-depth`.
pub fn hull_body(points: &[[f64; 3]], depth: Option<f64>) -> Result<ConvexBody> {
    let mut pts = points.to_vec();
    if let Some(m) = depth {
        check_depth(m)?;
        let h = pts.iter().map(|p| -p[2]).fold(0.0, f64::max);
        if h <= 0.0 {
            return Err(invalid("at least one point must lie strictly below z = 0"));
        }
        for p in &mut pts {
            p[2] *= m / h;
        }
    }
    ConvexBody::from_spec(BodySpec::Hull { points: pts })
}

/// Regular `k`-gon of circumradius `rho` at depth `-m`, one vertex at `(rho, 0)`.
pub fn polygon_body(k: usize, rho: f64, m: f64) -> Result<ConvexBody> {
    ConvexBody::from_spec(BodySpec::Polygon { k, rho, depth: m })
}

pub fn kfold_body(k: usize, g: Profile) -> Result<ConvexBody> {
    ConvexBody::from_spec(BodySpec::Kfold { k, profile: g, samples: DEFAULT_KFOLD_SAMPLES })
}

pub fn screwdriver_body(a: f64, depth: f64) -> Result<ConvexBody> {
    ConvexBody::from_spec(BodySpec::Screwdriver { a, depth })
}

pub fn oblique_cone(x0: f64, y0: f64, z0: f64) -> Result<ConvexBody> {
    ConvexBody::from_spec(BodySpec::Cone { apex: [x0, y0, -z0] })
}

pub fn radial_body(profile: Profile) -> Result<ConvexBody> {
    ConvexBody::from_spec(BodySpec::Radial { profile })
}

/// Conical parts of `body` (see [`ConvexBody::conical_parts`]).
pub fn detect_conical_parts(body: &ConvexBody, tol: f64) -> Vec<ConeSpec> {
    body.conical_parts(tol)
}
