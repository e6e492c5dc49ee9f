//! Construction and validation of the stationary folded apparatus.
//!
//! The apparatus folds the N-stage chain into two mirror assemblies: a
//! splitter unit whose circuit the beam rounds N-1 times (crossing the same
//! splitter plate N times), and a tilted delay unit whose spiral gives the
//! branch split off at round `i` exactly `(N-i)` extra circuit lengths
//! before it reaches the retro mirror. [`build_canonical_layout`] produces
//! explicit mirror planes and apertures from the path spacings;
//! [`trace_layout`] re-derives every claimed property by pure ray tracing.

mod build;
mod trace;

pub use build::build_canonical_layout;
pub use trace::trace_layout;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Path spacings of the folded layout: `s_b` between splitter-unit rounds,
/// `s_d` / `s_v` the in-plane and cross-plane components of the same pitch
/// inside the delay unit. They must satisfy `s_b^2 = s_d^2 + s_v^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spacings {
    pub s_b: f64,
    pub s_d: f64,
    pub s_v: f64,
}

impl Spacings {
    pub fn new(s_b: f64, s_d: f64, s_v: f64) -> Result<Self> {
        let sp = Spacings { s_b, s_d, s_v };
        sp.validate()?;
        Ok(sp)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("s_b", self.s_b), ("s_d", self.s_d), ("s_v", self.s_v)] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::domain(format!(
                    "spacing {name} must be positive and finite, got {v}"
                )));
            }
        }
        let lhs = self.s_b * self.s_b;
        let rhs = self.s_d * self.s_d + self.s_v * self.s_v;
        if ((lhs - rhs) / lhs).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "spacings must satisfy s_b^2 = s_d^2 + s_v^2 (relative residual {})",
                ((lhs - rhs) / lhs).abs()
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Spacings {
        Spacings {
            s_b: self.s_b * factor,
            s_d: self.s_d * factor,
            s_v: self.s_v * factor,
        }
    }

    /// Tilt between the splitter-unit plane and the delay-unit plane.
    pub fn tilt_theta(&self) -> f64 {
        (self.s_v / self.s_b).asin()
    }
}

/// A flat mirror: anchor point, unit normal, and a convex aperture polygon
/// whose vertices lie in the mirror plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarMirror {
    pub anchor: Point3<f64>,
    pub normal: Vector3<f64>,
    pub aperture: Vec<Point3<f64>>,
}

impl PlanarMirror {
    pub fn validate(&self, scale: f64) -> Result<()> {
        if (self.normal.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLayout(format!(
                "mirror normal must be unit length, |n| = {}",
                self.normal.norm()
            )));
        }
        if self.aperture.len() < 3 {
            return Err(Error::InvalidLayout(
                "aperture polygon needs at least 3 vertices".into(),
            ));
        }
        for v in &self.aperture {
            let d = (v - self.anchor).dot(&self.normal).abs();
            if d > 1e-9 * scale.max(1.0) {
                return Err(Error::InvalidLayout(format!(
                    "aperture vertex off the mirror plane by {d}"
                )));
            }
        }
        Ok(())
    }

    /// Orthonormal in-plane basis.
    pub(crate) fn plane_basis(&self) -> (Vector3<f64>, Vector3<f64>) {
        let n = self.normal;
        let seed = if n.x.abs() < 0.9 {
            Vector3::x()
        } else {
            Vector3::y()
        };
        let e1 = n.cross(&seed).normalize();
        let e2 = n.cross(&e1);
        (e1, e2)
    }

    pub(crate) fn to_plane(&self, p: &Point3<f64>) -> (f64, f64) {
        let (e1, e2) = self.plane_basis();
        let d = p - self.anchor;
        (d.dot(&e1), d.dot(&e2))
    }

    /// Point-in-convex-polygon test in the mirror plane. Points within
    /// `tol` of an edge count as inside.
    pub fn contains(&self, p: &Point3<f64>, tol: f64) -> bool {
        let (px, py) = self.to_plane(p);
        let verts: Vec<(f64, f64)> = self.aperture.iter().map(|v| self.to_plane(v)).collect();
        let mut sign = 0.0f64;
        for i in 0..verts.len() {
            let (ax, ay) = verts[i];
            let (bx, by) = verts[(i + 1) % verts.len()];
            let cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
            let edge_len = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt().max(1e-300);
            let dist = cross / edge_len;
            if dist.abs() <= tol {
                continue;
            }
            if sign == 0.0 {
                sign = dist.signum();
            } else if dist.signum() != sign {
                return false;
            }
        }
        true
    }

    /// Signed distance from a point (projected into the plane) to the
    /// aperture boundary: negative inside, positive outside.
    pub(crate) fn boundary_distance(&self, p: &Point3<f64>) -> f64 {
        let (px, py) = self.to_plane(p);
        let verts: Vec<(f64, f64)> = self.aperture.iter().map(|v| self.to_plane(v)).collect();
        let mut max_signed = f64::NEG_INFINITY;
        // Convex polygon: signed distance = max over edges of the outward
        // edge distance. Orientation is fixed from the polygon's area sign.
        let mut area = 0.0;
        for i in 0..verts.len() {
            let (ax, ay) = verts[i];
            let (bx, by) = verts[(i + 1) % verts.len()];
            area += ax * by - bx * ay;
        }
        let orient = if area >= 0.0 { 1.0 } else { -1.0 };
        for i in 0..verts.len() {
            let (ax, ay) = verts[i];
            let (bx, by) = verts[(i + 1) % verts.len()];
            let cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
            let edge_len = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt().max(1e-300);
            let signed = -orient * cross / edge_len;
            max_signed = max_signed.max(signed);
        }
        max_signed
    }
}

/// The splitter plate: a planar element the trunk crosses rather than
/// bounces off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitterPlate {
    pub mirror: PlanarMirror,
    pub transmissive: bool,
}

/// Launch ray of the layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRay {
    pub origin: Point3<f64>,
    pub direction: Vector3<f64>,
}

/// Full 3-D placement of the folded apparatus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub spacings: Spacings,
    pub n_rounds: usize,
    /// Tilt between the two unit planes, radians.
    pub tilt_theta: f64,
    pub source: SourceRay,
    pub bs: SplitterPlate,
    /// Splitter-unit fold mirrors, keyed "a", "b", "c", "d".
    pub bs_unit: BTreeMap<String, PlanarMirror>,
    /// Delay-unit mirrors, keyed "a_prime".."d_prime"; "d_prime" carries the
    /// trapezoid aperture whose bottom edge the feed beams pass under.
    pub delay_unit: BTreeMap<String, PlanarMirror>,
    pub mirror_x: PlanarMirror,
    pub mirror_y: PlanarMirror,
}

impl Layout {
    pub fn validate(&self) -> Result<()> {
        self.spacings.validate()?;
        if self.n_rounds < 1 {
            return Err(Error::InvalidLayout("n_rounds must be at least 1".into()));
        }
        let expected = self.spacings.tilt_theta();
        if (self.tilt_theta - expected).abs() > 1e-9 {
            return Err(Error::InvalidLayout(format!(
                "tilt_theta {} inconsistent with arcsin(s_v/s_b) = {}",
                self.tilt_theta, expected
            )));
        }
        if (self.source.direction.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLayout("source direction must be unit".into()));
        }
        let scale = self.spacings.s_b * 100.0;
        self.bs.mirror.validate(scale)?;
        for (name, m) in self.bs_unit.iter().chain(self.delay_unit.iter()) {
            m.validate(scale)
                .map_err(|e| Error::InvalidLayout(format!("{name}: {e}")))?;
        }
        self.mirror_x.validate(scale)?;
        self.mirror_y.validate(scale)?;
        Ok(())
    }
}

/// One verification check: pass flag plus the residual it was judged on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub ok: bool,
    pub residual: f64,
}

/// Result of tracing a layout.
///
/// `round_polylines`/`round_lengths` hold the `n_rounds - 1` full circuits
/// between consecutive splitter crossings (a chain with N crossings has N-1
/// circuit rounds). `delay_lengths` has one entry per split branch: the path
/// length spent inside the delay unit, expected `(N-i) * L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub round_polylines: Vec<Vec<Point3<f64>>>,
    pub round_lengths: Vec<f64>,
    pub delay_lengths: Vec<f64>,
    /// One-way length from the last splitter crossing to the end mirror.
    pub exit_length: f64,
    /// Branch totals: split point -> delay unit -> retro mirror, per round.
    pub arm_lengths: Vec<f64>,
    /// Trunk totals: split point -> end mirror, per round.
    pub trunk_lengths: Vec<f64>,
    pub tilt_theta_deg: f64,
    pub parallel: CheckResult,
    pub lengths: CheckResult,
    pub delay_match: CheckResult,
    pub clearance: CheckResult,
}

impl TraceReport {
    pub fn all_ok(&self) -> bool {
        self.parallel.ok && self.lengths.ok && self.delay_match.ok && self.clearance.ok
    }
}

/// Specular reflection of a ray off an apertured mirror.
///
/// Returns the hit point and reflected direction, or `None` when the ray is
/// parallel to the plane, the intersection lies behind the origin, or the
/// hit falls outside the aperture polygon.
pub fn reflect_ray(
    origin: &Point3<f64>,
    direction: &Vector3<f64>,
    mirror: &PlanarMirror,
) -> Option<(Point3<f64>, Vector3<f64>)> {
    let denom = direction.dot(&mirror.normal);
    if denom.abs() < 1e-12 {
        return None;
    }
    let t = (mirror.anchor - origin).dot(&mirror.normal) / denom;
    if t <= 1e-12 {
        return None;
    }
    let hit = origin + direction * t;
    if !mirror.contains(&hit, 1e-12) {
        return None;
    }
    let new_dir = direction - 2.0 * denom * mirror.normal;
    Some((hit, new_dir))
}

/// Maximum number of parallel rounds that fit an aperture:
/// `floor((layout_scale * aperture_width - 2 * edge_margin) / s_b) + 1`.
///
/// Growing the aperture (scaling the whole apparatus up) or shrinking the
/// round spacing both raise the count; these are the two ways of packing
/// more rounds into the same assembly.
pub fn capacity(
    layout_scale: f64,
    spacings: &Spacings,
    aperture_width: f64,
    edge_margin: f64,
) -> Result<usize> {
    spacings.validate()?;
    if layout_scale <= 0.0 {
        return Err(Error::domain("layout_scale must be positive"));
    }
    if edge_margin < 0.0 {
        return Err(Error::domain("edge_margin must be nonnegative"));
    }
    let effective = layout_scale * aperture_width;
    if effective <= spacings.s_b {
        return Err(Error::domain(format!(
            "aperture width {effective} must exceed the round spacing {}",
            spacings.s_b
        )));
    }
    let usable = effective - 2.0 * edge_margin;
    if usable < 0.0 {
        return Ok(0);
    }
    Ok((usable / spacings.s_b).floor() as usize + 1)
}
