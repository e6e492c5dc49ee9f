//! Independent ray-trace validation of a layout.
//!
//! Nothing here trusts the construction: the trunk is marched hit by hit
//! through whatever apertures the layout provides, every splitter crossing
//! spawns a branch traced through the delay assembly, and the report's
//! residuals are computed from the measured polylines alone.

use nalgebra::{Point3, Vector3};

use super::{CheckResult, Layout, PlanarMirror, TraceReport};
use crate::error::{Error, Result};

type V3 = Vector3<f64>;
type P3 = Point3<f64>;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Splitter,
    Fold,
    EndMirror,
    RetroMirror,
}

struct Element<'a> {
    name: &'a str,
    mirror: &'a PlanarMirror,
    role: Role,
}

struct Hit {
    index: usize,
    t: f64,
    point: P3,
    reflected: V3,
}

fn nearest_hit(elements: &[Element<'_>], origin: &P3, dir: &V3, eps: f64) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for (index, el) in elements.iter().enumerate() {
        let denom = dir.dot(&el.mirror.normal);
        if denom.abs() < 1e-14 {
            continue;
        }
        let t = (el.mirror.anchor - origin).dot(&el.mirror.normal) / denom;
        if t <= eps {
            continue;
        }
        let point = origin + dir * t;
        if !el.mirror.contains(&point, eps) {
            continue;
        }
        if best.as_ref().is_none_or(|b| t < b.t) {
            best = Some(Hit {
                index,
                t,
                point,
                reflected: dir - 2.0 * denom * el.mirror.normal,
            });
        }
    }
    best
}

/// Plane crossing of a segment, for clearance measurements: returns the
/// crossing point when the infinite plane is crossed strictly inside the
/// segment.
fn segment_plane_crossing(a: &P3, b: &P3, mirror: &PlanarMirror) -> Option<P3> {
    let dir = b - a;
    let denom = dir.dot(&mirror.normal);
    if denom.abs() < 1e-14 {
        return None;
    }
    let t = (mirror.anchor - a).dot(&mirror.normal) / denom;
    if t <= 1e-9 || t >= 1.0 - 1e-9 {
        return None;
    }
    Some(a + dir * t)
}

struct BranchTrace {
    delay_length: f64,
    arm_length: f64,
    first_delay_point: Option<P3>,
    completed: bool,
}

/// Trace every beam path through the layout and grade the results.
pub fn trace_layout(layout: &Layout, tolerance: f64) -> Result<TraceReport> {
    layout.validate()?;
    if tolerance <= 0.0 {
        return Err(Error::domain("tolerance must be positive"));
    }
    let n = layout.n_rounds;
    let s_b = layout.spacings.s_b;
    let eps = 1e-9 * s_b;

    let mut elements: Vec<Element<'_>> = vec![Element {
        name: "bs",
        mirror: &layout.bs.mirror,
        role: if layout.bs.transmissive {
            Role::Splitter
        } else {
            Role::Fold
        },
    }];
    for (name, m) in &layout.bs_unit {
        elements.push(Element {
            name,
            mirror: m,
            role: Role::Fold,
        });
    }
    for (name, m) in &layout.delay_unit {
        elements.push(Element {
            name,
            mirror: m,
            role: Role::Fold,
        });
    }
    elements.push(Element {
        name: "mirror_x",
        mirror: &layout.mirror_x,
        role: Role::EndMirror,
    });
    elements.push(Element {
        name: "mirror_y",
        mirror: &layout.mirror_y,
        role: Role::RetroMirror,
    });

    // --- Trunk ---------------------------------------------------------
    let mut pos = layout.source.origin;
    let mut dir = layout.source.direction;
    let mut crossings: Vec<(P3, V3, V3)> = Vec::new(); // point, trunk dir, branch dir
    let mut polyline: Vec<P3> = vec![pos];
    let mut crossing_marks: Vec<usize> = Vec::new(); // indices into polyline
    let mut exit_point: Option<P3> = None;
    let mut last_hit_name = "source";
    let cap = 16 * (n + 2);
    for _ in 0..cap {
        let Some(hit) = nearest_hit(&elements, &pos, &dir, eps) else {
            break;
        };
        let el = &elements[hit.index];
        polyline.push(hit.point);
        last_hit_name = el.name;
        match el.role {
            Role::Splitter => {
                crossing_marks.push(polyline.len() - 1);
                crossings.push((hit.point, dir, hit.reflected));
                pos = hit.point; // continue straight through the plate
            }
            Role::Fold => {
                pos = hit.point;
                dir = hit.reflected;
            }
            Role::EndMirror => {
                exit_point = Some(hit.point);
                break;
            }
            Role::RetroMirror => {
                return Err(Error::TraceIncomplete {
                    completed_rounds: crossings.len(),
                    last_hit: "trunk reached the retro mirror".into(),
                });
            }
        }
    }
    let exit_point = match (exit_point, crossings.len()) {
        (Some(p), c) if c == n => p,
        (_, c) => {
            return Err(Error::TraceIncomplete {
                completed_rounds: c,
                last_hit: last_hit_name.to_string(),
            });
        }
    };

    // Rounds: polyline slices between consecutive crossings.
    let mut round_polylines: Vec<Vec<P3>> = Vec::new();
    let mut round_lengths: Vec<f64> = Vec::new();
    for w in crossing_marks.windows(2) {
        let slice: Vec<P3> = polyline[w[0]..=w[1]].to_vec();
        let len = slice.windows(2).map(|s| (s[1] - s[0]).norm()).sum();
        round_polylines.push(slice);
        round_lengths.push(len);
    }
    let exit_length = (exit_point - crossings[n - 1].0).norm();

    // --- Branches -------------------------------------------------------
    let branch_cap = 8 * (n + 4);
    let mut branches: Vec<BranchTrace> = Vec::new();
    for (start, _, branch_dir) in &crossings {
        let mut pos = *start;
        let mut dir = *branch_dir;
        let mut cumulative = 0.0;
        let mut first_a: Option<f64> = None;
        let mut last_a = 0.0;
        let mut first_delay_point = None;
        let mut completed = false;
        let mut arm_length = f64::MAX;
        for _ in 0..branch_cap {
            let Some(hit) = nearest_hit(&elements, &pos, &dir, eps) else {
                break;
            };
            cumulative += hit.t;
            let el = &elements[hit.index];
            match el.role {
                Role::Fold => {
                    if first_delay_point.is_none() {
                        first_delay_point = Some(hit.point);
                    }
                    if el.name == "a_prime" {
                        if first_a.is_none() {
                            first_a = Some(cumulative);
                        }
                        last_a = cumulative;
                    }
                    pos = hit.point;
                    dir = hit.reflected;
                }
                Role::RetroMirror => {
                    arm_length = cumulative;
                    completed = true;
                    break;
                }
                Role::Splitter | Role::EndMirror => break,
            }
        }
        branches.push(BranchTrace {
            delay_length: match first_a {
                Some(f) => last_a - f,
                None => f64::MAX,
            },
            arm_length,
            first_delay_point,
            completed,
        });
    }

    // --- Checks ----------------------------------------------------------
    // Parallelism: corresponding legs of every round against round 0.
    let parallel_residual = if round_polylines.len() < 2 {
        0.0
    } else {
        let legs = |poly: &Vec<P3>| -> Vec<V3> {
            poly.windows(2).map(|s| (s[1] - s[0]).normalize()).collect()
        };
        let reference = legs(&round_polylines[0]);
        let mut worst = 0.0f64;
        for poly in &round_polylines[1..] {
            let these = legs(poly);
            if these.len() != reference.len() {
                worst = f64::MAX;
                break;
            }
            for (a, b) in reference.iter().zip(&these) {
                let cosang = a.dot(b).clamp(-1.0, 1.0);
                worst = worst.max(cosang.acos());
            }
        }
        worst
    };

    // Round-length equality.
    let lengths_residual = if round_lengths.len() < 2 {
        0.0
    } else {
        let first = round_lengths[0];
        round_lengths
            .iter()
            .map(|l| ((l - first) / first).abs())
            .fold(0.0, f64::max)
    };

    // Delay progression and branch/trunk agreement.
    let l_ref = if round_lengths.is_empty() {
        exit_length.max(s_b)
    } else {
        round_lengths.iter().sum::<f64>() / round_lengths.len() as f64
    };
    let mut delay_residual = 0.0f64;
    let mut delay_lengths = Vec::with_capacity(n);
    let mut arm_lengths = Vec::with_capacity(n);
    let mut trunk_lengths = Vec::with_capacity(n);
    for (i, branch) in branches.iter().enumerate() {
        let trunk_i: f64 = round_lengths[i..].iter().sum::<f64>() + exit_length;
        trunk_lengths.push(trunk_i);
        arm_lengths.push(branch.arm_length);
        delay_lengths.push(branch.delay_length);
        if !branch.completed || branch.delay_length == f64::MAX {
            delay_residual = f64::MAX;
            continue;
        }
        let expected = (n - 1 - i) as f64 * l_ref;
        delay_residual = delay_residual.max((branch.delay_length - expected).abs() / l_ref);
        delay_residual = delay_residual.max((branch.arm_length - trunk_i).abs() / trunk_i);
    }

    // Clearances: the trunk exit must pass the splitter-unit fold mirror
    // edge, and every feed beam must pass the trapezoid's bottom edge by the
    // design clearance.
    let mut clearance_violation = 0.0f64;
    if let Some(b_mirror) = layout.bs_unit.get("b") {
        if let Some(crossing) = segment_plane_crossing(&crossings[n - 1].0, &exit_point, b_mirror) {
            let margin = b_mirror.boundary_distance(&crossing);
            clearance_violation = clearance_violation.max((-margin).max(0.0) / s_b);
        }
    }
    if let Some(trapezoid) = layout.delay_unit.get("d_prime") {
        let required = layout.spacings.s_v / 10.0;
        for (branch, (start, _, _)) in branches.iter().zip(&crossings) {
            let Some(entry_end) = branch.first_delay_point else {
                clearance_violation = f64::MAX;
                continue;
            };
            if let Some(crossing) = segment_plane_crossing(start, &entry_end, trapezoid) {
                let margin = trapezoid.boundary_distance(&crossing);
                clearance_violation = clearance_violation.max((required - margin).max(0.0) / s_b);
            }
        }
    }

    Ok(TraceReport {
        round_polylines,
        round_lengths,
        delay_lengths,
        exit_length,
        arm_lengths,
        trunk_lengths,
        tilt_theta_deg: layout.tilt_theta.to_degrees(),
        parallel: CheckResult {
            ok: parallel_residual <= tolerance,
            residual: parallel_residual,
        },
        lengths: CheckResult {
            ok: lengths_residual <= tolerance,
            residual: lengths_residual,
        },
        delay_match: CheckResult {
            ok: delay_residual <= tolerance,
            residual: delay_residual,
        },
        clearance: CheckResult {
            ok: clearance_violation <= tolerance,
            residual: clearance_violation,
        },
    })
}
