//! Canonical construction of the folded apparatus.
//!
//! The splitter unit lives in the z = 0 plane: the source beam runs along
//! +x, the fold mirrors sit at 45 degrees, and one fold mirror's offset
//! displaces every round by `s_b` so the trunk crosses the splitter plate at
//! N evenly spaced points before exiting past a mirror edge to the end
//! mirror. Branches reflected off the plate feed a tilted delay assembly:
//! four shared mirrors around a helical spiral whose per-circuit advance is
//! `s_d` in-plane, so the branch split at round `i` does exactly `N - i`
//! circuits (each as long as one splitter-unit round) before leaving to the
//! retro mirror. Flight lengths to and from the delay unit are arranged so
//! that every branch's total equals its trunk counterpart.
//!
//! The construction here is one concrete parameterization of that plan;
//! [`super::trace_layout`] re-checks all of its claims by ray tracing.

use nalgebra::{Point3, Vector3};
use std::collections::BTreeMap;

use super::{capacity, Layout, PlanarMirror, SourceRay, Spacings, SplitterPlate};
use crate::error::{Error, Result};

/// Aperture budget of the canonical construction, in units of `s_b`.
const APERTURE_BUDGET_UNITS: f64 = 16.0;
/// Edge margin of the canonical construction, in units of `s_b`.
const EDGE_MARGIN_UNITS: f64 = 0.5;

type V3 = Vector3<f64>;
type P3 = Point3<f64>;

/// Delay-frame parameters that make the feed, spiral and retro mirror
/// mutually consistent.
struct Frame {
    x_axis: V3,
    y_axis: V3,
    n_axis: V3,
    /// Uniform out-of-plane slope of every spiral leg.
    sigma: f64,
    nu: f64,
    /// In-plane circuit circumference (the 3-D circuit length equals the
    /// splitter-unit round length).
    l_in: f64,
    /// Feed-length increment per round.
    delta: f64,
    /// Entry-layer increment per round.
    delta_e: f64,
    /// Feed-beam direction (shared by the spiral's closing legs).
    u_e: V3,
}

fn orthonormal(v: &V3) -> bool {
    (v.norm() - 1.0).abs() < 1e-9
}

/// Solve the delay-frame orientation and helix parameters.
///
/// Constraints: the splitter plate is one flat plane containing all N
/// crossing points (forces the feed direction to have no y component), feed
/// beams land on consecutive spiral slots, branch totals match trunk totals
/// under a retro mirror normal to the exit legs, the circuit length equals
/// the round length, and the dihedral between the unit planes is
/// `arcsin(s_v / s_b)`.
fn solve_frame(sp: &Spacings, l_bs: f64) -> Result<Frame> {
    let (s_b, s_d, s_v) = (sp.s_b, sp.s_d, sp.s_v);

    // sigma^2 from sigma^2 * l_in = s_d with l_in = l_bs / nu.
    let y =
        (s_d * s_d + (s_d.powi(4) + 4.0 * l_bs * l_bs * s_d * s_d).sqrt()) / (2.0 * l_bs * l_bs);
    let sigma_mag = y.sqrt();
    let nu = (1.0 + y).sqrt();
    let l_in = l_bs / nu;

    let alpha = s_d / s_b; // x-axis world-y component
    let n_z = s_d / s_b; // dihedral pin: cos(theta) with sin(theta) = s_v/s_b

    let tol = 1e-7 * l_bs.max(1.0);

    // The constraint system has a discrete mirror symmetry; collect every
    // consistent branch and keep the one whose feed and exit legs both rise
    // steeply away from the splitter-unit plane.
    let mut candidates: Vec<Frame> = Vec::new();
    for &sigma in &[sigma_mag, -sigma_mag] {
        for &gamma in &[s_v / (s_b * nu), -s_v / (s_b * nu)] {
            let beta = sigma * gamma;
            let u = -s_d - sigma * gamma * s_b;
            let delta_e = sigma * u - s_b * gamma;
            let delta = u * nu;
            let nx_sq = 1.0 - n_z * n_z - gamma * gamma;
            if nx_sq < -1e-12 {
                continue;
            }
            for &nx_sign in &[1.0f64, -1.0] {
                let n_axis = V3::new(nx_sign * nx_sq.max(0.0).sqrt(), gamma, n_z);
                if !orthonormal(&n_axis) {
                    continue;
                }
                // x-axis: unit, perpendicular to n, world-y component alpha.
                // With x3 = -(x1*nx + alpha*ny)/nz, |x|^2 = 1 is a quadratic
                // in x1.
                let (nx, ny, nz) = (n_axis.x, n_axis.y, n_axis.z);
                let qa = 1.0 + (nx / nz) * (nx / nz);
                let qb = 2.0 * nx * alpha * ny / (nz * nz);
                let qc = alpha * alpha * (1.0 + (ny / nz) * (ny / nz)) - 1.0;
                let disc = qb * qb - 4.0 * qa * qc;
                if disc < 0.0 {
                    continue;
                }
                for &root_sign in &[1.0f64, -1.0] {
                    let x1 = (-qb + root_sign * disc.sqrt()) / (2.0 * qa);
                    let x3 = -(x1 * nx + alpha * ny) / nz;
                    let x_axis = V3::new(x1, alpha, x3);
                    if !orthonormal(&x_axis) || x_axis.dot(&n_axis).abs() > 1e-9 {
                        continue;
                    }
                    for &hand in &[1.0f64, -1.0] {
                        let y_axis = n_axis.cross(&x_axis) * hand;
                        if (y_axis.y - beta).abs() > 1e-9 {
                            continue;
                        }
                        let u_e = (-y_axis + sigma * n_axis) / nu;
                        // Feed beams must keep constant world y and rise.
                        if u_e.y.abs() > 1e-9 || u_e.z <= 0.05 {
                            continue;
                        }
                        // Exit legs must rise too, keeping the retro mirror
                        // clear of the splitter-unit plane.
                        let u_x = (x_axis + sigma * n_axis) / nu;
                        if u_x.z <= 0.05 {
                            continue;
                        }
                        // Entry identity: stepping one round along the
                        // splitter line plus the feed increment must equal
                        // one spiral slot step.
                        let lhs = V3::new(0.0, -s_b, 0.0) + delta * u_e;
                        let rhs = -s_d * x_axis + s_d * y_axis + delta_e * n_axis;
                        if (lhs - rhs).norm() > tol {
                            continue;
                        }
                        candidates.push(Frame {
                            x_axis,
                            y_axis,
                            n_axis,
                            sigma,
                            nu,
                            l_in,
                            delta,
                            delta_e,
                            u_e,
                        });
                    }
                }
            }
        }
    }
    // Deterministic pick: steepest feed, then steepest exit, then the
    // branch leaning toward +x.
    candidates.sort_by(|a, b| {
        let key = |f: &Frame| (f.u_e.z, ((f.x_axis + f.sigma * f.n_axis) / f.nu).z, f.u_e.x);
        key(b).partial_cmp(&key(a)).expect("finite keys")
    });
    candidates.into_iter().next().ok_or_else(|| {
        Error::InvalidLayout(
            "no consistent delay-frame orientation found for these spacings".into(),
        )
    })
}

/// Rectangle aperture around hit points, measured in an explicit in-plane
/// basis so the margins mean what the construction intends.
fn rect_aperture(
    anchor: P3,
    normal: V3,
    e1: V3,
    e2: V3,
    hits: &[P3],
    margin_u: f64,
    margin_v: f64,
) -> PlanarMirror {
    let mut u_min = f64::INFINITY;
    let mut u_max = f64::NEG_INFINITY;
    let mut v_min = f64::INFINITY;
    let mut v_max = f64::NEG_INFINITY;
    for h in hits {
        let d = h - anchor;
        let (u, v) = (d.dot(&e1), d.dot(&e2));
        u_min = u_min.min(u);
        u_max = u_max.max(u);
        v_min = v_min.min(v);
        v_max = v_max.max(v);
    }
    let aperture = vec![
        anchor + e1 * (u_min - margin_u) + e2 * (v_min - margin_v),
        anchor + e1 * (u_max + margin_u) + e2 * (v_min - margin_v),
        anchor + e1 * (u_max + margin_u) + e2 * (v_max + margin_v),
        anchor + e1 * (u_min - margin_u) + e2 * (v_max + margin_v),
    ];
    PlanarMirror {
        anchor,
        normal,
        aperture,
    }
}

/// Build the canonical layout for `n_rounds` splitter crossings.
pub fn build_canonical_layout(
    spacings: &Spacings,
    n_rounds: usize,
    base_scale: f64,
) -> Result<Layout> {
    spacings.validate()?;
    if n_rounds < 1 {
        return Err(Error::domain("n_rounds must be at least 1"));
    }
    if base_scale <= 0.0 || !base_scale.is_finite() {
        return Err(Error::domain("base_scale must be positive and finite"));
    }
    let sp = spacings.scaled(base_scale);
    let n = n_rounds;

    // Aperture budget: the splitter plate is the widest consumer (N crossing
    // points plus margins).
    let cap = capacity(
        1.0,
        &sp,
        APERTURE_BUDGET_UNITS * sp.s_b,
        EDGE_MARGIN_UNITS * sp.s_b,
    )?;
    if n > cap {
        return Err(Error::Capacity {
            element: "BS".into(),
            capacity: cap,
            requested: n,
            spacing: sp.s_b,
        });
    }

    // Steep layer stacks need a longer circuit before the helix climb
    // outruns the entry pitch and the trapezoid can clear the feeds; grow
    // the circuit until the construction closes.
    let mut size = (n as f64 + 2.0) * sp.s_b;
    for _ in 0..16 {
        match attempt_build(&sp, n, size) {
            Err(Error::InvalidLayout(msg)) if msg.contains("cannot clear the feed beams") => {
                size *= 2.0;
            }
            other => return other,
        }
    }
    attempt_build(&sp, n, size)
}

fn attempt_build(sp: &Spacings, n: usize, g: f64) -> Result<Layout> {
    let (s_b, s_d, s_v) = (sp.s_b, sp.s_d, sp.s_v);
    let (b_x, c_y, d_x) = (2.0 * g, g, -g);
    let l_bs = 2.0 * b_x - 2.0 * d_x + 2.0 * c_y + s_b;

    let xs: Vec<P3> = (0..n)
        .map(|k| P3::new(0.0, -(k as f64) * s_b, 0.0))
        .collect();
    // With a single crossing there is no circuit; park phantom apertures one
    // pitch on the far side of the beam line so the straight-through pass
    // clears them the same way the exit clears them for larger N.
    let rounds_k: Vec<f64> = if n >= 2 {
        (0..n - 1).map(|k| k as f64).collect()
    } else {
        vec![-1.0]
    };
    let b_hits: Vec<P3> = rounds_k
        .iter()
        .map(|&k| P3::new(b_x - k * s_b, -k * s_b, 0.0))
        .collect();
    let c_hits: Vec<P3> = rounds_k
        .iter()
        .map(|&k| P3::new(b_x - k * s_b, c_y + k * s_b, 0.0))
        .collect();
    let d_hits: Vec<P3> = rounds_k
        .iter()
        .map(|&k| P3::new(d_x + k * s_b, c_y + k * s_b, 0.0))
        .collect();
    let a_hits: Vec<P3> = rounds_k
        .iter()
        .map(|&k| P3::new(d_x + k * s_b, -(k + 1.0) * s_b, 0.0))
        .collect();

    let isq = std::f64::consts::FRAC_1_SQRT_2;
    let diag_up = V3::new(isq, isq, 0.0); // trace direction of C and A
    let diag_dn = V3::new(isq, -isq, 0.0); // trace direction of B and D
    let margin_t = 0.7 * s_b;
    let margin_z = s_b;
    let mut bs_unit = BTreeMap::new();
    bs_unit.insert(
        "b".to_string(),
        rect_aperture(
            b_hits[0],
            V3::new(isq, -isq, 0.0),
            diag_up,
            V3::z(),
            &b_hits,
            margin_t,
            margin_z,
        ),
    );
    bs_unit.insert(
        "c".to_string(),
        rect_aperture(
            c_hits[0],
            V3::new(isq, isq, 0.0),
            diag_dn,
            V3::z(),
            &c_hits,
            margin_t,
            margin_z,
        ),
    );
    bs_unit.insert(
        "d".to_string(),
        rect_aperture(
            d_hits[0],
            V3::new(-isq, isq, 0.0),
            diag_up,
            V3::z(),
            &d_hits,
            margin_t,
            margin_z,
        ),
    );
    bs_unit.insert(
        "a".to_string(),
        rect_aperture(
            a_hits[0],
            V3::new(-isq, -isq, 0.0),
            diag_dn,
            V3::z(),
            &a_hits,
            margin_t,
            margin_z,
        ),
    );

    // Delay frame and helix.
    let frame = solve_frame(sp, l_bs)?;
    let u_e = frame.u_e;
    let h1 = 1.25 * l_bs;
    let feeds: Vec<f64> = (0..n).map(|i| h1 + i as f64 * frame.delta).collect();
    if feeds.iter().any(|&h| h < 0.2 * l_bs) {
        return Err(Error::InvalidLayout(
            "feed lengths collapsed; spacing too coarse for this round count".into(),
        ));
    }
    let entries: Vec<P3> = (0..n).map(|i| xs[i] + feeds[i] * u_e).collect();
    let origin = entries[0];

    let frame_point = |xp: f64, yp: f64, lp: f64| -> P3 {
        origin + xp * frame.x_axis + yp * frame.y_axis + lp * frame.n_axis
    };
    // Entry identity: feeds must land on consecutive spiral slots.
    for (i, e) in entries.iter().enumerate() {
        let want = frame_point(-(i as f64) * s_d, i as f64 * s_d, i as f64 * frame.delta_e);
        if (e - want).norm() > 1e-7 * l_bs {
            return Err(Error::InvalidLayout(format!(
                "entry {i} misses its spiral slot by {}",
                (e - want).norm()
            )));
        }
    }

    // In-plane spiral rectangle: the entry mirror's trace passes through the
    // frame origin.
    let q = frame.l_in / 2.0;
    let p = frame.l_in / 4.0;
    let slot = |k: usize| -> (f64, f64) { (-(k as f64) * s_d, k as f64 * s_d) };
    let ay_max = (n as f64 - 1.0) * s_d;
    if q - p - 2.0 * ay_max - s_d <= 0.0 {
        return Err(Error::InvalidLayout(
            "delay rectangle too small for this round count".into(),
        ));
    }

    // Walk each branch's spiral, collecting mirror hits and exit corners.
    let mut a_prime_hits: Vec<P3> = entries.clone();
    let mut b_prime_hits: Vec<P3> = Vec::new();
    let mut c_prime_hits: Vec<P3> = Vec::new();
    let mut d_prime_hits: Vec<P3> = Vec::new();
    let mut exits: Vec<P3> = Vec::new(); // final spiral corner per branch
    for i in 0..n {
        let mut layer = i as f64 * frame.delta_e;
        for k in i..n.saturating_sub(1) {
            let (ax, ay) = slot(k);
            let l1 = p + 2.0 * ay;
            let l2 = q - p - 2.0 * ay;
            let l3 = p + 2.0 * ay + s_d;
            let l4 = q - p - 2.0 * ay - s_d;
            debug_assert!(l1 > 0.0 && l2 > 0.0 && l3 > 0.0 && l4 > 0.0);
            let bpt = (ax + l1, ay);
            let cpt = (bpt.0, bpt.1 + l2);
            let dpt = (cpt.0 - l3, cpt.1);
            layer += frame.sigma * l1;
            b_prime_hits.push(frame_point(bpt.0, bpt.1, layer));
            layer += frame.sigma * l2;
            c_prime_hits.push(frame_point(cpt.0, cpt.1, layer));
            layer += frame.sigma * l3;
            d_prime_hits.push(frame_point(dpt.0, dpt.1, layer));
            layer += frame.sigma * l4;
            let (nax, nay) = slot(k + 1);
            a_prime_hits.push(frame_point(nax, nay, layer));
        }
        let (fx, fy) = slot(n - 1);
        exits.push(frame_point(fx, fy, layer));
    }

    // Delay mirror planes from the leg bisectors; every normal is
    // perpendicular to the helix axis, so the slope passes through.
    let trace_pp = ((frame.x_axis + frame.y_axis) * isq).normalize();
    let trace_pm = ((frame.x_axis - frame.y_axis) * isq).normalize();
    let margin_u = s_d;
    let margin_v = s_v;
    let a_prime = rect_aperture(
        a_prime_hits[0],
        -trace_pp,
        trace_pm,
        frame.n_axis,
        &a_prime_hits,
        margin_u,
        margin_v,
    );
    let b_phantom = frame_point(p + 2.0 * s_d, 2.0 * s_d, 0.0);
    let b_prime = rect_aperture(
        if b_prime_hits.is_empty() {
            b_phantom
        } else {
            b_prime_hits[0]
        },
        trace_pm,
        trace_pp,
        frame.n_axis,
        if b_prime_hits.is_empty() {
            std::slice::from_ref(&b_phantom)
        } else {
            &b_prime_hits
        },
        margin_u,
        margin_v,
    );
    let c_phantom = frame_point(p, q - p, 0.0);
    let c_prime = rect_aperture(
        if c_prime_hits.is_empty() {
            c_phantom
        } else {
            c_prime_hits[0]
        },
        trace_pp,
        trace_pm,
        frame.n_axis,
        if c_prime_hits.is_empty() {
            std::slice::from_ref(&c_phantom)
        } else {
            &c_prime_hits
        },
        margin_u,
        margin_v,
    );
    let d_prime = build_trapezoid(
        sp,
        &d_prime_hits,
        frame_point(p - q, q - p, 0.0),
        -trace_pm,
        &xs,
        &entries,
        u_e,
    )?;

    // Retro mirror: normal along the exit legs, placed so branch totals
    // equal trunk totals.
    let u_x = (frame.x_axis + frame.sigma * frame.n_axis) / frame.nu;
    let d_end = h1 + 0.8 * l_bs;
    let y_hits: Vec<P3> = (0..n)
        .map(|i| exits[i] + (d_end - feeds[i]) * u_x)
        .collect();
    for h in &y_hits {
        let off = (h - y_hits[0]).dot(&u_x).abs();
        if off > 1e-7 * l_bs {
            return Err(Error::InvalidLayout(format!(
                "retro-mirror hits not coplanar (residual {off})"
            )));
        }
    }
    let (ye1, ye2) = PlanarMirror {
        anchor: y_hits[0],
        normal: u_x,
        aperture: vec![],
    }
    .plane_basis();
    let mirror_y = rect_aperture(y_hits[0], u_x, ye1, ye2, &y_hits, s_b, s_b);

    // End mirror on the trunk exit line.
    let exit_y = -((n - 1) as f64) * s_b;
    let x_anchor = P3::new(d_end, exit_y, 0.0);
    let mirror_x = rect_aperture(x_anchor, V3::x(), V3::y(), V3::z(), &[x_anchor], s_b, s_b);

    // Splitter plate: reflects the trunk direction into the feed direction;
    // it contains every crossing point because the feed keeps constant y.
    let n_bs = (V3::x() - u_e).normalize();
    let bs_e2 = n_bs.cross(&V3::y()).normalize();
    let bs_plate = rect_aperture(xs[0], n_bs, V3::y(), bs_e2, &xs, 0.7 * s_b, s_b);

    let layout = Layout {
        spacings: *sp,
        n_rounds: n,
        tilt_theta: sp.tilt_theta(),
        source: SourceRay {
            origin: P3::new(-2.0 * s_b, 0.0, 0.0),
            direction: V3::x(),
        },
        bs: SplitterPlate {
            mirror: bs_plate,
            transmissive: true,
        },
        bs_unit,
        delay_unit: BTreeMap::from([
            ("a_prime".to_string(), a_prime),
            ("b_prime".to_string(), b_prime),
            ("c_prime".to_string(), c_prime),
            ("d_prime".to_string(), d_prime),
        ]),
        mirror_x,
        mirror_y,
    };
    layout.validate()?;
    Ok(layout)
}

/// Trapezoid aperture for the last delay mirror: a horizontal bottom edge
/// clears the feed beams passing underneath; the slanted top follows the
/// marching hit pattern.
fn build_trapezoid(
    sp: &Spacings,
    hits: &[P3],
    phantom_anchor: P3,
    normal: V3,
    xs: &[P3],
    entries: &[P3],
    u_e: V3,
) -> Result<PlanarMirror> {
    let anchor = if hits.is_empty() {
        phantom_anchor
    } else {
        hits[0]
    };
    // Horizontal in-plane direction and its in-plane perpendicular.
    let e_h = normal.cross(&Vector3::z()).normalize();
    let mut e_v = normal.cross(&e_h);
    if e_v.z < 0.0 {
        e_v = -e_v;
    }
    let coords = |pt: &P3| -> (f64, f64) {
        let d = pt - anchor;
        (d.dot(&e_h), d.dot(&e_v))
    };

    // Feed-beam crossings of this plane must stay below the bottom edge by
    // the clearance parameter.
    let mut crossing_max_v = f64::NEG_INFINITY;
    for (x, e) in xs.iter().zip(entries) {
        let denom = u_e.dot(&normal);
        if denom.abs() < 1e-12 {
            continue;
        }
        let t = (anchor - x).dot(&normal) / denom;
        let feed_len = (e - x).norm();
        if t > 0.0 && t < feed_len {
            let (_, v) = coords(&(x + t * u_e));
            crossing_max_v = crossing_max_v.max(v);
        }
    }
    let clearance = sp.s_v / 10.0;

    // Horizontal bottom and top edges; the sides slant along the hit march,
    // so the quadrilateral is a trapezoid tracking the spiral's climb.
    let (v_bottom, v_top, slant, w_lo, w_hi) = if hits.is_empty() {
        let base = if crossing_max_v.is_finite() {
            crossing_max_v + clearance
        } else {
            0.0
        };
        (base, base + 2.0 * sp.s_v, 1.0, -sp.s_d, sp.s_d)
    } else {
        let pts: Vec<(f64, f64)> = hits.iter().map(coords).collect();
        let v_min = pts.iter().map(|pt| pt.1).fold(f64::INFINITY, f64::min);
        let v_max = pts.iter().map(|pt| pt.1).fold(f64::NEG_INFINITY, f64::max);
        let v_bottom = v_min - 0.7 * sp.s_v;
        let v_top = v_max + 0.7 * sp.s_v;
        if crossing_max_v.is_finite() && v_bottom < crossing_max_v + clearance {
            return Err(Error::InvalidLayout(
                "trapezoid bottom edge cannot clear the feed beams".into(),
            ));
        }
        // Side slope du/dv from the extreme hits of the march.
        let slant = if v_max - v_min > 1e-9 * sp.s_b {
            let u_at_vmin = pts
                .iter()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty")
                .0;
            let u_at_vmax = pts
                .iter()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty")
                .0;
            (u_at_vmax - u_at_vmin) / (v_max - v_min)
        } else {
            1.0
        };
        // Sheared coordinate w = u - slant * v is nearly constant along the
        // march; bound it with margins.
        let w_lo = pts
            .iter()
            .map(|pt| pt.0 - slant * pt.1)
            .fold(f64::INFINITY, f64::min)
            - sp.s_d;
        let w_hi = pts
            .iter()
            .map(|pt| pt.0 - slant * pt.1)
            .fold(f64::NEG_INFINITY, f64::max)
            + sp.s_d;
        (v_bottom, v_top, slant, w_lo, w_hi)
    };

    let corner = |w: f64, v: f64| anchor + (w + slant * v) * e_h + v * e_v;
    let mirror = PlanarMirror {
        anchor,
        normal,
        aperture: vec![
            corner(w_lo, v_bottom),
            corner(w_hi, v_bottom),
            corner(w_hi, v_top),
            corner(w_lo, v_top),
        ],
    };
    for h in hits {
        if !mirror.contains(h, 1e-9 * sp.s_b) {
            return Err(Error::InvalidLayout(
                "trapezoid aperture fails to cover a spiral hit".into(),
            ));
        }
    }
    Ok(mirror)
}
