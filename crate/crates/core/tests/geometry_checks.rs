//! Layout construction and trace validation across round counts, spacing
//! triples and perturbations.

use cfi_core::{build_canonical_layout, trace_layout, Error, Spacings};
use nalgebra::{Rotation3, Vector3};

const TOL: f64 = 1e-9;

fn triples() -> Vec<Spacings> {
    vec![
        Spacings::new(17.0, 8.0, 15.0).unwrap(),
        Spacings::new(5.0, 3.0, 4.0).unwrap(),
        Spacings::new(13.0, 5.0, 12.0).unwrap(),
        Spacings::new(25.0, 7.0, 24.0).unwrap(),
        // Shallow tilts (s_d > s_v) must build too.
        Spacings::new(5.0, 4.0, 3.0).unwrap(),
        Spacings::new(17.0, 15.0, 8.0).unwrap(),
    ]
}

#[test]
fn canonical_layouts_pass_all_checks() {
    for sp in triples() {
        for n in 1..=12 {
            let layout = build_canonical_layout(&sp, n, 1.0)
                .unwrap_or_else(|e| panic!("build n={n} sp={sp:?}: {e}"));
            let report =
                trace_layout(&layout, TOL).unwrap_or_else(|e| panic!("trace n={n} sp={sp:?}: {e}"));
            assert!(
                report.all_ok(),
                "n={n} sp={sp:?}: parallel={:?} lengths={:?} delay={:?} clearance={:?}",
                report.parallel,
                report.lengths,
                report.delay_match,
                report.clearance
            );
            assert_eq!(report.round_lengths.len(), n - 1);
            assert_eq!(report.delay_lengths.len(), n);
        }
    }
}

#[test]
fn reference_tilt_angle() {
    let sp = Spacings::new(17.0, 8.0, 15.0).unwrap();
    let layout = build_canonical_layout(&sp, 4, 1.0).unwrap();
    assert!((layout.tilt_theta.to_degrees() - 61.92751306414704).abs() < 1e-6);
}

#[test]
fn delay_lengths_form_descending_multiples() {
    let sp = Spacings::new(17.0, 8.0, 15.0).unwrap();
    let layout = build_canonical_layout(&sp, 4, 1.0).unwrap();
    let report = trace_layout(&layout, TOL).unwrap();
    let l = report.round_lengths[0];
    for (i, d) in report.delay_lengths.iter().enumerate() {
        let expected = (4 - 1 - i) as f64 * l;
        assert!(
            (d - expected).abs() <= TOL * l.max(1.0),
            "branch {i}: {d} vs {expected}"
        );
    }
}

#[test]
fn tilt_is_scale_invariant_and_lengths_scale() {
    let sp = Spacings::new(5.0, 3.0, 4.0).unwrap();
    let small = build_canonical_layout(&sp, 4, 1.0).unwrap();
    let big = build_canonical_layout(&sp, 4, 12.5).unwrap();
    assert!((small.tilt_theta - big.tilt_theta).abs() < 1e-15);
    let rs = trace_layout(&small, TOL).unwrap();
    let rb = trace_layout(&big, TOL).unwrap();
    assert!(rb.all_ok() && rs.all_ok());
    let ratio = rb.round_lengths[0] / rs.round_lengths[0];
    assert!((ratio - 12.5).abs() < 1e-9 * 12.5);
}

#[test]
fn perturbed_fold_mirror_fails_parallelism() {
    let sp = Spacings::new(17.0, 8.0, 15.0).unwrap();
    let mut layout = build_canonical_layout(&sp, 4, 1.0).unwrap();
    let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), 1e-3);
    let a = layout.bs_unit.get_mut("a").unwrap();
    a.normal = rot * a.normal;
    // Keep the aperture consistent with the tilted plane.
    for v in &mut a.aperture {
        *v = a.anchor + rot * (*v - a.anchor);
    }
    let report = trace_layout(&layout, TOL).unwrap();
    assert!(!report.parallel.ok, "residual {}", report.parallel.residual);
    assert!(report.parallel.residual > 1e-4);
}

#[test]
fn perturbation_residual_grows_continuously() {
    let sp = Spacings::new(17.0, 8.0, 15.0).unwrap();
    let mut last_parallel = 0.0;
    let mut last_lengths = 0.0;
    for &angle in &[1e-7, 1e-6, 1e-5, 1e-4] {
        let mut layout = build_canonical_layout(&sp, 4, 1.0).unwrap();
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), angle);
        let a = layout.bs_unit.get_mut("a").unwrap();
        a.normal = rot * a.normal;
        for v in &mut a.aperture {
            *v = a.anchor + rot * (*v - a.anchor);
        }
        let report = trace_layout(&layout, TOL).unwrap();
        assert!(report.parallel.residual > last_parallel);
        assert!(report.lengths.residual > last_lengths);
        // Small-angle response stays linear: about 2x the mirror rotation.
        assert!(report.parallel.residual < 10.0 * angle);
        last_parallel = report.parallel.residual;
        last_lengths = report.lengths.residual;
    }
}

#[test]
fn capacity_error_names_the_binding_element() {
    let sp = Spacings::new(17.0, 8.0, 15.0).unwrap();
    match build_canonical_layout(&sp, 40, 1.0) {
        Err(Error::Capacity {
            element,
            capacity,
            requested,
            ..
        }) => {
            assert_eq!(element, "BS");
            assert_eq!(requested, 40);
            assert!(capacity < 40);
        }
        other => panic!("expected capacity error, got {other:?}"),
    }
}

#[test]
fn layout_serializes_and_revalidates() {
    let sp = Spacings::new(13.0, 5.0, 12.0).unwrap();
    let layout = build_canonical_layout(&sp, 3, 1.0).unwrap();
    let json = serde_json::to_string(&layout).unwrap();
    let back: cfi_core::Layout = serde_json::from_str(&json).unwrap();
    back.validate().unwrap();
    let report = trace_layout(&back, TOL).unwrap();
    assert!(report.all_ok());
}
