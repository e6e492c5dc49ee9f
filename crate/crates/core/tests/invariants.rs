//! Cross-module invariants: engine vs closed forms vs enumeration oracle.

use cfi_core::{
    bs_transform, enumerate_paths_oracle, p_triple, p_triple_reflective, simulate, BsPort,
    ChainConfig, ObjectModel,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn transmissivity() -> impl Strategy<Value = f64> {
    prop_oneof![(0.05f64..=0.999), Just(1.0), Just(0.5)]
}

fn chain_strategy(max_n: usize) -> impl Strategy<Value = ChainConfig> {
    (1..=max_n).prop_flat_map(|n| {
        (
            proptest::collection::vec(transmissivity(), n),
            proptest::collection::vec(1u32..=3, n),
        )
            .prop_map(move |(ts, mut segs)| {
                segs[n - 1] = segs[n - 1].max(2); // room for reflective offsets
                ChainConfig {
                    n_stages: n,
                    transmissivities: ts,
                    segment_lengths: segs,
                    bs_loss: 0.0,
                    mirror_loss: 0.0,
                    arm_losses: None,
                }
            })
    })
}

fn object_strategy() -> impl Strategy<Value = ObjectModel> {
    prop_oneof![
        Just(ObjectModel::Absent),
        Just(ObjectModel::Absorbing),
        (0u32..=1).prop_map(|offset_bins| ObjectModel::Reflective { offset_bins }),
        (-3.2f64..3.2, 0.0f64..=1.0).prop_map(|(phi, tau)| ObjectModel::Phase { phi, tau }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn splitter_conserves_probability(
        re in -2.0f64..2.0,
        im in -2.0f64..2.0,
        t in 0.001f64..=1.0,
        port in 0usize..3,
    ) {
        let port = [BsPort::Left, BsPort::Right, BsPort::Arm][port];
        let amp = Complex64::new(re, im);
        let (straight, reflected) = bs_transform(amp, port, t).unwrap();
        let total = straight.norm_sqr() + reflected.norm_sqr();
        prop_assert!((total - amp.norm_sqr()).abs() <= 1e-14 * amp.norm_sqr().max(1.0));
    }

    #[test]
    fn absent_always_returns_to_source(config in chain_strategy(12)) {
        let d = simulate(&config, &ObjectModel::Absent).unwrap();
        prop_assert!(d.total_detector() <= 1e-12);
        prop_assert!(d.p_source >= 1.0 - 1e-12);
    }

    #[test]
    fn engine_matches_blocked_closed_form(config in chain_strategy(12)) {
        let d = simulate(&config, &ObjectModel::Absorbing).unwrap();
        let p = p_triple(&config.transmissivities).unwrap();
        prop_assert!((d.p_source - p.p0).abs() <= 1e-10);
        prop_assert!((d.total_detector() - p.p1).abs() <= 1e-10);
        prop_assert!((d.p_object - p.p2).abs() <= 1e-10);
    }

    #[test]
    fn engine_matches_reflective_closed_form(config in chain_strategy(12)) {
        let d = simulate(&config, &ObjectModel::Reflective { offset_bins: 1 }).unwrap();
        let p = p_triple_reflective(&config.transmissivities).unwrap();
        prop_assert!((d.p_source - p.p0).abs() <= 1e-10);
        prop_assert!((d.total_detector() - p.p1).abs() <= 1e-10);
        prop_assert!(d.p_object.abs() <= 1e-12);
    }

    #[test]
    fn oracle_agrees_with_engine(config in chain_strategy(8), object in object_strategy()) {
        let sim = simulate(&config, &object).unwrap();
        let oracle = enumerate_paths_oracle(&config, &object).unwrap();
        prop_assert!(
            sim.max_delta(&oracle) <= 1e-10,
            "delta {} for {:?}",
            sim.max_delta(&oracle),
            object
        );
    }

    #[test]
    fn oracle_agrees_with_engine_under_loss(
        config in chain_strategy(6),
        object in object_strategy(),
        bs_loss in 0.0f64..0.2,
        mirror_loss in 0.0f64..0.2,
    ) {
        let config = ChainConfig { bs_loss, mirror_loss, ..config };
        let sim = simulate(&config, &object).unwrap();
        let oracle = enumerate_paths_oracle(&config, &object).unwrap();
        prop_assert!(sim.max_delta(&oracle) <= 1e-10);
        prop_assert!((sim.total() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn distribution_is_normalized(
        config in chain_strategy(10),
        object in object_strategy(),
        mirror_loss in 0.0f64..0.5,
    ) {
        let config = ChainConfig { mirror_loss, ..config };
        let d = simulate(&config, &object).unwrap();
        prop_assert!((d.total() - 1.0).abs() <= 1e-12);
        prop_assert!(d.p_detector.iter().all(|&p| p >= 0.0));
    }
}

#[test]
fn detector_stays_dark_for_all_stage_counts() {
    for n in 1..=12 {
        let cfg = ChainConfig::uniform(n, 0.5);
        let d = simulate(&cfg, &ObjectModel::Absent).unwrap();
        assert!(d.total_detector() <= 1e-12, "n={n}");
        assert!(d.p_source >= 1.0 - 1e-12, "n={n}");
    }
}
