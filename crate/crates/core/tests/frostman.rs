mod common;

use num_traits::ToPrimitive;
use proptest::prelude::*;
use wpress_core::covering::{w_lp_stage, StageSpec};
use wpress_core::cylinders::count_weighted_cylinders;
use wpress_core::frostman::{duality_gap, frostman_lp, verify_frostman};
use wpress_core::{fixtures, Potential};

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(24)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn certificates_are_feasible_and_weakly_dual(seed in 0u64..10_000, depth in 1usize..3, n_max in 1usize..4, s in 0.0f64..2.0) {
        let sys = common::random_system(seed, 3, depth);
        let f = common::random_potential(&sys, 1 + seed as usize % 2, seed);
        let stage = StageSpec::new(&sys, 1, n_max, None).unwrap();
        let cert = frostman_lp(&sys, &f, s, &stage).unwrap();
        prop_assert!((cert.measure.total() - 1.0).abs() < 1e-9);
        prop_assert!(cert.measure.mass.iter().all(|&m| m >= -1e-12));
        prop_assert!(verify_frostman(&sys, &f, &cert, s, &stage).unwrap() <= 1e-10);
        let primal = w_lp_stage(&sys, &f, s, &stage).unwrap();
        prop_assert!(cert.c <= primal * (1.0 + 1e-9));
        let report = duality_gap(&sys, &f, s, &stage).unwrap();
        prop_assert!(report.holds, "{:?}", report);
    }

    #[test]
    fn log_c_does_not_increase_with_s(seed in 0u64..10_000, depth in 1usize..3) {
        let sys = common::random_system(seed, 3, depth);
        let f = common::random_potential(&sys, 1, seed);
        let stage = StageSpec::new(&sys, 1, 3, None).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..6 {
            let s = 0.4 * k as f64;
            let c = frostman_lp(&sys, &f, s, &stage).unwrap().log_c;
            prop_assert!(c <= prev + 1e-9);
            prev = c;
        }
    }

    #[test]
    fn scaling_a_certificate_breaks_feasibility(seed in 0u64..10_000) {
        let sys = common::random_system(seed, 3, 2);
        let f = Potential::zero();
        let stage = StageSpec::new(&sys, 1, 2, None).unwrap();
        let cert = frostman_lp(&sys, &f, 0.5, &stage).unwrap();
        let bumped = cert.scaled(1.01);
        prop_assert!(verify_frostman(&sys, &f, &bumped, 0.5, &stage).unwrap() > 1e-6);
    }
}

#[test]
fn symmetric_stage_has_the_counting_value() {
    // with f = 0 on a chain of full shifts every weighted n-cylinder has the
    // same cost, so c = #cylinders * exp(-s n)
    for sys in [fixtures::fs42(), fixtures::full2()] {
        for n in 1..=3 {
            for s in [0.0, 0.7, 1.9] {
                let stage = StageSpec::single(&sys, n).unwrap();
                let cert = frostman_lp(&sys, &Potential::zero(), s, &stage).unwrap();
                let count = count_weighted_cylinders(&sys, n).unwrap().to_f64().unwrap();
                let want = count.ln() - s * n as f64;
                assert!((cert.log_c - want).abs() < 1e-9, "n={n} s={s}: {} vs {want}", cert.log_c);
                let uniform = 1.0 / cert.measure.mass.len() as f64;
                assert!(cert.measure.mass.iter().all(|m| (m - uniform).abs() < 1e-9));
            }
        }
    }
}

#[test]
fn huge_s_certifies_no_mass() {
    let sys = fixtures::fs42();
    let stage = StageSpec::new(&sys, 1, 2, None).unwrap();
    let cert = frostman_lp(&sys, &fixtures::f1(&sys), 1000.0, &stage).unwrap();
    assert!(cert.no_mass_certifiable);
    let cert = frostman_lp(&sys, &fixtures::f1(&sys), 1.0, &stage).unwrap();
    assert!(!cert.no_mass_certifiable);
}
