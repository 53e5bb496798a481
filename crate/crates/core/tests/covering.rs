mod common;

use proptest::prelude::*;
use wpress_core::covering::{
    cover_single_scale_log_sum, lambda_vs_w_check, pressure_bisect, single_scale_log_sum, upper_pressure,
    w_lp_stage, BisectMode, StageSpec, BISECT_TOL,
};
use wpress_core::{fixtures, CoverFamily, Limits, Potential};

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(32)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn upper_pressure_matches_enumeration(seed in 0u64..10_000, depth in 1usize..4, range in 1usize..3, n in 1usize..5) {
        let sys = common::random_system(seed, 3, depth);
        let f = common::random_potential(&sys, range, seed);
        let got = upper_pressure(&sys, &f, n).unwrap();
        let want = common::brute_upper_pressure(&sys, &f, n);
        prop_assert!((got - want).abs() < 1e-12, "{} vs {}", got, want);
    }

    #[test]
    fn single_scale_sum_is_affine_in_s(seed in 0u64..10_000, n in 1usize..6, s in -3.0f64..3.0) {
        let sys = common::random_system(seed, 3, 2);
        let f = common::random_potential(&sys, 1, seed);
        let at_zero = single_scale_log_sum(&sys, &f, 0.0, n).unwrap();
        let at_s = single_scale_log_sum(&sys, &f, s, n).unwrap();
        prop_assert!((at_s - (at_zero - s * n as f64)).abs() < 1e-10);
    }

    #[test]
    fn relabelling_the_top_changes_nothing(seed in 0u64..10_000, depth in 1usize..3, n in 1usize..5, rot in 1usize..3) {
        let sys = common::random_system(seed, 3, depth);
        let f = common::random_potential(&sys, 2, seed);
        let perm: Vec<usize> = (0..3).map(|u| (u + rot) % 3).collect();
        let (other, g) = common::permute_top(&sys, &f, &perm);
        let a = upper_pressure(&sys, &f, n).unwrap();
        let b = upper_pressure(&other, &g, n).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn lp_never_exceeds_the_best_set_cover(seed in 0u64..10_000, depth in 1usize..3, n_max in 1usize..4, s in 0.0f64..2.0) {
        let sys = common::random_system(seed, 3, depth);
        let f = common::random_potential(&sys, 1, seed);
        let stage = StageSpec::new(&sys, 1, n_max, None).unwrap();
        let r = lambda_vs_w_check(&sys, &f, s, &stage).unwrap();
        prop_assert!(r.holds, "{:?}", r);
    }

    #[test]
    fn lp_value_grows_as_scales_are_removed(seed in 0u64..10_000, depth in 1usize..3, s in 0.0f64..2.0) {
        let sys = common::random_system(seed, 2, depth);
        let f = common::random_potential(&sys, 1, seed);
        let n_max = 4;
        let mut prev = 0.0;
        for lo in 1..=n_max {
            let stage = StageSpec::new(&sys, lo, n_max, None).unwrap();
            let v = w_lp_stage(&sys, &f, s, &stage).unwrap();
            prop_assert!(v >= prev * (1.0 - 1e-9), "N={}: {} < {}", lo, v, prev);
            prev = v;
        }
    }

    #[test]
    fn cover_sum_over_zeroth_covers_is_the_weighted_sum(seed in 0u64..10_000, depth in 1usize..3, n in 1usize..4) {
        let sys = common::random_system(seed, 3, depth);
        let f = common::random_potential(&sys, 1, seed);
        let covers = CoverFamily::cylinders(&sys, &vec![1; depth]).unwrap();
        let a = cover_single_scale_log_sum(&sys, &covers, &f, 0.0, n, &Limits::default()).unwrap();
        prop_assert!((a - single_scale_log_sum(&sys, &f, 0.0, n).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn coarser_covers_give_smaller_sums() {
    // every cylinder-cover join element is a union of weighted cylinders,
    // so the trivial family gives the smallest sum
    for (name, sys) in common::all_systems() {
        let f = fixtures::f1(&sys);
        for n in 1..=3 {
            let trivial = cover_single_scale_log_sum(&sys, &CoverFamily::trivial(&sys), &f, 0.0, n, &Limits::default()).unwrap();
            let fine = single_scale_log_sum(&sys, &f, 0.0, n).unwrap();
            assert!(trivial <= fine + 1e-12, "{name} n={n}");
        }
    }
}

#[test]
fn bisection_agrees_with_the_closed_crossing() {
    for (name, sys) in common::all_systems() {
        let f = fixtures::f1(&sys);
        let stage = StageSpec::single(&sys, 6).unwrap();
        let single = pressure_bisect(&sys, &f, &stage, BisectMode::SingleScale).unwrap();
        let direct = upper_pressure(&sys, &f, 6).unwrap();
        assert!((single.upper - direct).abs() <= BISECT_TOL, "{name}: {} vs {direct}", single.upper);
        let small = StageSpec::new(&sys, 2, 3, None).unwrap();
        let lp = pressure_bisect(&sys, &f, &small, BisectMode::Lp).unwrap();
        let ss = pressure_bisect(&sys, &f, &StageSpec::single(&sys, 3).unwrap(), BisectMode::SingleScale).unwrap();
        assert!(lp.upper <= ss.upper + BISECT_TOL, "{name}: lp {} above single {}", lp.upper, ss.upper);
    }
}

#[test]
fn full_shift_stage_values_are_exact() {
    let sys = fixtures::full2();
    for n in 1..=8 {
        assert!((upper_pressure(&sys, &Potential::zero(), n).unwrap() - std::f64::consts::LN_2).abs() < 1e-14);
    }
    let fs = fixtures::fs42();
    let f = fixtures::f1(&fs);
    let want = 5f64.ln() + 0.5 * std::f64::consts::LN_2;
    assert!((upper_pressure(&fs, &f, 10).unwrap() - want).abs() < 1e-12);
}
