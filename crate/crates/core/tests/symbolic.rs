mod common;

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use wpress_core::cylinders::oscillation;
use wpress_core::symbolic::birkhoff_sup;
use wpress_core::{CoverFamily, Limits, Potential, Subshift};

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(48)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn word_counts_are_submultiplicative(seed in 0u64..10_000, size in 2usize..5, m in 1usize..6, n in 1usize..6) {
        let shift = common::random_shift(size, 0.4, &mut common::rng(seed));
        let wm = shift.word_count(m).unwrap();
        let wn = shift.word_count(n).unwrap();
        prop_assert!(shift.word_count(m + n).unwrap() <= wm * wn);
    }

    #[test]
    fn words_match_word_count(seed in 0u64..10_000, size in 2usize..5, n in 1usize..7) {
        let shift = common::random_shift(size, 0.4, &mut common::rng(seed));
        let words = shift.words(n, &Limits::default()).unwrap();
        prop_assert_eq!(BigUint::from(words.len()), shift.word_count(n).unwrap());
        prop_assert!(words.iter().all(|w| w.len() == n && shift.is_admissible(w)));
        prop_assert_eq!(words.iter().collect::<BTreeSet<_>>().len(), words.len());
    }

    #[test]
    fn codes_preserve_admissibility(seed in 0u64..10_000, depth in 1usize..4) {
        let sys = common::random_system(seed, 3, depth);
        for w in sys.top().words(5, &Limits::default()).unwrap() {
            for level in 1..sys.depth() {
                let image: Vec<_> = w.iter().map(|&s| sys.project(0, level, s)).collect();
                prop_assert!(sys.level(level).is_admissible(&image));
            }
        }
    }

    #[test]
    fn range_one_birkhoff_is_a_plain_sum(seed in 0u64..10_000, len in 1usize..8) {
        let sys = common::random_system(seed, 3, 1);
        let f = common::random_potential(&sys, 1, seed);
        let values = f.unary_values(3).unwrap();
        for w in sys.top().words(len, &Limits::default()).unwrap() {
            let plain: f64 = w.iter().map(|&s| values[s as usize]).sum();
            prop_assert!((f.birkhoff_sum(&w, len) - plain).abs() < 1e-12);
        }
    }

    #[test]
    fn birkhoff_sup_matches_extension_search(seed in 0u64..10_000, len in 1usize..5) {
        let sys = common::random_system(seed, 3, 1);
        let f = common::random_potential(&sys, 2, seed ^ 1);
        for prefix in sys.top().words(len, &Limits::default()).unwrap() {
            let brute = sys
                .top()
                .successors(*prefix.last().unwrap())
                .iter()
                .map(|&v| {
                    let mut x = prefix.clone();
                    x.push(v);
                    f.birkhoff_sum(&x, len)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let got = birkhoff_sup(&sys, &f, &prefix, len).unwrap();
            prop_assert!((got - brute).abs() < 1e-12, "{} vs {}", got, brute);
        }
    }

    #[test]
    fn oscillation_shrinks_under_refinement(seed in 0u64..10_000, depth in 1usize..3, range in 1usize..3) {
        let sys = common::random_system(seed, 3, depth);
        let f = common::random_potential(&sys, range, seed);
        let mut lens = vec![1; depth];
        let mut prev = oscillation(&sys, &CoverFamily::cylinders(&sys, &lens).unwrap(), &f).unwrap();
        for step in 0..2 * depth {
            lens[step % depth] += 1;
            let next = oscillation(&sys, &CoverFamily::cylinders(&sys, &lens).unwrap(), &f).unwrap();
            prop_assert!(next <= prev + 1e-15);
            prev = next;
        }
        if depth == 1 && range == 1 {
            // length-1 cylinders already determine f
            prop_assert!(prev.abs() < 1e-15);
        }
    }

    #[test]
    fn windows_are_exact_ceilings(seed in 0u64..10_000, depth in 1usize..4, n in 1usize..40) {
        let sys = common::random_system(seed, 2, depth);
        let m = sys.window_lengths(n);
        let mut acc = BigRational::from_integer(0.into());
        for (i, a) in sys.weights().exact().iter().enumerate() {
            acc += a;
            let exact = (&acc * BigRational::from_integer(n.into())).ceil().to_integer();
            prop_assert_eq!(m[i], exact.to_usize().unwrap());
        }
        prop_assert!(m.windows(2).all(|p| p[0] <= p[1]));
    }
}

#[test]
fn golden_mean_counts_are_fibonacci() {
    let gm = Subshift::golden_mean();
    let counts: Vec<u64> = (1..=10).map(|n| gm.word_count(n).unwrap().to_u64().unwrap()).collect();
    assert_eq!(counts, [2, 3, 5, 8, 13, 21, 34, 55, 89, 144]);
}

#[test]
fn shifted_potential_moves_sums_by_a_constant() {
    let sys = common::random_system(3, 3, 1);
    let f = common::random_potential(&sys, 2, 3);
    let g = f.shifted(sys.top(), 0.75);
    for w in sys.top().words(6, &Limits::default()).unwrap() {
        assert!((g.birkhoff_sum(&w, 5) - f.birkhoff_sum(&w, 5) - 3.75).abs() < 1e-12);
    }
    assert_eq!(Potential::zero().sup_norm(sys.top()), 0.0);
}
