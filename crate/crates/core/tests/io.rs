mod common;

use proptest::prelude::*;
use wpress_core::io::{load_system, parse_measure, parse_potential, parse_system, MeasureSpec, PotentialSpec, SystemSpec};
use wpress_core::{fixtures, Error, MarkovMeasure};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn systems_round_trip(seed in 0u64..10_000, depth in 1usize..4, top in 2usize..5) {
        let sys = common::random_system(seed, top, depth);
        let text = serde_json::to_string_pretty(&SystemSpec::from_system(&sys)).unwrap();
        let back = parse_system(&text).unwrap();
        prop_assert_eq!(back.levels(), sys.levels());
        prop_assert_eq!(back.codes(), sys.codes());
        prop_assert_eq!(back.weights(), sys.weights());
    }

    #[test]
    fn potentials_and_measures_round_trip(seed in 0u64..10_000, range in 1usize..3) {
        let sys = common::random_system(seed, 3, 2);
        let f = common::random_potential(&sys, range, seed);
        let text = serde_json::to_string(&PotentialSpec::from_potential(&sys, &f)).unwrap();
        prop_assert_eq!(parse_potential(&sys, &text).unwrap(), f);
        let m = MarkovMeasure::random(sys.top(), &mut common::rng(seed), 1.0).unwrap();
        let text = serde_json::to_string(&MeasureSpec::from_measure(&sys, &m)).unwrap();
        prop_assert_eq!(parse_measure(&sys, &text).unwrap(), m);
    }
}

#[test]
fn files_report_their_path() {
    let dir = std::env::temp_dir().join(format!("wpress-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.json");
    std::fs::write(&path, "{\"levels\": [").unwrap();
    match load_system(&path) {
        Err(Error::Parse(msg)) => assert!(msg.contains("bad.json"), "{msg}"),
        other => panic!("{other:?}"),
    }
    std::fs::write(&path, serde_json::to_string(&SystemSpec::from_system(&fixtures::fs42())).unwrap()).unwrap();
    assert_eq!(load_system(&path).unwrap().levels(), fixtures::fs42().levels());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bundled_fixture_files_load() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    for (name, sys) in fixtures::all() {
        let loaded = load_system(&root.join(format!("{name}.json"))).unwrap();
        assert_eq!(loaded.levels(), sys.levels(), "{name}");
        assert_eq!(loaded.weights(), sys.weights(), "{name}");
    }
}
