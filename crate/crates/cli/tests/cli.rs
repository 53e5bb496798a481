use std::path::PathBuf;
use std::process::Command;

use clap::Parser;
use wpress_cli::record::ResultRecord;
use wpress_cli::{run, Cli};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn wpress(args: &[&str]) -> (i32, ResultRecord) {
    let out = Command::new(env!("CARGO_BIN_EXE_wpress")).args(args).output().unwrap();
    let record = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)));
    (out.status.code().unwrap(), record)
}

fn in_process(args: &[&str]) -> ResultRecord {
    let mut argv = vec!["wpress"];
    argv.extend_from_slice(args);
    run(Cli::try_parse_from(argv).unwrap().command)
}

#[test]
fn records_round_trip() {
    let sys = fixture("fs42.json");
    let f = fixture("fs42_f1.json");
    let dyadic = fixture("fs42_dyadic.json");
    let runs: Vec<Vec<&str>> = vec![
        vec!["upper", "--system", &sys, "--potential", &f, "-n", "6"],
        vec!["bisect", "--system", &sys, "--mode", "lp", "--N", "1", "--n-max", "2"],
        vec!["lp", "--system", &sys, "--potential", &f, "--s", "1.9", "--N", "1", "--n-max", "2"],
        vec!["frostman", "--system", &sys, "--s", "1000", "--N", "1", "--n-max", "2"],
        vec!["optimize", "--system", &sys, "--potential", &f, "-L", "2", "--restarts", "2", "--iters", "50"],
        vec!["smb", "--system", &sys, "--measure", &dyadic, "-N", "7", "--sample", "50"],
        vec!["power-check", "--system", &sys, "-M", "2", "-n", "1,2"],
        vec!["bisect", "--system", &sys, "--N", "3", "--n-max", "2"],
    ];
    for args in runs {
        let rec = in_process(&args);
        let text = serde_json::to_string(&rec).unwrap();
        let back: ResultRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rec, "{args:?}");
    }
}

#[test]
fn identical_inputs_reproduce_the_record() {
    let sys = fixture("even_chain.json");
    let args = ["optimize", "--system", &sys, "-L", "2", "--restarts", "3", "--iters", "60", "--seed", "4"];
    let a = in_process(&args);
    let b = in_process(&args);
    assert_eq!(a.without_timing(), b.without_timing());
    assert_eq!(a.seed, Some(4));
}

#[test]
fn stage_below_n_is_a_config_error() {
    let (code, rec) = wpress(&["bisect", "--system", &fixture("fs42.json"), "--N", "3", "--n-max", "2"]);
    assert_eq!(code, 2);
    assert!(rec.error.unwrap().message.contains("n-max"));
}

#[test]
fn missing_files_and_bad_systems_are_config_errors() {
    let (code, _) = wpress(&["upper", "--system", "/nonexistent/system.json"]);
    assert_eq!(code, 2);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("neg.json");
    let text = std::fs::read_to_string(fixture("fs42.json")).unwrap().replace("\"1, 1/2\"", "\"-1, 1/2\"");
    std::fs::write(&bad, text).unwrap();
    let (code, rec) = wpress(&["upper", "--system", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(rec.error.unwrap().message.contains("a1 must be positive"));
}

#[test]
fn oversized_enumerations_hit_the_resource_cap() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f2.json");
    std::fs::write(&f, r#"{"range": 2, "entries": {"aa": 1}}"#).unwrap();
    let (code, rec) = wpress(&["upper", "--system", &fixture("fs42.json"), "--potential", f.to_str().unwrap(), "-n", "40"]);
    assert_eq!(code, 3, "{rec:?}");
}

#[test]
fn frostman_above_the_pressure_flags_no_mass() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("mu.json");
    let (code, rec) = wpress(&[
        "frostman",
        "--system",
        &fixture("fs42.json"),
        "--potential",
        &fixture("fs42_f1.json"),
        "--s",
        "1000",
        "--N",
        "1",
        "--n-max",
        "2",
        "--dump-measure",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(rec.flags.contains(&"no-mass-certifiable".to_string()));
    assert_eq!(rec.get("c"), Some(0.0));
    let measure: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dump).unwrap()).unwrap();
    assert!(measure["mass"].is_array());
}

#[test]
fn out_file_receives_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let status = Command::new(env!("CARGO_BIN_EXE_wpress"))
        .args(["upper", "--system", &fixture("full2.json"), "-n", "4", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let rec: ResultRecord = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!((rec.get("upper_pressure").unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    assert!(rec.values.iter().all(|v| !v.provenance.as_str().is_empty()));
}

#[test]
fn verify_all_passes_on_fs42() {
    let (code, rec) = wpress(&[
        "verify",
        "--system",
        &fixture("fs42.json"),
        "--potential",
        &fixture("fs42_f1.json"),
        "--suite",
        "all",
        "-L",
        "2",
    ]);
    let failed: Vec<_> = rec.checks.iter().filter(|c| !c.passed).collect();
    assert_eq!(code, 0, "{failed:?}");
    for suite in ["vp", "smb", "duality", "power"] {
        assert!(rec.checks.iter().any(|c| c.suite == suite), "{suite} missing");
    }
}

#[test]
fn smb_reports_exact_and_sampled_rates() {
    let (code, rec) = wpress(&[
        "smb",
        "--system",
        &fixture("fs42.json"),
        "--measure",
        &fixture("fs42_dyadic.json"),
        "-N",
        "10",
        "--sample",
        "1000",
        "--seed",
        "7",
    ]);
    assert_eq!(code, 0);
    assert!((rec.get("expected_rate").unwrap() - 1.494175138).abs() < 1e-8);
    assert!(rec.get("sampled_mean").is_some());
}

#[test]
fn help_exits_cleanly_and_usage_errors_exit_two() {
    let ok = Command::new(env!("CARGO_BIN_EXE_wpress")).arg("--help").output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = Command::new(env!("CARGO_BIN_EXE_wpress")).args(["upper", "--bogus"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
