use std::process::Command;

use nkgeom_cli::run;
use proptest::prelude::*;
use serde_json::Value;

fn json(args: &[&str]) -> (i32, Value) {
    let mut argv = vec!["nkgeom", "--json"];
    argv.extend_from_slice(args);
    let (code, out) = run(argv);
    (code, serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out}")))
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(["nkgeom", "--help"]).0, 0);
    assert_eq!(run(["nkgeom", "--version"]).0, 0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(["nkgeom"]).0, 2);
    assert_eq!(run(["nkgeom", "frobnicate"]).0, 2);
    assert_eq!(run(["nkgeom", "nk"]).0, 2);
    assert_eq!(run(["nkgeom", "optimize", "catalog:s3s3", "--tol", "abc"]).0, 2);
}

#[test]
fn missing_and_malformed_manifests_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"name\": \"x\",\n  \"dimension\": 6,\n  oops\n}").unwrap();
    let (code, out) = run(["nkgeom", "check", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.contains("line 4"), "{out}");

    let asym = dir.path().join("asym.json");
    std::fs::write(
        &asym,
        r#"{"name":"x","dimension":3,"structure_constants":[{"i":1,"j":2,"k":3,"value":-1.0},{"i":1,"j":3,"k":2,"value":-1.0}]}"#,
    )
    .unwrap();
    assert_eq!(run(["nkgeom", "check", asym.to_str().unwrap()]).0, 2);

    assert_eq!(run(["nkgeom", "check", "/no/such/file.json"]).0, 2);
    assert_eq!(run(["nkgeom", "check", "catalog:nothing"]).0, 2);
    let (code, v) = json(&["nk", "catalog:nothing"]);
    assert_eq!(code, 2);
    assert!(v["error"].is_string());
}

#[test]
fn commands_needing_j_reject_manifests_without_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("noj.json");
    std::fs::write(&p, r#"{"name":"x","dimension":6,"structure_constants":[]}"#).unwrap();
    let path = p.to_str().unwrap();
    assert_eq!(run(["nkgeom", "check", path]).0, 0);
    for cmd in ["nijenhuis", "torsion", "nk", "cone", "functional", "optimize"] {
        assert_eq!(run(["nkgeom", cmd, path]).0, 2, "{cmd}");
    }
}

#[test]
fn catalog_commands() {
    let (code, v) = json(&["catalog", "list"]);
    assert_eq!(code, 0);
    let names: Vec<&str> = v["results"]["models"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
    assert!(names.contains(&"s3s3_nk") && names.contains(&"torus6"));
    let (code, out) = run(["nkgeom", "catalog", "show", "s3s3"]);
    assert_eq!(code, 0);
    assert!(nkgeom::Manifest::from_json(&out).is_ok());
    assert_eq!(run(["nkgeom", "catalog", "show", "nope"]).0, 2);
}

#[test]
fn nk_fixture_passes_end_to_end() {
    let (code, v) = json(&["nk", "catalog:s3s3_nk"]);
    assert_eq!(code, 0);
    for key in ["torsion", "structure_equations", "nabla_omega"] {
        assert_eq!(v["verdicts"][key], Value::Bool(true), "{key}");
    }
    assert_eq!(v["manifest"]["name"], "s3s3_nk");
    assert_eq!(v["manifest"]["sha256"].as_str().unwrap().len(), 64);
    assert!(v["constants"]["kappa_conv"].is_number());
    assert!(v.get("timing_ms").is_none());
}

#[test]
fn verdict_failures_exit_one() {
    assert_eq!(run(["nkgeom", "nk", "catalog:s3s3_perturbed"]).0, 1);
    assert_eq!(run(["nkgeom", "functional", "--gradient", "catalog:s3s3"]).0, 1);
    assert_eq!(run(["nkgeom", "cone", "catalog:torus6"]).0, 1);
}

#[test]
fn functional_and_cone_on_fixture() {
    let (code, v) = json(&["functional", "--gradient", "catalog:s3s3_nk"]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["gradient"].as_array().unwrap().len(), 18);
    let (code, v) = json(&["cone", "catalog:s3s3_nk"]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["stabilizer_dim"], 14);
}

#[test]
fn optimize_from_perturbed_start() {
    let (code, v) = json(&["optimize", "catalog:s3s3_perturbed"]);
    assert_eq!(code, 0);
    let trace: Vec<f64> = v["results"]["trace"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    assert!(*trace.last().unwrap() < 1e-12);
}

#[test]
fn json_reports_roundtrip() {
    let (_, out) = run(["nkgeom", "--json", "torsion", "catalog:s3s3"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(serde_json::to_string_pretty(&v).unwrap() + "\n", out);
}

#[test]
fn timing_is_opt_in() {
    let (_, v) = json(&["--timing", "nijenhuis", "catalog:s3s3"]);
    assert!(v["timing_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn shipped_fixture_is_reproduced_by_optimize() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nk.json");
    let (code, _) = run(["nkgeom", "optimize", "catalog:s3s3", "--emit", out.to_str().unwrap(), "--name", "s3s3_nk"]);
    assert_eq!(code, 0);
    assert_eq!(std::fs::read_to_string(out).unwrap(), nkgeom::frame::S3S3_NK_FIXTURE);
}

#[test]
fn binary_output_is_byte_identical() {
    let bin = env!("CARGO_BIN_EXE_nkgeom");
    let go = || Command::new(bin).args(["--json", "--threads", "2", "nk", "catalog:s3s3_nk"]).output().unwrap();
    let (a, b) = (go(), go());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let err = Command::new(bin).args(["check", "/no/such/file"]).output().unwrap();
    assert_eq!(err.status.code(), Some(2));
    assert!(err.stdout.is_empty() && !err.stderr.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn arbitrary_argv_never_panics(tokens in prop::collection::vec(prop::sample::select(vec![
        "--json", "--timing", "check", "nijenhuis", "torsion", "nk", "cone", "functional", "--gradient",
        "catalog", "list", "show", "catalog:torus6", "catalog:s3s3", "catalog:s3s3_nk", "catalog:bogus",
        "s3s3", "--tol", "1e-3", "--max-iter", "2", "-x", "", "/nonexistent",
    ]), 0..5)) {
        let mut argv = vec!["nkgeom"];
        argv.extend(tokens);
        let (code, out) = run(argv);
        prop_assert!((0..=2).contains(&code));
        prop_assert!(!out.is_empty());
    }
}
