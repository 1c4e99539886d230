use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn teich(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teich"))
        .args(args)
        .env_remove("TEICH_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = teich(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stdout));
    serde_json::from_slice(&out.stdout).expect("json output")
}

#[test]
fn enumerate_four_holed() {
    let v = json_ok(&["graphs", "enumerate", "--type", "0,4"]);
    assert_eq!(v["count"], 3);
    assert_eq!(v["seed"], 0);
}

#[test]
fn enumeration_cache_round_trip() {
    let dir = std::env::temp_dir().join(format!("teich-cache-{}", std::process::id()));
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_teich"))
            .args(["graphs", "enumerate", "--type", "1,2"])
            .env("TEICH_DATA_DIR", &dir)
            .output()
            .unwrap()
    };
    let first = run();
    assert!(dir.join("trivalent_1_2.json").exists());
    let second = run();
    assert_eq!(first.stdout, second.stdout);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn usage_and_module_errors() {
    let out = teich(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = teich(&["graphs", "enumerate", "--type", "0,2"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["error"].is_string());

    let out = teich(&["kz", "mzv", "--s", "1,2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_reports_violations() {
    let v = json_ok(&["graphs", "validate", "--input", &data("unstable.json")]);
    assert_eq!(v["report"]["ok"], false);
    let v = json_ok(&["graphs", "validate", "--input", &data("four_holed.json")]);
    assert_eq!(v["report"]["ok"], true);
}

#[test]
fn schottky_output_is_deterministic() {
    let args = ["schottky", "gens", "--graph", &data("theta.json"), "--seed", "17", "--order", "3"];
    let a = teich(&args);
    let b = teich(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["seed"], 17);
    assert_eq!(v["generators"].as_array().unwrap().len(), 2);
    assert_eq!(v["phi"]["+e1"]["det"], "q1");
}

#[test]
fn tate_fixed_points() {
    let v = json_ok(&[
        "schottky",
        "fixed-points",
        "--graph",
        &data("tate.json"),
        "--alpha",
        "+0=0,-0=inf",
        "--word",
        "+0",
    ]);
    assert_eq!(v["attractive"], "0");
    assert_eq!(v["repulsive"], "inf");
    assert_eq!(v["multiplier"], "q0");
}

#[test]
fn algebra_dimensions() {
    let v = json_ok(&["algebra", "witt", "--g", "0", "--n", "3", "--degree", "4"]);
    assert_eq!(v["witt"], serde_json::json!(["2", "1", "2", "3"]));
    let v = json_ok(&["algebra", "weights", "--g", "1", "--n", "2", "--degree", "2"]);
    assert_eq!(v["weights"]["-2"], "4");
}

#[test]
fn kz_commands() {
    let v = json_ok(&["kz", "phi", "--pair", &data("pair_e12_e23.json")]);
    let e13 = v["phi"]["matrix"][0][2][0].as_f64().unwrap();
    assert!((e13 + std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-6);
    assert!(v["phi"]["error_estimate"].is_number());

    let v = json_ok(&["kz", "dehn", "--res", &data("res_square_zero.json")]);
    assert_eq!(v["exact"][0][1], "1/2*(pi i)");
    assert_eq!(v["exact"][0][0], "1");

    let v = json_ok(&[
        "kz",
        "transport",
        "--path",
        &data("path_half_to_one.json"),
        "--forms",
        &data("forms_dlog.json"),
    ]);
    let log2 = v["matrix"][0][1][0].as_f64().unwrap();
    assert!((log2 - 2f64.ln()).abs() < 1e-8);

    let v = json_ok(&[
        "kz",
        "groupoid",
        "--word",
        &data("word_fusing_round_trip.json"),
        "--residues",
        &data("residues_e12_e23.json"),
    ]);
    assert_eq!(v["closed"], true);
    let m = &v["monodromy"]["matrix"];
    for i in 0..3 {
        for j in 0..3 {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((m[i][j][0].as_f64().unwrap() - expect).abs() < 1e-5);
        }
    }

    let v = json_ok(&["kz", "associator", "--weight", "3"]);
    assert!((v["coefficients"]["ab"].as_f64().unwrap() + std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-6);
    assert_eq!(v["error_by_weight"].as_array().unwrap().len(), 4);
}

#[test]
fn output_file() {
    let path = std::env::temp_dir().join(format!("teich-out-{}.json", std::process::id()));
    let out = teich(&["kz", "mzv", "--s", "3", "--output", path.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.202_056_903_159_594).abs() < 1e-12);
    std::fs::remove_file(path).ok();
}

#[test]
fn selftest_quick_passes() {
    let out = teich(&["selftest", "--quick"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("12/12 criteria passed"));
}
