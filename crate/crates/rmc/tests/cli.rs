use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rmc(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rmc"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("RMC_THREADS", t),
        None => cmd.env_remove("RMC_THREADS"),
    };
    cmd.output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

const EVAL: &[&str] = &[
    "eval",
    "--model",
    "sig21",
    "--digits",
    "4",
    "--point",
    "disc=44",
    "--point",
    "disc=7",
    "--point",
    "disc=8",
    "--point",
    "disc=44,orient=2",
];

#[test]
fn rejected_divisor_exits_2() {
    let out = rmc(
        &[
            "obstruct",
            "--model",
            "sig31-bianchi",
            "--divisor",
            "3:2,7:-1",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2a₃(g) − a₇(g) = −6"));
    let v = json(&out);
    assert_eq!(v["schema"], "rmc-result/1");
    assert_eq!(v["result"]["certified"], false);
    assert_eq!(v["result"]["violation"]["value"], -6);

    let out = rmc(
        &["eval", "--divisor", "3:2,7:-1", "--point", "disc=8,flip=cm"],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn certified_divisor_lists_kernel() {
    let out = rmc(&["obstruct", "--model", "sig21"], None);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["certified"], true);
    assert!(!v["result"]["kernel"].as_array().unwrap().is_empty());
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(
        rmc(&["eval", "--model", "nope", "--point", "disc=8"], None)
            .status
            .code(),
        Some(64)
    );
    assert_eq!(
        rmc(&["eval", "--point", "colour=red"], None).status.code(),
        Some(64)
    );
    assert_eq!(rmc(&["frobnicate"], None).status.code(), Some(64));
}

#[test]
fn eval_is_deterministic_and_ordered() {
    let a = rmc(EVAL, Some("1"));
    let b = rmc(EVAL, Some("3"));
    let c = rmc(EVAL, None);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let v = json(&a);
    let inputs: Vec<&str> = v["result"]["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["input"].as_str().unwrap())
        .collect();
    assert_eq!(inputs, ["disc=44", "disc=7", "disc=8", "disc=44,orient=2"]);
}

#[test]
fn bad_points_become_error_records() {
    let v = json(&rmc(EVAL, None));
    let pts = v["result"]["points"].as_array().unwrap();
    assert_eq!(v["result"]["errors"], 1);
    assert_eq!(pts[1]["error"]["kind"], "Invalid");
    assert!(pts[1]["value"].is_null());
    assert!(pts[0]["value"].is_object() && pts[2]["value"].is_object());
}

#[test]
fn recognition_record() {
    let out = rmc(
        &[
            "eval",
            "--point",
            "disc=8,flip=cm",
            "--digits",
            "4",
            "--levels",
            "2",
            "--recognize",
            "field=Qi,H=10",
        ],
        None,
    );
    let v = json(&out);
    let rec = &v["result"]["points"][0]["recognition"];
    for key in [
        "coeffs",
        "den",
        "field",
        "height",
        "residual_margin",
        "norm",
        "factors",
    ] {
        assert!(!rec[key].is_null(), "missing {key} in {rec}");
    }
    assert_eq!(rec["coeffs"], serde_json::json!(["1", "0"]));
    assert_eq!(rec["den"], "1");
    assert_eq!(rec["field"], "Q(i)");
    assert_eq!(rec["norm"], "1");
}

#[test]
fn underdetermined_recognition_is_recorded() {
    let v = json(&rmc(
        &[
            "eval",
            "--model",
            "sig21",
            "--digits",
            "8",
            "--point",
            "disc=44",
            "--recognize",
            "field=Qi,H=1e7",
        ],
        None,
    ));
    let pt = &v["result"]["points"][0];
    assert!(pt["value"].is_object());
    assert!(pt["recognition"].is_null());
    assert_eq!(pt["recognition_error"]["kind"], "NoRelation");
}

#[test]
fn oversized_levels_are_refused() {
    let v = json(&rmc(
        &[
            "eval", "--model", "sig21", "--digits", "4", "--levels", "9", "--point", "disc=44",
        ],
        None,
    ));
    assert_eq!(v["result"]["points"][0]["error"]["kind"], "TooLarge");
}

fn eval_cached(cache: &Path) -> Output {
    let mut args = EVAL.to_vec();
    args.extend(["--cache", cache.to_str().unwrap()]);
    rmc(&args, None)
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("levels.bin");
    let plain = rmc(EVAL, None);
    let first = eval_cached(&cache);
    let bytes = std::fs::read(&cache).unwrap();
    assert!(bytes.starts_with(b"RMCLEVEL"));
    let second = eval_cached(&cache);
    assert_eq!(plain.stdout, first.stdout);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(bytes, std::fs::read(&cache).unwrap());
    let log = String::from_utf8_lossy(&second.stderr);
    assert!(log.contains(" 0 misses"), "{log}");

    // a different divisor invalidates the header
    let out = rmc(
        &[
            "eval",
            "--model",
            "sig21",
            "--digits",
            "4",
            "--divisor",
            "8:1,2:-1",
            "--point",
            "disc=44",
            "--cache",
            cache.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("header mismatch"));
}

#[test]
fn corrupt_cache_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("junk.bin");
    std::fs::write(&cache, b"not a cache").unwrap();
    let out = eval_cached(&cache);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_reports_pass_flag() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.json");
    let out = rmc(
        &[
            "verify",
            "--model",
            "sig21",
            "--json",
            path.to_str().unwrap(),
        ],
        None,
    );
    let v: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    let pass = v["result"]["pass"].as_bool().unwrap();
    assert_eq!(out.status.code(), Some(if pass { 0 } else { 1 }));
    let suites = v["result"]["suites"].as_array().unwrap();
    assert!(suites
        .iter()
        .any(|s| s["name"] == "series fixtures" && s["pass"] == true));
    assert_eq!(pass, suites.iter().all(|s| s["pass"] == true));
}
