use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn noesis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noesis"))
        .args(args)
        .env_remove("NOESIS_NODE_CAP")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

#[test]
fn simulate_star_completes_in_two_rounds() {
    let star = fixture("star.scenario");
    let args = ["simulate", "--scenario", &star, "--seed", "7", "--horizon", "2"];
    let a = noesis(&args);
    let trace = json(&a);
    assert_eq!(trace["tau"], 2);
    assert_eq!(trace["rounds"].as_array().unwrap().len(), 3);
    assert_eq!(trace["header"]["seed"], 7);
    assert_eq!(noesis(&args).stdout, a.stdout);
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traces.csv");
    let star = fixture("star.scenario");
    let o = out.to_str().unwrap();
    let args = [
        "simulate",
        "--scenario",
        &star,
        "--seed",
        "3",
        "--horizon",
        "3",
        "--episodes",
        "10",
        "--format",
        "csv",
        "--out",
        o,
    ];
    assert!(noesis(&args).status.success());
    let first = std::fs::read_to_string(&out).unwrap();
    assert!(first.starts_with("episode,seed,theta,t,z,y,known,belief,entropy,capacity"));
    assert_eq!(first.lines().count(), 1 + 10 * 4);
    let mut seq = args.to_vec();
    seq.push("--sequential");
    assert!(noesis(&seq).status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), first);
}

#[test]
fn broadcast_min_prints_the_tight_length() {
    let out = noesis(&["broadcast-min", "--k", "2", "--L", "2"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "3");
    let gen = json(&noesis(&["broadcast-gen", "--k", "3", "--L", "2"]));
    assert_eq!(gen["tight"].as_array().unwrap().len(), 4);
    assert_eq!(gen["minds"].as_array().unwrap().len(), 3);
}

#[test]
fn reach_lists_the_diamond_family() {
    let v = json(&noesis(&[
        "reach",
        "--mind",
        &fixture("diamond.mind"),
        "--format",
        "json",
    ]));
    let want: Value = serde_json::json!([["a"], ["a", "b"], ["a", "c"], ["a", "b", "c"], ["a", "b", "c", "d"]]);
    assert_eq!(v["states"], want);
    assert_eq!(v["learning_space"]["accessible"], true);
}

#[test]
fn mind_commands_accept_scenarios() {
    let v = json(&noesis(&[
        "distance",
        "--scenario",
        &fixture("star.scenario"),
        "--concept",
        "d1",
    ]));
    assert_eq!(v["distance"], 2);
    let v = json(&noesis(&["closure", "--mind", &fixture("mind1.mind"), "--set", "a"]));
    assert_eq!(v["iterates"].as_array().unwrap().len(), 4);
    let v = json(&noesis(&["derive", "--mind", &fixture("mind2.mind"), "--concept", "d"]));
    assert_eq!(v["curriculum"].as_array().unwrap().len(), 3);
}

#[test]
fn capacity_value_allocate_and_audit() {
    let v = json(&noesis(&[
        "capacity",
        "--scenario",
        &fixture("star.scenario"),
        "--set",
        "a,b",
    ]));
    assert!((v["capacity"].as_f64().unwrap() - 5f64.log2()).abs() < 1e-12);
    let v = json(&noesis(&[
        "value",
        "--scenario",
        &fixture("star_pair.scenario"),
        "--horizon",
        "2",
    ]));
    assert_eq!(v["exact"], 1.0);
    let v = json(&noesis(&["allocate", "--n", "4", "--budget", "5", "--L", "2"]));
    assert_eq!(
        (v["completed"].clone(), v["even_completed"].clone()),
        (2.into(), 0.into())
    );
    let audit = noesis(&[
        "audit",
        "--scenario",
        &fixture("full_teaching.scenario"),
        "--horizon",
        "3",
    ]);
    assert!(audit.status.success());
    assert_eq!(String::from_utf8(audit.stdout).unwrap().matches(" pass ").count(), 8);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.scenario");
    let text = std::fs::read_to_string(fixture("star.scenario")).unwrap();
    std::fs::write(&bad, text.replace("\"d1\",\n    \"d2\"", "\"zz\",\n    \"d2\"")).unwrap();
    let out = noesis(&["simulate", "--scenario", bad.to_str().unwrap(), "--horizon", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    let out = noesis(&["reach", "--mind", &fixture("diamond.mind"), "--cap", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_noesis"))
        .args(["reach", "--mind", &fixture("diamond.mind")])
        .env("NOESIS_NODE_CAP", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = noesis(&["broadcast-min", "--k", "3", "--L", "3", "--cap", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn examples_run_quickly() {
    let star = fixture("star.scenario");
    let diamond = fixture("diamond.mind");
    let runs: [&[&str]; 3] = [
        &["simulate", "--scenario", &star, "--seed", "7", "--horizon", "2"],
        &["broadcast-min", "--k", "2", "--L", "2"],
        &["reach", "--mind", &diamond, "--format", "json"],
    ];
    for args in runs {
        let start = Instant::now();
        assert!(noesis(args).status.success());
        assert!(start.elapsed() < Duration::from_secs(5));
    }
}
