use std::path::PathBuf;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use noesis_core::io::{
    digest, family_lists, load_mind, load_scenario, parse_scenario, scenario_file, scenario_to_json, traces_to_csv,
    StrategySpec, TraceFile,
};
use noesis_core::reachability::enumerate_reachable;
use noesis_core::sample::{random_scenario, ScenarioParams};
use noesis_core::teach_sim::{run_episode, run_episodes};
use noesis_core::{Error, Execution};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

#[test]
fn bundled_fixtures_load() {
    for name in ["mind1.mind", "mind2.mind", "diamond.mind", "star.mind"] {
        load_mind(fixture(name)).unwrap();
    }
    for name in ["star.scenario", "star_pair.scenario", "full_teaching.scenario"] {
        load_scenario(fixture(name)).unwrap();
    }
    let full = load_scenario(fixture("full_teaching.scenario")).unwrap();
    assert_eq!(full.notes.len(), 1);
    assert_eq!(full.file.strategy.name(), "scripted");
}

#[test]
fn diamond_family_lists() {
    let m = load_mind(fixture("diamond.mind")).unwrap();
    let lists = family_lists(m.space(), &enumerate_reachable(&m).unwrap());
    let want: Vec<Vec<&str>> = vec![
        vec!["a"],
        vec!["a", "b"],
        vec!["a", "c"],
        vec!["a", "b", "c"],
        vec!["a", "b", "c", "d"],
    ];
    assert_eq!(lists, want);
}

#[test]
fn target_outside_horizon_is_rejected() {
    let text = std::fs::read_to_string(fixture("star.scenario")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["concepts"].as_array_mut().unwrap().push("e".into());
    v["targets"] = serde_json::json!(["e"]);
    v["prior"] = serde_json::json!([1.0]);
    let bad = serde_json::to_string_pretty(&v).unwrap();
    match parse_scenario(&bad) {
        Err(Error::Parse { message, line }) => {
            assert!(message.contains("targets"), "{message}");
            assert!(bad.lines().nth(line - 1).unwrap().contains("\"targets\""));
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn traces_are_reproducible_and_round_trip() {
    let loaded = load_scenario(fixture("star.scenario")).unwrap();
    let a = run_episode(&loaded.scenario, &loaded.strategy, 2, 7).unwrap();
    let b = run_episode(&loaded.scenario, &loaded.strategy, 2, 7).unwrap();
    let ta = TraceFile::new(&loaded, &a).to_json();
    assert_eq!(ta, TraceFile::new(&loaded, &b).to_json());
    let back = TraceFile::from_json(&ta).unwrap();
    assert_eq!(back.to_json(), ta);
    assert_eq!(back.tau, Some(2));
    assert_eq!(back.rounds.len(), 3);
    assert_eq!(back.header.scenario_digest, loaded.digest);

    let seq = run_episodes(&loaded.scenario, &loaded.strategy, 2, 7, 16, Execution::Sequential).unwrap();
    let par = run_episodes(&loaded.scenario, &loaded.strategy, 2, 7, 16, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    let files: Vec<TraceFile> = seq.iter().map(|t| TraceFile::new(&loaded, t)).collect();
    let csv = traces_to_csv(&files).unwrap();
    assert_eq!(csv.lines().count(), 1 + 16 * 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scenario_files_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scenario(&mut rng, ScenarioParams::default());
        let file = scenario_file(&s, StrategySpec::Direct);
        let text = scenario_to_json(&file);
        let loaded = parse_scenario(&text).unwrap();
        prop_assert_eq!(&loaded.file, &file);
        prop_assert_eq!(loaded.scenario.targets(), s.targets());
        prop_assert_eq!(&loaded.digest, &digest(&file));
        let again = parse_scenario(&scenario_to_json(&loaded.file)).unwrap();
        prop_assert_eq!(again.digest, loaded.digest);
    }
}
