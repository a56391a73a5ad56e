//! Seeded random minds and scenarios for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::mind::{ConceptSpace, ExpansionRule, Mind};
use crate::set::ConceptSet;
use crate::signals::SignalSystem;
use crate::teach_sim::Scenario;

/// A mind over `c0..c{n-1}` with `1 ≤ n ≤ max_concepts` and at most
/// `max_rules` rules of at most three prerequisites each.
pub fn random_mind<R: Rng + ?Sized>(rng: &mut R, max_concepts: usize, max_rules: usize) -> Mind {
    let n = rng.gen_range(1..=max_concepts.max(1));
    let space = ConceptSpace::new((0..n).map(|i| format!("c{i}"))).expect("valid labels");
    let axioms: ConceptSet = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
    let rules = (0..rng.gen_range(0..=max_rules))
        .map(|_| {
            let target = rng.gen_range(0..n);
            let mut others: Vec<usize> = (0..n).filter(|&c| c != target).collect();
            others.shuffle(rng);
            let k = rng.gen_range(0..=others.len().min(3));
            ExpansionRule::new(others[..k].iter().copied().collect(), target)
        })
        .collect();
    Mind::new(space, axioms, rules).expect("valid rules")
}

/// A random subset of `set`.
pub fn random_subset<R: Rng + ?Sized>(rng: &mut R, set: ConceptSet) -> ConceptSet {
    set.iter().filter(|_| rng.gen_bool(0.5)).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct ScenarioParams {
    pub max_concepts: usize,
    pub max_rules: usize,
    pub max_tokens: usize,
    pub max_targets: usize,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            max_concepts: 6,
            max_rules: 10,
            max_tokens: 6,
            max_targets: 4,
        }
    }
}

/// A valid scenario whose signal system covers every non-axiom horizon
/// concept and every target, padded with random extra tokens, so direct
/// teaching is available. Requires `max_tokens ≥ max_concepts`.
pub fn random_scenario<R: Rng + ?Sized>(rng: &mut R, params: ScenarioParams) -> Scenario {
    assert!(params.max_tokens >= params.max_concepts);
    let mind = loop {
        let m = random_mind(rng, params.max_concepts, params.max_rules);
        if !m.horizon().is_empty() {
            break m;
        }
    };
    let horizon: Vec<usize> = mind.horizon().iter().collect();
    let mut pool = horizon.clone();
    pool.shuffle(rng);
    let k = rng.gen_range(1..=pool.len().min(params.max_targets));
    let targets: Vec<usize> = pool[..k].to_vec();

    let needed: ConceptSet = mind
        .horizon()
        .difference(mind.axioms())
        .union(targets.iter().copied().collect());
    let mut concepts: Vec<usize> = needed.iter().collect();
    let extra = rng.gen_range(0..=params.max_tokens - concepts.len());
    for _ in 0..extra {
        concepts.push(rng.gen_range(0..mind.space().len()));
    }
    concepts.shuffle(rng);
    let names: Vec<String> = (0..concepts.len()).map(|i| format!("z{i}")).collect();
    let pairs: Vec<(&str, usize)> = names.iter().map(String::as_str).zip(concepts).collect();
    let system = SignalSystem::from_targets(mind.space(), &pairs).expect("valid tokens");

    let mut weights: Vec<f64> = (0..k)
        .map(|_| {
            if rng.gen_bool(0.15) {
                0.0
            } else {
                rng.gen_range(0.1..1.0)
            }
        })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        weights[0] = 1.0;
    }
    let total: f64 = weights.iter().sum();
    let prior = weights.iter().map(|w| w / total).collect();
    Scenario::new(mind, system, targets, prior).expect("valid scenario")
}

/// One random token row of length `len` per target.
pub fn random_rows<R: Rng + ?Sized>(rng: &mut R, scenario: &Scenario, len: usize) -> Vec<Vec<usize>> {
    let n = scenario.system().len();
    (0..scenario.targets().len())
        .map(|_| (0..len).map(|_| rng.gen_range(0..n)).collect())
        .collect()
}
