//! Fixed-horizon success bounds, exact tiny-instance values, allocation and
//! the broadcast construction.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::mind::{ConceptSpace, ExpansionRule, Mind};
use crate::reachability::{shortest_chain, structural_distance};
use crate::set::ConceptSet;
use crate::signals::{parse_mask, Parsed, SignalDecl, SignalSystem};
use crate::teach_sim::{knowledge_update, Direct, Scenario};

/// Hard caps of [`exact_value_tiny`].
pub const EXACT_MAX_TARGETS: usize = 3;
pub const EXACT_MAX_TOKENS: usize = 3;
pub const EXACT_MAX_HORIZON: usize = 3;
pub const EXACT_MAX_STRATEGIES: u64 = 10_000_000;

fn distances(scenario: &Scenario) -> Result<Vec<usize>> {
    (0..scenario.targets().len())
        .map(|theta| {
            structural_distance(scenario.mind(), scenario.targets()[theta])?
                .ok_or_else(|| Error::Unreachable(scenario.target_label(theta).to_string()))
        })
        .collect()
}

/// `P(L(Θ) ≤ t)`, an upper bound on the optimal success probability.
pub fn value_upper(scenario: &Scenario, t: usize) -> Result<f64> {
    let l = distances(scenario)?;
    Ok(scenario
        .prior()
        .iter()
        .zip(&l)
        .filter(|(_, &l)| l <= t)
        .map(|(p, _)| p)
        .sum())
}

/// Lower bound from direct teaching: the larger of the Markov form
/// `1 − E[L(Θ)+1]/t` and the direct strategy's success probability
/// `P(L(Θ)+1 ≤ t)`. Zero when some chain concept has no token, since
/// direct teaching is then unavailable.
pub fn value_lower(scenario: &Scenario, t: usize) -> Result<f64> {
    if t == 0 || Direct::new(scenario).is_err() {
        return Ok(0.0);
    }
    let l = distances(scenario)?;
    let prior = scenario.prior();
    let mean: f64 = prior.iter().zip(&l).map(|(p, &l)| p * (l + 1) as f64).sum();
    let markov = 1.0 - mean / t as f64;
    let direct: f64 = prior.iter().zip(&l).filter(|(_, &l)| l < t).map(|(p, _)| p).sum();
    Ok(markov.max(direct).max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValueEnvelope {
    pub t: usize,
    pub upper: f64,
    pub lower: f64,
    pub exact: Option<f64>,
}

/// Both bounds, plus the exact value when the instance is within the caps.
pub fn envelope(scenario: &Scenario, t: usize) -> Result<ValueEnvelope> {
    let exact = match exact_value_tiny(scenario, t) {
        Ok(v) => Some(v),
        Err(e) if e.is_cap_exceeded() => None,
        Err(e) => return Err(e),
    };
    Ok(ValueEnvelope {
        t,
        upper: value_upper(scenario, t)?,
        lower: value_lower(scenario, t)?,
        exact,
    })
}

/// Success probability for a known target: `1` iff `t ≥ L(g)`.
pub fn deterministic_value(mind: &Mind, system: &SignalSystem, g: usize, t: usize) -> Result<f64> {
    let chain = shortest_chain(mind, g)?;
    for c in chain.added() {
        if system.representative(c).is_none() {
            return Err(Error::MissingToken(mind.space().label(c).to_string()));
        }
    }
    Ok(if t >= chain.len() { 1.0 } else { 0.0 })
}

pub fn exact_value_tiny(scenario: &Scenario, t: usize) -> Result<f64> {
    exact_value_tiny_with(scenario, t, Execution::default())
}

/// Optimal success probability over all deterministic history-dependent
/// strategies, by exhaustive enumeration.
///
/// A deterministic strategy fixes, for each target, the token sequence it
/// emits, because the parsed history is itself a function of those tokens.
/// Completion of `θ` by `t` then means `θ ∈ K_t` and no other supported target
/// produced the same parsed history.
pub fn exact_value_tiny_with(scenario: &Scenario, t: usize, exec: Execution) -> Result<f64> {
    let cap = |what, cap| Err(Error::CapExceeded { what, cap });
    if scenario.targets().len() > EXACT_MAX_TARGETS {
        return cap("exact value targets", EXACT_MAX_TARGETS);
    }
    let n = scenario.system().len();
    if n > EXACT_MAX_TOKENS {
        return cap("exact value tokens", EXACT_MAX_TOKENS);
    }
    if t > EXACT_MAX_HORIZON {
        return cap("exact value horizon", EXACT_MAX_HORIZON);
    }
    let support = scenario.support();
    let per_target = (n as u64).pow(t as u32);
    let total = per_target
        .checked_pow(support.len() as u32)
        .filter(|&c| c <= EXACT_MAX_STRATEGIES);
    let Some(total) = total else {
        return cap("exact value strategy count", EXACT_MAX_STRATEGIES as usize);
    };

    // outcome[i][s]: parsed history code and final state of target support[i]
    // playing sequence s
    let outcome: Vec<Vec<(u64, bool)>> = support
        .iter()
        .map(|&theta| {
            let goal = scenario.targets()[theta];
            (0..per_target)
                .map(|s| {
                    let (code, known) = play(scenario, s, t);
                    (code, known.contains(goal))
                })
                .collect()
        })
        .collect();
    let prior: Vec<f64> = support.iter().map(|&i| scenario.prior()[i]).collect();
    let m = support.len();
    if m == 0 {
        return Ok(0.0);
    }

    let shards = per_target as usize;
    let rest = total / per_target;
    let best = map_range(exec, shards, |first| {
        let mut choice = vec![0u64; m];
        choice[0] = first as u64;
        let mut best = 0.0f64;
        for r in 0..rest {
            let mut x = r;
            for c in choice.iter_mut().skip(1) {
                *c = x % per_target;
                x /= per_target;
            }
            let mut v = 0.0;
            for i in 0..m {
                let (code, acquired) = outcome[i][choice[i] as usize];
                if acquired && (0..m).all(|j| j == i || outcome[j][choice[j] as usize].0 != code) {
                    v += prior[i];
                }
            }
            best = best.max(v);
        }
        best
    });
    Ok(best.into_iter().fold(0.0, f64::max))
}

/// Plays token sequence number `s` (base-`|Z|` digits) for `t` rounds from
/// the axioms; returns the parsed history as a base-`(|Z|+1)` code and the
/// final state.
fn play(scenario: &Scenario, mut s: u64, t: usize) -> (u64, ConceptSet) {
    let n = scenario.system().len() as u64;
    let mut known = scenario.mind().axioms();
    let mut code = 0u64;
    for _ in 0..t {
        let z = (s % n) as usize;
        s /= n;
        let y = if parse_mask(scenario.mind(), scenario.system(), known)[z] {
            Parsed::Raw(z)
        } else {
            Parsed::Null
        };
        code = code * (n + 1) + y.column(n as usize) as u64;
        known = knowledge_update(scenario.system(), known, y);
    }
    (code, known)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Allocation {
    /// Rounds given to each learner under the concentrated plan.
    pub rounds: Vec<usize>,
    pub completed: usize,
    /// Rounds per learner if the budget is split evenly.
    pub even_share: f64,
    pub even_completed: usize,
}

/// Concentrates `L` rounds on as many of `N` learners as budget `B` allows.
pub fn allocate(n: usize, budget: usize, l: usize) -> Result<Allocation> {
    if n == 0 || l == 0 {
        return Err(Error::InvalidScenario {
            field: if n == 0 { "n" } else { "L" }.into(),
            reason: "must be at least 1".into(),
        });
    }
    let completed = n.min(budget / l);
    let rounds = (0..n).map(|i| if i < completed { l } else { 0 }).collect();
    let even_share = budget as f64 / n as f64;
    let even_completed = if budget >= n * l { n } else { 0 };
    Ok(Allocation {
        rounds,
        completed,
        even_share,
        even_completed,
    })
}

/// `k` minds sharing axiom `a` and goal `g`, each reaching `g` only through
/// its own private chain of `L − 1` prerequisites.
#[derive(Clone, Debug)]
pub struct BroadcastInstance {
    pub k: usize,
    pub l: usize,
    pub space: ConceptSpace,
    pub axioms: ConceptSet,
    pub minds: Vec<Mind>,
    pub system: SignalSystem,
    pub goal: usize,
    pub tight: Vec<usize>,
}

pub fn broadcast_construct(k: usize, l: usize) -> Result<BroadcastInstance> {
    if k < 2 || l < 2 {
        return Err(Error::InvalidScenario {
            field: if k < 2 { "k" } else { "L" }.into(),
            reason: "must be at least 2".into(),
        });
    }
    let concepts = 2 + k * (l - 1);
    if concepts > crate::set::MAX_CONCEPTS {
        return Err(Error::CapExceeded {
            what: "broadcast instance concepts",
            cap: crate::set::MAX_CONCEPTS,
        });
    }
    let mut labels = vec!["a".to_string(), "g".to_string()];
    let mut decls = Vec::new();
    for i in 1..=k {
        for j in 1..l {
            labels.push(format!("p{i}_{j}"));
            decls.push(SignalDecl {
                token: format!("z{i}_{j}"),
                target: format!("p{i}_{j}"),
            });
        }
    }
    decls.push(SignalDecl {
        token: "z_g".into(),
        target: "g".into(),
    });
    let space = ConceptSpace::new(labels)?;
    let system = SignalSystem::new(&space, &decls)?;
    let axioms = ConceptSet::singleton(0);
    let goal = 1;
    let p = |i: usize, j: usize| 2 + (i - 1) * (l - 1) + (j - 1);
    let minds = (1..=k)
        .map(|i| {
            let mut rules = vec![ExpansionRule::new(axioms, p(i, 1))];
            for j in 1..l - 1 {
                rules.push(ExpansionRule::new(ConceptSet::singleton(p(i, j)), p(i, j + 1)));
            }
            rules.push(ExpansionRule::new(ConceptSet::singleton(p(i, l - 1)), goal));
            Mind::new(space.clone(), axioms, rules)
        })
        .collect::<Result<Vec<_>>>()?;
    // token order matches concept order shifted by the two shared concepts
    let mut tight: Vec<usize> = (0..k * (l - 1)).collect();
    tight.push(k * (l - 1));
    Ok(BroadcastInstance {
        k,
        l,
        space,
        axioms,
        minds,
        system,
        goal,
        tight,
    })
}

fn broadcast_step(inst: &BroadcastInstance, states: &[ConceptSet], z: usize) -> Vec<ConceptSet> {
    states
        .iter()
        .zip(&inst.minds)
        .map(|(&k, m)| {
            if m.ordered_at(k, inst.system.target(z)) {
                k.with(inst.system.target(z))
            } else {
                k
            }
        })
        .collect()
}

/// Whether each mind has acquired the goal after the shared sequence.
pub fn broadcast_check(inst: &BroadcastInstance, sequence: &[usize]) -> Result<Vec<bool>> {
    let mut states = vec![inst.axioms; inst.minds.len()];
    for &z in sequence {
        if z >= inst.system.len() {
            return Err(Error::UnknownToken(format!("#{z}")));
        }
        states = broadcast_step(inst, &states, z);
    }
    Ok(states.iter().map(|k| k.contains(inst.goal)).collect())
}

/// Shortest common sequence bringing every mind to the goal, by BFS over
/// tuples of per-mind states. `None` when no sequence exists.
pub fn broadcast_min_length(inst: &BroadcastInstance, cap: usize) -> Result<Option<usize>> {
    let start = vec![inst.axioms; inst.minds.len()];
    let done = |s: &[ConceptSet]| s.iter().all(|k| k.contains(inst.goal));
    if done(&start) {
        return Ok(Some(0));
    }
    let mut dist: HashMap<Vec<ConceptSet>, usize> = HashMap::from([(start.clone(), 0)]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        for z in 0..inst.system.len() {
            let next = broadcast_step(inst, &s, z);
            if dist.contains_key(&next) {
                continue;
            }
            if done(&next) {
                return Ok(Some(d + 1));
            }
            if dist.len() >= cap {
                return Err(Error::CapExceeded {
                    what: "broadcast product states",
                    cap,
                });
            }
            dist.insert(next.clone(), d + 1);
            queue.push_back(next);
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mind::fixtures::*;
    use crate::signals::fixtures::*;
    use crate::teach_sim::fixtures::*;

    #[test]
    fn star_bounds() {
        let s = star_scenario();
        assert_eq!(value_upper(&s, 1).unwrap(), 0.0);
        assert_eq!(value_upper(&s, 2).unwrap(), 1.0);
        assert_eq!(value_lower(&s, 3).unwrap(), 1.0);
        assert_eq!(value_lower(&s, 1).unwrap(), 0.0);
        assert!((value_lower(&s, 30).unwrap() - 1.0).abs() < 1e-12);
        let markov = 1.0 - 3.0 / 30.0;
        assert!(value_lower(&s, 30).unwrap() >= markov);
    }

    #[test]
    fn point_prior_on_axiom() {
        let m = mind1();
        let sys = SignalSystem::from_targets(m.space(), &[("z_a", 0), ("z_b", 1), ("z_c", 2)]).unwrap();
        let s = Scenario::new(m, sys, vec![0], vec![1.0]).unwrap();
        assert_eq!(value_upper(&s, 0).unwrap(), 1.0);
        // d has no token, but no target needs it
        assert_eq!(value_lower(&s, 1).unwrap(), 1.0);
        assert_eq!(exact_value_tiny(&s, 0).unwrap(), 1.0);
    }

    #[test]
    fn lower_bound_needs_chain_tokens() {
        let m = mind1();
        let sys = SignalSystem::from_targets(m.space(), &[("z_b", 1), ("z_d", 3)]).unwrap();
        let s = Scenario::new(m, sys, vec![3], vec![1.0]).unwrap();
        assert_eq!(value_lower(&s, 3).unwrap(), 0.0);
        assert_eq!(value_upper(&s, 3).unwrap(), 1.0);
        assert_eq!(exact_value_tiny(&s, 3).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_steps() {
        let m = mind1();
        let sys = bcd_system(&m);
        assert_eq!(deterministic_value(&m, &sys, 3, 2).unwrap(), 0.0);
        assert_eq!(deterministic_value(&m, &sys, 3, 3).unwrap(), 1.0);
        assert_eq!(deterministic_value(&m, &sys, 0, 0).unwrap(), 1.0);
        let st = star();
        let ss = star_system(&st);
        assert_eq!(deterministic_value(&st, &ss, 2, 1).unwrap(), 0.0);
        assert_eq!(deterministic_value(&st, &ss, 2, 2).unwrap(), 1.0);
        let partial = SignalSystem::from_targets(m.space(), &[("z_b", 1)]).unwrap();
        assert!(matches!(
            deterministic_value(&m, &partial, 3, 3),
            Err(Error::MissingToken(_))
        ));
        let cut = mind(&["a", "b"], &["a"], &[]);
        let sys = SignalSystem::from_targets(cut.space(), &[("z", 1)]).unwrap();
        assert!(matches!(
            deterministic_value(&cut, &sys, 1, 3),
            Err(Error::Unreachable(_))
        ));
    }

    #[test]
    fn exact_values() {
        let m = star();
        let sys = SignalSystem::from_targets(m.space(), &[("z_b", 1), ("z_1", 2), ("z_2", 3)]).unwrap();
        let s = Scenario::new(m.clone(), sys.clone(), vec![2, 3], vec![0.5, 0.5]).unwrap();
        assert_eq!(exact_value_tiny(&s, 2).unwrap(), 1.0);
        assert_eq!(exact_value_tiny(&s, 1).unwrap(), 0.0);
        assert_eq!(exact_value_tiny(&s, 0).unwrap(), 0.0);
        for t in 0..=3 {
            let exact = exact_value_tiny(&s, t).unwrap();
            assert!(value_lower(&s, t).unwrap() <= exact + 1e-12);
            assert!(exact <= value_upper(&s, t).unwrap() + 1e-12);
            assert_eq!(exact, exact_value_tiny_with(&s, t, Execution::Sequential).unwrap());
        }
        let point = Scenario::new(m.clone(), sys, vec![2], vec![1.0]).unwrap();
        for t in 0..=3 {
            assert_eq!(
                exact_value_tiny(&point, t).unwrap(),
                deterministic_value(&m, point.system(), 2, t).unwrap()
            );
        }
        assert!(exact_value_tiny(&star_scenario(), 2).unwrap_err().is_cap_exceeded());
        assert!(exact_value_tiny(&s, 4).unwrap_err().is_cap_exceeded());
    }

    #[test]
    fn full_teaching_exact_value() {
        let s = full_teaching();
        // direct teaching completes b by 2, c and d by 3
        let v3 = exact_value_tiny(&s, 3).unwrap();
        assert!((v3 - 1.0).abs() < 1e-12);
        let v2 = exact_value_tiny(&s, 2).unwrap();
        assert!(value_lower(&s, 2).unwrap() <= v2 && v2 <= value_upper(&s, 2).unwrap());
    }

    #[test]
    fn allocation() {
        let a = allocate(4, 5, 2).unwrap();
        assert_eq!(a.completed, 2);
        assert_eq!(a.rounds, vec![2, 2, 0, 0]);
        assert_eq!(a.even_share, 1.25);
        assert_eq!(a.even_completed, 0);
        assert_eq!(allocate(4, 0, 2).unwrap().completed, 0);
        let full = allocate(3, 9, 3).unwrap();
        assert_eq!((full.completed, full.even_completed), (3, 3));
        assert!(allocate(0, 1, 1).is_err());
    }

    #[test]
    fn broadcast_instances() {
        for (k, l, tight) in [(2, 2, 3), (2, 3, 5), (3, 2, 4)] {
            let inst = broadcast_construct(k, l).unwrap();
            assert_eq!(inst.space.len(), 2 + k * (l - 1));
            assert_eq!(inst.minds.len(), k);
            assert_eq!(inst.tight.len(), tight);
            assert!(broadcast_check(&inst, &inst.tight).unwrap().iter().all(|&b| b));
            let cut = &inst.tight[..tight - 1];
            assert!(broadcast_check(&inst, cut).unwrap().iter().any(|&b| !b));
            assert!(broadcast_check(&inst, &[]).unwrap().iter().all(|&b| !b));
            assert_eq!(broadcast_min_length(&inst, 1 << 16).unwrap(), Some(tight));
            for m in &inst.minds {
                assert_eq!(structural_distance(m, inst.goal).unwrap(), Some(l));
            }
        }
        let inst = broadcast_construct(2, 2).unwrap();
        assert_eq!(inst.space.labels_of(inst.space.full())[2], "p1_1");
        assert_eq!(inst.system.token(inst.tight[2]), "z_g");
        assert!(broadcast_min_length(&inst, 1).unwrap_err().is_cap_exceeded());
        assert!(broadcast_construct(1, 2).is_err());
    }
}
