//! The reachable family of acquired states and its learning-space structure.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::mind::{ConceptSpace, ExpansionRule, Mind};
use crate::set::ConceptSet;

/// Default bound on the number of enumerated states.
pub const DEFAULT_STATE_CAP: usize = 1 << 20;

/// All states reachable from the axioms by one-concept, prerequisite-respecting
/// additions.
#[derive(Clone, Debug)]
pub struct ReachableFamily {
    states: Vec<ConceptSet>,
    index: HashMap<ConceptSet, usize>,
    addable: Vec<ConceptSet>,
    minimum: ConceptSet,
    maximum: ConceptSet,
}

impl ReachableFamily {
    /// States in breadth-first discovery order; `states()[0]` is the axiom set.
    pub fn states(&self) -> &[ConceptSet] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, k: ConceptSet) -> bool {
        self.index.contains_key(&k)
    }

    /// Concepts addable in one step from `k`, i.e. `Phi(k) \ k`.
    pub fn addable(&self, k: ConceptSet) -> Option<ConceptSet> {
        self.index.get(&k).map(|&i| self.addable[i])
    }

    pub fn minimum(&self) -> ConceptSet {
        self.minimum
    }

    pub fn maximum(&self) -> ConceptSet {
        self.maximum
    }

    /// States ordered by cardinality, then by member indices.
    pub fn sorted_states(&self) -> Vec<ConceptSet> {
        let mut out = self.states.clone();
        out.sort_by_key(|s| (s.len(), s.iter().collect::<Vec<_>>()));
        out
    }

    /// Every pair `(K, K')` of states with `K ⊆ K'`.
    pub fn nested_pairs(&self) -> impl Iterator<Item = (ConceptSet, ConceptSet)> + '_ {
        self.states.iter().flat_map(move |&k| {
            self.states
                .iter()
                .filter(move |&&k2| k.is_subset(k2))
                .map(move |&k2| (k, k2))
        })
    }
}

pub fn enumerate_reachable(mind: &Mind) -> Result<ReachableFamily> {
    enumerate_reachable_with_cap(mind, DEFAULT_STATE_CAP)
}

/// Breadth-first enumeration of the reachable family, failing once more than
/// `cap` states have been discovered.
pub fn enumerate_reachable_with_cap(mind: &Mind, cap: usize) -> Result<ReachableFamily> {
    let start = mind.axioms();
    let mut states = vec![start];
    let mut index = HashMap::from([(start, 0)]);
    let mut addable = Vec::new();
    let mut maximum = start;
    let mut head = 0;
    while head < states.len() {
        let k = states[head];
        head += 1;
        let moves = mind.expand(k).difference(k);
        addable.push(moves);
        maximum = maximum.union(k);
        for c in moves {
            let next = k.with(c);
            if let Entry::Vacant(slot) = index.entry(next) {
                if states.len() >= cap {
                    return Err(Error::CapExceeded {
                        what: "reachable state enumeration",
                        cap,
                    });
                }
                slot.insert(states.len());
                states.push(next);
            }
        }
    }
    Ok(ReachableFamily {
        states,
        index,
        addable,
        minimum: start,
        maximum,
    })
}

/// Verdicts for the three axiom-based learning-space conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LearningSpaceReport {
    /// The axiom set is a member and every member contains it.
    pub contains_base: bool,
    /// Every non-base member loses some non-axiom concept and stays in the family.
    pub accessible: bool,
    pub union_closed: bool,
    /// `{K \ A}` contains the empty set, is accessible and union-closed.
    pub shifted_antimatroid: bool,
}

impl LearningSpaceReport {
    pub fn is_learning_space(&self) -> bool {
        self.contains_base && self.accessible && self.union_closed
    }
}

pub fn check_learning_space(family: &[ConceptSet], axioms: ConceptSet) -> LearningSpaceReport {
    let members: HashSet<ConceptSet> = family.iter().copied().collect();
    let contains_base = members.contains(&axioms) && members.iter().all(|k| axioms.is_subset(*k));
    let accessible = members
        .iter()
        .filter(|&&k| k != axioms)
        .all(|&k| k.difference(axioms).iter().any(|x| members.contains(&k.without(x))));
    let union_closed = is_union_closed(&members);

    let shifted: HashSet<ConceptSet> = members.iter().map(|k| k.difference(axioms)).collect();
    let shifted_antimatroid = members.iter().all(|k| axioms.is_subset(*k))
        && shifted.contains(&ConceptSet::EMPTY)
        && shifted
            .iter()
            .filter(|s| !s.is_empty())
            .all(|&s| s.iter().any(|x| shifted.contains(&s.without(x))))
        && is_union_closed(&shifted);

    LearningSpaceReport {
        contains_base,
        accessible,
        union_closed,
        shifted_antimatroid,
    }
}

fn is_union_closed(members: &HashSet<ConceptSet>) -> bool {
    let list: Vec<_> = members.iter().copied().collect();
    list.iter()
        .enumerate()
        .all(|(i, &a)| list[i + 1..].iter().all(|&b| members.contains(&a.union(b))))
}

/// The rule set `{(S, c) : S ∈ F, c ∉ S, S ∪ {c} ∈ F}` of a learning space.
pub fn canonical_rules(family: &[ConceptSet], space: &ConceptSpace, axioms: ConceptSet) -> Result<Vec<ExpansionRule>> {
    for &k in family {
        space.check(k)?;
    }
    let report = check_learning_space(family, axioms);
    if !report.is_learning_space() {
        return Err(Error::NotLearningSpace(format!("{report:?}")));
    }
    let members: HashSet<ConceptSet> = family.iter().copied().collect();
    let mut ordered: Vec<ConceptSet> = members.iter().copied().collect();
    ordered.sort();
    let mut rules = Vec::new();
    for s in ordered {
        for c in space.full().difference(s) {
            if members.contains(&s.with(c)) {
                rules.push(ExpansionRule::new(s, c));
            }
        }
    }
    Ok(rules)
}

/// A chain `A = K_0 ⊂ K_1 ⊂ ... ⊂ K_L`, each step adding one ordered concept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessingChain {
    pub states: Vec<ConceptSet>,
}

impl WitnessingChain {
    /// Number of acquisitions `L`.
    pub fn len(&self) -> usize {
        self.states.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The concept added at each step.
    pub fn added(&self) -> Vec<usize> {
        self.states
            .windows(2)
            .map(|w| w[1].difference(w[0]).first().expect("strictly increasing"))
            .collect()
    }

    pub fn is_witness_for(&self, mind: &Mind) -> bool {
        self.states.first() == Some(&mind.axioms())
            && self.states.windows(2).all(|w| {
                let added = w[1].difference(w[0]);
                w[0].is_subset(w[1]) && added.len() == 1 && mind.ordered_at(w[0], added.first().expect("one element"))
            })
    }
}

/// Length of the shortest witnessing chain to a state containing `c`, or
/// `None` when `c` lies outside the horizon.
pub fn structural_distance(mind: &Mind, c: usize) -> Result<Option<usize>> {
    mind.space().check_concept(c)?;
    Ok(chain_from(mind, mind.axioms(), c, DEFAULT_STATE_CAP)?.map(|chain| chain.len()))
}

/// The breadth-first shortest chain to a state containing `c`. Among
/// equally short chains, concepts are added in lowest-index order.
pub fn shortest_chain(mind: &Mind, c: usize) -> Result<WitnessingChain> {
    mind.space().check_concept(c)?;
    chain_from(mind, mind.axioms(), c, DEFAULT_STATE_CAP)?
        .ok_or_else(|| Error::Unreachable(mind.space().label(c).to_string()))
}

/// Breadth-first shortest chain from an arbitrary `start` to a state
/// containing `c`.
pub(crate) fn chain_from(mind: &Mind, start: ConceptSet, c: usize, cap: usize) -> Result<Option<WitnessingChain>> {
    if start.contains(c) {
        return Ok(Some(WitnessingChain { states: vec![start] }));
    }
    if !mind.close(start).contains(c) {
        return Ok(None);
    }
    let mut parent: HashMap<ConceptSet, ConceptSet> = HashMap::new();
    let mut queue = VecDeque::from([start]);
    let mut seen = HashSet::from([start]);
    while let Some(k) = queue.pop_front() {
        for x in mind.expand(k).difference(k) {
            let next = k.with(x);
            if !seen.insert(next) {
                continue;
            }
            if seen.len() > cap {
                return Err(Error::CapExceeded {
                    what: "shortest-chain search",
                    cap,
                });
            }
            parent.insert(next, k);
            if x == c {
                let mut states = vec![next];
                let mut cur = next;
                while let Some(&p) = parent.get(&cur) {
                    states.push(p);
                    cur = p;
                }
                states.reverse();
                return Ok(Some(WitnessingChain { states }));
            }
            queue.push_back(next);
        }
    }
    unreachable!("concepts in the horizon are reachable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mind::fixtures::*;

    fn sets(space: &ConceptSpace, lists: &[&[&str]]) -> Vec<ConceptSet> {
        lists.iter().map(|l| space.set_of(*l).unwrap()).collect()
    }

    /// Shortest chain length by trying every subset as an endpoint and
    /// checking, over all orderings, whether a witnessing chain exists.
    fn brute_distance(mind: &Mind, c: usize) -> Option<usize> {
        let a = mind.axioms();
        let mut reachable: HashSet<ConceptSet> = HashSet::from([a]);
        // grow by layers; layer i holds states reachable in exactly i steps
        let mut layer = vec![a];
        for steps in 0..=mind.space().len() {
            if layer.iter().any(|k| k.contains(c)) {
                return Some(steps);
            }
            let mut next = Vec::new();
            for k in mind.space().full().subsets() {
                if k.len() != a.len() + steps + 1 || !a.is_subset(k) {
                    continue;
                }
                let ok = k.difference(a).iter().any(|x| {
                    let prev = k.without(x);
                    layer.contains(&prev) && mind.ordered_at(prev, x)
                });
                if ok && reachable.insert(k) {
                    next.push(k);
                }
            }
            layer = next;
        }
        None
    }

    #[test]
    fn diamond_family() {
        let m = diamond();
        let fam = enumerate_reachable(&m).unwrap();
        let mut got = fam.states().to_vec();
        got.sort();
        let mut want = sets(
            m.space(),
            &[
                &["a"],
                &["a", "b"],
                &["a", "c"],
                &["a", "b", "c"],
                &["a", "b", "c", "d"],
            ],
        );
        want.sort();
        assert_eq!(got, want);
        assert!(!fam.contains(m.space().set_of(["a", "b", "d"]).unwrap()));
        assert_eq!(fam.minimum(), m.axioms());
        assert_eq!(fam.maximum(), m.horizon());
        assert_eq!(fam.addable(m.axioms()), Some(m.space().set_of(["b", "c"]).unwrap()));
        assert!(check_learning_space(fam.states(), m.axioms()).is_learning_space());
    }

    #[test]
    fn mind1_family_is_a_chain() {
        let m = mind1();
        let fam = enumerate_reachable(&m).unwrap();
        assert_eq!(
            fam.sorted_states(),
            sets(
                m.space(),
                &[&["a"], &["a", "b"], &["a", "b", "c"], &["a", "b", "c", "d"]]
            )
        );
    }

    #[test]
    fn ruleless_family_is_the_axioms() {
        let m = Mind::new(diamond().space().clone(), ConceptSet::singleton(1), vec![]).unwrap();
        let fam = enumerate_reachable(&m).unwrap();
        assert_eq!(fam.states(), &[ConceptSet::singleton(1)]);
    }

    #[test]
    fn cap_is_enforced() {
        let err = enumerate_reachable_with_cap(&star(), 3).unwrap_err();
        assert!(err.is_cap_exceeded());
    }

    #[test]
    fn union_closed_but_inaccessible() {
        let a = ConceptSet::from_bits(0b11);
        let report = check_learning_space(&[ConceptSet::EMPTY, a], ConceptSet::EMPTY);
        assert!(report.union_closed);
        assert!(!report.accessible);
        assert!(!report.is_learning_space());
        assert!(!report.shifted_antimatroid);

        let only = check_learning_space(&[a], a);
        assert!(only.is_learning_space() && only.shifted_antimatroid);
    }

    #[test]
    fn canonical_rules_round_trip_diamond() {
        let m = diamond();
        let fam = enumerate_reachable(&m).unwrap();
        let rules = canonical_rules(fam.states(), m.space(), m.axioms()).unwrap();
        let rebuilt = Mind::new(m.space().clone(), m.axioms(), rules).unwrap();
        let mut a = enumerate_reachable(&rebuilt).unwrap().sorted_states();
        let mut b = fam.sorted_states();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn canonical_rules_of_trivial_and_full_families() {
        let space = ConceptSpace::new(["x", "y", "z"]).unwrap();
        let base = space.set_of(["x"]).unwrap();
        assert!(canonical_rules(&[base], &space, base).unwrap().is_empty());

        let all: Vec<_> = space.full().subsets().filter(|s| base.is_subset(*s)).collect();
        let rules = canonical_rules(&all, &space, base).unwrap();
        let m = Mind::new(space.clone(), base, rules).unwrap();
        let mut got = enumerate_reachable(&m).unwrap().states().to_vec();
        got.sort();
        let mut want = all.clone();
        want.sort();
        assert_eq!(got, want);

        assert!(canonical_rules(
            &[ConceptSet::EMPTY, ConceptSet::from_bits(0b11)],
            &space,
            ConceptSet::EMPTY
        )
        .is_err());
    }

    #[test]
    fn star_distances_and_chains() {
        let m = star();
        let s = m.space();
        let d1 = s.index_of("d1").unwrap();
        assert_eq!(structural_distance(&m, d1).unwrap(), Some(2));
        assert_eq!(structural_distance(&m, 0).unwrap(), Some(0));
        let chain = shortest_chain(&m, d1).unwrap();
        assert_eq!(chain.states, sets(s, &[&["a"], &["a", "b"], &["a", "b", "d1"]]));
        assert!(chain.is_witness_for(&m));
        assert_eq!(shortest_chain(&m, 0).unwrap().len(), 0);
    }

    #[test]
    fn mind_distances_agree_with_brute_force() {
        for m in [mind1(), mind2(), diamond(), star()] {
            for c in 0..m.space().len() {
                assert_eq!(structural_distance(&m, c).unwrap(), brute_distance(&m, c));
            }
        }
        let m = mind1();
        assert_eq!(structural_distance(&m, 3).unwrap(), Some(3));
    }

    #[test]
    fn mind2_chain_to_d() {
        let m = mind2();
        let chain = shortest_chain(&m, 3).unwrap();
        assert_eq!(
            chain.states,
            sets(
                m.space(),
                &[&["a"], &["a", "c"], &["a", "b", "c"], &["a", "b", "c", "d"]]
            )
        );
    }

    #[test]
    fn unreachable_targets() {
        let m = mind(&["a", "b", "e"], &["a"], &[(&["a"], "b")]);
        assert_eq!(structural_distance(&m, 2).unwrap(), None);
        assert!(matches!(shortest_chain(&m, 2), Err(Error::Unreachable(_))));
        assert!(structural_distance(&m, 7).is_err());
    }
}
