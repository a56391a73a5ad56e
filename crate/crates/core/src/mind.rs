//! Concept spaces, minds and their closure structure.
//!
//! A [`Mind`] is a finite concept space together with an axiom set and a list
//! of finitary expansion rules `S => c`. The one-step expansion adds every
//! concept whose prerequisites are already known; the understanding closure is
//! its least fixed point above a given set.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::set::{ConceptSet, MAX_CONCEPTS};

/// Label of a concept. Non-empty and free of whitespace.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(String);

impl ConceptId {
    pub fn new(label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if !is_valid_label(&label) {
            return Err(Error::InvalidSpace(format!("invalid concept label {label:?}")));
        }
        Ok(ConceptId(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn is_valid_label(label: &str) -> bool {
    !label.is_empty() && !label.chars().any(char::is_whitespace)
}

/// An ordered, duplicate-free, finite set of concepts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConceptSpace {
    labels: Vec<ConceptId>,
    index: HashMap<String, usize>,
}

impl ConceptSpace {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels = labels.into_iter().map(ConceptId::new).collect::<Result<Vec<_>>>()?;
        if labels.is_empty() {
            return Err(Error::InvalidSpace("concept space is empty".into()));
        }
        if labels.len() > MAX_CONCEPTS {
            return Err(Error::InvalidSpace(format!(
                "{} concepts exceed the supported maximum of {MAX_CONCEPTS}",
                labels.len()
            )));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.0.clone(), i).is_some() {
                return Err(Error::InvalidSpace(format!("duplicate concept `{l}`")));
            }
        }
        Ok(ConceptSpace { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        self.labels[i].as_str()
    }

    pub fn labels(&self) -> &[ConceptId] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownConcept(label.to_string()))
    }

    /// Builds a knowledge state from labels.
    pub fn set_of<I, S>(&self, labels: I) -> Result<ConceptSet>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        labels.into_iter().map(|l| self.index_of(l.as_ref())).collect()
    }

    pub fn labels_of(&self, set: ConceptSet) -> Vec<String> {
        set.iter().map(|i| self.label(i).to_string()).collect()
    }

    /// Renders a set as `{a,b,c}` in space order.
    pub fn format_set(&self, set: ConceptSet) -> String {
        format!("{{{}}}", self.labels_of(set).join(","))
    }

    pub fn full(&self) -> ConceptSet {
        ConceptSet::full(self.len())
    }

    /// Rejects sets with members outside the space.
    pub fn check(&self, set: ConceptSet) -> Result<()> {
        if set.is_subset(self.full()) {
            Ok(())
        } else {
            Err(Error::OutsideSpace { space: self.len() })
        }
    }

    pub fn check_concept(&self, c: usize) -> Result<()> {
        if c < self.len() {
            Ok(())
        } else {
            Err(Error::OutsideSpace { space: self.len() })
        }
    }
}

/// A rule `prereqs => target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExpansionRule {
    pub prereqs: ConceptSet,
    pub target: usize,
}

impl ExpansionRule {
    pub fn new(prereqs: ConceptSet, target: usize) -> Self {
        ExpansionRule { prereqs, target }
    }

    pub fn fires_at(&self, known: ConceptSet) -> bool {
        self.prereqs.is_subset(known)
    }

    pub fn display<'a>(&'a self, space: &'a ConceptSpace) -> impl fmt::Display + 'a {
        RuleDisplay { rule: self, space }
    }
}

struct RuleDisplay<'a> {
    rule: &'a ExpansionRule,
    space: &'a ConceptSpace,
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} => {}",
            self.space.format_set(self.rule.prereqs),
            self.space.label(self.rule.target)
        )
    }
}

/// Unvalidated, label-based description of a rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleDecl {
    pub prereqs: Vec<String>,
    pub target: String,
}

impl RuleDecl {
    pub fn new<I, S>(prereqs: I, target: impl Into<String>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        RuleDecl {
            prereqs: prereqs.into_iter().map(Into::into).collect(),
            target: target.into(),
        }
    }
}

impl fmt::Display for RuleDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}} => {}", self.prereqs.join(","), self.target)
    }
}

/// Unvalidated, label-based description of a mind.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MindDecl {
    pub concepts: Vec<String>,
    pub axioms: Vec<String>,
    pub rules: Vec<RuleDecl>,
}

/// Diagnostic findings for a [`MindDecl`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub invalid_labels: Vec<String>,
    pub duplicate_concepts: Vec<String>,
    pub axioms_outside_space: Vec<String>,
    pub unknown_concepts: Vec<String>,
    pub degenerate_rules: Vec<String>,
    pub duplicate_rules: Vec<String>,
}

impl ValidationReport {
    pub fn is_accepted(&self) -> bool {
        self.findings().all(|(_, items)| items.is_empty())
    }

    pub fn finding_count(&self) -> usize {
        self.findings().map(|(_, items)| items.len()).sum()
    }

    fn findings(&self) -> impl Iterator<Item = (&'static str, &Vec<String>)> {
        [
            ("invalid labels", &self.invalid_labels),
            ("duplicate concepts", &self.duplicate_concepts),
            ("axioms outside space", &self.axioms_outside_space),
            ("rules with unknown concepts", &self.unknown_concepts),
            ("degenerate rules", &self.degenerate_rules),
            ("duplicate rules", &self.duplicate_rules),
        ]
        .into_iter()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_accepted() {
            return f.write_str("accepted");
        }
        let parts: Vec<String> = self
            .findings()
            .filter(|(_, items)| !items.is_empty())
            .map(|(name, items)| format!("{name}: {}", items.join("; ")))
            .collect();
        f.write_str(&parts.join(", "))
    }
}

/// Checks a declared mind without building it.
pub fn validate_mind(decl: &MindDecl) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut known = HashSet::new();
    if decl.concepts.is_empty() {
        report.invalid_labels.push("<empty concept space>".into());
    }
    for c in &decl.concepts {
        if !is_valid_label(c) {
            report.invalid_labels.push(format!("{c:?}"));
        }
        if !known.insert(c.as_str()) {
            report.duplicate_concepts.push(c.clone());
        }
    }
    if known.len() > MAX_CONCEPTS {
        report
            .invalid_labels
            .push(format!("<{} concepts exceed {MAX_CONCEPTS}>", known.len()));
    }
    for a in &decl.axioms {
        if !known.contains(a.as_str()) {
            report.axioms_outside_space.push(a.clone());
        }
    }
    let mut seen_rules = HashSet::new();
    for rule in &decl.rules {
        if let Some(bad) = std::iter::once(&rule.target)
            .chain(&rule.prereqs)
            .find(|c| !known.contains(c.as_str()))
        {
            report.unknown_concepts.push(format!("{rule} (unknown `{bad}`)"));
            continue;
        }
        if rule.prereqs.contains(&rule.target) {
            report.degenerate_rules.push(rule.to_string());
            continue;
        }
        let mut key: Vec<&str> = rule.prereqs.iter().map(String::as_str).collect();
        key.sort_unstable();
        key.dedup();
        if !seen_rules.insert((key, rule.target.as_str())) {
            report.duplicate_rules.push(rule.to_string());
        }
    }
    report
}

/// A generative mind `(C, A, E)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mind {
    space: ConceptSpace,
    axioms: ConceptSet,
    rules: Vec<ExpansionRule>,
    // rule indices keyed by each prerequisite
    watchers: Vec<Vec<usize>>,
}

impl Mind {
    /// Builds a mind from resolved parts. Duplicate rules are dropped (first
    /// occurrence kept); degenerate rules are rejected.
    pub fn new(space: ConceptSpace, axioms: ConceptSet, rules: Vec<ExpansionRule>) -> Result<Self> {
        space.check(axioms)?;
        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(rules.len());
        for rule in rules {
            space.check(rule.prereqs)?;
            space.check_concept(rule.target)?;
            if rule.prereqs.contains(rule.target) {
                let report = ValidationReport {
                    degenerate_rules: vec![rule.display(&space).to_string()],
                    ..Default::default()
                };
                return Err(Error::InvalidMind(Box::new(report)));
            }
            if seen.insert(rule) {
                kept.push(rule);
            }
        }
        let mut watchers = vec![Vec::new(); space.len()];
        for (r, rule) in kept.iter().enumerate() {
            for p in rule.prereqs {
                watchers[p].push(r);
            }
        }
        Ok(Mind {
            space,
            axioms,
            rules: kept,
            watchers,
        })
    }

    /// Builds a mind from a declaration, rejecting it unless
    /// [`validate_mind`] reports no findings.
    pub fn from_decl(decl: &MindDecl) -> Result<Self> {
        let report = validate_mind(decl);
        if !report.is_accepted() {
            return Err(Error::InvalidMind(Box::new(report)));
        }
        let space = ConceptSpace::new(decl.concepts.iter().cloned())?;
        let axioms = space.set_of(&decl.axioms)?;
        let rules = decl
            .rules
            .iter()
            .map(|r| {
                Ok(ExpansionRule::new(
                    space.set_of(&r.prereqs)?,
                    space.index_of(&r.target)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Mind::new(space, axioms, rules)
    }

    pub fn to_decl(&self) -> MindDecl {
        MindDecl {
            concepts: self.space.labels().iter().map(|c| c.to_string()).collect(),
            axioms: self.space.labels_of(self.axioms),
            rules: self
                .rules
                .iter()
                .map(|r| RuleDecl {
                    prereqs: self.space.labels_of(r.prereqs),
                    target: self.space.label(r.target).to_string(),
                })
                .collect(),
        }
    }

    pub fn space(&self) -> &ConceptSpace {
        &self.space
    }

    pub fn axioms(&self) -> ConceptSet {
        self.axioms
    }

    pub fn rules(&self) -> &[ExpansionRule] {
        &self.rules
    }

    pub fn has_rule(&self, rule: &ExpansionRule) -> bool {
        self.rules.contains(rule)
    }

    /// `Phi(K)` without range checks.
    pub(crate) fn expand(&self, known: ConceptSet) -> ConceptSet {
        self.rules
            .iter()
            .filter(|r| r.fires_at(known))
            .fold(known, |acc, r| acc.with(r.target))
    }

    /// One-step expansion `Phi(K) = K ∪ {c : (S,c) ∈ E, S ⊆ K}`.
    pub fn one_step(&self, known: ConceptSet) -> Result<ConceptSet> {
        self.space.check(known)?;
        Ok(self.expand(known))
    }

    /// Least fixed point of `Phi` above `known`, via a worklist over
    /// missing-prerequisite counts.
    pub fn closure(&self, known: ConceptSet) -> Result<ConceptSet> {
        self.space.check(known)?;
        Ok(self.close(known))
    }

    pub(crate) fn close(&self, known: ConceptSet) -> ConceptSet {
        let mut missing: Vec<usize> = self.rules.iter().map(|r| r.prereqs.difference(known).len()).collect();
        let mut agenda: Vec<usize> = self
            .rules
            .iter()
            .zip(&missing)
            .filter(|(_, &m)| m == 0)
            .map(|(r, _)| r.target)
            .collect();
        let mut closed = known;
        while let Some(c) = agenda.pop() {
            if !closed.insert(c) {
                continue;
            }
            for &r in &self.watchers[c] {
                missing[r] -= 1;
                if missing[r] == 0 {
                    agenda.push(self.rules[r].target);
                }
            }
        }
        closed
    }

    /// Closure by plain iteration of `Phi`; at most `|C|` passes.
    pub fn closure_by_iteration(&self, known: ConceptSet) -> Result<ConceptSet> {
        Ok(*self.closure_iterates(known)?.last().expect("non-empty"))
    }

    /// The sequence `Phi^0(K), Phi^1(K), ...` up to and including the first
    /// fixed point.
    pub fn closure_iterates(&self, known: ConceptSet) -> Result<Vec<ConceptSet>> {
        self.space.check(known)?;
        let mut seq = vec![known];
        loop {
            let cur = *seq.last().expect("non-empty");
            let next = self.expand(cur);
            if next == cur {
                return Ok(seq);
            }
            seq.push(next);
        }
    }

    /// Understanding horizon `U = cl(A)`.
    pub fn horizon(&self) -> ConceptSet {
        self.close(self.axioms)
    }

    /// Whether `c ∈ Phi(K)`.
    pub fn is_ordered(&self, known: ConceptSet, c: usize) -> Result<bool> {
        self.space.check(known)?;
        self.space.check_concept(c)?;
        Ok(self.ordered_at(known, c))
    }

    pub(crate) fn ordered_at(&self, known: ConceptSet, c: usize) -> bool {
        known.contains(c) || self.rules.iter().any(|r| r.target == c && r.fires_at(known))
    }
}

/// Recovers a rule set from an algebraic closure operator on a finite space.
///
/// The oracle is checked for extensiveness, monotonicity (on every one-element
/// extension, which implies monotonicity by transitivity) and idempotence over
/// all `2^n` subsets. The returned rules are `{(S, c) : c ∈ f(S) \ S}`.
pub fn rules_from_closure<F>(space: &ConceptSpace, oracle: F) -> Result<Vec<ExpansionRule>>
where
    F: Fn(ConceptSet) -> ConceptSet,
{
    if space.len() > 20 {
        return Err(Error::CapExceeded {
            what: "closure oracle subset enumeration (concepts)",
            cap: 20,
        });
    }
    let full = space.full();
    let mut rules = Vec::new();
    for s in full.subsets() {
        let fs = oracle(s);
        if !fs.is_subset(full) || !s.is_subset(fs) {
            return Err(Error::ClosureAxiom {
                axiom: "extensiveness",
                subset: s.bits(),
            });
        }
        if oracle(fs) != fs {
            return Err(Error::ClosureAxiom {
                axiom: "idempotence",
                subset: s.bits(),
            });
        }
        for x in full.difference(s) {
            if !fs.is_subset(oracle(s.with(x))) {
                return Err(Error::ClosureAxiom {
                    axiom: "monotonicity",
                    subset: s.bits(),
                });
            }
        }
        rules.extend(fs.difference(s).iter().map(|c| ExpansionRule::new(s, c)));
    }
    Ok(rules)
}
