//! Derivation trees and ordered curricula.

use crate::error::Result;
use crate::mind::{ExpansionRule, Mind};
use crate::set::ConceptSet;

/// A finite tree witnessing `c ∈ cl(K)`.
///
/// Shared sub-derivations are duplicated, so a concept needed twice appears
/// under both parents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DerivationTree {
    /// Leaf labelled by a concept of the base set.
    Base(usize),
    /// Application of `rule`; one child per prerequisite, in concept order.
    Apply {
        rule: ExpansionRule,
        children: Vec<DerivationTree>,
    },
}

impl DerivationTree {
    pub fn root(&self) -> usize {
        match self {
            DerivationTree::Base(c) => *c,
            DerivationTree::Apply { rule, .. } => rule.target,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            DerivationTree::Base(_) => 1,
            DerivationTree::Apply { children, .. } => 1 + children.iter().map(DerivationTree::size).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DerivationTree::Base(_) => 0,
            DerivationTree::Apply { children, .. } => 1 + children.iter().map(DerivationTree::depth).max().unwrap_or(0),
        }
    }

    /// Labels of all base leaves.
    pub fn leaves(&self) -> ConceptSet {
        match self {
            DerivationTree::Base(c) => ConceptSet::singleton(*c),
            DerivationTree::Apply { children, .. } => children
                .iter()
                .map(DerivationTree::leaves)
                .fold(ConceptSet::EMPTY, ConceptSet::union),
        }
    }
}

/// Builds a derivation of `c` from `known`, or `None` when `c ∉ cl(known)`.
///
/// Concepts are assigned to closure layers `Phi^0(K), Phi^1(K), ...`; each
/// concept first appearing at layer `i` is justified by the lowest-index
/// rule firing at `Phi^{i-1}(K)`. The resulting trees are as shallow as
/// possible.
pub fn derive(mind: &Mind, known: ConceptSet, c: usize) -> Result<Option<DerivationTree>> {
    mind.space().check(known)?;
    mind.space().check_concept(c)?;
    let justification = layer_justifications(mind, known);
    if !known.contains(c) && justification[c].is_none() {
        return Ok(None);
    }
    Ok(Some(build(mind, known, &justification, c)))
}

fn layer_justifications(mind: &Mind, known: ConceptSet) -> Vec<Option<usize>> {
    let mut chosen = vec![None; mind.space().len()];
    let mut layer = known;
    loop {
        let mut next = layer;
        for (r, rule) in mind.rules().iter().enumerate() {
            if !layer.contains(rule.target) && chosen[rule.target].is_none() && rule.fires_at(layer) {
                chosen[rule.target] = Some(r);
                next.insert(rule.target);
            }
        }
        if next == layer {
            return chosen;
        }
        layer = next;
    }
}

fn build(mind: &Mind, known: ConceptSet, justification: &[Option<usize>], c: usize) -> DerivationTree {
    if known.contains(c) {
        return DerivationTree::Base(c);
    }
    let rule = mind.rules()[justification[c].expect("concept lies in the closure")];
    let children = rule
        .prereqs
        .iter()
        .map(|p| build(mind, known, justification, p))
        .collect();
    DerivationTree::Apply { rule, children }
}

/// Checks a tree against the definition of a derivation from `known`.
pub fn verify_derivation(mind: &Mind, known: ConceptSet, tree: &DerivationTree) -> bool {
    match tree {
        DerivationTree::Base(c) => *c < mind.space().len() && known.contains(*c),
        DerivationTree::Apply { rule, children } => {
            let labels: ConceptSet = children.iter().map(DerivationTree::root).collect();
            mind.has_rule(rule)
                && children.len() == rule.prereqs.len()
                && labels == rule.prereqs
                && children.iter().all(|t| verify_derivation(mind, known, t))
        }
    }
}

/// A sequence of rule applications `(S_i, c_i)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Curriculum {
    pub steps: Vec<ExpansionRule>,
}

impl Curriculum {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Running states `K_0, K_1, ..., K_L` with `K_i = K_{i-1} ∪ {c_i}`.
    pub fn states(&self, start: ConceptSet) -> Vec<ConceptSet> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut k = start;
        out.push(k);
        for step in &self.steps {
            k.insert(step.target);
            out.push(k);
        }
        out
    }
}

/// Rule nodes of `tree` in child-before-parent order, keeping the first
/// occurrence of each repeated application.
pub fn curriculum_from_derivation(tree: &DerivationTree) -> Curriculum {
    fn walk(tree: &DerivationTree, out: &mut Vec<ExpansionRule>) {
        if let DerivationTree::Apply { rule, children } = tree {
            for child in children {
                walk(child, out);
            }
            if !out.contains(rule) {
                out.push(*rule);
            }
        }
    }
    let mut steps = Vec::new();
    walk(tree, &mut steps);
    Curriculum { steps }
}

/// Whether every step uses a rule of the mind whose prerequisites are
/// contained in the running state.
pub fn validate_curriculum(mind: &Mind, start: ConceptSet, curriculum: &Curriculum) -> bool {
    let mut k = start;
    for step in &curriculum.steps {
        if !mind.has_rule(step) || !step.fires_at(k) {
            return false;
        }
        k.insert(step.target);
    }
    true
}
