//! Signal systems and the prerequisite-gated parser.
//!
//! A raw signal `z` parses at state `K` iff its target concept is ordered
//! there, i.e. lies in `Phi(K)`. Otherwise the learner observes the null
//! token. Entropies are in bits.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mind::{is_valid_label, ConceptSpace, Mind};
use crate::reachability::ReachableFamily;
use crate::set::ConceptSet;

/// Row-sum tolerance for probability vectors.
pub const ROW_TOLERANCE: f64 = 1e-12;

/// Tolerance of the garbling identity.
pub const BLACKWELL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalDecl {
    pub token: String,
    pub target: String,
}

/// An alphabet `Z` with its target map `tgt : Z -> C`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignalSystem {
    tokens: Vec<String>,
    targets: Vec<usize>,
    index: HashMap<String, usize>,
}

impl SignalSystem {
    pub fn new(space: &ConceptSpace, decls: &[SignalDecl]) -> Result<Self> {
        if decls.is_empty() {
            return Err(Error::InvalidSignals("alphabet is empty".into()));
        }
        let mut tokens = Vec::with_capacity(decls.len());
        let mut targets = Vec::with_capacity(decls.len());
        let mut index = HashMap::with_capacity(decls.len());
        for d in decls {
            if !is_valid_label(&d.token) {
                return Err(Error::InvalidSignals(format!("invalid token {:?}", d.token)));
            }
            if index.insert(d.token.clone(), tokens.len()).is_some() {
                return Err(Error::InvalidSignals(format!("duplicate token `{}`", d.token)));
            }
            tokens.push(d.token.clone());
            targets.push(space.index_of(&d.target)?);
        }
        Ok(SignalSystem { tokens, targets, index })
    }

    /// Builds a system from `(token, target concept index)` pairs.
    pub fn from_targets(space: &ConceptSpace, pairs: &[(&str, usize)]) -> Result<Self> {
        let decls: Vec<SignalDecl> = pairs
            .iter()
            .map(|&(t, c)| {
                space.check_concept(c)?;
                Ok(SignalDecl {
                    token: t.to_string(),
                    target: space.label(c).to_string(),
                })
            })
            .collect::<Result<_>>()?;
        SignalSystem::new(space, &decls)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, z: usize) -> &str {
        &self.tokens[z]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Result<usize> {
        self.index
            .get(token)
            .copied()
            .ok_or_else(|| Error::UnknownToken(token.to_string()))
    }

    pub fn target(&self, z: usize) -> usize {
        self.targets[z]
    }

    /// The fibre `tgt^{-1}(c)` in alphabet order.
    pub fn tokens_for(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&z| self.targets[z] == c)
    }

    /// Lowest-index token targeting `c`.
    pub fn representative(&self, c: usize) -> Option<usize> {
        self.tokens_for(c).next()
    }

    pub fn image(&self) -> ConceptSet {
        self.targets.iter().copied().collect()
    }

    pub fn decls(&self, space: &ConceptSpace) -> Vec<SignalDecl> {
        (0..self.len())
            .map(|z| SignalDecl {
                token: self.tokens[z].clone(),
                target: space.label(self.targets[z]).to_string(),
            })
            .collect()
    }

    pub(crate) fn check_token(&self, z: usize) -> Result<()> {
        if z < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownToken(format!("#{z}")))
        }
    }
}

/// A learner observation: a raw token or the null token.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parsed {
    Raw(usize),
    Null,
}

impl Parsed {
    /// Column index in `Z ∪ {⊥}`, with the null token last.
    pub fn column(self, alphabet: usize) -> usize {
        match self {
            Parsed::Raw(z) => z,
            Parsed::Null => alphabet,
        }
    }

    pub fn from_column(col: usize, alphabet: usize) -> Parsed {
        if col == alphabet {
            Parsed::Null
        } else {
            Parsed::Raw(col)
        }
    }

    pub fn is_null(self) -> bool {
        self == Parsed::Null
    }

    pub fn display(self, system: &SignalSystem) -> impl fmt::Display + '_ {
        ParsedDisplay(self, system)
    }
}

struct ParsedDisplay<'a>(Parsed, &'a SignalSystem);

impl fmt::Display for ParsedDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Parsed::Raw(z) => f.write_str(self.1.token(z)),
            Parsed::Null => f.write_str("⊥"),
        }
    }
}

pub fn parse(mind: &Mind, system: &SignalSystem, z: usize, known: ConceptSet) -> Result<Parsed> {
    system.check_token(z)?;
    mind.space().check(known)?;
    Ok(parse_at(mind, system, z, known))
}

pub(crate) fn parse_at(mind: &Mind, system: &SignalSystem, z: usize, known: ConceptSet) -> Parsed {
    if mind.ordered_at(known, system.target(z)) {
        Parsed::Raw(z)
    } else {
        Parsed::Null
    }
}

/// Per-token parse verdicts at `known`, evaluating `Phi(K)` once.
pub(crate) fn parse_mask(mind: &Mind, system: &SignalSystem, known: ConceptSet) -> Vec<bool> {
    let ordered = mind.expand(known);
    (0..system.len()).map(|z| ordered.contains(system.target(z))).collect()
}

/// Tokens whose target is ordered at `known`, ascending.
pub fn ordered_signals(mind: &Mind, system: &SignalSystem, known: ConceptSet) -> Result<Vec<usize>> {
    mind.space().check(known)?;
    Ok(parse_mask(mind, system, known)
        .into_iter()
        .enumerate()
        .filter_map(|(z, ok)| ok.then_some(z))
        .collect())
}

/// Maximal entropy of the parsed observation at `known`, in bits.
pub fn capacity(mind: &Mind, system: &SignalSystem, known: ConceptSet) -> Result<f64> {
    mind.space().check(known)?;
    Ok(capacity_at(mind, system, known))
}

pub(crate) fn capacity_at(mind: &Mind, system: &SignalSystem, known: ConceptSet) -> f64 {
    let ordered = parse_mask(mind, system, known).into_iter().filter(|&b| b).count();
    capacity_formula(ordered, system.len())
}

pub(crate) fn capacity_formula(ordered: usize, alphabet: usize) -> f64 {
    if ordered < alphabet {
        ((ordered + 1) as f64).log2()
    } else {
        (alphabet as f64).log2()
    }
}

/// Largest capacity over a reachable family.
pub fn max_capacity(mind: &Mind, system: &SignalSystem, family: &ReachableFamily) -> f64 {
    family
        .states()
        .iter()
        .map(|&k| capacity_at(mind, system, k))
        .fold(0.0, f64::max)
}

/// Deterministic map on `Z ∪ {⊥}` keeping the tokens ordered at the smaller
/// state and sending everything else to `⊥`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Garbling {
    keep: Vec<bool>,
}

impl Garbling {
    pub fn identity(alphabet: usize) -> Self {
        Garbling {
            keep: vec![true; alphabet],
        }
    }

    pub fn alphabet(&self) -> usize {
        self.keep.len()
    }

    pub fn apply(&self, y: Parsed) -> Parsed {
        match y {
            Parsed::Raw(z) if self.keep[z] => y,
            _ => Parsed::Null,
        }
    }
}

pub fn garbling_map(mind: &Mind, system: &SignalSystem, small: ConceptSet, big: ConceptSet) -> Result<Garbling> {
    mind.space().check(small)?;
    mind.space().check(big)?;
    if !small.is_subset(big) {
        return Err(Error::NotNested);
    }
    Ok(Garbling {
        keep: parse_mask(mind, system, small),
    })
}

/// The experiment `W(y | θ)` over the columns `Z ∪ {⊥}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentMatrix {
    rows: Vec<Vec<f64>>,
    alphabet: usize,
}

impl ExperimentMatrix {
    /// Validates a matrix given directly; each row has `alphabet + 1` entries.
    pub fn new(rows: Vec<Vec<f64>>, alphabet: usize) -> Result<Self> {
        for row in &rows {
            if row.len() != alphabet + 1 {
                return Err(Error::DimensionMismatch(format!(
                    "row of length {} for an alphabet of {alphabet}",
                    row.len()
                )));
            }
            check_distribution(row)?;
        }
        Ok(ExperimentMatrix { rows, alphabet })
    }

    /// Pushes raw-signal kernels (one per target) through the parser at `known`.
    pub fn from_kernels(mind: &Mind, system: &SignalSystem, known: ConceptSet, kernels: &[Vec<f64>]) -> Result<Self> {
        mind.space().check(known)?;
        let mask = parse_mask(mind, system, known);
        let n = system.len();
        let rows = kernels
            .iter()
            .map(|kernel| {
                if kernel.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "kernel over {} tokens for an alphabet of {n}",
                        kernel.len()
                    )));
                }
                check_distribution(kernel)?;
                let mut row = vec![0.0; n + 1];
                for (z, &p) in kernel.iter().enumerate() {
                    row[if mask[z] { z } else { n }] += p;
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Ok(ExperimentMatrix { rows, alphabet: n })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn prob(&self, theta: usize, y: Parsed) -> f64 {
        self.rows[theta][y.column(self.alphabet)]
    }
}

pub(crate) fn check_distribution(p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| !(0.0..=1.0 + ROW_TOLERANCE).contains(&x)) || (sum - 1.0).abs() > ROW_TOLERANCE {
        return Err(Error::BadKernel(sum));
    }
    Ok(())
}

/// Whether `small(y|θ) = Σ_{y': g(y') = y} big(y'|θ)` for every row and column.
pub fn check_blackwell(small: &ExperimentMatrix, big: &ExperimentMatrix, g: &Garbling) -> Result<bool> {
    if small.rows.len() != big.rows.len() || small.alphabet != big.alphabet || g.alphabet() != big.alphabet {
        return Err(Error::DimensionMismatch(format!(
            "experiments {}x{} and {}x{} with a garbling over {} tokens",
            small.rows.len(),
            small.alphabet + 1,
            big.rows.len(),
            big.alphabet + 1,
            g.alphabet()
        )));
    }
    let n = big.alphabet;
    Ok(small.rows.iter().zip(&big.rows).all(|(s, b)| {
        let mut pushed = vec![0.0; n + 1];
        for (col, &p) in b.iter().enumerate() {
            pushed[g.apply(Parsed::from_column(col, n)).column(n)] += p;
        }
        s.iter().zip(&pushed).all(|(x, y)| (x - y).abs() <= BLACKWELL_TOLERANCE)
    }))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// STAR tokens `z_b, z_1..z_4`.
    pub fn star_system(mind: &Mind) -> SignalSystem {
        SignalSystem::from_targets(
            mind.space(),
            &[("z_b", 1), ("z_1", 2), ("z_2", 3), ("z_3", 4), ("z_4", 5)],
        )
        .unwrap()
    }

    /// One token per non-axiom concept of a four-concept mind.
    pub fn bcd_system(mind: &Mind) -> SignalSystem {
        SignalSystem::from_targets(mind.space(), &[("z_b", 1), ("z_c", 2), ("z_d", 3)]).unwrap()
    }
}
