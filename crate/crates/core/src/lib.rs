//! Prerequisite-gated understanding and teaching.
//!
//! Minds generate closure structure from axioms and finitary expansion rules;
//! the reachable acquired states form a shifted antimatroid; a teacher emits
//! raw signals that a learner parses only when their target concept is
//! ordered at its current state; and the induced information flow can be
//! enumerated exactly over the finite history tree.

pub mod derivation;
pub mod error;
pub mod exec;
pub mod info_audit;
pub mod io;
pub mod mind;
pub mod planner;
pub mod reachability;
pub mod sample;
pub mod set;
pub mod signals;
pub mod teach_sim;

pub use error::{Error, Result};
pub use exec::Execution;
pub use mind::{validate_mind, ConceptId, ConceptSpace, ExpansionRule, Mind, MindDecl, RuleDecl, ValidationReport};
pub use set::ConceptSet;
pub use signals::{Parsed, SignalSystem};
pub use teach_sim::{Scenario, Strategy};
