//! JSON scenario and mind files, trace export and report formatting.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mind::{validate_mind, ConceptSpace, Mind, MindDecl, RuleDecl};
use crate::reachability::ReachableFamily;
use crate::signals::{Parsed, SignalDecl, SignalSystem};
use crate::teach_sim::{Broadcast, BuiltinStrategy, Direct, EpisodeTrace, Scenario, Scripted};

/// Environment variable overriding enumeration caps.
pub const NODE_CAP_VAR: &str = "NOESIS_NODE_CAP";

/// `NOESIS_NODE_CAP` when set to a positive integer, else `default`.
pub fn node_cap(default: usize) -> usize {
    std::env::var(NODE_CAP_VAR)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&c| c > 0)
        .unwrap_or(default)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StrategySpec {
    #[default]
    Direct,
    Scripted {
        rows: Vec<Vec<String>>,
    },
    Broadcast {
        row: Vec<String>,
    },
}

impl StrategySpec {
    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::Direct => "direct",
            StrategySpec::Scripted { .. } => "scripted",
            StrategySpec::Broadcast { .. } => "broadcast",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub concepts: Vec<String>,
    pub axioms: Vec<String>,
    pub rules: Vec<RuleDecl>,
    pub signals: Vec<SignalDecl>,
    pub targets: Vec<String>,
    pub prior: Vec<f64>,
    #[serde(default)]
    pub strategy: StrategySpec,
}

#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub file: ScenarioFile,
    pub scenario: Scenario,
    pub strategy: BuiltinStrategy,
    /// Adjustments made while loading, such as prior normalization.
    pub notes: Vec<String>,
    pub digest: String,
}

/// Line of the first occurrence of `"key"` in `text`, one-based.
fn line_of(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map_or(1, |i| i + 1)
}

fn at_field(text: &str, field: &str, err: impl std::fmt::Display) -> Error {
    let key = field.rsplit('.').next().unwrap_or(field);
    Error::Parse {
        message: format!("field `{field}`: {err}"),
        line: line_of(text, key),
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        message: e.to_string(),
        line: e.line(),
    }
}

fn build_mind(text: &str, decl: &MindDecl) -> Result<Mind> {
    let report = validate_mind(decl);
    if !report.is_accepted() {
        let field = if !report.invalid_labels.is_empty() || !report.duplicate_concepts.is_empty() {
            "concepts"
        } else if !report.axioms_outside_space.is_empty() {
            "axioms"
        } else {
            "rules"
        };
        return Err(at_field(text, field, report));
    }
    Mind::from_decl(decl).map_err(|e| at_field(text, "concepts", e))
}

pub fn parse_mind(text: &str) -> Result<Mind> {
    let decl: MindDecl = serde_json::from_str(text).map_err(json_error)?;
    build_mind(text, &decl)
}

pub fn load_mind(path: impl AsRef<Path>) -> Result<Mind> {
    parse_mind(&std::fs::read_to_string(path)?)
}

pub fn mind_to_json(mind: &Mind) -> String {
    serde_json::to_string_pretty(&mind.to_decl()).expect("serializable")
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<LoadedScenario> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

pub fn parse_scenario(text: &str) -> Result<LoadedScenario> {
    let mut file: ScenarioFile = serde_json::from_str(text).map_err(json_error)?;
    let mut notes = Vec::new();
    let mind = build_mind(
        text,
        &MindDecl {
            concepts: file.concepts.clone(),
            axioms: file.axioms.clone(),
            rules: file.rules.clone(),
        },
    )?;
    let system = SignalSystem::new(mind.space(), &file.signals).map_err(|e| at_field(text, "signals", e))?;
    let targets = file
        .targets
        .iter()
        .map(|t| mind.space().index_of(t))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| at_field(text, "targets", e))?;

    let sum: f64 = file.prior.iter().sum();
    if file.prior.iter().any(|p| !p.is_finite() || *p < 0.0) || sum <= 0.0 {
        return Err(at_field(
            text,
            "prior",
            "weights must be non-negative with a positive sum",
        ));
    }
    if (sum - 1.0).abs() > 1e-12 {
        file.prior.iter_mut().for_each(|p| *p /= sum);
        notes.push(format!("prior normalized (weights summed to {sum})"));
    }
    let scenario = Scenario::new(mind, system, targets, file.prior.clone()).map_err(|e| match &e {
        Error::InvalidScenario { field, .. } => at_field(text, &field.clone(), e),
        _ => at_field(text, "targets", e),
    })?;
    let strategy = build_strategy(&scenario, &file.strategy).map_err(|e| at_field(text, "strategy", e))?;
    let digest = digest(&file);
    Ok(LoadedScenario {
        file,
        scenario,
        strategy,
        notes,
        digest,
    })
}

/// The file form of an in-memory scenario.
pub fn scenario_file(scenario: &Scenario, strategy: StrategySpec) -> ScenarioFile {
    let decl = scenario.mind().to_decl();
    let space = scenario.mind().space();
    ScenarioFile {
        concepts: decl.concepts,
        axioms: decl.axioms,
        rules: decl.rules,
        signals: scenario.system().decls(space),
        targets: scenario.targets().iter().map(|&c| space.label(c).to_string()).collect(),
        prior: scenario.prior().to_vec(),
        strategy,
    }
}

pub fn scenario_to_json(file: &ScenarioFile) -> String {
    serde_json::to_string_pretty(file).expect("serializable")
}

fn tokens(system: &SignalSystem, row: &[String]) -> Result<Vec<usize>> {
    row.iter().map(|t| system.index_of(t)).collect()
}

pub fn build_strategy(scenario: &Scenario, spec: &StrategySpec) -> Result<BuiltinStrategy> {
    Ok(match spec {
        StrategySpec::Direct => BuiltinStrategy::Direct(Direct::new(scenario)?),
        StrategySpec::Scripted { rows } => {
            let rows = rows
                .iter()
                .map(|r| tokens(scenario.system(), r))
                .collect::<Result<_>>()?;
            BuiltinStrategy::Scripted(Scripted::new(scenario, rows)?)
        }
        StrategySpec::Broadcast { row } => {
            BuiltinStrategy::Broadcast(Broadcast::new(scenario, tokens(scenario.system(), row)?)?)
        }
    })
}

/// Hex SHA-256 of the canonical (compact, field-ordered) JSON encoding.
pub fn digest(file: &ScenarioFile) -> String {
    let canonical = serde_json::to_vec(file).expect("serializable");
    hex::encode(Sha256::digest(&canonical))
}

/// Rounds to 12 significant decimal digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub seed: u64,
    pub horizon: usize,
    pub scenario_digest: String,
    pub strategy: String,
    pub theta: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    /// Emitted token; absent for the initial state.
    pub z: Option<String>,
    /// Parsed observation, `⊥` for the null token.
    pub y: Option<String>,
    pub known: Vec<String>,
    pub belief: Vec<f64>,
    pub entropy: f64,
    pub capacity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub header: TraceHeader,
    /// Records for `t = 0..=horizon`.
    pub rounds: Vec<RoundRecord>,
    pub tau: Option<usize>,
    pub tau_id: Option<usize>,
}

impl TraceFile {
    pub fn new(loaded: &LoadedScenario, trace: &EpisodeTrace) -> Self {
        let s = &loaded.scenario;
        let space = s.mind().space();
        let sys = s.system();
        let record = |t, z: Option<usize>, y: Option<Parsed>, state: &crate::teach_sim::Snapshot| RoundRecord {
            t,
            z: z.map(|z| sys.token(z).to_string()),
            y: y.map(|y| y.display(sys).to_string()),
            known: space.labels_of(state.known),
            belief: state.belief.iter().map(|&p| round12(p)).collect(),
            entropy: round12(state.entropy),
            capacity: round12(state.capacity),
        };
        let mut rounds = vec![record(0, None, None, &trace.initial)];
        rounds.extend(trace.rounds.iter().map(|r| record(r.t, Some(r.z), Some(r.y), &r.state)));
        TraceFile {
            header: TraceHeader {
                seed: trace.seed,
                horizon: trace.horizon,
                scenario_digest: loaded.digest.clone(),
                strategy: loaded.file.strategy.name().to_string(),
                theta: s.target_label(trace.theta).to_string(),
            },
            rounds,
            tau: trace.tau,
            tau_id: trace.tau_id,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(json_error)
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    episode: usize,
    seed: u64,
    theta: &'a str,
    t: usize,
    z: &'a str,
    y: &'a str,
    known: String,
    belief: String,
    entropy: f64,
    capacity: f64,
}

/// Flat per-round CSV; beliefs are `;`-separated in target order.
pub fn traces_to_csv(traces: &[TraceFile]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (episode, tr) in traces.iter().enumerate() {
        for r in &tr.rounds {
            w.serialize(CsvRow {
                episode,
                seed: tr.header.seed,
                theta: &tr.header.theta,
                t: r.t,
                z: r.z.as_deref().unwrap_or(""),
                y: r.y.as_deref().unwrap_or(""),
                known: r.known.join(" "),
                belief: r.belief.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(";"),
                entropy: r.entropy,
                capacity: r.capacity,
            })?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// States as sorted label lists, ordered by size then member indices.
pub fn family_lists(space: &ConceptSpace, family: &ReachableFamily) -> Vec<Vec<String>> {
    family.sorted_states().into_iter().map(|k| space.labels_of(k)).collect()
}
