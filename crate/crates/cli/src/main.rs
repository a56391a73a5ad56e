use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use noesis_core::derivation::{curriculum_from_derivation, derive, DerivationTree};
use noesis_core::info_audit::{audit_all, build_history_tree_with_cap, expected_completion, DEFAULT_NODE_CAP};
use noesis_core::io::{self, family_lists, load_mind, load_scenario, node_cap, LoadedScenario, TraceFile};
use noesis_core::planner::{allocate, broadcast_construct, broadcast_min_length, envelope, BroadcastInstance};
use noesis_core::reachability::{
    check_learning_space, enumerate_reachable_with_cap, shortest_chain, structural_distance, DEFAULT_STATE_CAP,
};
use noesis_core::signals::{capacity, max_capacity};
use noesis_core::teach_sim::{run_episode, run_episodes};
use noesis_core::{ConceptSet, Error, Execution, Mind};

#[derive(Parser)]
#[command(
    name = "noesis",
    version,
    about = "Prerequisite-gated learning: closure, reachability, teaching and audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Run data-parallel work on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// A mind, read from a mind file or from the mind part of a scenario file.
#[derive(Args)]
struct MindSource {
    #[arg(long, conflicts_with = "scenario")]
    mind: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Closure of a set, with the iterates of the one-step expansion.
    Closure {
        #[command(flatten)]
        src: MindSource,
        /// Comma-separated concept labels; defaults to the axioms.
        #[arg(long)]
        set: Option<String>,
    },
    /// Derivation tree and curriculum for a concept.
    Derive {
        #[command(flatten)]
        src: MindSource,
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        concept: String,
    },
    /// Reachable family and its learning-space checks.
    Reach {
        #[command(flatten)]
        src: MindSource,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Structural distance and a shortest witnessing chain.
    Distance {
        #[command(flatten)]
        src: MindSource,
        #[arg(long)]
        concept: String,
    },
    /// Parsing capacity at one state, or at every reachable state.
    Capacity {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Simulated teaching episodes.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
    },
    /// Exact audit of the information laws over the history tree.
    Audit {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Bounds on the optimal success probability, and the exact value on tiny
    /// instances.
    Value {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        horizon: usize,
    },
    /// Concentrated versus even allocation of a teaching budget.
    Allocate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        budget: usize,
        #[arg(long = "L")]
        l: usize,
    },
    /// Incompatible-minds broadcast instance with its tight sequence.
    BroadcastGen {
        #[arg(long)]
        k: usize,
        #[arg(long = "L")]
        l: usize,
    },
    /// Shortest shared sequence bringing every mind to the goal.
    BroadcastMin {
        #[arg(long)]
        k: usize,
        #[arg(long = "L")]
        l: usize,
        #[arg(long)]
        cap: Option<usize>,
    },
}

enum Output {
    Json(Value),
    Text(String),
}

fn fail(message: impl Into<String>) -> Error {
    Error::InvalidScenario {
        field: "arguments".into(),
        reason: message.into(),
    }
}

impl MindSource {
    fn load(&self) -> Result<Mind, Error> {
        match (&self.mind, &self.scenario) {
            (Some(p), _) => load_mind(p),
            (None, Some(p)) => Ok(load_scenario(p)?.scenario.mind().clone()),
            (None, None) => Err(fail("one of --mind or --scenario is required")),
        }
    }
}

fn parse_set(mind: &Mind, spec: Option<&str>) -> Result<ConceptSet, Error> {
    match spec {
        None => Ok(mind.axioms()),
        Some(s) => mind
            .space()
            .set_of(s.split(',').map(str::trim).filter(|l| !l.is_empty())),
    }
}

fn labels(mind: &Mind, set: ConceptSet) -> Value {
    json!(mind.space().labels_of(set))
}

fn tree_json(mind: &Mind, tree: &DerivationTree) -> Value {
    match tree {
        DerivationTree::Base(c) => json!({ "concept": mind.space().label(*c) }),
        DerivationTree::Apply { rule, children } => json!({
            "concept": mind.space().label(rule.target),
            "rule": rule.display(mind.space()).to_string(),
            "children": children.iter().map(|t| tree_json(mind, t)).collect::<Vec<_>>(),
        }),
    }
}

fn broadcast_json(inst: &BroadcastInstance) -> Value {
    let space = &inst.space;
    let minds: Vec<Value> = inst
        .minds
        .iter()
        .map(|m| {
            json!(m
                .rules()
                .iter()
                .map(|r| r.display(space).to_string())
                .collect::<Vec<_>>())
        })
        .collect();
    json!({
        "k": inst.k,
        "L": inst.l,
        "concepts": space.labels().iter().map(|c| c.as_str()).collect::<Vec<_>>(),
        "axioms": space.labels_of(inst.axioms),
        "goal": space.label(inst.goal),
        "minds": minds,
        "signals": inst.system.decls(space),
        "tight": inst.tight.iter().map(|&z| inst.system.token(z)).collect::<Vec<_>>(),
    })
}

fn simulate(
    loaded: &LoadedScenario,
    seed: u64,
    horizon: usize,
    episodes: usize,
    exec: Execution,
) -> Result<Vec<TraceFile>, Error> {
    let traces = if episodes == 1 {
        vec![run_episode(&loaded.scenario, &loaded.strategy, horizon, seed)?]
    } else {
        run_episodes(&loaded.scenario, &loaded.strategy, horizon, seed, episodes, exec)?
    };
    Ok(traces.iter().map(|t| TraceFile::new(loaded, t)).collect())
}

fn run(cli: &Cli) -> Result<Output, Error> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    if cli.format == Some(Format::Csv) && !matches!(cli.command, Command::Simulate { .. }) {
        return Err(fail("csv output is only available for simulate"));
    }
    Ok(match &cli.command {
        Command::Closure { src, set } => {
            let m = src.load()?;
            let k = parse_set(&m, set.as_deref())?;
            let iterates = m.closure_iterates(k)?;
            Output::Json(json!({
                "set": labels(&m, k),
                "closure": labels(&m, m.closure(k)?),
                "iterates": iterates.iter().map(|&s| labels(&m, s)).collect::<Vec<_>>(),
            }))
        }
        Command::Derive { src, set, concept } => {
            let m = src.load()?;
            let k = parse_set(&m, set.as_deref())?;
            let c = m.space().index_of(concept)?;
            let tree = derive(&m, k, c)?;
            let cur = tree.as_ref().map(curriculum_from_derivation);
            Output::Json(json!({
                "set": labels(&m, k),
                "concept": concept,
                "derivable": tree.is_some(),
                "tree": tree.as_ref().map(|t| tree_json(&m, t)),
                "curriculum": cur.as_ref().map(|cur| {
                    cur.steps.iter().map(|r| r.display(m.space()).to_string()).collect::<Vec<_>>()
                }),
                "states": cur.map(|cur| cur.states(k).into_iter().map(|s| labels(&m, s)).collect::<Vec<_>>()),
            }))
        }
        Command::Reach { src, cap } => {
            let m = src.load()?;
            let fam = enumerate_reachable_with_cap(&m, cap.unwrap_or_else(|| node_cap(DEFAULT_STATE_CAP)))?;
            let report = check_learning_space(fam.states(), m.axioms());
            Output::Json(json!({
                "count": fam.len(),
                "states": family_lists(m.space(), &fam),
                "learning_space": {
                    "contains_base": report.contains_base,
                    "accessible": report.accessible,
                    "union_closed": report.union_closed,
                    "shifted_antimatroid": report.shifted_antimatroid,
                },
            }))
        }
        Command::Distance { src, concept } => {
            let m = src.load()?;
            let c = m.space().index_of(concept)?;
            let l = structural_distance(&m, c)?;
            let chain = match l {
                Some(_) => Some(shortest_chain(&m, c)?),
                None => None,
            };
            Output::Json(json!({
                "concept": concept,
                "distance": l,
                "chain": chain.map(|ch| ch.states.iter().map(|&s| labels(&m, s)).collect::<Vec<_>>()),
            }))
        }
        Command::Capacity { scenario, set, cap } => {
            let loaded = load_scenario(scenario)?;
            let (m, sys) = (loaded.scenario.mind(), loaded.scenario.system());
            match set {
                Some(spec) => {
                    let k = parse_set(m, Some(spec))?;
                    Output::Json(json!({ "set": labels(m, k), "capacity": capacity(m, sys, k)? }))
                }
                None => {
                    let fam = enumerate_reachable_with_cap(m, cap.unwrap_or_else(|| node_cap(DEFAULT_STATE_CAP)))?;
                    let states = fam
                        .sorted_states()
                        .into_iter()
                        .map(|k| Ok(json!({ "set": labels(m, k), "capacity": capacity(m, sys, k)? })))
                        .collect::<Result<Vec<_>, Error>>()?;
                    Output::Json(json!({ "states": states, "max": max_capacity(m, sys, &fam) }))
                }
            }
        }
        Command::Simulate {
            scenario,
            seed,
            horizon,
            episodes,
        } => {
            let loaded = load_scenario(scenario)?;
            for note in &loaded.notes {
                eprintln!("note: {note}");
            }
            let traces = simulate(&loaded, *seed, *horizon, (*episodes).max(1), exec)?;
            match cli.format {
                Some(Format::Csv) => Output::Text(io::traces_to_csv(&traces)?),
                _ if traces.len() == 1 => Output::Text(traces[0].to_json()),
                _ => Output::Json(serde_json::to_value(&traces)?),
            }
        }
        Command::Audit { scenario, horizon, cap } => {
            let loaded = load_scenario(scenario)?;
            let s = &loaded.scenario;
            let tree = build_history_tree_with_cap(
                s,
                &loaded.strategy,
                *horizon,
                cap.unwrap_or_else(|| node_cap(DEFAULT_NODE_CAP)),
            )?;
            let report = audit_all(&tree, s)?;
            if !report.passed() {
                eprintln!("audit found violations");
            }
            let out = match cli.format {
                Some(_) => Output::Json(json!({
                    "nodes": tree.len(),
                    "expected_completion": expected_completion(&tree, s),
                    "report": report,
                })),
                None => Output::Text(format!(
                    "nodes: {}\nexpected completion: {}\n{report}",
                    tree.len(),
                    expected_completion(&tree, s).map_or("n/a".to_string(), |v| format!("{v:.12}")),
                )),
            };
            if !report.passed() {
                write_output(cli.out.as_deref(), out)?;
                return Err(fail("audit failed"));
            }
            out
        }
        Command::Value { scenario, horizon } => {
            let loaded = load_scenario(scenario)?;
            Output::Json(serde_json::to_value(envelope(&loaded.scenario, *horizon)?)?)
        }
        Command::Allocate { n, budget, l } => Output::Json(serde_json::to_value(allocate(*n, *budget, *l)?)?),
        Command::BroadcastGen { k, l } => Output::Json(broadcast_json(&broadcast_construct(*k, *l)?)),
        Command::BroadcastMin { k, l, cap } => {
            let inst = broadcast_construct(*k, *l)?;
            let min = broadcast_min_length(&inst, cap.unwrap_or_else(|| node_cap(DEFAULT_STATE_CAP)))?;
            Output::Json(json!(min))
        }
    })
}

fn write_output(path: Option<&Path>, out: Output) -> Result<(), Error> {
    let mut text = match out {
        Output::Json(v) => serde_json::to_string_pretty(&v)?,
        Output::Text(s) => s,
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|out| write_output(cli.out.as_deref(), out)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                Error::Parse { message, line } => eprintln!("error: line {line}: {message}"),
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(if e.is_cap_exceeded() { 2 } else { 1 })
        }
    }
}
