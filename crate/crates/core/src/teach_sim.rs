//! Teaching scenarios, strategies and the Bayesian learner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::exec::{try_map_range, Execution};
use crate::info_audit::entropy;
use crate::mind::Mind;
use crate::reachability::{chain_from, shortest_chain, DEFAULT_STATE_CAP};
use crate::set::ConceptSet;
use crate::signals::{capacity_at, check_distribution, parse_mask, ExperimentMatrix, Parsed, SignalSystem};

/// A point mass is declared once the largest posterior entry is within this
/// distance of one.
pub const COMPLETION_TOLERANCE: f64 = 1e-9;

const PRIOR_TOLERANCE: f64 = 1e-12;

/// A mind, a signal system, targets `Ω` and a prior over them.
#[derive(Clone, Debug)]
pub struct Scenario {
    mind: Mind,
    system: SignalSystem,
    targets: Vec<usize>,
    prior: Vec<f64>,
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidScenario {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl Scenario {
    pub fn new(mind: Mind, system: SignalSystem, targets: Vec<usize>, prior: Vec<f64>) -> Result<Self> {
        let space = mind.space();
        if targets.is_empty() {
            return Err(invalid("targets", "target set is empty"));
        }
        let horizon = mind.horizon();
        let image = system.image();
        let mut seen = ConceptSet::EMPTY;
        for &c in &targets {
            if c >= space.len() {
                return Err(invalid("targets", format!("index {c} outside the concept space")));
            }
            let label = space.label(c);
            if !seen.insert(c) {
                return Err(invalid("targets", format!("duplicate target `{label}`")));
            }
            if !horizon.contains(c) {
                return Err(invalid(
                    "targets",
                    format!("target `{label}` lies outside the understanding horizon"),
                ));
            }
            if !image.contains(c) {
                return Err(invalid("targets", format!("no signal targets `{label}`")));
            }
        }
        if prior.len() != targets.len() {
            return Err(invalid(
                "prior",
                format!("{} weights for {} targets", prior.len(), targets.len()),
            ));
        }
        if prior.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid("prior", "weights must be finite and non-negative"));
        }
        let sum: f64 = prior.iter().sum();
        if (sum - 1.0).abs() > PRIOR_TOLERANCE {
            return Err(invalid("prior", format!("weights sum to {sum}, not 1")));
        }
        Ok(Scenario {
            mind,
            system,
            targets,
            prior,
        })
    }

    pub fn mind(&self) -> &Mind {
        &self.mind
    }

    pub fn system(&self) -> &SignalSystem {
        &self.system
    }

    /// Concept index of each target, in `Ω` order.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn target_label(&self, theta: usize) -> &str {
        self.mind.space().label(self.targets[theta])
    }

    /// Target indices with positive prior mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.targets.len()).filter(|&i| self.prior[i] > 0.0).collect()
    }

    pub fn prior_entropy(&self) -> f64 {
        entropy(&self.prior)
    }

    /// Same scenario with a different prior.
    pub fn with_prior(&self, prior: Vec<f64>) -> Result<Self> {
        Scenario::new(self.mind.clone(), self.system.clone(), self.targets.clone(), prior)
    }
}

/// A teaching strategy `κ_{t+1}(z | θ, y_1..y_t)`.
///
/// `theta` indexes the scenario's targets and `known` is the learner state
/// reached along `history`, supplied so implementations need not replay it.
pub trait Strategy: Send + Sync {
    fn kernel(&self, scenario: &Scenario, theta: usize, history: &[Parsed], known: ConceptSet) -> Result<Vec<f64>>;
}

impl<S: Strategy + ?Sized> Strategy for &S {
    fn kernel(&self, scenario: &Scenario, theta: usize, history: &[Parsed], known: ConceptSet) -> Result<Vec<f64>> {
        (**self).kernel(scenario, theta, history, known)
    }
}

impl<S: Strategy + ?Sized> Strategy for Box<S> {
    fn kernel(&self, scenario: &Scenario, theta: usize, history: &[Parsed], known: ConceptSet) -> Result<Vec<f64>> {
        (**self).kernel(scenario, theta, history, known)
    }
}

pub(crate) fn kernel_checked<S: Strategy + ?Sized>(
    strategy: &S,
    scenario: &Scenario,
    theta: usize,
    history: &[Parsed],
    known: ConceptSet,
) -> Result<Vec<f64>> {
    let k = strategy.kernel(scenario, theta, history, known)?;
    if k.len() != scenario.system.len() {
        return Err(Error::DimensionMismatch(format!(
            "kernel over {} tokens for an alphabet of {}",
            k.len(),
            scenario.system.len()
        )));
    }
    check_distribution(&k)?;
    Ok(k)
}

fn one_hot(n: usize, z: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[z] = 1.0;
    v
}

#[derive(Clone, Debug)]
struct Plan {
    states: Vec<ConceptSet>,
    tokens: Vec<usize>,
    representative: usize,
}

/// Teaches along a shortest witnessing chain to `θ`, then emits the
/// representative token of `θ`.
///
/// Once `θ` is known the kernel always emits that representative; off the
/// planned chain it restarts from the current state. Both rules only fire on
/// histories of other targets, where they keep every target distinguishable
/// one round after it has been acquired.
#[derive(Clone, Debug)]
pub struct Direct {
    plans: Vec<Plan>,
}

impl Direct {
    /// Requires a token for every concept on each target's shortest chain.
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let mind = &scenario.mind;
        let system = &scenario.system;
        let token_for = |c: usize| {
            system
                .representative(c)
                .ok_or_else(|| Error::MissingToken(mind.space().label(c).to_string()))
        };
        let plans = scenario
            .targets
            .iter()
            .map(|&c| {
                let chain = shortest_chain(mind, c)?;
                Ok(Plan {
                    tokens: chain.added().into_iter().map(token_for).collect::<Result<_>>()?,
                    states: chain.states,
                    representative: token_for(c)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Direct { plans })
    }

    /// Tokens emitted along the planned chain for `theta`.
    pub fn plan(&self, theta: usize) -> &[usize] {
        &self.plans[theta].tokens
    }
}

impl Strategy for Direct {
    fn kernel(&self, scenario: &Scenario, theta: usize, history: &[Parsed], known: ConceptSet) -> Result<Vec<f64>> {
        let plan = &self.plans[theta];
        let n = scenario.system.len();
        let goal = scenario.targets[theta];
        if known.contains(goal) {
            return Ok(one_hot(n, plan.representative));
        }
        let t = history.len();
        if t < plan.tokens.len() && plan.states[t] == known {
            return Ok(one_hot(n, plan.tokens[t]));
        }
        let chain = chain_from(&scenario.mind, known, goal, DEFAULT_STATE_CAP)?
            .ok_or_else(|| Error::Unreachable(scenario.target_label(theta).to_string()))?;
        // off-plan states only arise when the kernel is queried at a hypothetical state
        let z = scenario
            .system
            .representative(chain.added()[0])
            .unwrap_or(plan.representative);
        Ok(one_hot(n, z))
    }
}

/// Plays a fixed token row per target, ignoring the history.
#[derive(Clone, Debug)]
pub struct Scripted {
    rows: Vec<Vec<usize>>,
}

impl Scripted {
    pub fn new(scenario: &Scenario, rows: Vec<Vec<usize>>) -> Result<Self> {
        if rows.len() != scenario.targets.len() {
            return Err(invalid(
                "strategy.rows",
                format!("{} rows for {} targets", rows.len(), scenario.targets.len()),
            ));
        }
        for row in &rows {
            for &z in row {
                scenario.system.check_token(z)?;
            }
        }
        Ok(Scripted { rows })
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }
}

impl Strategy for Scripted {
    fn kernel(&self, scenario: &Scenario, theta: usize, history: &[Parsed], _known: ConceptSet) -> Result<Vec<f64>> {
        let t = history.len();
        let z = *self.rows[theta].get(t).ok_or_else(|| Error::ScriptExhausted {
            target: scenario.target_label(theta).to_string(),
            round: t + 1,
        })?;
        Ok(one_hot(scenario.system.len(), z))
    }
}

/// One token row shared by every target.
#[derive(Clone, Debug)]
pub struct Broadcast {
    row: Vec<usize>,
}

impl Broadcast {
    pub fn new(scenario: &Scenario, row: Vec<usize>) -> Result<Self> {
        for &z in &row {
            scenario.system.check_token(z)?;
        }
        Ok(Broadcast { row })
    }

    pub fn row(&self) -> &[usize] {
        &self.row
    }
}

impl Strategy for Broadcast {
    fn kernel(&self, scenario: &Scenario, _theta: usize, history: &[Parsed], _known: ConceptSet) -> Result<Vec<f64>> {
        let t = history.len();
        let z = *self.row.get(t).ok_or_else(|| Error::ScriptExhausted {
            target: "<broadcast>".into(),
            round: t + 1,
        })?;
        Ok(one_hot(scenario.system.len(), z))
    }
}

/// A pseudo-random, history-dependent stochastic kernel. Each
/// `(θ, history)` pair gets a fixed distribution with random support.
#[derive(Clone, Copy, Debug)]
pub struct SeededKernel {
    pub seed: u64,
}

impl Strategy for SeededKernel {
    fn kernel(&self, scenario: &Scenario, theta: usize, history: &[Parsed], _known: ConceptSet) -> Result<Vec<f64>> {
        let n = scenario.system.len();
        let mut key = splitmix64(self.seed ^ splitmix64(theta as u64));
        for y in history {
            key = splitmix64(key ^ y.column(n) as u64);
        }
        let mut rng = ChaCha20Rng::seed_from_u64(key);
        let mut w: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    rng.gen_range(0.05..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        if w.iter().all(|&x| x == 0.0) {
            w[rng.gen_range(0..n)] = 1.0;
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        Ok(w)
    }
}

/// Strategies declarable in scenario files.
#[derive(Clone, Debug)]
pub enum BuiltinStrategy {
    Direct(Direct),
    Scripted(Scripted),
    Broadcast(Broadcast),
}

impl Strategy for BuiltinStrategy {
    fn kernel(&self, scenario: &Scenario, theta: usize, history: &[Parsed], known: ConceptSet) -> Result<Vec<f64>> {
        match self {
            BuiltinStrategy::Direct(s) => s.kernel(scenario, theta, history, known),
            BuiltinStrategy::Scripted(s) => s.kernel(scenario, theta, history, known),
            BuiltinStrategy::Broadcast(s) => s.kernel(scenario, theta, history, known),
        }
    }
}

/// `K ∪ {tgt(z)}` for a raw observation, `K` for the null token.
pub fn knowledge_update(system: &SignalSystem, known: ConceptSet, y: Parsed) -> ConceptSet {
    match y {
        Parsed::Raw(z) => known.with(system.target(z)),
        Parsed::Null => known,
    }
}

/// State reached from the axioms along a parsed history.
pub fn knowledge_along(scenario: &Scenario, history: &[Parsed]) -> ConceptSet {
    history
        .iter()
        .fold(scenario.mind.axioms(), |k, &y| knowledge_update(&scenario.system, k, y))
}

/// `P(Y = y | θ, h)` given the raw kernel at `h` and the ordered mask at `K(h)`.
pub(crate) fn likelihood(kernel: &[f64], mask: &[bool], y: Parsed) -> f64 {
    match y {
        Parsed::Raw(z) if mask[z] => kernel[z],
        Parsed::Raw(_) => 0.0,
        Parsed::Null => kernel.iter().zip(mask).filter(|(_, &ok)| !ok).map(|(p, _)| p).sum(),
    }
}

/// Exact posterior `π(· | h)` by likelihood recursion from the prior.
pub fn posterior<S: Strategy + ?Sized>(scenario: &Scenario, strategy: &S, history: &[Parsed]) -> Result<Vec<f64>> {
    let mut joint = scenario.prior.clone();
    let mut known = scenario.mind.axioms();
    for (t, &y) in history.iter().enumerate() {
        let mask = parse_mask(&scenario.mind, &scenario.system, known);
        for (theta, w) in joint.iter_mut().enumerate() {
            if *w > 0.0 {
                let k = kernel_checked(strategy, scenario, theta, &history[..t], known)?;
                *w *= likelihood(&k, &mask, y);
            }
        }
        known = knowledge_update(&scenario.system, known, y);
    }
    normalize(joint)
}

/// The posterior after observing `y` following `history`.
pub fn posterior_update<S: Strategy + ?Sized>(
    scenario: &Scenario,
    strategy: &S,
    history: &[Parsed],
    y: Parsed,
) -> Result<Vec<f64>> {
    let mut h = history.to_vec();
    h.push(y);
    posterior(scenario, strategy, &h)
}

fn normalize(mut joint: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = joint.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    joint.iter_mut().for_each(|p| *p /= total);
    Ok(joint)
}

/// The experiment `W(y | θ)` obtained by parsing the round kernels at
/// history `h` at an arbitrary state `at`.
pub fn experiment<S: Strategy + ?Sized>(
    scenario: &Scenario,
    strategy: &S,
    history: &[Parsed],
    at: ConceptSet,
) -> Result<ExperimentMatrix> {
    let known = knowledge_along(scenario, history);
    let kernels = (0..scenario.targets.len())
        .map(|theta| kernel_checked(strategy, scenario, theta, history, known))
        .collect::<Result<Vec<_>>>()?;
    ExperimentMatrix::from_kernels(&scenario.mind, &scenario.system, at, &kernels)
}

/// Learner state after a round.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub known: ConceptSet,
    pub belief: Vec<f64>,
    pub entropy: f64,
    pub capacity: f64,
}

impl Snapshot {
    fn new(scenario: &Scenario, known: ConceptSet, belief: Vec<f64>) -> Self {
        Snapshot {
            entropy: entropy(&belief),
            capacity: capacity_at(&scenario.mind, &scenario.system, known),
            known,
            belief,
        }
    }

    fn identified(&self) -> bool {
        self.belief.iter().any(|&p| p >= 1.0 - COMPLETION_TOLERANCE)
    }

    fn completed(&self, scenario: &Scenario, theta: usize) -> bool {
        self.known.contains(scenario.targets[theta]) && self.belief[theta] >= 1.0 - COMPLETION_TOLERANCE
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    /// One-based round number.
    pub t: usize,
    pub z: usize,
    pub y: Parsed,
    pub state: Snapshot,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeTrace {
    /// Realized target, as an index into the scenario's targets.
    pub theta: usize,
    pub seed: u64,
    pub horizon: usize,
    pub initial: Snapshot,
    pub rounds: Vec<Round>,
    /// First `t` with the target acquired and a point-mass posterior on it.
    pub tau: Option<usize>,
    /// First `t` with a point-mass posterior.
    pub tau_id: Option<usize>,
}

impl EpisodeTrace {
    /// `(t, state)` for `t = 0..=horizon`.
    pub fn states(&self) -> impl Iterator<Item = (usize, &Snapshot)> {
        std::iter::once((0, &self.initial)).chain(self.rounds.iter().map(|r| (r.t, &r.state)))
    }

    pub fn last(&self) -> &Snapshot {
        self.rounds.last().map_or(&self.initial, |r| &r.state)
    }
}

/// Samples an index from a probability vector with one uniform draw.
fn sample_index(rng: &mut ChaCha20Rng, p: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in p.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Seeded ChaCha20 stream; stream 0 draws `θ` and stream `t` round `t`.
fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Runs one episode of at most `horizon` rounds.
pub fn run_episode<S: Strategy + ?Sized>(
    scenario: &Scenario,
    strategy: &S,
    horizon: usize,
    seed: u64,
) -> Result<EpisodeTrace> {
    let theta = sample_index(&mut stream(seed, 0), &scenario.prior);
    let mut known = scenario.mind.axioms();
    let mut joint = scenario.prior.clone();
    let initial = Snapshot::new(scenario, known, joint.clone());
    let mut history = Vec::with_capacity(horizon);
    let mut rounds = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let mask = parse_mask(&scenario.mind, &scenario.system, known);
        let kernel = kernel_checked(strategy, scenario, theta, &history, known)?;
        let z = sample_index(&mut stream(seed, t as u64), &kernel);
        let y = if mask[z] { Parsed::Raw(z) } else { Parsed::Null };
        for (other, w) in joint.iter_mut().enumerate() {
            if *w > 0.0 {
                let k = if other == theta {
                    kernel.clone()
                } else {
                    kernel_checked(strategy, scenario, other, &history, known)?
                };
                *w *= likelihood(&k, &mask, y);
            }
        }
        joint = normalize(joint)?;
        known = knowledge_update(&scenario.system, known, y);
        history.push(y);
        rounds.push(Round {
            t,
            z,
            y,
            state: Snapshot::new(scenario, known, joint.clone()),
        });
    }
    let mut trace = EpisodeTrace {
        theta,
        seed,
        horizon,
        initial,
        rounds,
        tau: None,
        tau_id: None,
    };
    let tau = trace
        .states()
        .find(|(_, s)| s.completed(scenario, theta))
        .map(|(t, _)| t);
    let tau_id = trace.states().find(|(_, s)| s.identified()).map(|(t, _)| t);
    trace.tau = tau;
    trace.tau_id = tau_id;
    Ok(trace)
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of episode `index` in a batch started from `seed`.
pub fn episode_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// Independent episodes with seeds [`episode_seed`]`(seed, i)`.
pub fn run_episodes<S: Strategy + ?Sized>(
    scenario: &Scenario,
    strategy: &S,
    horizon: usize,
    seed: u64,
    episodes: usize,
    exec: Execution,
) -> Result<Vec<EpisodeTrace>> {
    try_map_range(exec, episodes, |i| {
        run_episode(scenario, strategy, horizon, episode_seed(seed, i as u64))
    })
}
