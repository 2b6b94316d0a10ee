//! Supervisors that disable controllable actions and insert time steps so
//! that every supervised trace stays safe.
//!
//! A supervisor sees the plant through its own static observer (and always
//! sees `t`). In each state it fixes a decision: a set of disabled
//! controllable actions and a number `i` of `t` steps it inserts before the
//! next action of the plant. Insertions are real time steps of the plant.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{Label, Trace};
use crate::lts::{trace_inclusion, Lts};
use crate::observation::{Observer, StaticObserver};
use crate::opacity::{finite_state, first_unsafe, Monitor, SafeTraceAutomaton};
use crate::predicate::Predicate;
use crate::semantics::DEFAULT_MAX_STATES;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ControlDecision {
    #[serde(default)]
    pub disabled: BTreeSet<Label>,
    #[serde(default)]
    pub insert: usize,
}

/// Finite supervisor. Missing `step` entries are self-loops, missing
/// `policy` entries mean "do nothing".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupervisorAutomaton {
    pub states: Vec<usize>,
    pub initial: usize,
    #[serde(default)]
    pub step: BTreeMap<usize, BTreeMap<Label, usize>>,
    #[serde(default)]
    pub policy: BTreeMap<usize, ControlDecision>,
}

impl SupervisorAutomaton {
    pub fn never_intervene() -> Self {
        SupervisorAutomaton { states: vec![0], initial: 0, step: BTreeMap::new(), policy: BTreeMap::new() }
    }

    /// One state that always applies `decision`.
    pub fn constant(decision: ControlDecision) -> Self {
        SupervisorAutomaton { policy: BTreeMap::from([(0, decision)]), ..Self::never_intervene() }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn decision(&self, q: usize) -> ControlDecision {
        self.policy.get(&q).cloned().unwrap_or_default()
    }

    pub fn next(&self, q: usize, symbol: &Label) -> usize {
        self.step.get(&q).and_then(|m| m.get(symbol)).copied().unwrap_or(q)
    }

    pub fn validate(&self) -> Result<()> {
        let known: BTreeSet<usize> = self.states.iter().copied().collect();
        if !known.contains(&self.initial) {
            return Err(Error::Supervisor(format!("initial state {} is not declared", self.initial)));
        }
        for (q, m) in &self.step {
            for (l, d) in m {
                if !known.contains(q) || !known.contains(d) {
                    return Err(Error::Supervisor(format!("step {q} -{l}-> {d} uses an undeclared state")));
                }
            }
        }
        if let Some(q) = self.policy.keys().find(|q| !known.contains(q)) {
            return Err(Error::Supervisor(format!("policy for undeclared state {q}")));
        }
        Ok(())
    }

    /// A state disabling something outside `c`, if any.
    pub fn violates_controllability(&self, c: &BTreeSet<Label>) -> Option<(usize, Label)> {
        self.policy
            .iter()
            .flat_map(|(q, d)| d.disabled.iter().map(move |l| (*q, l)))
            .find(|(_, l)| !c.contains(l))
            .map(|(q, l)| (q, l.clone()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sup: SupervisorAutomaton = serde_json::from_str(s)?;
        sup.validate()?;
        Ok(sup)
    }
}

/// What the supervisor sees of a plant action.
fn symbol(obs: &StaticObserver, x: &Label) -> Option<Label> {
    if x.is_time() {
        Some(Label::Time)
    } else {
        obs.image(x)
    }
}

fn static_observer(o: &Observer) -> Result<&StaticObserver> {
    o.as_static()
        .ok_or_else(|| Error::Observer("the supervisor's observer must be static".into()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Controllability {
    Controllable,
    /// `w` is safe, `w.x` is a trace but not safe, and `x` is not controllable.
    Uncontrollable { w: Trace, x: Label },
}

/// Is the safe language closed under uncontrollable extensions inside the
/// traces of the plant?
pub fn check_controllability(k: &SafeTraceAutomaton, c: &BTreeSet<Label>) -> Controllability {
    let dfa = &k.dfa;
    let mut parent: HashMap<usize, (usize, Label)> = HashMap::new();
    let mut seen = BTreeSet::from([dfa.initial]);
    let mut queue = VecDeque::from([dfa.initial]);
    let path = |parent: &HashMap<usize, (usize, Label)>, mut s: usize| {
        let mut w = vec![];
        while let Some((p, l)) = parent.get(&s) {
            w.push(l.clone());
            s = *p;
        }
        w.reverse();
        w
    };
    while let Some(s) = queue.pop_front() {
        if !dfa.accepting[s] {
            continue;
        }
        for (x, &d) in &dfa.trans[s] {
            if !c.contains(x) && k.traces.accepting[d] && !dfa.accepting[d] {
                return Controllability::Uncontrollable { w: path(&parent, s), x: x.clone() };
            }
        }
        for (x, &d) in &dfa.trans[s] {
            if seen.insert(d) {
                parent.insert(d, (s, x.clone()));
                queue.push_back(d);
            }
        }
    }
    Controllability::Controllable
}

/// A product state: plant state and safety-monitor state.
pub type PState = (usize, usize);
pub type Belief = BTreeSet<PState>;

/// Result of applying one decision in one belief.
#[derive(Clone, Debug)]
pub struct Expansion {
    /// Every reachable member is safe, including states crossed while inserting.
    pub safe: bool,
    /// Successor node per observed symbol.
    pub succ: BTreeMap<Label, usize>,
}

/// The partial-observation safety game, explored for every decision.
pub struct BeliefGame {
    /// Entry beliefs, reached right after an observed symbol.
    pub nodes: Vec<Belief>,
    pub decisions: Vec<ControlDecision>,
    /// `edges[n][d]` is `None` when decision `d` needs a time step some
    /// member of the belief cannot take.
    pub edges: Vec<Vec<Option<Expansion>>>,
    pub winning: Vec<bool>,
}

impl BeliefGame {
    /// All decisions, fewest disabled actions first, then fewest insertions.
    fn decisions(c: &[Label], max_insert: usize) -> Vec<ControlDecision> {
        let mut subsets: Vec<BTreeSet<Label>> = (0..1usize << c.len())
            .map(|bits| (0..c.len()).filter(|i| bits >> i & 1 == 1).map(|i| c[i].clone()).collect())
            .collect();
        subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.iter().cmp(b.iter())));
        let mut out = vec![];
        for d in subsets {
            for i in 0..=max_insert {
                out.push(ControlDecision { disabled: d.clone(), insert: i });
            }
        }
        out.sort_by(|a, b| a.disabled.len().cmp(&b.disabled.len()).then(a.insert.cmp(&b.insert)));
        out
    }

    fn solve(&mut self) {
        self.winning = vec![true; self.nodes.len()];
        loop {
            let mut changed = false;
            for n in 0..self.nodes.len() {
                if !self.winning[n] {
                    continue;
                }
                if self.best(n).is_none() {
                    self.winning[n] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// First decision that keeps node `n` safe and leads to winning nodes only.
    pub fn best(&self, n: usize) -> Option<usize> {
        self.edges[n].iter().position(|e| match e {
            Some(e) => e.safe && e.succ.values().all(|&m| self.winning[m]),
            None => false,
        })
    }

    /// The supervisor that plays `choice[n]` in node `n`; nodes that are
    /// not reached are dropped. `None` if some reached decision is undefined.
    pub fn supervisor_for(&self, choice: &[usize]) -> Option<SupervisorAutomaton> {
        strategy_automaton(|n| {
            let e = self.edges[n][choice[n]].as_ref()?;
            Some((self.decisions[choice[n]].clone(), e.succ.clone()))
        })
    }
}

/// Folds a positional strategy into an automaton, numbering nodes in the
/// order they are reached from node 0.
fn strategy_automaton(
    mut play: impl FnMut(usize) -> Option<(ControlDecision, BTreeMap<Label, usize>)>,
) -> Option<SupervisorAutomaton> {
    let mut id: BTreeMap<usize, usize> = BTreeMap::from([(0, 0)]);
    let mut order = vec![0];
    let mut sup = SupervisorAutomaton::never_intervene();
    let mut i = 0;
    while i < order.len() {
        let n = order[i];
        let (d, succ) = play(n)?;
        let q = id[&n];
        if d != ControlDecision::default() {
            sup.policy.insert(q, d);
        }
        for (sym, m) in succ {
            let next = *id.entry(m).or_insert_with(|| {
                order.push(m);
                order.len() - 1
            });
            if next != q {
                sup.step.entry(q).or_default().insert(sym, next);
            }
        }
        i += 1;
    }
    sup.states = (0..order.len()).collect();
    Some(sup)
}

struct GameBuilder<'a, 'm> {
    plant: &'a Lts,
    obs: &'a StaticObserver,
    mon: &'a mut Monitor<'m>,
}

impl GameBuilder<'_, '_> {
    /// Plant states after `i` time steps from `p`, all of which must be safe.
    fn insert(&mut self, p: PState, i: usize) -> Result<Option<(Vec<PState>, bool)>> {
        let mut cur = vec![p];
        let mut safe = true;
        for _ in 0..i {
            let mut next = vec![];
            for (s, m) in cur {
                let m2 = self.mon.step(m, &Label::Time)?;
                for d in self.plant.successors(s, &Label::Time) {
                    next.push((d, m2));
                }
                safe &= self.mon.is_safe(m2)?;
            }
            if next.is_empty() {
                return Ok(None);
            }
            cur = next;
        }
        Ok(Some((cur, safe)))
    }

    /// Closes `entry` under invisible macro-steps and collects the visible ones.
    fn expand(&mut self, entry: &Belief, d: &ControlDecision) -> Result<Option<(bool, BTreeMap<Label, Belief>)>> {
        let mut belief = entry.clone();
        let mut stack: Vec<PState> = entry.iter().copied().collect();
        let mut safe = true;
        let mut out: BTreeMap<Label, Belief> = BTreeMap::new();
        while let Some(p) = stack.pop() {
            safe &= self.mon.is_safe(p.1)?;
            let Some((ends, ok)) = self.insert(p, d.insert)? else { return Ok(None) };
            safe &= ok;
            for (s, m) in ends {
                for (x, t) in &self.plant.succ[s] {
                    if d.disabled.contains(x) {
                        continue;
                    }
                    let next = (*t, self.mon.step(m, x)?);
                    match symbol(self.obs, x) {
                        None => {
                            if belief.insert(next) {
                                stack.push(next);
                            }
                        }
                        Some(sym) => {
                            out.entry(sym).or_default().insert(next);
                        }
                    }
                }
            }
        }
        Ok(Some((safe, out)))
    }
}

/// Explores the belief game for every decision reachable from the start.
pub fn belief_game(
    plant: &Lts,
    phi: &Predicate,
    attacker: &Observer,
    sup_observer: &Observer,
    c: &BTreeSet<Label>,
    max_insert: usize,
    max_states: usize,
) -> Result<BeliefGame> {
    plant.require_complete()?;
    let obs = static_observer(sup_observer)?;
    let att = finite_state(attacker)?;
    let mut mon = Monitor::new(plant, &phi.dfa, &att, max_states);
    let labels: BTreeSet<Label> = plant.transitions().map(|(_, l, _)| l.clone()).collect();
    let cs: Vec<Label> = c.iter().filter(|l| labels.contains(*l)).cloned().collect();
    let decisions = BeliefGame::decisions(&cs, max_insert);
    let start: Belief = BTreeSet::from([(plant.initial, mon.initial())]);
    let mut game = BeliefGame { nodes: vec![start.clone()], decisions, edges: vec![], winning: vec![] };
    let mut index: HashMap<Belief, usize> = HashMap::from([(start, 0)]);
    let mut builder = GameBuilder { plant, obs, mon: &mut mon };
    let mut n = 0;
    while n < game.nodes.len() {
        let entry = game.nodes[n].clone();
        let mut row = vec![];
        for d in game.decisions.clone() {
            let Some((safe, out)) = builder.expand(&entry, &d)? else {
                row.push(None);
                continue;
            };
            let mut succ = BTreeMap::new();
            for (sym, b) in out {
                let id = match index.get(&b) {
                    Some(&id) => id,
                    None => {
                        game.nodes.push(b.clone());
                        index.insert(b, game.nodes.len() - 1);
                        game.nodes.len() - 1
                    }
                };
                succ.insert(sym, id);
            }
            row.push(Some(Expansion { safe, succ }));
        }
        game.edges.push(row);
        if game.nodes.len() > max_states {
            return Err(Error::Incomplete(max_states));
        }
        n += 1;
    }
    game.solve();
    Ok(game)
}

/// The game solved on the fly: only the decision currently believed to win
/// is expanded in each node, and a node moves on to its next decision once
/// the current one is refuted. Decisions are tried in the same order as in
/// [`BeliefGame::best`], so the resulting strategy coincides with the one
/// read off the fully explored game.
struct LazySolution {
    nodes: usize,
    losing: usize,
    root_wins: bool,
    choice: Vec<usize>,
    succ: Vec<BTreeMap<Label, usize>>,
    decisions: Vec<ControlDecision>,
}

fn solve_on_the_fly(
    plant: &Lts,
    phi: &Predicate,
    attacker: &Observer,
    sup_observer: &Observer,
    c: &BTreeSet<Label>,
    max_insert: usize,
    max_states: usize,
) -> Result<LazySolution> {
    plant.require_complete()?;
    let obs = static_observer(sup_observer)?;
    let att = finite_state(attacker)?;
    let mut mon = Monitor::new(plant, &phi.dfa, &att, max_states);
    let labels: BTreeSet<Label> = plant.transitions().map(|(_, l, _)| l.clone()).collect();
    let cs: Vec<Label> = c.iter().filter(|l| labels.contains(*l)).cloned().collect();
    let decisions = BeliefGame::decisions(&cs, max_insert);
    let start: Belief = BTreeSet::from([(plant.initial, mon.initial())]);
    let mut builder = GameBuilder { plant, obs, mon: &mut mon };

    let mut nodes = vec![start.clone()];
    let mut index: HashMap<Belief, usize> = HashMap::from([(start, 0)]);
    let mut choice = vec![0usize];
    let mut succ: Vec<BTreeMap<Label, usize>> = vec![BTreeMap::new()];
    let mut losing = vec![false];
    // nodes whose current choice may lead to the key
    let mut users: Vec<Vec<usize>> = vec![vec![]];
    let mut stack = vec![0usize];
    while let Some(n) = stack.pop() {
        if losing[n] {
            continue;
        }
        loop {
            let Some(d) = decisions.get(choice[n]) else {
                losing[n] = true;
                stack.extend(users[n].iter().copied().filter(|&u| !losing[u]));
                break;
            };
            let out = match builder.expand(&nodes[n], d)? {
                Some((true, out)) => out,
                _ => {
                    choice[n] += 1;
                    continue;
                }
            };
            let mut next = BTreeMap::new();
            for (sym, b) in out {
                let id = match index.get(&b) {
                    Some(&id) => id,
                    None => {
                        nodes.push(b.clone());
                        index.insert(b, nodes.len() - 1);
                        choice.push(0);
                        succ.push(BTreeMap::new());
                        losing.push(false);
                        users.push(vec![]);
                        stack.push(nodes.len() - 1);
                        nodes.len() - 1
                    }
                };
                next.insert(sym, id);
            }
            if nodes.len() > max_states {
                return Err(Error::Incomplete(max_states));
            }
            if next.values().any(|&m| losing[m]) {
                choice[n] += 1;
                continue;
            }
            for &m in next.values() {
                users[m].push(n);
            }
            succ[n] = next;
            break;
        }
    }
    Ok(LazySolution {
        nodes: nodes.len(),
        losing: losing.iter().filter(|l| **l).count(),
        root_wins: !losing[0],
        choice,
        succ,
        decisions,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SynthesisOutcome {
    Supervisor { supervisor: SupervisorAutomaton },
    NoSupervisor { reason: String },
    /// Only a supervisor that blocks every visible action exists.
    TrivialOnly { supervisor: SupervisorAutomaton },
}

#[derive(Clone, Debug, Serialize)]
pub struct SynthesisResult {
    pub outcome: SynthesisOutcome,
    pub belief_nodes: usize,
    pub losing_nodes: usize,
    pub controllability: Controllability,
}

impl SynthesisResult {
    pub fn supervisor(&self) -> Option<&SupervisorAutomaton> {
        match &self.outcome {
            SynthesisOutcome::Supervisor { supervisor } | SynthesisOutcome::TrivialOnly { supervisor } => {
                Some(supervisor)
            }
            SynthesisOutcome::NoSupervisor { .. } => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthesisConfig {
    pub controllable: BTreeSet<Label>,
    pub max_insert: usize,
    pub max_states: usize,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig { controllable: BTreeSet::new(), max_insert: 4, max_states: DEFAULT_MAX_STATES }
    }
}

pub fn synthesize(
    plant: &Lts,
    phi: &Predicate,
    attacker: &Observer,
    sup_observer: &Observer,
    cfg: &SynthesisConfig,
) -> Result<SynthesisResult> {
    let game = solve_on_the_fly(plant, phi, attacker, sup_observer, &cfg.controllable, cfg.max_insert, cfg.max_states)?;
    let k = crate::opacity::safe_automaton_bounded(plant, phi, attacker, cfg.max_states)?;
    let controllability = check_controllability(&k, &cfg.controllable);
    let (belief_nodes, losing_nodes) = (game.nodes, game.losing);
    if !game.root_wins {
        let reason = match &controllability {
            Controllability::Uncontrollable { w, x } => format!(
                "every admissible policy reaches an unsafe trace; e.g. `{}` extends safely-reached `{}` uncontrollably",
                x,
                crate::label::show_trace(w)
            ),
            Controllability::Controllable => "every admissible policy reaches an unsafe trace".into(),
        };
        return Ok(SynthesisResult {
            outcome: SynthesisOutcome::NoSupervisor { reason },
            belief_nodes,
            losing_nodes,
            controllability,
        });
    }
    let sup = strategy_automaton(|n| Some((game.decisions[game.choice[n]].clone(), game.succ[n].clone())))
        .ok_or_else(|| Error::Supervisor("winning strategy uses an undefined decision".into()))?;
    if let Verification::Invalid { witness } = verify_supervisor(plant, phi, attacker, sup_observer, &sup)? {
        return Err(Error::Supervisor(format!(
            "synthesized supervisor admits unsafe trace `{}`",
            crate::label::show_trace(&witness)
        )));
    }
    let visible: BTreeSet<Label> = plant.transitions().map(|(_, l, _)| l.clone()).filter(Label::is_visible).collect();
    let supervised = supervised_product(plant, sup_observer, &sup)?;
    let blocks_all = !visible.is_empty()
        && visible.is_subset(&cfg.controllable)
        && !supervised.transitions().any(|(_, l, _)| l.is_visible());
    let outcome = if blocks_all {
        SynthesisOutcome::TrivialOnly { supervisor: sup }
    } else {
        SynthesisOutcome::Supervisor { supervisor: sup }
    };
    Ok(SynthesisResult { outcome, belief_nodes, losing_nodes, controllability })
}

/// States of the supervised system: plant state, supervisor state and the
/// number of `t` steps already inserted before the next plant action.
pub fn supervised_product(plant: &Lts, sup_observer: &Observer, sup: &SupervisorAutomaton) -> Result<Lts> {
    let obs = static_observer(sup_observer)?;
    sup.validate()?;
    let start = (plant.initial, sup.initial, 0usize);
    let mut index: HashMap<(usize, usize, usize), usize> = HashMap::from([(start, 0)]);
    let mut keys = vec![start];
    let mut succ: Vec<Vec<(Label, usize)>> = vec![];
    let mut i = 0;
    while i < keys.len() {
        let (s, q, k) = keys[i];
        let d = sup.decision(q);
        let mut out = vec![];
        if k < d.insert {
            let next: Vec<usize> = plant.successors(s, &Label::Time).collect();
            if next.is_empty() {
                return Err(Error::Supervisor(format!(
                    "supervisor state {q} inserts time where the plant cannot idle ({})",
                    plant.names.get(s).map(String::as_str).unwrap_or("?")
                )));
            }
            out.extend(next.into_iter().map(|t| (Label::Time, (t, q, k + 1))));
        } else {
            for (x, t) in &plant.succ[s] {
                if d.disabled.contains(x) {
                    continue;
                }
                let q2 = symbol(obs, x).map_or(q, |sym| sup.next(q, &sym));
                out.push((x.clone(), (*t, q2, 0)));
            }
        }
        let mut row = vec![];
        for (l, key) in out {
            let id = *index.entry(key).or_insert_with(|| {
                keys.push(key);
                keys.len() - 1
            });
            row.push((l, id));
        }
        succ.push(row);
        if keys.len() > DEFAULT_MAX_STATES {
            return Err(Error::Incomplete(DEFAULT_MAX_STATES));
        }
        i += 1;
    }
    let names = keys
        .iter()
        .map(|&(s, q, k)| {
            let base = plant.names.get(s).cloned().unwrap_or_else(|| s.to_string());
            if k > 0 {
                format!("{base} @ q{q} +{k}")
            } else {
                format!("{base} @ q{q}")
            }
        })
        .collect();
    Ok(Lts::new(names, 0, succ, plant.complete))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verification {
    Valid,
    Invalid { witness: Trace },
}

/// Are all traces of the supervised system safe?
pub fn verify_supervisor(
    plant: &Lts,
    phi: &Predicate,
    attacker: &Observer,
    sup_observer: &Observer,
    sup: &SupervisorAutomaton,
) -> Result<Verification> {
    plant.require_complete()?;
    let att = finite_state(attacker)?;
    let supervised = supervised_product(plant, sup_observer, sup)?;
    let mut mon = Monitor::new(plant, &phi.dfa, &att, DEFAULT_MAX_STATES);
    Ok(match first_unsafe(&supervised, &mut mon, DEFAULT_MAX_STATES)? {
        None => Verification::Valid,
        Some(witness) => Verification::Invalid { witness },
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Permissiveness {
    Equal,
    MorePermissive,
    LessPermissive,
    Incomparable,
}

/// Compares the trace sets of the two supervised systems.
pub fn compare_supervisors(
    plant: &Lts,
    sup_observer: &Observer,
    s1: &SupervisorAutomaton,
    s2: &SupervisorAutomaton,
) -> Result<Permissiveness> {
    let a = supervised_product(plant, sup_observer, s1)?;
    let b = supervised_product(plant, sup_observer, s2)?;
    let a_in_b = trace_inclusion(&a, &b, false).is_none();
    let b_in_a = trace_inclusion(&b, &a, false).is_none();
    Ok(match (a_in_b, b_in_a) {
        (true, true) => Permissiveness::Equal,
        (false, true) => Permissiveness::MorePermissive,
        (true, false) => Permissiveness::LessPermissive,
        (false, false) => Permissiveness::Incomparable,
    })
}

/// Can opacity be enforced by inserting time steps alone?
pub fn insertion_only_enforceable(
    plant: &Lts,
    phi: &Predicate,
    attacker: &Observer,
    sup_observer: &Observer,
    max_insert: usize,
) -> Result<bool> {
    let cfg = SynthesisConfig { max_insert, ..SynthesisConfig::default() };
    let r = synthesize(plant, phi, attacker, sup_observer, &cfg)?;
    Ok(matches!(r.outcome, SynthesisOutcome::Supervisor { .. }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimulationRun {
    /// Actions proposed by the plant.
    pub original: Trace,
    /// What actually happened, including inserted time steps.
    pub supervised: Trace,
}

/// Random runs of the supervised system, reproducible from `seed`.
pub fn simulate(
    plant: &Lts,
    sup_observer: &Observer,
    sup: &SupervisorAutomaton,
    runs: usize,
    steps: usize,
    seed: u64,
) -> Result<Vec<SimulationRun>> {
    let obs = static_observer(sup_observer)?;
    sup.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];
    for _ in 0..runs {
        let (mut s, mut q) = (plant.initial, sup.initial);
        let mut run = SimulationRun { original: vec![], supervised: vec![] };
        while run.original.len() < steps {
            let d = sup.decision(q);
            let mut s2 = s;
            let mut inserted = 0;
            for _ in 0..d.insert {
                let Some(t) = plant.time_successor(s2) else { break };
                s2 = t;
                inserted += 1;
            }
            if inserted < d.insert {
                return Err(Error::Supervisor(format!("supervisor state {q} inserts time where the plant cannot idle")));
            }
            let options: Vec<&(Label, usize)> = plant.succ[s2].iter().filter(|(x, _)| !d.disabled.contains(x)).collect();
            let Some((x, t)) = options.choose(&mut rng) else { break };
            run.supervised.extend(std::iter::repeat_n(Label::Time, d.insert));
            run.supervised.push(x.clone());
            run.original.push(x.clone());
            s = *t;
            if let Some(sym) = symbol(obs, x) {
                q = sup.next(q, &sym);
            }
        }
        out.push(run);
    }
    Ok(out)
}
