//! Language opacity, the safe-trace language and timing attacks.
//!
//! Whether a trace `w` is safe depends on `w` alone: either `w` does not
//! satisfy the secret predicate, or nothing of it is observed, or some trace
//! of the plant that does not satisfy the predicate looks the same. The
//! [`Monitor`] decides this deterministically, letter by letter, on top of a
//! lazily determinized automaton for the observable images of the non-secret
//! traces.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::automata::{fresh_label, Dfa};
use crate::error::{Error, Result};
use crate::label::{Label, Trace};
use crate::lts::Lts;
use crate::observation::{compare_observers, Comparison, Observer, WindowedObserver};
use crate::predicate::Predicate;
use crate::semantics::DEFAULT_MAX_STATES;

/// States of the nondeterministic image automaton: a running non-secret
/// candidate, or the remaining flush of one that has stopped.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum NState {
    Live(usize, usize, Vec<Label>),
    Pending(Vec<Label>),
}

struct ImageDfa<'a> {
    plant: &'a Lts,
    phi: &'a Dfa,
    obs: &'a WindowedObserver,
    sets: Vec<BTreeSet<NState>>,
    index: HashMap<BTreeSet<NState>, usize>,
    trans: HashMap<(usize, Label), usize>,
}

impl<'a> ImageDfa<'a> {
    fn new(plant: &'a Lts, phi: &'a Dfa, obs: &'a WindowedObserver) -> Self {
        let mut d = ImageDfa { plant, phi, obs, sets: vec![], index: HashMap::new(), trans: HashMap::new() };
        let init = d.closure(vec![NState::Live(plant.initial, phi.initial, vec![])]);
        d.intern(init);
        d
    }

    fn closure(&self, start: Vec<NState>) -> BTreeSet<NState> {
        let mut set: BTreeSet<NState> = start.iter().cloned().collect();
        let mut stack = start;
        while let Some(n) = stack.pop() {
            let NState::Live(s, f, buf) = &n else { continue };
            let mut next = vec![];
            if !self.phi.accepting[*f] {
                next.push(NState::Pending(self.obs.flush(buf)));
            }
            for (x, d) in &self.plant.succ[*s] {
                let (b, e) = self.obs.step(buf, x);
                if e.is_none() {
                    next.push(NState::Live(*d, self.phi.step(*f, x), b));
                }
            }
            for m in next {
                if set.insert(m.clone()) {
                    stack.push(m);
                }
            }
        }
        set
    }

    fn intern(&mut self, set: BTreeSet<NState>) -> usize {
        if let Some(&i) = self.index.get(&set) {
            return i;
        }
        self.sets.push(set.clone());
        self.index.insert(set, self.sets.len() - 1);
        self.sets.len() - 1
    }

    fn step(&mut self, d: usize, a: &Label) -> usize {
        if let Some(&t) = self.trans.get(&(d, a.clone())) {
            return t;
        }
        let mut next = vec![];
        for n in &self.sets[d] {
            match n {
                NState::Live(s, f, buf) => {
                    for (x, t) in &self.plant.succ[*s] {
                        let (b, e) = self.obs.step(buf, x);
                        if e.as_ref() == Some(a) {
                            next.push(NState::Live(*t, self.phi.step(*f, x), b));
                        }
                    }
                }
                NState::Pending(v) if v.first() == Some(a) => next.push(NState::Pending(v[1..].to_vec())),
                NState::Pending(_) => {}
            }
        }
        let set = self.closure(next);
        let t = self.intern(set);
        self.trans.insert((d, a.clone()), t);
        t
    }

    fn accepting(&self, d: usize) -> bool {
        self.sets[d].contains(&NState::Pending(vec![]))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct MState {
    f: usize,
    buf: Vec<Label>,
    emitted: bool,
    d: usize,
}

/// Deterministic safety monitor over traces of the plant.
pub struct Monitor<'a> {
    image: ImageDfa<'a>,
    states: Vec<MState>,
    index: HashMap<MState, usize>,
    trans: HashMap<(usize, Label), usize>,
    safe: HashMap<usize, bool>,
    max_states: usize,
}

impl<'a> Monitor<'a> {
    pub fn new(plant: &'a Lts, phi: &'a Dfa, obs: &'a WindowedObserver, max_states: usize) -> Self {
        let image = ImageDfa::new(plant, phi, obs);
        let init = MState { f: phi.initial, buf: vec![], emitted: false, d: 0 };
        Monitor {
            image,
            states: vec![init.clone()],
            index: HashMap::from([(init, 0)]),
            trans: HashMap::new(),
            safe: HashMap::new(),
            max_states,
        }
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn image_states(&self) -> usize {
        self.image.sets.len()
    }

    fn check_budget(&self) -> Result<()> {
        let n = self.states.len() + self.image.sets.len();
        if n > self.max_states {
            return Err(Error::Incomplete(self.max_states));
        }
        Ok(())
    }

    pub fn step(&mut self, m: usize, x: &Label) -> Result<usize> {
        if let Some(&t) = self.trans.get(&(m, x.clone())) {
            return Ok(t);
        }
        let cur = self.states[m].clone();
        let (buf, e) = self.image.obs.step(&cur.buf, x);
        let mut next = MState { f: self.image.phi.step(cur.f, x), buf, emitted: cur.emitted, d: cur.d };
        if let Some(a) = e {
            next.d = self.image.step(cur.d, &a);
            next.emitted = true;
        }
        let id = match self.index.get(&next) {
            Some(&i) => i,
            None => {
                self.states.push(next.clone());
                self.index.insert(next, self.states.len() - 1);
                self.states.len() - 1
            }
        };
        self.trans.insert((m, x.clone()), id);
        self.check_budget()?;
        Ok(id)
    }

    /// Is every trace leading to `m` safe?
    pub fn is_safe(&mut self, m: usize) -> Result<bool> {
        if let Some(&b) = self.safe.get(&m) {
            return Ok(b);
        }
        let st = self.states[m].clone();
        let tail = self.image.obs.flush(&st.buf);
        let b = if !self.image.phi.accepting[st.f] || (!st.emitted && tail.is_empty()) {
            true
        } else {
            let mut d = st.d;
            for a in &tail {
                d = self.image.step(d, a);
            }
            self.check_budget()?;
            self.image.accepting(d)
        };
        self.safe.insert(m, b);
        Ok(b)
    }
}

pub(crate) fn finite_state(o: &Observer) -> Result<WindowedObserver> {
    o.as_windowed()
        .ok_or_else(|| Error::Observer("custom observers only support bounded checks".into()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OpacityVerdict {
    Opaque,
    NotOpaque { witness: Trace, observable: Trace },
    Incomplete { bound: usize },
}

impl OpacityVerdict {
    pub fn is_opaque(&self) -> bool {
        matches!(self, OpacityVerdict::Opaque)
    }
}

pub fn check_opacity(plant: &Lts, phi: &Predicate, attacker: &Observer) -> Result<OpacityVerdict> {
    check_opacity_bounded(plant, phi, attacker, DEFAULT_MAX_STATES)
}

pub fn check_opacity_bounded(
    plant: &Lts,
    phi: &Predicate,
    attacker: &Observer,
    max_states: usize,
) -> Result<OpacityVerdict> {
    let obs = finite_state(attacker)?;
    if !plant.complete {
        return Ok(OpacityVerdict::Incomplete { bound: plant.num_states() });
    }
    match unsafe_trace(plant, &phi.dfa, &obs, max_states) {
        Ok(None) => Ok(OpacityVerdict::Opaque),
        Ok(Some(witness)) => {
            let observable = attacker.observe(&witness);
            Ok(OpacityVerdict::NotOpaque { witness, observable })
        }
        Err(Error::Incomplete(bound)) => Ok(OpacityVerdict::Incomplete { bound }),
        Err(e) => Err(e),
    }
}

fn unsafe_trace(plant: &Lts, phi: &Dfa, obs: &WindowedObserver, max_states: usize) -> Result<Option<Trace>> {
    let mut mon = Monitor::new(plant, phi, obs, max_states);
    first_unsafe(plant, &mut mon, max_states)
}

/// Shortest (then lexicographically least) trace of `system` that the
/// monitor rejects.
pub(crate) fn first_unsafe(system: &Lts, mon: &mut Monitor, max_states: usize) -> Result<Option<Trace>> {
    let start = (system.initial, mon.initial());
    let mut parent: HashMap<(usize, usize), ((usize, usize), Label)> = HashMap::new();
    let mut seen = std::collections::HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        if !mon.is_safe(cur.1)? {
            let mut w = vec![];
            let mut at = cur;
            while let Some((p, l)) = parent.get(&at) {
                w.push(l.clone());
                at = *p;
            }
            w.reverse();
            return Ok(Some(w));
        }
        let mut succ: Vec<&(Label, usize)> = system.succ[cur.0].iter().collect();
        succ.sort();
        for (x, d) in succ {
            let next = (*d, mon.step(cur.1, x)?);
            if seen.insert(next) {
                if seen.len() > max_states {
                    return Err(Error::Incomplete(max_states));
                }
                parent.insert(next, (cur, x.clone()));
                queue.push_back(next);
            }
        }
    }
    Ok(None)
}

/// DFA for the safe traces of the plant.
#[derive(Clone, Debug, Serialize)]
pub struct SafeTraceAutomaton {
    pub dfa: Dfa,
    /// DFA for all traces of the plant, over the same state space.
    pub traces: Dfa,
    pub monitor_states: usize,
    pub image_states: usize,
}

pub fn safe_automaton(plant: &Lts, phi: &Predicate, attacker: &Observer) -> Result<SafeTraceAutomaton> {
    safe_automaton_bounded(plant, phi, attacker, DEFAULT_MAX_STATES)
}

pub fn safe_automaton_bounded(
    plant: &Lts,
    phi: &Predicate,
    attacker: &Observer,
    max_states: usize,
) -> Result<SafeTraceAutomaton> {
    plant.require_complete()?;
    let obs = finite_state(attacker)?;
    let mut mon = Monitor::new(plant, &phi.dfa, &obs, max_states);
    let letters: BTreeSet<Label> = plant.transitions().map(|(_, l, _)| l.clone()).collect();
    type Key = (BTreeSet<usize>, usize);
    let dead: Key = (BTreeSet::new(), usize::MAX);
    let init: Key = (BTreeSet::from([plant.initial]), mon.initial());
    let mut keys = vec![dead.clone(), init.clone()];
    let mut index: HashMap<Key, usize> = HashMap::from([(dead, 0), (init, 1)]);
    let mut dfa = Dfa { initial: 1, accepting: vec![], trans: vec![], default: vec![] };
    let mut i = 0;
    while i < keys.len() {
        let (set, m) = keys[i].clone();
        let mut trans = std::collections::BTreeMap::new();
        if !set.is_empty() {
            for x in &letters {
                let next: BTreeSet<usize> = set.iter().flat_map(|&s| plant.successors(s, x)).collect();
                if next.is_empty() {
                    continue;
                }
                let key = (next, mon.step(m, x)?);
                let id = match index.get(&key) {
                    Some(&id) => id,
                    None => {
                        keys.push(key.clone());
                        index.insert(key, keys.len() - 1);
                        keys.len() - 1
                    }
                };
                trans.insert(x.clone(), id);
            }
        }
        if keys.len() > max_states {
            return Err(Error::Incomplete(max_states));
        }
        dfa.accepting.push(!set.is_empty() && mon.is_safe(m)?);
        dfa.trans.push(trans);
        dfa.default.push(0);
        i += 1;
    }
    let traces = Dfa {
        accepting: keys.iter().map(|(s, _)| !s.is_empty()).collect(),
        ..dfa.clone()
    };
    Ok(SafeTraceAutomaton { dfa, traces, monitor_states: mon.num_states(), image_states: mon.image_states() })
}

impl SafeTraceAutomaton {
    pub fn contains(&self, w: &[Label]) -> bool {
        self.dfa.accepts(w)
    }

    /// Is every trace of the plant safe?
    pub fn is_everything(&self) -> bool {
        self.traces.included_in(&self.dfa).is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum TimingVerdict {
    Prone { timed: OpacityVerdict },
    NotProne { timed: OpacityVerdict, untimed: OpacityVerdict },
    Incomplete { bound: usize },
}

/// Leaks under the attacker, but not under its time-blind counterpart.
pub fn check_timing_attack(plant: &Lts, phi: &Predicate, attacker: &Observer) -> Result<TimingVerdict> {
    let timed = check_opacity(plant, phi, attacker)?;
    let untimed = check_opacity(plant, phi, &attacker.derive_untimed())?;
    Ok(match (&timed, &untimed) {
        (OpacityVerdict::Incomplete { bound }, _) | (_, OpacityVerdict::Incomplete { bound }) => {
            TimingVerdict::Incomplete { bound: *bound }
        }
        (OpacityVerdict::NotOpaque { .. }, OpacityVerdict::Opaque) => TimingVerdict::Prone { timed },
        _ => TimingVerdict::NotProne { timed, untimed },
    })
}

/// One instance of the monotonicity property: with `phi2 => phi1` and `o2`
/// weaker than `o1`, opacity for (`phi1`, `o1`) implies opacity for
/// (`phi2`, `o2`). `None` if the premises do not hold.
pub fn check_monotonicity_instance(
    plant: &Lts,
    phi1: &Predicate,
    phi2: &Predicate,
    o1: &Observer,
    o2: &Observer,
) -> Result<Option<bool>> {
    if compare_observers(o2, o1, 4) != Comparison::Stronger || phi2.included_in(phi1).is_some() {
        return Ok(None);
    }
    let v1 = check_opacity(plant, phi1, o1)?;
    let v2 = check_opacity(plant, phi2, o2)?;
    Ok(Some(!v1.is_opaque() || v2.is_opaque()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reading {
    /// Every unsafe trace of the plant can be made safe by inserting `t`.
    Repaired,
    /// Every word satisfying the predicate has a `t`-padding that does not.
    Literal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Dependability {
    pub holds: bool,
    pub counterexample: Option<Trace>,
}

pub fn is_time_dependable(plant: &Lts, phi: &Predicate, attacker: &Observer, reading: Reading) -> Result<Dependability> {
    plant.require_complete()?;
    let counterexample = match reading {
        Reading::Repaired => repaired_counterexample(plant, phi, attacker)?,
        Reading::Literal => literal_counterexample(&phi.dfa),
    };
    Ok(Dependability { holds: counterexample.is_none(), counterexample })
}

fn repaired_counterexample(plant: &Lts, phi: &Predicate, attacker: &Observer) -> Result<Option<Trace>> {
    let obs = finite_state(attacker)?;
    let mut mon = Monitor::new(plant, &phi.dfa, &obs, DEFAULT_MAX_STATES);
    // plant states reached by exactly `w`, the monitor state of `w`, and the
    // product states reached by paddings of `w`
    type Key = (BTreeSet<usize>, usize, BTreeSet<(usize, usize)>);
    let pad = |mon: &mut Monitor, g: BTreeSet<(usize, usize)>| -> Result<BTreeSet<(usize, usize)>> {
        let mut g = g;
        let mut stack: Vec<(usize, usize)> = g.iter().cloned().collect();
        while let Some((s, m)) = stack.pop() {
            for d in plant.successors(s, &Label::Time) {
                let n = (d, mon.step(m, &Label::Time)?);
                if g.insert(n) {
                    stack.push(n);
                }
            }
        }
        Ok(g)
    };
    let m0 = mon.initial();
    let g0 = pad(&mut mon, BTreeSet::from([(plant.initial, m0)]))?;
    let init: Key = (BTreeSet::from([plant.initial]), m0, g0);
    let letters: BTreeSet<Label> = plant.transitions().map(|(_, l, _)| l.clone()).collect();
    let mut seen = std::collections::HashSet::from([init.clone()]);
    let mut queue = VecDeque::from([(init, vec![])]);
    while let Some(((set, m, g), w)) = queue.pop_front() {
        if !mon.is_safe(m)? {
            let mut repaired = false;
            for &(_, gm) in &g {
                if mon.is_safe(gm)? {
                    repaired = true;
                    break;
                }
            }
            if !repaired {
                return Ok(Some(w));
            }
        }
        for x in &letters {
            let next: BTreeSet<usize> = set.iter().flat_map(|&s| plant.successors(s, x)).collect();
            if next.is_empty() {
                continue;
            }
            let mut g2 = BTreeSet::new();
            for &(s, gm) in &g {
                for d in plant.successors(s, x) {
                    g2.insert((d, mon.step(gm, x)?));
                }
            }
            let key = (next, mon.step(m, x)?, pad(&mut mon, g2)?);
            if seen.insert(key.clone()) {
                if seen.len() > DEFAULT_MAX_STATES {
                    return Err(Error::Incomplete(DEFAULT_MAX_STATES));
                }
                let mut w2 = w.clone();
                w2.push(x.clone());
                queue.push_back((key, w2));
            }
        }
    }
    Ok(None)
}

fn literal_counterexample(phi: &Dfa) -> Option<Trace> {
    let pad = |f: usize| -> BTreeSet<usize> {
        let mut g = BTreeSet::from([f]);
        let mut stack = vec![f];
        while let Some(s) = stack.pop() {
            let d = phi.step(s, &Label::Time);
            if g.insert(d) {
                stack.push(d);
            }
        }
        g
    };
    let mut letters = phi.letters();
    letters.insert(Label::Time);
    letters.insert(fresh_label(&letters, 0));
    let step = |g: &BTreeSet<usize>, x: &Label| -> BTreeSet<usize> {
        g.iter().flat_map(|&s| pad(phi.step(s, x))).collect()
    };
    let init = (phi.initial, pad(phi.initial));
    let mut seen = std::collections::HashSet::from([init.clone()]);
    let mut queue = VecDeque::from([(init, vec![])]);
    while let Some(((f, g), w)) = queue.pop_front() {
        if phi.accepting[f] && g.iter().all(|&s| phi.accepting[s]) {
            return Some(w);
        }
        for x in &letters {
            let key = (phi.step(f, x), step(&g, x));
            if seen.insert(key.clone()) {
                let mut w2: Trace = w.clone();
                w2.push(x.clone());
                queue.push_back((key, w2));
            }
        }
    }
    None
}
