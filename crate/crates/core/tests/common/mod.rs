#![allow(dead_code)]
//! Generators and independent brute-force oracles shared by the
//! integration tests.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tpa::automata::Dfa;
use tpa::lts::Lts;
use tpa::observation::{Fallback, Observer, StaticObserver};
use tpa::predicate::Predicate;
use tpa::semantics::build_lts;
use tpa::supervisor::{ControlDecision, SupervisorAutomaton};
use tpa::{Label, Term, Trace};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn l(s: &str) -> Label {
    Label::parse(s).unwrap()
}

pub fn word(s: &str) -> Trace {
    if s.is_empty() {
        return vec![];
    }
    s.split('.').map(l).collect()
}

/// Visible labels a plant may use. `'a` lets `a` synchronise.
pub fn plant_alphabet() -> Vec<Label> {
    vec![l("h"), l("l"), l("a"), l("'a")]
}

struct TermGen<'a> {
    letters: &'a [Label],
    next_var: usize,
}

impl TermGen<'_> {
    fn gen(&mut self, r: &mut ChaCha8Rng, depth: usize, vars: &[String], guarded: bool) -> Term {
        let can_var = guarded && !vars.is_empty();
        if depth == 0 {
            return if can_var && r.gen_bool(0.5) { Term::var(vars.choose(r).unwrap()) } else { Term::Nil };
        }
        match r.gen_range(0..12) {
            0 => Term::Nil,
            1..=5 => {
                let lab = match r.gen_range(0..10) {
                    0 => Label::Tau,
                    1 => Label::Time,
                    _ => self.letters.choose(r).unwrap().clone(),
                };
                Term::prefix(lab, self.gen(r, depth - 1, vars, true))
            }
            6 | 7 => Term::choice(self.gen(r, depth - 1, vars, guarded), self.gen(r, depth - 1, vars, guarded)),
            // recursion variables never cross a parallel composition, so the
            // result stays finite-state
            8 => Term::par(self.gen(r, depth - 1, &[], false), self.gen(r, depth - 1, &[], false)),
            9 => {
                let name = format!("X{}", self.next_var);
                self.next_var += 1;
                let mut vs = vars.to_vec();
                vs.push(name.clone());
                let body = self.gen(r, depth - 1, &vs, false);
                Term::rec(&name, body)
            }
            10 => {
                let names: Vec<String> =
                    self.letters.iter().filter_map(|x| x.action().map(|a| a.name.to_string())).collect();
                let n = names.choose(r).unwrap().clone();
                Term::restrict(self.gen(r, depth - 1, vars, guarded), [n.as_str()])
            }
            _ if can_var => Term::var(vars.choose(r).unwrap()),
            _ => Term::Nil,
        }
    }
}

pub fn random_term(r: &mut ChaCha8Rng, letters: &[Label], depth: usize) -> Term {
    TermGen { letters, next_var: 0 }.gen(r, depth, &[], false)
}

/// A random closed, guarded, regular term whose LTS has between
/// `min_states` and `max_states` states.
pub fn random_plant(r: &mut ChaCha8Rng, min_states: usize, max_states: usize) -> (Term, Lts) {
    let letters = plant_alphabet();
    loop {
        let depth = r.gen_range(2..=6);
        let t = random_term(r, &letters, depth);
        if !t.check_wellformed().ok() || !t.is_regular() {
            continue;
        }
        let lts = build_lts(&t, max_states + 1).unwrap();
        if lts.complete && lts.num_states() >= min_states && lts.num_states() <= max_states {
            return (t, lts);
        }
    }
}

/// Labels occurring on transitions.
pub fn lts_labels(lts: &Lts) -> BTreeSet<Label> {
    lts.succ.iter().flatten().map(|(x, _)| x.clone()).collect()
}

/// Static observer that erases, keeps or merges visible letters at random
/// and sometimes erases `t`.
pub fn random_static(r: &mut ChaCha8Rng) -> StaticObserver {
    let letters = plant_alphabet();
    let mut map = BTreeMap::new();
    for x in &letters {
        match r.gen_range(0..4) {
            0 => {
                map.insert(x.clone(), None);
            }
            1 => {
                map.insert(x.clone(), Some(letters.choose(r).unwrap().clone()));
            }
            _ => {}
        }
    }
    if r.gen_bool(0.25) {
        map.insert(Label::Time, None);
    }
    StaticObserver { map, default: Fallback::Id }
}

/// `g . o`: a coarsening of `o`, hence weaker.
pub fn coarsen(r: &mut ChaCha8Rng, o: &StaticObserver) -> StaticObserver {
    let mut img: Vec<Label> = plant_alphabet();
    img.push(Label::Time);
    let mut g: BTreeMap<Label, Option<Label>> = BTreeMap::new();
    for y in &img {
        let v = match r.gen_range(0..4) {
            0 => None,
            1 => Some(img.choose(r).unwrap().clone()),
            _ => Some(y.clone()),
        };
        g.insert(y.clone(), v);
    }
    let mut map = BTreeMap::new();
    for x in &img {
        let v = o.image(x).and_then(|y| g.get(&y).cloned().unwrap_or(Some(y)));
        map.insert(x.clone(), v);
    }
    StaticObserver { map, default: Fallback::Id }
}

/// Random predicate over the plant alphabet. It is false on every word made
/// of `tau` and `t` only.
pub fn random_predicate(r: &mut ChaCha8Rng) -> Predicate {
    let n = r.gen_range(2..=4);
    let mut d = Dfa::new(n, 0);
    for s in 0..n {
        d.default[s] = r.gen_range(0..n);
        for x in plant_alphabet().into_iter().chain([Label::Tau, Label::Time]) {
            if r.gen_bool(0.6) {
                d.add_transition(s, x, r.gen_range(0..n));
            }
        }
        d.accepting[s] = r.gen_bool(0.4);
    }
    // states reachable through tau and t alone must reject
    let mut quiet = BTreeSet::from([0]);
    let mut stack = vec![0];
    while let Some(s) = stack.pop() {
        for x in [Label::Tau, Label::Time] {
            let nx = d.step(s, &x);
            if quiet.insert(nx) {
                stack.push(nx);
            }
        }
    }
    for s in quiet {
        d.accepting[s] = false;
    }
    Predicate::from_dfa("phi", d).unwrap()
}

/// Predicate "contains a letter of `hidden`", built by hand.
pub fn contains_dfa(hidden: &[Label]) -> Predicate {
    let mut d = Dfa::new(2, 0);
    for h in hidden {
        d.add_transition(0, h.clone(), 1);
    }
    d.accepting[1] = true;
    Predicate::from_dfa("contains", d).unwrap()
}

/// Image of a word under a static observer, letter by letter.
pub fn observe(o: &StaticObserver, w: &[Label]) -> Trace {
    w.iter().filter_map(|x| o.image(x)).collect()
}

/// Is there a trace `w'` of the plant with `not phi(w')` and `o(w') = obs`?
/// Exact: simulates the plant-times-predicate product on the observation.
pub fn has_safe_match(lts: &Lts, phi: &Dfa, o: &StaticObserver, obs: &[Label]) -> bool {
    let close = |set: BTreeSet<(usize, usize)>| {
        let mut set = set;
        let mut stack: Vec<(usize, usize)> = set.iter().copied().collect();
        while let Some((s, q)) = stack.pop() {
            for (x, d) in &lts.succ[s] {
                if o.image(x).is_none() {
                    let n = (*d, phi.step(q, x));
                    if set.insert(n) {
                        stack.push(n);
                    }
                }
            }
        }
        set
    };
    let mut cur = close(BTreeSet::from([(lts.initial, phi.initial)]));
    for y in obs {
        let mut next = BTreeSet::new();
        for &(s, q) in &cur {
            for (x, d) in &lts.succ[s] {
                if o.image(x).as_ref() == Some(y) {
                    next.insert((*d, phi.step(q, x)));
                }
            }
        }
        cur = close(next);
        if cur.is_empty() {
            return false;
        }
    }
    cur.iter().any(|&(_, q)| !phi.accepting[q])
}

/// Is the trace `w` safe in the plant?
pub fn is_safe_trace(lts: &Lts, phi: &Dfa, o: &StaticObserver, w: &[Label]) -> bool {
    let obs = observe(o, w);
    !phi.accepts(w) || obs.is_empty() || has_safe_match(lts, phi, o, &obs)
}

/// Brute-force opacity: the first trace of length at most `depth` (in
/// depth-first order) that satisfies `phi`, is observed, and has no
/// observationally equal trace falsifying `phi`.
pub fn brute_opacity_violation(lts: &Lts, phi: &Dfa, o: &StaticObserver, depth: usize) -> Option<Trace> {
    let mut memo: HashMap<Trace, bool> = HashMap::new();
    let mut out = None;
    let mut w = vec![];
    dfs(lts, phi, o, depth, &BTreeSet::from([lts.initial]), &mut w, &mut memo, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    lts: &Lts,
    phi: &Dfa,
    o: &StaticObserver,
    depth: usize,
    states: &BTreeSet<usize>,
    w: &mut Trace,
    memo: &mut HashMap<Trace, bool>,
    out: &mut Option<Trace>,
) {
    if out.is_some() {
        return;
    }
    if phi.accepts(w) {
        let obs = observe(o, w);
        if !obs.is_empty() {
            let ok = *memo.entry(obs.clone()).or_insert_with(|| has_safe_match(lts, phi, o, &obs));
            if !ok {
                *out = Some(w.clone());
                return;
            }
        }
    }
    if w.len() == depth {
        return;
    }
    let mut by_label: BTreeMap<&Label, BTreeSet<usize>> = BTreeMap::new();
    for &s in states {
        for (x, d) in &lts.succ[s] {
            by_label.entry(x).or_default().insert(*d);
        }
    }
    for (x, next) in by_label {
        w.push(x.clone());
        dfs(lts, phi, o, depth, &next, w, memo, out);
        w.pop();
    }
}

/// Greatest strong bisimulation between the initial states, computed
/// directly on pairs.
pub fn naive_bisimilar(a: &Lts, b: &Lts) -> bool {
    let mut rel: BTreeSet<(usize, usize)> =
        (0..a.num_states()).flat_map(|p| (0..b.num_states()).map(move |q| (p, q))).collect();
    loop {
        let keep: BTreeSet<(usize, usize)> = rel
            .iter()
            .copied()
            .filter(|&(p, q)| {
                a.succ[p].iter().all(|(x, p2)| b.succ[q].iter().any(|(y, q2)| x == y && rel.contains(&(*p2, *q2))))
                    && b.succ[q].iter().all(|(y, q2)| a.succ[p].iter().any(|(x, p2)| x == y && rel.contains(&(*p2, *q2))))
            })
            .collect();
        if keep.len() == rel.len() {
            return rel.contains(&(a.initial, b.initial));
        }
        rel = keep;
    }
}

/// All words over `alphabet` of length at most `n`.
pub fn words(alphabet: &[Label], n: usize) -> Vec<Trace> {
    let mut out = vec![vec![]];
    let mut layer: Vec<Trace> = vec![vec![]];
    for _ in 0..n {
        layer = layer
            .iter()
            .flat_map(|w| {
                alphabet.iter().map(move |x| {
                    let mut v = w.clone();
                    v.push(x.clone());
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Random supervisor over the given observed symbols.
pub fn random_supervisor(r: &mut ChaCha8Rng, symbols: &[Label], c: &[Label], max_insert: usize) -> SupervisorAutomaton {
    let n = r.gen_range(1..=3);
    let mut sup = SupervisorAutomaton::never_intervene();
    sup.states = (0..n).collect();
    for q in 0..n {
        for s in symbols {
            if r.gen_bool(0.5) {
                sup.step.entry(q).or_default().insert(s.clone(), r.gen_range(0..n));
            }
        }
        let disabled = c.iter().filter(|_| r.gen_bool(0.3)).cloned().collect();
        let d = ControlDecision { disabled, insert: r.gen_range(0..=max_insert) };
        if d != ControlDecision::default() {
            sup.policy.insert(q, d);
        }
    }
    sup
}

/// A bisimilar copy: every state is split in two and each transition picks
/// one of the copies of its target at random.
pub fn split_supervisor(r: &mut ChaCha8Rng, sup: &SupervisorAutomaton, symbols: &[Label]) -> SupervisorAutomaton {
    let n = sup.num_states();
    let copy = |q: usize, b: usize| q * 2 + b;
    let mut out = SupervisorAutomaton::never_intervene();
    out.states = (0..2 * n).collect();
    out.initial = copy(sup.initial, r.gen_range(0..2));
    for q in 0..n {
        for b in 0..2 {
            let me = copy(q, b);
            for s in symbols {
                let target = sup.next(q, s);
                let pick = if target == q { b } else { r.gen_range(0..2) };
                let to = copy(target, pick);
                if to != me {
                    out.step.entry(me).or_default().insert(s.clone(), to);
                }
            }
            let d = sup.decision(q);
            if d != ControlDecision::default() {
                out.policy.insert(me, d);
            }
        }
    }
    out
}

pub fn as_observer(o: &StaticObserver) -> Observer {
    Observer::Static(o.clone())
}

pub fn report(criterion: usize, pass: bool, detail: &str) {
    println!("criterion {criterion:>2}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
}
