//! Trace predicates, represented by complete DFAs.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::automata::Dfa;
use crate::error::{Error, Result};
use crate::label::{Label, Trace};
use crate::lts::Lts;
use crate::observation::Observer;
use crate::semantics::{Semantics, DEFAULT_MAX_STATES};
use crate::term::Term;

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum Origin {
    Builtin(String),
    Automaton,
    TestProcess(String),
    Derived(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct Predicate {
    pub name: String,
    pub dfa: Dfa,
    pub origin: Origin,
}

impl Predicate {
    pub fn from_dfa(name: &str, dfa: Dfa) -> Result<Self> {
        dfa.validate()?;
        Ok(Predicate { name: name.into(), dfa, origin: Origin::Automaton })
    }

    pub fn holds(&self, w: &[Label]) -> bool {
        self.dfa.accepts(w)
    }

    pub fn holds_on_empty(&self) -> bool {
        self.dfa.accepting[self.dfa.initial]
    }

    pub fn complement(&self) -> Predicate {
        Predicate {
            name: format!("not {}", self.name),
            dfa: self.dfa.complement(),
            origin: Origin::Derived(format!("not {}", self.name)),
        }
    }

    pub fn and(&self, other: &Predicate) -> Predicate {
        let name = format!("({} and {})", self.name, other.name);
        Predicate { dfa: self.dfa.intersect(&other.dfa).minimize(), origin: Origin::Derived(name.clone()), name }
    }

    pub fn or(&self, other: &Predicate) -> Predicate {
        let name = format!("({} or {})", self.name, other.name);
        Predicate { dfa: self.dfa.union(&other.dfa).minimize(), origin: Origin::Derived(name.clone()), name }
    }

    /// A shortest word on which the two predicates disagree.
    pub fn difference(&self, other: &Predicate) -> Option<Trace> {
        self.dfa.difference_witness(&other.dfa)
    }

    pub fn included_in(&self, other: &Predicate) -> Option<Trace> {
        self.dfa.included_in(&other.dfa)
    }
}

/// "w contains an action from `hidden`", together with the observer that
/// erases exactly those actions.
pub fn builtin_contains(hidden: &BTreeSet<Label>) -> Result<(Predicate, Observer)> {
    if hidden.is_empty() {
        return Err(Error::Predicate("contains needs at least one action".into()));
    }
    if let Some(l) = hidden.iter().find(|l| !l.is_visible()) {
        return Err(Error::Predicate(format!("`{l}` is not a visible action")));
    }
    let mut dfa = Dfa::new(2, 0);
    dfa.accepting[1] = true;
    for h in hidden {
        dfa.add_transition(0, h.clone(), 1);
    }
    let names: Vec<String> = hidden.iter().map(|l| l.to_string()).collect();
    let name = format!("contains {{{}}}", names.join(", "));
    let p = Predicate { name: name.clone(), dfa, origin: Origin::Builtin(name) };
    Ok((p, Observer::hiding(hidden)))
}

/// Converts a test process into an equivalent automaton.
///
/// Only tests that never move internally and never let time change their
/// state are accepted; for those the verdict of `passes_test` is decided
/// exactly by tracking the set of test states that can face each position of
/// the word.
pub fn from_test_process(name: &str, test: &Term) -> Result<Predicate> {
    let report = test.check_wellformed();
    if !report.ok() {
        return Err(Error::IllFormed(report.describe()));
    }
    if !test.is_regular() {
        return Err(Error::NotRegular(test.to_string()));
    }
    let lts = Semantics::default().build_lts(test, DEFAULT_MAX_STATES)?;
    lts.require_complete()?;
    for (s, l, d) in lts.transitions() {
        match l {
            Label::Tau => {
                return Err(Error::Predicate(format!(
                    "test `{name}` is not convertible: it has internal moves"
                )))
            }
            Label::Time if d != s => {
                return Err(Error::Predicate(format!(
                    "test `{name}` is not convertible: time changes its state"
                )))
            }
            _ => {}
        }
    }
    if (0..lts.num_states()).any(|s| !lts.enabled(s).contains(&Label::Time)) {
        return Err(Error::Predicate(format!("test `{name}` is not convertible: it blocks time")));
    }
    let dfa = TestConversion::new(&lts).run();
    Ok(Predicate { name: name.into(), dfa, origin: Origin::TestProcess(test.to_string()) })
}

/// Configurations are (test state, ticked already).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct ConvState {
    configs: BTreeSet<(usize, bool)>,
    /// every tick delay smaller than the current number of `t` letters is realizable
    prefix_ok: bool,
    /// the current number of `t` letters is realizable as a tick delay
    cur_covered: bool,
    /// every tick delay is realizable
    all: bool,
    /// two ticks are possible
    bad: bool,
}

struct TestConversion<'a> {
    lts: &'a Lts,
}

impl<'a> TestConversion<'a> {
    fn new(lts: &'a Lts) -> Self {
        TestConversion { lts }
    }

    fn tickable(&self, s: usize) -> bool {
        self.lts.successors(s, &Label::Tick).next().is_some()
    }

    fn close(&self, mut st: ConvState) -> ConvState {
        let mut stack: Vec<(usize, bool)> = st.configs.iter().cloned().collect();
        while let Some((s, ticked)) = stack.pop() {
            if !self.tickable(s) {
                continue;
            }
            if ticked {
                st.bad = true;
                continue;
            }
            st.cur_covered = true;
            for d in self.lts.successors(s, &Label::Tick) {
                if st.configs.insert((d, true)) {
                    stack.push((d, true));
                }
            }
        }
        st
    }

    fn step(&self, st: &ConvState, x: &Label) -> ConvState {
        let mut next = st.clone();
        match x {
            Label::Tau => {}
            Label::Time => {
                next.prefix_ok &= st.cur_covered;
                next.cur_covered = false;
            }
            _ => {
                next.configs.clear();
                let want = match x {
                    Label::Act(a) => Some(Label::Act(a.complement())),
                    _ => None,
                };
                for &(s, ticked) in &st.configs {
                    let succ: Vec<usize> = match &want {
                        Some(l) => self.lts.successors(s, l).collect(),
                        None => vec![],
                    };
                    if succ.is_empty() {
                        // stuck for good: it idles and may tick at any later time
                        if !ticked && self.tickable(s) && st.prefix_ok {
                            next.all = true;
                        }
                    }
                    next.configs.extend(succ.into_iter().map(|d| (d, ticked)));
                }
            }
        }
        self.close(next)
    }

    fn accepting(&self, st: &ConvState) -> bool {
        let idle_tick = st.prefix_ok && st.configs.iter().any(|&(s, ticked)| !ticked && self.tickable(s));
        !st.bad && (st.all || idle_tick)
    }

    fn run(&self) -> Dfa {
        let mut letters: BTreeSet<Label> = BTreeSet::from([Label::Tau, Label::Time]);
        for (_, l, _) in self.lts.transitions() {
            if let Label::Act(a) = l {
                letters.insert(Label::Act(a.complement()));
            }
        }
        let init = self.close(ConvState {
            configs: BTreeSet::from([(self.lts.initial, false)]),
            prefix_ok: true,
            cur_covered: false,
            all: false,
            bad: false,
        });
        let mut index: HashMap<ConvState, usize> = HashMap::from([(init.clone(), 0)]);
        let mut states = vec![init];
        let mut dfa = Dfa { initial: 0, accepting: vec![], trans: vec![], default: vec![] };
        let other = Label::act("\u{0}other");
        let mut i = 0;
        while i < states.len() {
            let st = states[i].clone();
            let mut id = |s: ConvState, states: &mut Vec<ConvState>| {
                *index.entry(s.clone()).or_insert_with(|| {
                    states.push(s);
                    states.len() - 1
                })
            };
            let def = id(self.step(&st, &other), &mut states);
            let mut m = std::collections::BTreeMap::new();
            for l in &letters {
                let d = id(self.step(&st, l), &mut states);
                if d != def {
                    m.insert(l.clone(), d);
                }
            }
            dfa.accepting.push(self.accepting(&st));
            dfa.trans.push(m);
            dfa.default.push(def);
            i += 1;
        }
        dfa.minimize()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivalence::passes_test;
    use crate::label::parse_trace;
    use crate::parser::parse_term;

    fn w(s: &str) -> Trace {
        parse_trace(s).unwrap()
    }

    fn contains_h() -> Predicate {
        builtin_contains(&BTreeSet::from([Label::act("h")])).unwrap().0
    }

    #[test]
    fn contains_examples() {
        let p = contains_h();
        assert!(p.holds(&w("h.l")));
        assert!(p.holds(&w("h")));
        assert!(!p.holds(&[]));
        assert!(!p.holds(&w("t.l")));
        assert!(!p.holds(&w("t.t")));
        assert!(!p.complement().holds(&w("h.l")));
        assert!(p.complement().holds(&w("t.l")));
        assert!(p.complement().complement().difference(&p).is_none());
        assert!(builtin_contains(&BTreeSet::new()).is_err());
    }

    #[test]
    fn boolean_combinations() {
        let (k, _) = builtin_contains(&BTreeSet::from([Label::act("k")])).unwrap();
        let both = contains_h().and(&k);
        assert!(both.holds(&w("k.h")) && !both.holds(&w("h")));
        assert!(contains_h().or(&k).holds(&w("k")));
        assert!(both.included_in(&contains_h()).is_none());
    }

    fn all_words(alphabet: &[Label], max: usize) -> Vec<Trace> {
        let mut out = vec![vec![]];
        let mut layer = vec![vec![]];
        for _ in 0..max {
            layer = layer
                .iter()
                .flat_map(|w: &Trace| {
                    alphabet.iter().map(move |x| {
                        let mut n = w.clone();
                        n.push(x.clone());
                        n
                    })
                })
                .collect();
            out.extend(layer.iter().cloned());
        }
        out
    }

    #[test]
    fn converted_tests_agree_with_passes_test() {
        let alphabet = [Label::act("h"), Label::act("l"), Label::Time, Label::act("a")];
        for src in [
            "rec X. ('h.tick.0 + 'l.X)",
            "tick.0",
            "'h.tick.0 | 'l.0",
            "rec X. ('l.X + 'h.(tick.0 + 'l.0))",
            "'h.tick.tick.0",
            "rec X. ('h.tick.X + 'l.X)",
        ] {
            let t = parse_term(src).unwrap();
            let p = from_test_process("T", &t).unwrap();
            for word in all_words(&alphabet, 4) {
                assert_eq!(p.holds(&word), passes_test(&word, &t).unwrap(), "{src} on {word:?}");
            }
        }
    }

    #[test]
    fn contains_test_minimizes() {
        let t = parse_term("rec X. ('h.tick.0 + 'l.X)").unwrap();
        let p = from_test_process("T", &t).unwrap();
        assert!(p.holds(&w("l.h")));
        assert!(!p.holds(&w("l")));
        // accepting sink, waiting state and a dead state for foreign letters
        assert_eq!(p.dfa.num_states(), 3);
        let all = from_test_process("T", &parse_term("tick.0").unwrap()).unwrap();
        assert_eq!(all.dfa.num_states(), 1);
        assert!(all.holds(&[]) && all.holds(&w("a")));
    }

    #[test]
    fn non_convertible_tests() {
        assert!(matches!(
            from_test_process("T", &parse_term("rec X. 'a.(X | tick.0)").unwrap()),
            Err(Error::NotRegular(_))
        ));
        assert!(from_test_process("T", &parse_term("t.tick.0").unwrap()).is_err());
        assert!(from_test_process("T", &parse_term("tau.tick.0").unwrap()).is_err());
    }
}
