//! Complete deterministic automata over the (infinite) label alphabet.
//!
//! Every state has a handful of explicit letter transitions and a default
//! target used for all other letters, so the automata stay total without
//! enumerating the alphabet.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{Label, Trace};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dfa {
    pub initial: usize,
    pub accepting: Vec<bool>,
    pub trans: Vec<BTreeMap<Label, usize>>,
    pub default: Vec<usize>,
}

/// A label that does not occur in `used`, standing for "any other letter".
pub fn fresh_label(used: &BTreeSet<Label>, k: usize) -> Label {
    let mut found = 0;
    for i in 0.. {
        let l = Label::act(&format!("z{i}"));
        if !used.contains(&l) {
            if found == k {
                return l;
            }
            found += 1;
        }
    }
    unreachable!()
}

impl Dfa {
    /// `n` states, all non-accepting, every letter looping.
    pub fn new(n: usize, initial: usize) -> Self {
        Dfa {
            initial,
            accepting: vec![false; n],
            trans: vec![BTreeMap::new(); n],
            default: (0..n).collect(),
        }
    }

    /// Accepts everything (or nothing).
    pub fn constant(accept: bool) -> Self {
        let mut d = Dfa::new(1, 0);
        d.accepting[0] = accept;
        d
    }

    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn add_transition(&mut self, from: usize, l: Label, to: usize) {
        self.trans[from].insert(l, to);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_states();
        let bad = |s: usize| s >= n;
        if n == 0 || bad(self.initial) || self.trans.len() != n || self.default.len() != n {
            return Err(Error::Predicate("malformed automaton".into()));
        }
        if self.default.iter().any(|&d| bad(d)) || self.trans.iter().flat_map(|m| m.values()).any(|&d| bad(d)) {
            return Err(Error::Predicate("transition target out of range".into()));
        }
        Ok(())
    }

    pub fn step(&self, s: usize, l: &Label) -> usize {
        self.trans[s].get(l).copied().unwrap_or(self.default[s])
    }

    pub fn run(&self, word: &[Label]) -> usize {
        word.iter().fold(self.initial, |s, l| self.step(s, l))
    }

    pub fn accepts(&self, word: &[Label]) -> bool {
        self.accepting[self.run(word)]
    }

    /// Letters mentioned by some explicit transition.
    pub fn letters(&self) -> BTreeSet<Label> {
        self.trans.iter().flat_map(|m| m.keys().cloned()).collect()
    }

    pub fn complement(&self) -> Dfa {
        let mut d = self.clone();
        d.accepting.iter_mut().for_each(|a| *a = !*a);
        d
    }

    /// Synchronous product; a pair accepts iff `f` says so.
    pub fn product(&self, other: &Dfa, f: impl Fn(bool, bool) -> bool) -> Dfa {
        let letters: BTreeSet<Label> = self.letters().union(&other.letters()).cloned().collect();
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut pairs = vec![(self.initial, other.initial)];
        index.insert(pairs[0], 0);
        let mut d = Dfa { initial: 0, accepting: vec![], trans: vec![], default: vec![] };
        let mut i = 0;
        while i < pairs.len() {
            let (a, b) = pairs[i];
            let mut target = |p: (usize, usize), pairs: &mut Vec<(usize, usize)>| {
                *index.entry(p).or_insert_with(|| {
                    pairs.push(p);
                    pairs.len() - 1
                })
            };
            let def = target((self.default[a], other.default[b]), &mut pairs);
            let mut m = BTreeMap::new();
            for l in &letters {
                let t = target((self.step(a, l), other.step(b, l)), &mut pairs);
                if t != def {
                    m.insert(l.clone(), t);
                }
            }
            d.accepting.push(f(self.accepting[a], other.accepting[b]));
            d.trans.push(m);
            d.default.push(def);
            i += 1;
        }
        d
    }

    pub fn intersect(&self, other: &Dfa) -> Dfa {
        self.product(other, |a, b| a && b)
    }

    pub fn union(&self, other: &Dfa) -> Dfa {
        self.product(other, |a, b| a || b)
    }

    /// Reachable states, in BFS order from the initial state.
    pub fn reachable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_states()];
        let mut order = vec![self.initial];
        seen[self.initial] = true;
        let mut i = 0;
        while i < order.len() {
            let s = order[i];
            for d in self.trans[s].values().chain(std::iter::once(&self.default[s])) {
                if !seen[*d] {
                    seen[*d] = true;
                    order.push(*d);
                }
            }
            i += 1;
        }
        order
    }

    /// Minimal equivalent automaton (unreachable states dropped, equivalent
    /// states merged by signature refinement).
    pub fn minimize(&self) -> Dfa {
        let letters: Vec<Label> = self.letters().into_iter().collect();
        let order = self.reachable();
        let mut block: HashMap<usize, usize> = order.iter().map(|&s| (s, usize::from(self.accepting[s]))).collect();
        let mut count = order.iter().map(|&s| self.accepting[s]).collect::<BTreeSet<_>>().len();
        loop {
            let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
            let mut next = HashMap::new();
            for &s in &order {
                let mut sig = vec![block[&s], block[&self.default[s]]];
                sig.extend(letters.iter().map(|l| block[&self.step(s, l)]));
                let fresh = index.len();
                next.insert(s, *index.entry(sig).or_insert(fresh));
            }
            let done = index.len() == count;
            count = index.len();
            block = next;
            if done {
                break;
            }
        }
        // renumber blocks in BFS order so the result is canonical
        let mut renum: HashMap<usize, usize> = HashMap::new();
        let mut reps = vec![];
        for &s in &order {
            if let std::collections::hash_map::Entry::Vacant(e) = renum.entry(block[&s]) {
                e.insert(reps.len());
                reps.push(s);
            }
        }
        let id = |s: usize| renum[&block[&s]];
        let mut d = Dfa::new(reps.len(), id(self.initial));
        for (i, &s) in reps.iter().enumerate() {
            d.accepting[i] = self.accepting[s];
            d.default[i] = id(self.default[s]);
            for l in &letters {
                let t = id(self.step(s, l));
                if t != d.default[i] {
                    d.trans[i].insert(l.clone(), t);
                }
            }
        }
        d
    }

    /// A shortest accepted word, if any. Letters without explicit transitions
    /// are represented by a fresh label.
    pub fn shortest_accepted(&self) -> Option<Trace> {
        let letters = self.letters();
        let mut alphabet: Vec<Label> = letters.iter().cloned().collect();
        alphabet.push(fresh_label(&letters, 0));
        let mut parent: HashMap<usize, (usize, Label)> = HashMap::new();
        let mut queue = VecDeque::from([self.initial]);
        let mut seen = BTreeSet::from([self.initial]);
        while let Some(s) = queue.pop_front() {
            if self.accepting[s] {
                let mut w = vec![];
                let mut cur = s;
                while let Some((p, l)) = parent.get(&cur) {
                    w.push(l.clone());
                    cur = *p;
                }
                w.reverse();
                return Some(w);
            }
            for l in &alphabet {
                let d = self.step(s, l);
                if seen.insert(d) {
                    parent.insert(d, (s, l.clone()));
                    queue.push_back(d);
                }
            }
        }
        None
    }

    pub fn is_empty(&self) -> bool {
        self.shortest_accepted().is_none()
    }

    /// A shortest word accepted by exactly one of the two automata.
    pub fn difference_witness(&self, other: &Dfa) -> Option<Trace> {
        self.product(other, |a, b| a != b).shortest_accepted()
    }

    /// Is L(self) ⊆ L(other)? Returns a counterexample otherwise.
    pub fn included_in(&self, other: &Dfa) -> Option<Trace> {
        self.product(other, |a, b| a && !b).shortest_accepted()
    }
}
