//! Explicit labelled transition systems and trace-level queries on them.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{Label, Trace};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts {
    /// Human-readable description of each state (the canonical term for
    /// systems built from terms).
    pub names: Vec<String>,
    pub initial: usize,
    /// Sorted, duplicate-free outgoing transitions per state.
    pub succ: Vec<Vec<(Label, usize)>>,
    /// False when exploration stopped at the state budget.
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceSet {
    pub traces: BTreeSet<Trace>,
    /// Set when the underlying system was truncated, so the set is only a
    /// lower bound.
    pub partial: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSet {
    pub labels: BTreeSet<Label>,
    pub partial: bool,
}

impl Lts {
    pub fn new(names: Vec<String>, initial: usize, mut succ: Vec<Vec<(Label, usize)>>, complete: bool) -> Self {
        for out in succ.iter_mut() {
            out.sort();
            out.dedup();
        }
        Lts { names, initial, succ, complete }
    }

    /// Builds an LTS from an edge list over states `0..n`.
    pub fn from_edges(n: usize, initial: usize, edges: &[(usize, Label, usize)]) -> Self {
        let mut succ = vec![Vec::new(); n];
        for (s, l, d) in edges {
            succ[*s].push((l.clone(), *d));
        }
        Lts::new((0..n).map(|i| i.to_string()).collect(), initial, succ, true)
    }

    pub fn num_states(&self) -> usize {
        self.succ.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.succ.iter().map(|v| v.len()).sum()
    }

    pub fn transitions(&self) -> impl Iterator<Item = (usize, &Label, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(s, out)| out.iter().map(move |(l, d)| (s, l, *d)))
    }

    pub fn require_complete(&self) -> Result<()> {
        if self.complete {
            Ok(())
        } else {
            Err(Error::Incomplete(self.num_states()))
        }
    }

    /// Labels of the immediate outgoing transitions of `s`.
    pub fn enabled(&self, s: usize) -> BTreeSet<Label> {
        self.succ[s].iter().map(|(l, _)| l.clone()).collect()
    }

    /// All labels occurring on reachable transitions.
    pub fn sort(&self) -> LabelSet {
        let mut labels = BTreeSet::new();
        for s in self.reachable() {
            labels.extend(self.succ[s].iter().map(|(l, _)| l.clone()));
        }
        LabelSet { labels, partial: !self.complete }
    }

    pub fn reachable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_states()];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(s) = queue.pop_front() {
            order.push(s);
            for (_, d) in &self.succ[s] {
                if !seen[*d] {
                    seen[*d] = true;
                    queue.push_back(*d);
                }
            }
        }
        order
    }

    pub fn successors<'a>(&'a self, s: usize, l: &'a Label) -> impl Iterator<Item = usize> + 'a {
        self.succ[s].iter().filter(move |(x, _)| x == l).map(|(_, d)| *d)
    }

    /// All traces of length at most `depth` from the initial state.
    pub fn traces(&self, depth: usize) -> TraceSet {
        let mut traces = BTreeSet::new();
        let mut layer: BTreeSet<(Trace, usize)> = BTreeSet::from([(Vec::new(), self.initial)]);
        traces.insert(Vec::new());
        for _ in 0..depth {
            let mut next = BTreeSet::new();
            for (tr, s) in &layer {
                for (l, d) in &self.succ[*s] {
                    let mut t2 = tr.clone();
                    t2.push(l.clone());
                    traces.insert(t2.clone());
                    next.insert((t2, *d));
                }
            }
            layer = next;
        }
        TraceSet { traces, partial: !self.complete }
    }

    pub fn has_trace(&self, trace: &[Label]) -> bool {
        let mut cur: BTreeSet<usize> = BTreeSet::from([self.initial]);
        for l in trace {
            cur = cur.iter().flat_map(|&s| self.successors(s, l)).collect();
            if cur.is_empty() {
                return false;
            }
        }
        true
    }

    pub fn tau_closure(&self, states: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let mut out: BTreeSet<usize> = BTreeSet::new();
        let mut stack: Vec<usize> = states.into_iter().collect();
        while let Some(s) = stack.pop() {
            if out.insert(s) {
                stack.extend(self.successors(s, &Label::Tau));
            }
        }
        out
    }

    /// States reachable from `s` by `tau* x tau*`.
    pub fn weak_step(&self, s: usize, x: &Label) -> BTreeSet<usize> {
        assert!(*x != Label::Tau, "weak_step is defined for observable labels only");
        let before = self.tau_closure([s]);
        let mid: Vec<usize> = before.iter().flat_map(|&p| self.successors(p, x)).collect();
        self.tau_closure(mid)
    }

    /// True when every state has at most one time successor.
    pub fn is_time_deterministic(&self) -> bool {
        self.succ
            .iter()
            .all(|out| out.iter().filter(|(l, _)| *l == Label::Time).count() <= 1)
    }

    pub fn time_successor(&self, s: usize) -> Option<usize> {
        self.successors(s, &Label::Time).next()
    }

    pub fn to_json(&self) -> LtsJson {
        LtsJson {
            states: self
                .names
                .iter()
                .enumerate()
                .map(|(id, term)| StateJson { id, term: term.clone() })
                .collect(),
            initial: self.initial,
            transitions: self.transitions().map(|(s, l, d)| (s, l.clone(), d)).collect(),
            complete: self.complete,
        }
    }

    pub fn from_json(j: &LtsJson) -> Result<Lts> {
        let n = j.states.len();
        let mut succ = vec![Vec::new(); n];
        for (s, l, d) in &j.transitions {
            if *s >= n || *d >= n {
                return Err(Error::Model { line: 0, msg: format!("transition {s} -> {d} out of range") });
            }
            succ[*s].push((l.clone(), *d));
        }
        let mut names = vec![String::new(); n];
        for st in &j.states {
            if st.id < n {
                names[st.id] = st.term.clone();
            }
        }
        Ok(Lts::new(names, j.initial, succ, j.complete))
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph lts {\n  rankdir=LR;\n");
        let _ = writeln!(out, "  init [shape=point];\n  init -> s{};", self.initial);
        for (i, name) in self.names.iter().enumerate() {
            let _ = writeln!(out, "  s{i} [label=\"{}\"];", name.replace('\\', "\\\\").replace('"', "\\\""));
        }
        for (s, l, d) in self.transitions() {
            let style = if *l == Label::Time { ", style=dashed" } else { "" };
            let _ = writeln!(out, "  s{s} -> s{d} [label=\"{l}\"{style}];");
        }
        out.push_str("}\n");
        out
    }

    /// Disjoint union of two systems; states of `other` are shifted by
    /// `self.num_states()`.
    pub fn disjoint_union(&self, other: &Lts) -> Lts {
        let off = self.num_states();
        let mut succ = self.succ.clone();
        succ.extend(other.succ.iter().map(|out| out.iter().map(|(l, d)| (l.clone(), d + off)).collect()));
        let mut names = self.names.clone();
        names.extend(other.names.iter().cloned());
        Lts::new(names, self.initial, succ, self.complete && other.complete)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct StateJson {
    pub id: usize,
    pub term: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct LtsJson {
    pub states: Vec<StateJson>,
    pub initial: usize,
    pub transitions: Vec<(usize, Label, usize)>,
    pub complete: bool,
}

/// Checks `Tr(a) ⊆ Tr(b)` (with `tau` abstracted when `weak`), returning a
/// shortest trace of `a` that `b` cannot perform.
pub fn trace_inclusion(a: &Lts, b: &Lts, weak: bool) -> Option<Trace> {
    let close = |set: BTreeSet<usize>, lts: &Lts| if weak { lts.tau_closure(set) } else { set };
    let start_a: BTreeSet<usize> = close(BTreeSet::from([a.initial]), a);
    let start_b: BTreeSet<usize> = close(BTreeSet::from([b.initial]), b);
    // determinise both sides; a pair of subsets is a product state
    let mut seen: HashMap<(BTreeSet<usize>, BTreeSet<usize>), ()> = HashMap::new();
    let mut queue: VecDeque<(BTreeSet<usize>, BTreeSet<usize>, Trace)> = VecDeque::new();
    seen.insert((start_a.clone(), start_b.clone()), ());
    queue.push_back((start_a, start_b, Vec::new()));
    while let Some((sa, sb, tr)) = queue.pop_front() {
        let mut by_label: BTreeMap<&Label, BTreeSet<usize>> = BTreeMap::new();
        for &s in &sa {
            for (l, d) in &a.succ[s] {
                if weak && *l == Label::Tau {
                    continue;
                }
                by_label.entry(l).or_default().insert(*d);
            }
        }
        for (l, targets) in by_label {
            let na = close(targets, a);
            let nb_raw: BTreeSet<usize> = sb.iter().flat_map(|&s| b.successors(s, l)).collect();
            let mut tr2 = tr.clone();
            tr2.push(l.clone());
            if nb_raw.is_empty() {
                return Some(tr2);
            }
            let nb = close(nb_raw, b);
            if seen.insert((na.clone(), nb.clone()), ()).is_none() {
                queue.push_back((na, nb, tr2));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_term;
    use crate::semantics::build_lts;

    fn lts(src: &str) -> Lts {
        build_lts(&parse_term(src).unwrap(), 1000).unwrap()
    }

    fn tr(s: &str) -> Trace {
        crate::label::parse_trace(s).unwrap()
    }

    #[test]
    fn traces_of_nil() {
        let ts = lts("0").traces(2);
        let expect: BTreeSet<Trace> = [tr("eps"), tr("t"), tr("t.t")].into_iter().collect();
        assert_eq!(ts.traces, expect);
        assert!(!ts.partial);
    }

    #[test]
    fn traces_of_p1_contain_interleaved_time() {
        let ts = lts("h.l.0").traces(2);
        for w in ["h.l", "t.h", "h.t"] {
            assert!(ts.traces.contains(&tr(w)), "{w}");
        }
    }

    #[test]
    fn partial_traces_are_flagged() {
        let l = build_lts(&parse_term("rec X. a.(X | b.0)").unwrap(), 5).unwrap();
        assert!(l.traces(3).partial);
    }

    #[test]
    fn weak_steps() {
        let l = lts("tau.a.0");
        let nil = l.names.iter().position(|n| n == "0").unwrap();
        assert_eq!(l.weak_step(l.initial, &Label::act("a")), BTreeSet::from([nil]));
        let l = lts("a.0");
        assert_eq!(l.weak_step(l.initial, &Label::Time), BTreeSet::from([l.initial]));
        // time is blocked before the synchronisation, but tau* t tau* may
        // synchronise first
        let l = lts("a.0 | 'a.0");
        assert_eq!(l.time_successor(l.initial), None);
        let nil = l.names.iter().position(|n| n == "0").unwrap();
        assert_eq!(l.weak_step(l.initial, &Label::Time), BTreeSet::from([nil]));
    }

    #[test]
    fn enabled_and_sort() {
        let l = lts("h.l.0");
        let expect: BTreeSet<Label> = [Label::act("h"), Label::act("l"), Label::Time].into_iter().collect();
        assert_eq!(l.sort().labels, expect);
        let nil = lts("0");
        assert_eq!(nil.enabled(0), BTreeSet::from([Label::Time]));
        assert_eq!(lts("a.0\\{a}").sort().labels, BTreeSet::from([Label::Time]));
    }

    #[test]
    fn json_round_trip() {
        let l = lts("(a.0 | 'a.0)\\{a} + b.0");
        let j = serde_json::to_string(&l.to_json()).unwrap();
        assert!(j.contains("\"complete\":true"));
        let back: LtsJson = serde_json::from_str(&j).unwrap();
        assert_eq!(Lts::from_json(&back).unwrap(), l);
    }

    #[test]
    fn dot_marks_time_dashed() {
        let dot = lts("a.0").to_dot();
        assert!(dot.contains("label=\"t\", style=dashed"));
    }

    #[test]
    fn inclusion_witness() {
        let a = lts("a.b.0");
        let b = lts("a.0");
        assert_eq!(trace_inclusion(&a, &b, false), Some(tr("a.b")));
        assert_eq!(trace_inclusion(&b, &a, false), None);
    }
}
