//! Structural operational semantics: the CCS rules plus the time rules
//! (idling of `Nil` and of prefixes, time passing through `+` only when both
//! branches let it pass, and through `|` only when both components let it
//! pass and no internal step is possible).

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::label::Label;
use crate::lts::Lts;
use crate::term::Term;

pub const DEFAULT_MAX_STATES: usize = 100_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Semantics {
    /// When set, `tau.P` cannot idle (a `tau` prefix is urgent on its own,
    /// not only when it arises inside a parallel composition).
    pub strict_tau_urgency: bool,
}

/// A derived move. `None` as target means the term idles into itself.
type Move = (Label, Option<Term>);

impl Semantics {
    pub fn strict() -> Self {
        Semantics { strict_tau_urgency: true }
    }

    /// All `(label, successor)` pairs derivable for a closed, guarded term,
    /// sorted and without duplicates.
    pub fn step(&self, t: &Term) -> Result<Vec<(Label, Term)>> {
        let report = t.check_wellformed();
        if !report.ok() {
            return Err(Error::IllFormed(report.describe()));
        }
        Ok(self.step_unchecked(t))
    }

    pub(crate) fn step_unchecked(&self, t: &Term) -> Vec<(Label, Term)> {
        let mut out: Vec<(Label, Term)> = self
            .moves(t)
            .into_iter()
            .map(|(l, target)| (l, target.unwrap_or_else(|| t.clone())))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    fn moves(&self, t: &Term) -> Vec<Move> {
        match t {
            Term::Nil => vec![(Label::Time, None)],
            Term::Var(x) => panic!("open term reached the semantics: free variable {x}"),
            Term::Prefix(u, p) => {
                let mut out = vec![(u.clone(), Some((**p).clone()))];
                let idles = match u {
                    Label::Time => false,
                    Label::Tau => !self.strict_tau_urgency,
                    _ => true,
                };
                if idles {
                    out.push((Label::Time, None));
                }
                out
            }
            Term::Choice(p, q) => {
                let (mp, mq) = (self.moves(p), self.moves(q));
                let mut out = Vec::new();
                for (l, target) in mp.iter().chain(mq.iter()) {
                    if *l != Label::Time {
                        out.push((l.clone(), target.clone()));
                    }
                }
                for (lp, tp) in &mp {
                    if *lp != Label::Time {
                        continue;
                    }
                    for (lq, tq) in &mq {
                        if *lq != Label::Time {
                            continue;
                        }
                        out.push((Label::Time, join(tp, tq, p, q, Term::Choice)));
                    }
                }
                out
            }
            Term::Par(p, q) => {
                let (mp, mq) = (self.moves(p), self.moves(q));
                let mut out = Vec::new();
                for (l, target) in &mp {
                    if *l != Label::Time {
                        let left = target.clone().unwrap_or_else(|| (**p).clone());
                        out.push((l.clone(), Some(Term::Par(Arc::new(left), q.clone()))));
                    }
                }
                for (l, target) in &mq {
                    if *l != Label::Time {
                        let right = target.clone().unwrap_or_else(|| (**q).clone());
                        out.push((l.clone(), Some(Term::Par(p.clone(), Arc::new(right)))));
                    }
                }
                for (lp, tp) in &mp {
                    let Label::Act(a) = lp else { continue };
                    for (lq, tq) in &mq {
                        let Label::Act(b) = lq else { continue };
                        if a.name == b.name && a.co != b.co {
                            let left = tp.clone().unwrap_or_else(|| (**p).clone());
                            let right = tq.clone().unwrap_or_else(|| (**q).clone());
                            out.push((Label::Tau, Some(Term::par(left, right))));
                        }
                    }
                }
                // internal steps take priority over time
                if !out.iter().any(|(l, _)| *l == Label::Tau) {
                    for (lp, tp) in &mp {
                        if *lp != Label::Time {
                            continue;
                        }
                        for (lq, tq) in &mq {
                            if *lq == Label::Time {
                                out.push((Label::Time, join(tp, tq, p, q, Term::Par)));
                            }
                        }
                    }
                }
                out
            }
            Term::Restrict(p, names) => self
                .moves(p)
                .into_iter()
                .filter(|(l, _)| match l {
                    Label::Act(a) => !names.contains(&a.name),
                    _ => true,
                })
                .map(|(l, target)| {
                    (l, target.map(|q| Term::Restrict(Arc::new(q), names.clone())))
                })
                .collect(),
            Term::Relabel(p, f) => self
                .moves(p)
                .into_iter()
                .map(|(l, target)| (f.apply(&l), target.map(|q| Term::Relabel(Arc::new(q), f.clone()))))
                .collect(),
            Term::Rec(..) => {
                // an idling unfolding folds back into the recursion itself
                self.moves(&t.unfold())
            }
        }
    }

    /// Breadth-first reachable fragment from `t`, states identified up to
    /// canonical form. State 0 is `t`.
    pub fn build_lts(&self, t: &Term, max_states: usize) -> Result<Lts> {
        let report = t.check_wellformed();
        if !report.ok() {
            return Err(Error::IllFormed(report.describe()));
        }
        let root = t.canonical();
        let mut index: HashMap<Term, usize> = HashMap::new();
        let mut terms = vec![root.clone()];
        index.insert(root, 0);
        let mut succ: Vec<Vec<(Label, usize)>> = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        let mut complete = true;
        while let Some(s) = queue.pop_front() {
            if !complete {
                break;
            }
            let mut out = Vec::new();
            for (l, target) in self.step_unchecked(&terms[s]) {
                let target = target.canonical();
                let id = match index.get(&target) {
                    Some(&id) => id,
                    None => {
                        if terms.len() >= max_states {
                            complete = false;
                            break;
                        }
                        let id = terms.len();
                        index.insert(target.clone(), id);
                        terms.push(target);
                        queue.push_back(id);
                        id
                    }
                };
                out.push((l, id));
            }
            out.sort();
            out.dedup();
            if succ.len() <= s {
                succ.resize(s + 1, Vec::new());
            }
            succ[s] = out;
        }
        succ.resize(terms.len(), Vec::new());
        let names = terms.iter().map(|t| t.to_string()).collect();
        Ok(Lts::new(names, 0, succ, complete))
    }
}

fn join(
    tp: &Option<Term>,
    tq: &Option<Term>,
    p: &Arc<Term>,
    q: &Arc<Term>,
    make: fn(Arc<Term>, Arc<Term>) -> Term,
) -> Option<Term> {
    match (tp, tq) {
        (None, None) => None,
        _ => {
            let left = tp.clone().map(Arc::new).unwrap_or_else(|| p.clone());
            let right = tq.clone().map(Arc::new).unwrap_or_else(|| q.clone());
            Some(make(left, right))
        }
    }
}

/// Steps of `t` under the default (non-strict) semantics.
pub fn step(t: &Term) -> Result<Vec<(Label, Term)>> {
    Semantics::default().step(t)
}

/// Reachable transition system of `t` under the default semantics.
pub fn build_lts(t: &Term, max_states: usize) -> Result<Lts> {
    Semantics::default().build_lts(t, max_states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_term;

    fn steps(src: &str) -> Vec<(String, String)> {
        let t = parse_term(src).unwrap();
        step(&t)
            .unwrap()
            .into_iter()
            .map(|(l, p)| (l.to_string(), p.to_string()))
            .collect()
    }

    fn set(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        let mut v: Vec<(String, String)> =
            pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        v.sort();
        v
    }

    fn sorted(mut v: Vec<(String, String)>) -> Vec<(String, String)> {
        v.sort();
        v
    }

    // time rules

    #[test]
    fn nil_idles() {
        assert_eq!(steps("0"), set(&[("t", "0")]));
    }

    #[test]
    fn prefix_idles() {
        assert_eq!(sorted(steps("a.0")), set(&[("a", "0"), ("t", "a.0")]));
        assert_eq!(sorted(steps("tau.a.0")), set(&[("tau", "a.0"), ("t", "tau.a.0")]));
    }

    #[test]
    fn time_prefix_does_not_idle() {
        assert_eq!(steps("t.a.0"), set(&[("t", "a.0")]));
    }

    #[test]
    fn strict_mode_makes_tau_prefix_urgent() {
        let t = parse_term("tau.a.0").unwrap();
        let s = Semantics::strict().step(&t).unwrap();
        assert_eq!(s, vec![(Label::Tau, parse_term("a.0").unwrap())]);
    }

    #[test]
    fn synchronisation_blocks_time() {
        assert_eq!(
            sorted(steps("a.0 | 'a.0")),
            set(&[("a", "0 | 'a.0"), ("'a", "a.0 | 0"), ("tau", "0 | 0")])
        );
    }

    #[test]
    fn par_lets_time_pass_without_sync() {
        assert_eq!(
            sorted(steps("a.0 | b.0")),
            set(&[("a", "0 | b.0"), ("b", "a.0 | 0"), ("t", "a.0 | b.0")])
        );
    }

    #[test]
    fn choice_needs_both_branches_for_time() {
        assert_eq!(
            sorted(steps("h.l.0 + t.l.0")),
            set(&[("h", "l.0"), ("t", "h.l.0 + l.0")])
        );
        // a branch that cannot let time pass blocks it for the sum
        assert_eq!(sorted(steps("a.0 + (b.0 | 'b.0)")).iter().filter(|(l, _)| l == "t").count(), 0);
    }

    // CCS rules

    #[test]
    fn prefix_rule() {
        assert!(steps("a.b.0").contains(&("a".into(), "b.0".into())));
    }

    #[test]
    fn choice_rule_both_sides() {
        let s = steps("a.0 + b.0");
        assert!(s.contains(&("a".into(), "0".into())));
        assert!(s.contains(&("b".into(), "0".into())));
    }

    #[test]
    fn par_interleaving_rule() {
        let s = steps("a.0 | b.0");
        assert!(s.contains(&("a".into(), "0 | b.0".into())));
        assert!(s.contains(&("b".into(), "a.0 | 0".into())));
    }

    #[test]
    fn communication_rule() {
        assert!(steps("a.0 | 'a.0").contains(&("tau".into(), "0 | 0".into())));
    }

    #[test]
    fn restriction_rule() {
        assert_eq!(
            sorted(steps("(a.0 | 'a.0 | b.0)\\{a}")),
            set(&[
                ("tau", "(0 | 0 | b.0)\\{a}"),
                ("b", "(a.0 | 'a.0 | 0)\\{a}"),
            ])
        );
        // time is never restricted
        assert_eq!(sorted(steps("a.0\\{a}")), set(&[("t", "a.0\\{a}")]));
    }

    #[test]
    fn relabelling_rule() {
        assert_eq!(
            sorted(steps("('a.0 + tau.0)[b/a]")),
            set(&[("'b", "0[b/a]"), ("tau", "0[b/a]"), ("t", "('a.0 + tau.0)[b/a]")])
        );
    }

    #[test]
    fn recursion_rule() {
        let r = parse_term("rec X. a.X").unwrap();
        let s = step(&r).unwrap();
        assert_eq!(s, vec![(Label::act("a"), r.clone()), (Label::Time, r.clone())]);
        // same moves as the unfolding once idling is folded back
        let unf = r.unfold();
        let su: Vec<_> = step(&unf)
            .unwrap()
            .into_iter()
            .map(|(l, p)| (l, if p == unf { r.clone() } else { p }))
            .collect();
        assert_eq!(s, su);
    }

    #[test]
    fn open_terms_are_rejected() {
        assert!(step(&Term::var("X")).is_err());
        assert!(step(&parse_term("rec X. (X + a.0)").unwrap()).is_err());
    }

    #[test]
    fn lts_examples() {
        let l = build_lts(&Term::Nil, 10).unwrap();
        assert_eq!((l.num_states(), l.num_transitions()), (1, 1));
        let l = build_lts(&parse_term("h.l.0").unwrap(), 10).unwrap();
        assert_eq!(l.num_states(), 3);
        assert_eq!(l.num_transitions(), 5);
        let l = build_lts(&parse_term("rec X. a.X").unwrap(), 10).unwrap();
        assert_eq!(l.num_states(), 1);
        assert!(l.complete);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let t = parse_term("rec X. a.(X | b.0)").unwrap();
        let l = build_lts(&t, 50).unwrap();
        assert!(!l.complete);
        assert!(l.num_states() <= 50);
    }
}
