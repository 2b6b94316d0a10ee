//! Strong bisimilarity and weak trace equivalence on finite systems, and
//! the trace tests used to represent predicates by processes.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::label::{Label, Trace};
use crate::lts::{trace_inclusion, Lts};
use crate::semantics::{Semantics, DEFAULT_MAX_STATES};
use crate::term::Term;

/// Partition of the states of an LTS, refined until stable.
#[derive(Clone, Debug)]
pub struct PartitionRefinementState {
    /// Block index of every state.
    pub block_of: Vec<usize>,
    pub num_blocks: usize,
}

impl PartitionRefinementState {
    fn initial(n: usize) -> Self {
        PartitionRefinementState { block_of: vec![0; n], num_blocks: usize::from(n > 0) }
    }

    /// Splits every block by the signature `{(label, block of target)}` of
    /// its states. Returns true if some block was split.
    fn refine(&mut self, lts: &Lts) -> bool {
        let mut index: HashMap<(usize, Vec<(&Label, usize)>), usize> = HashMap::new();
        let mut next = Vec::with_capacity(self.block_of.len());
        for (s, out) in lts.succ.iter().enumerate() {
            let mut sig: Vec<(&Label, usize)> = out.iter().map(|(l, d)| (l, self.block_of[*d])).collect();
            sig.sort();
            sig.dedup();
            let fresh = index.len();
            let b = *index.entry((self.block_of[s], sig)).or_insert(fresh);
            next.push(b);
        }
        let changed = index.len() != self.num_blocks;
        self.num_blocks = index.len();
        self.block_of = next;
        changed
    }
}

/// Coarsest strong bisimulation of `lts`, with `tau` and `t` treated as
/// ordinary labels.
pub fn bisimulation_classes(lts: &Lts) -> PartitionRefinementState {
    let mut p = PartitionRefinementState::initial(lts.num_states());
    while p.refine(lts) {}
    p
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivResult {
    pub equivalent: bool,
    /// A trace of one side that the other side cannot perform, when the two
    /// differ already at the trace level.
    pub witness: Option<Trace>,
}

pub fn bisimilar(p: &Lts, q: &Lts) -> Result<bool> {
    Ok(check_bisimilar(p, q)?.equivalent)
}

pub fn check_bisimilar(p: &Lts, q: &Lts) -> Result<EquivResult> {
    p.require_complete()?;
    q.require_complete()?;
    let union = p.disjoint_union(q);
    let classes = bisimulation_classes(&union);
    let equivalent = classes.block_of[p.initial] == classes.block_of[p.num_states() + q.initial];
    let witness = if equivalent {
        None
    } else {
        trace_inclusion(p, q, false).or_else(|| trace_inclusion(q, p, false))
    };
    Ok(EquivResult { equivalent, witness })
}

pub fn weak_trace_equiv(p: &Lts, q: &Lts) -> Result<bool> {
    Ok(check_weak_trace_equiv(p, q)?.equivalent)
}

pub fn check_weak_trace_equiv(p: &Lts, q: &Lts) -> Result<EquivResult> {
    p.require_complete()?;
    q.require_complete()?;
    let witness = trace_inclusion(p, q, true).or_else(|| trace_inclusion(q, p, true));
    Ok(EquivResult { equivalent: witness.is_none(), witness })
}

/// The composite `(w.Nil | test) \ A` where `A` covers every visible name of
/// both operands; `t`, `tau` and `tick` stay free.
pub fn test_composite(w: &[Label], test: &Term) -> Term {
    let chain = Term::from_trace(w);
    let mut names = test.action_names();
    names.extend(chain.action_names());
    let par = Term::par(chain, test.clone());
    if names.is_empty() {
        par
    } else {
        Term::Restrict(std::sync::Arc::new(par), std::sync::Arc::new(names))
    }
}

/// Does `w` pass the test process, i.e. is `(w.Nil | test) \ A` weak trace
/// equivalent to `tick.Nil`?
pub fn passes_test(w: &[Label], test: &Term) -> Result<bool> {
    passes_test_with(w, test, Semantics::default())
}

pub fn passes_test_with(w: &[Label], test: &Term, sem: Semantics) -> Result<bool> {
    if w.contains(&Label::Tick) {
        return Err(Error::Predicate("test words must not contain `tick`".into()));
    }
    let report = test.check_wellformed();
    if !report.ok() {
        return Err(Error::IllFormed(report.describe()));
    }
    if !test.is_regular() {
        return Err(Error::NotRegular(test.to_string()));
    }
    let composite = sem.build_lts(&test_composite(w, test), DEFAULT_MAX_STATES)?;
    composite.require_complete()?;
    let target = sem.build_lts(&Term::prefix(Label::Tick, Term::Nil), 4)?;
    weak_trace_equiv(&composite, &target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::parse_trace;
    use crate::parser::parse_term;
    use crate::semantics::build_lts;

    fn lts(src: &str) -> Lts {
        build_lts(&parse_term(src).unwrap(), 1000).unwrap()
    }

    #[test]
    fn bisimulation_examples() {
        assert!(bisimilar(&lts("a.0 + a.0"), &lts("a.0")).unwrap());
        assert!(!bisimilar(&lts("a.b.0"), &lts("a.c.0")).unwrap());
        let r = check_bisimilar(&lts("h.l.0 + t.l.0"), &lts("h.l.0")).unwrap();
        assert!(!r.equivalent);
        assert_eq!(r.witness, Some(parse_trace("t.l").unwrap()));
    }

    #[test]
    fn bisimulation_distinguishes_branching() {
        // same traces, different branching
        assert!(!bisimilar(&lts("a.(b.0 + c.0)"), &lts("a.b.0 + a.c.0")).unwrap());
        assert!(check_bisimilar(&lts("a.(b.0 + c.0)"), &lts("a.b.0 + a.c.0")).unwrap().witness.is_none());
    }

    #[test]
    fn weak_trace_examples() {
        assert!(weak_trace_equiv(&lts("tau.a.0"), &lts("a.0")).unwrap());
        assert!(weak_trace_equiv(&lts("a.0"), &lts("a.0 + tau.a.0")).unwrap());
        let r = check_weak_trace_equiv(&lts("a.0"), &lts("b.0")).unwrap();
        assert!(!r.equivalent);
        assert_eq!(r.witness, Some(parse_trace("a").unwrap()));
    }

    #[test]
    fn incomplete_systems_are_rejected() {
        let big = build_lts(&parse_term("rec X. a.(X | b.0)").unwrap(), 4).unwrap();
        assert!(matches!(bisimilar(&big, &big), Err(Error::Incomplete(_))));
        assert!(weak_trace_equiv(&big, &big).is_err());
    }

    fn contains_h_test() -> Term {
        parse_term("rec X. ('h.tick.0 + 'l.X)").unwrap()
    }

    #[test]
    fn test_process_examples() {
        let t = contains_h_test();
        assert!(passes_test(&parse_trace("h.l").unwrap(), &t).unwrap());
        assert!(passes_test(&parse_trace("l.h").unwrap(), &t).unwrap());
        assert!(!passes_test(&[], &t).unwrap());
        assert!(!passes_test(&parse_trace("l").unwrap(), &t).unwrap());
    }

    #[test]
    fn tick_in_word_is_rejected() {
        assert!(passes_test(&[Label::Tick], &contains_h_test()).is_err());
    }
}
