//! Process terms of the timed process algebra.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::label::{Action, Label};

pub type Name = Arc<str>;

/// A relabelling function, stored as `old name -> new name`.
///
/// It acts on both polarities (`f('a) = '(f(a))`) and fixes `tau`, `t`
/// and `tick`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Relabeling(pub BTreeMap<Name, Name>);

impl Relabeling {
    pub fn apply(&self, label: &Label) -> Label {
        match label {
            Label::Act(a) => match self.0.get(&a.name) {
                Some(new) => Label::Act(Action { name: new.clone(), co: a.co }),
                None => label.clone(),
            },
            other => other.clone(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Term {
    Nil,
    Var(Name),
    Prefix(Label, Arc<Term>),
    Choice(Arc<Term>, Arc<Term>),
    Par(Arc<Term>, Arc<Term>),
    Restrict(Arc<Term>, Arc<BTreeSet<Name>>),
    Relabel(Arc<Term>, Arc<Relabeling>),
    Rec(Name, Arc<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Arc::from(name))
    }

    pub fn prefix(label: Label, cont: Term) -> Term {
        Term::Prefix(label, Arc::new(cont))
    }

    pub fn choice(left: Term, right: Term) -> Term {
        Term::Choice(Arc::new(left), Arc::new(right))
    }

    pub fn par(left: Term, right: Term) -> Term {
        Term::Par(Arc::new(left), Arc::new(right))
    }

    pub fn restrict<'a>(body: Term, names: impl IntoIterator<Item = &'a str>) -> Term {
        let set = names.into_iter().map(Arc::from).collect();
        Term::Restrict(Arc::new(body), Arc::new(set))
    }

    /// `pairs` are `(new, old)` as in the `[new/old]` syntax.
    pub fn relabel<'a>(body: Term, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Term {
        let map = pairs
            .into_iter()
            .map(|(new, old)| (Arc::from(old), Arc::from(new)))
            .collect();
        Term::Relabel(Arc::new(body), Arc::new(Relabeling(map)))
    }

    pub fn rec(name: &str, body: Term) -> Term {
        Term::Rec(Arc::from(name), Arc::new(body))
    }

    /// Builds `x1.x2. ... .xn.Nil`.
    pub fn from_trace(trace: &[Label]) -> Term {
        trace
            .iter()
            .rev()
            .fold(Term::Nil, |acc, l| Term::prefix(l.clone(), acc))
    }

    /// Right-nested n-ary choice; the empty sum is `Nil`.
    pub fn sum(terms: Vec<Term>) -> Term {
        let mut it = terms.into_iter().rev();
        match it.next() {
            None => Term::Nil,
            Some(last) => it.fold(last, |acc, t| Term::choice(t, acc)),
        }
    }

    /// Right-nested n-ary parallel composition; the empty product is `Nil`.
    pub fn product(terms: Vec<Term>) -> Term {
        let mut it = terms.into_iter().rev();
        match it.next() {
            None => Term::Nil,
            Some(last) => it.fold(last, |acc, t| Term::par(t, acc)),
        }
    }

    /// Capture-free substitution of the closed term `with` for free
    /// occurrences of `var`.
    pub fn subst(&self, var: &str, with: &Term) -> Term {
        match self {
            Term::Nil => Term::Nil,
            Term::Var(x) if &**x == var => with.clone(),
            Term::Var(_) => self.clone(),
            Term::Prefix(l, p) => Term::Prefix(l.clone(), Arc::new(p.subst(var, with))),
            Term::Choice(p, q) => {
                Term::Choice(Arc::new(p.subst(var, with)), Arc::new(q.subst(var, with)))
            }
            Term::Par(p, q) => Term::Par(Arc::new(p.subst(var, with)), Arc::new(q.subst(var, with))),
            Term::Restrict(p, l) => Term::Restrict(Arc::new(p.subst(var, with)), l.clone()),
            Term::Relabel(p, f) => Term::Relabel(Arc::new(p.subst(var, with)), f.clone()),
            Term::Rec(x, _) if &**x == var => self.clone(),
            Term::Rec(x, p) => Term::Rec(x.clone(), Arc::new(p.subst(var, with))),
        }
    }

    /// One unfolding of a top-level `rec`; other terms are returned as is.
    pub fn unfold(&self) -> Term {
        match self {
            Term::Rec(x, body) => body.subst(x, self),
            _ => self.clone(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        fn go(t: &Term, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
            match t {
                Term::Nil => {}
                Term::Var(x) => {
                    if !bound.contains(x) {
                        out.insert(x.clone());
                    }
                }
                Term::Prefix(_, p) | Term::Restrict(p, _) | Term::Relabel(p, _) => go(p, bound, out),
                Term::Choice(p, q) | Term::Par(p, q) => {
                    go(p, bound, out);
                    go(q, bound, out);
                }
                Term::Rec(x, p) => {
                    bound.push(x.clone());
                    go(p, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Names of recursion variables with an occurrence that is not under a
    /// prefix inside its binding `rec`.
    pub fn unguarded_vars(&self) -> BTreeSet<Name> {
        // `bound` holds (name, guarded-since-binder).
        fn go(t: &Term, bound: &mut Vec<(Name, bool)>, out: &mut BTreeSet<Name>) {
            match t {
                Term::Nil => {}
                Term::Var(x) => {
                    if let Some((_, guarded)) = bound.iter().rev().find(|(n, _)| n == x) {
                        if !guarded {
                            out.insert(x.clone());
                        }
                    }
                }
                Term::Prefix(_, p) => {
                    let saved: Vec<bool> = bound.iter().map(|b| b.1).collect();
                    bound.iter_mut().for_each(|b| b.1 = true);
                    go(p, bound, out);
                    bound.iter_mut().zip(saved).for_each(|(b, s)| b.1 = s);
                }
                Term::Restrict(p, _) | Term::Relabel(p, _) => go(p, bound, out),
                Term::Choice(p, q) | Term::Par(p, q) => {
                    go(p, bound, out);
                    go(q, bound, out);
                }
                Term::Rec(x, p) => {
                    bound.push((x.clone(), false));
                    go(p, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn check_wellformed(&self) -> WellformednessReport {
        WellformednessReport {
            free_vars: self.free_vars(),
            unguarded: self.unguarded_vars(),
        }
    }

    /// Conservative syntactic finiteness test: no recursion variable occurs
    /// inside an operand of `|`, `\L` or `[f]` within its own binder.
    pub fn is_regular(&self) -> bool {
        // Stack of (binder, crossed a static operator since binding).
        fn go(t: &Term, scope: &mut Vec<(Name, bool)>) -> bool {
            match t {
                Term::Nil => true,
                Term::Var(x) => match scope.iter().rev().find(|(n, _)| n == x) {
                    Some((_, crossed)) => !crossed,
                    None => true,
                },
                Term::Prefix(_, p) => go(p, scope),
                Term::Choice(p, q) => go(p, scope) && go(q, scope),
                Term::Par(..) | Term::Restrict(..) | Term::Relabel(..) => {
                    let saved: Vec<bool> = scope.iter().map(|s| s.1).collect();
                    scope.iter_mut().for_each(|s| s.1 = true);
                    let ok = match t {
                        Term::Par(p, q) => go(p, scope) && go(q, scope),
                        Term::Restrict(p, _) | Term::Relabel(p, _) => go(p, scope),
                        _ => unreachable!(),
                    };
                    scope.iter_mut().zip(saved).for_each(|(s, v)| s.1 = v);
                    ok
                }
                Term::Rec(x, p) => {
                    scope.push((x.clone(), false));
                    let ok = go(p, scope);
                    scope.pop();
                    ok
                }
            }
        }
        go(self, &mut Vec::new())
    }

    /// Names of visible actions occurring syntactically in the term.
    pub fn action_names(&self) -> BTreeSet<Name> {
        fn go(t: &Term, out: &mut BTreeSet<Name>) {
            match t {
                Term::Nil | Term::Var(_) => {}
                Term::Prefix(l, p) => {
                    if let Label::Act(a) = l {
                        out.insert(a.name.clone());
                    }
                    go(p, out);
                }
                Term::Choice(p, q) | Term::Par(p, q) => {
                    go(p, out);
                    go(q, out);
                }
                Term::Restrict(p, l) => {
                    out.extend(l.iter().cloned());
                    go(p, out);
                }
                Term::Relabel(p, f) => {
                    for (a, b) in &f.0 {
                        out.insert(a.clone());
                        out.insert(b.clone());
                    }
                    go(p, out);
                }
                Term::Rec(_, p) => go(p, out),
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut out);
        out
    }

    pub fn contains_tick(&self) -> bool {
        match self {
            Term::Nil | Term::Var(_) => false,
            Term::Prefix(l, p) => *l == Label::Tick || p.contains_tick(),
            Term::Choice(p, q) | Term::Par(p, q) => p.contains_tick() || q.contains_tick(),
            Term::Restrict(p, _) | Term::Relabel(p, _) | Term::Rec(_, p) => p.contains_tick(),
        }
    }

    /// Structural normal form used to identify LTS states: sums and parallel
    /// compositions are flattened and sorted, `Nil` units are dropped, sums
    /// are deduplicated, and static operators over `Nil` collapse to `Nil`.
    /// Every rewrite preserves strong bisimilarity.
    pub fn canonical(&self) -> Term {
        match self {
            Term::Nil | Term::Var(_) => self.clone(),
            Term::Prefix(l, p) => Term::Prefix(l.clone(), Arc::new(p.canonical())),
            Term::Choice(..) => {
                let mut ops = Vec::new();
                flatten_choice(self, &mut ops);
                let mut ops: Vec<Term> = ops
                    .into_iter()
                    .map(|t| t.canonical())
                    .filter(|t| *t != Term::Nil)
                    .collect();
                ops.sort();
                ops.dedup();
                Term::sum(ops)
            }
            Term::Par(..) => {
                let mut ops = Vec::new();
                flatten_par(self, &mut ops);
                let mut ops: Vec<Term> = ops
                    .into_iter()
                    .map(|t| t.canonical())
                    .filter(|t| *t != Term::Nil)
                    .collect();
                ops.sort();
                Term::product(ops)
            }
            Term::Restrict(p, l) => match p.canonical() {
                Term::Nil => Term::Nil,
                q => Term::Restrict(Arc::new(q), l.clone()),
            },
            Term::Relabel(p, f) => match p.canonical() {
                Term::Nil => Term::Nil,
                q => Term::Relabel(Arc::new(q), f.clone()),
            },
            Term::Rec(x, p) => Term::Rec(x.clone(), Arc::new(p.canonical())),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Nil | Term::Var(_) => 1,
            Term::Prefix(_, p) | Term::Restrict(p, _) | Term::Relabel(p, _) | Term::Rec(_, p) => {
                1 + p.size()
            }
            Term::Choice(p, q) | Term::Par(p, q) => 1 + p.size() + q.size(),
        }
    }
}

fn flatten_choice(t: &Term, out: &mut Vec<Term>) {
    match t {
        Term::Choice(p, q) => {
            flatten_choice(p, out);
            flatten_choice(q, out);
        }
        other => out.push(other.clone()),
    }
}

fn flatten_par(t: &Term, out: &mut Vec<Term>) {
    match t {
        Term::Par(p, q) => {
            flatten_par(p, out);
            flatten_par(q, out);
        }
        other => out.push(other.clone()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WellformednessReport {
    pub free_vars: BTreeSet<Name>,
    pub unguarded: BTreeSet<Name>,
}

impl WellformednessReport {
    pub fn closed(&self) -> bool {
        self.free_vars.is_empty()
    }

    pub fn guarded(&self) -> bool {
        self.unguarded.is_empty()
    }

    pub fn ok(&self) -> bool {
        self.closed() && self.guarded()
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if !self.closed() {
            let vs: Vec<&str> = self.free_vars.iter().map(|v| &**v).collect();
            parts.push(format!("free variables {{{}}}", vs.join(",")));
        }
        if !self.guarded() {
            let vs: Vec<&str> = self.unguarded.iter().map(|v| &**v).collect();
            parts.push(format!("unguarded variables {{{}}}", vs.join(",")));
        }
        parts.join("; ")
    }
}

// Printing levels: 0 choice, 1 par, 2 postfix, 3 prefix/atom.
fn level(t: &Term) -> u8 {
    match t {
        Term::Choice(..) => 0,
        Term::Par(..) => 1,
        Term::Restrict(..) | Term::Relabel(..) => 2,
        _ => 3,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, t: &Term, min: u8) -> fmt::Result {
    if level(t) < min {
        write!(f, "(")?;
        write_term(f, t)?;
        write!(f, ")")
    } else {
        write_term(f, t)
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term) -> fmt::Result {
    match t {
        Term::Nil => write!(f, "0"),
        Term::Var(x) => write!(f, "{x}"),
        Term::Prefix(l, p) => {
            write!(f, "{l}.")?;
            write_at(f, p, 3)
        }
        Term::Choice(p, q) => {
            write_at(f, p, 1)?;
            write!(f, " + ")?;
            write_at(f, q, 0)
        }
        Term::Par(p, q) => {
            write_at(f, p, 2)?;
            write!(f, " | ")?;
            write_at(f, q, 1)
        }
        Term::Restrict(p, l) => {
            write_at(f, p, 2)?;
            let names: Vec<&str> = l.iter().map(|n| &**n).collect();
            write!(f, "\\{{{}}}", names.join(","))
        }
        Term::Relabel(p, r) => {
            write_at(f, p, 2)?;
            let pairs: Vec<String> = r.0.iter().map(|(old, new)| format!("{new}/{old}")).collect();
            write!(f, "[{}]", pairs.join(","))
        }
        Term::Rec(x, p) => {
            write!(f, "rec {x}. ")?;
            write_at(f, p, 3)
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self)
    }
}

/// Prints a term in the concrete syntax accepted by the parser.
pub fn print_term(t: &Term) -> String {
    t.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: &str) -> Label {
        Label::act(n)
    }

    #[test]
    fn prints_examples() {
        assert_eq!(print_term(&Term::Nil), "0");
        assert_eq!(print_term(&Term::prefix(a("h"), Term::Nil)), "h.0");
        let t = Term::restrict(
            Term::par(Term::prefix(a("a"), Term::Nil), Term::prefix(Label::coact("a"), Term::Nil)),
            ["a"],
        );
        assert_eq!(print_term(&t), "(a.0 | 'a.0)\\{a}");
    }

    #[test]
    fn wellformedness_examples() {
        let ok = Term::rec("X", Term::prefix(a("a"), Term::var("X")));
        assert!(ok.check_wellformed().ok());
        assert!(!Term::var("X").check_wellformed().closed());
        let unguarded = Term::rec("X", Term::choice(Term::var("X"), Term::prefix(a("a"), Term::Nil)));
        let r = unguarded.check_wellformed();
        assert!(r.closed());
        assert!(!r.guarded());
    }

    #[test]
    fn guardedness_is_per_binder() {
        // inner X is guarded by b, but Y occurs unguarded in its own body
        let t = Term::rec(
            "X",
            Term::prefix(a("b"), Term::rec("Y", Term::choice(Term::var("Y"), Term::var("X")))),
        );
        let r = t.check_wellformed();
        assert!(r.unguarded.contains("Y"));
        assert!(!r.unguarded.contains("X"));
    }

    #[test]
    fn regularity_examples() {
        let cyc = |x: &str, l: &str| Term::rec(x, Term::prefix(a(l), Term::var(x)));
        assert!(cyc("X", "a").is_regular());
        let bad = Term::rec("X", Term::par(Term::prefix(a("a"), Term::var("X")), Term::Nil));
        assert!(!bad.is_regular());
        assert!(Term::par(cyc("X", "a"), cyc("Y", "b")).is_regular());
        let under_restrict = Term::rec("X", Term::restrict(Term::prefix(a("a"), Term::var("X")), ["b"]));
        assert!(!under_restrict.is_regular());
        // a fresh binder inside the static operator is fine
        let inner = Term::rec("X", Term::prefix(a("c"), Term::par(cyc("Y", "a"), Term::Nil)));
        assert!(inner.is_regular());
    }

    #[test]
    fn canonical_form_flattens_and_sorts() {
        let p = Term::prefix(a("a"), Term::Nil);
        let q = Term::prefix(a("b"), Term::Nil);
        let l = Term::choice(q.clone(), Term::choice(p.clone(), q.clone()));
        let r = Term::choice(p.clone(), q.clone());
        assert_eq!(l.canonical(), r.canonical());
        assert_eq!(Term::par(p.clone(), Term::Nil).canonical(), p);
        assert_eq!(Term::restrict(Term::Nil, ["a"]).canonical(), Term::Nil);
        // parallel operands are not deduplicated
        assert_ne!(Term::par(p.clone(), p.clone()).canonical(), p);
    }

    #[test]
    fn unfold_substitutes_the_binder() {
        let r = Term::rec("X", Term::prefix(a("a"), Term::var("X")));
        assert_eq!(r.unfold(), Term::prefix(a("a"), r.clone()));
    }
}
