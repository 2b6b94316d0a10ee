//! Model files: process definitions, observers, predicates and checks.
//!
//! ```text
//! P1 = h.l.0
//! observer O { h -> eps; default -> id }
//! predicate Phi = contains {h}
//! check opacity P1 observer O predicate Phi
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use crate::automata::Dfa;
use crate::error::{Error, Result};
use crate::label::Label;
use crate::observation::{Fallback, Observer, StaticObserver, WindowRule, WindowedObserver};
use crate::parser::{Parser, Tok};
use crate::predicate::{builtin_contains, from_test_process, Predicate};
use crate::term::Term;

const DECL_KEYWORDS: [&str; 4] = ["observer", "predicate", "snni", "check"];

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckKind {
    Opacity { process: String, observer: String, predicate: String },
    Timing { process: String, observer: String, predicate: String },
    Dependable { process: String, observer: String, predicate: String },
    Synth {
        process: String,
        attacker: String,
        sup_observer: String,
        predicate: String,
        controllable: BTreeSet<Label>,
        max_insert: usize,
    },
    Insertion { process: String, attacker: String, sup_observer: String, predicate: String, max_insert: usize },
    Bisim { left: String, right: String },
    WeakTrace { left: String, right: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub line: usize,
    #[serde(flatten)]
    pub kind: CheckKind,
}

impl Check {
    pub fn describe(&self) -> String {
        match &self.kind {
            CheckKind::Opacity { process, observer, predicate } => {
                format!("opacity of {process} for {predicate} under {observer}")
            }
            CheckKind::Timing { process, observer, predicate } => {
                format!("timing attack on {process} for {predicate} under {observer}")
            }
            CheckKind::Dependable { process, observer, predicate } => {
                format!("time dependability of {predicate} on {process} under {observer}")
            }
            CheckKind::Synth { process, attacker, sup_observer, predicate, max_insert, .. } => format!(
                "supervisor for {process} ({predicate}, attacker {attacker}, supervisor sees {sup_observer}, max insert {max_insert})"
            ),
            CheckKind::Insertion { process, attacker, sup_observer, predicate, max_insert } => format!(
                "insertion-only enforcement on {process} ({predicate}, attacker {attacker}, supervisor sees {sup_observer}, max insert {max_insert})"
            ),
            CheckKind::Bisim { left, right } => format!("{left} ~ {right}"),
            CheckKind::WeakTrace { left, right } => format!("{left} =w {right}"),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Model {
    /// Closed process terms, in declaration order.
    pub processes: Vec<(String, Term)>,
    pub observers: BTreeMap<String, Observer>,
    pub predicates: BTreeMap<String, Predicate>,
    pub checks: Vec<Check>,
}

impl Model {
    pub fn process(&self, name: &str) -> Option<&Term> {
        self.processes.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn observer(&self, name: &str) -> Result<&Observer> {
        self.observers.get(name).ok_or_else(|| Error::Observer(format!("no observer named `{name}`")))
    }

    pub fn predicate(&self, name: &str) -> Result<&Predicate> {
        self.predicates.get(name).ok_or_else(|| Error::Predicate(format!("no predicate named `{name}`")))
    }
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let text = std::fs::read_to_string(path)?;
    parse_model(&text)
}

pub fn parse_model(text: &str) -> Result<Model> {
    let mut p = Parser::new(text)?;
    let mut loader = Loader::default();
    while !p.at_eof() {
        if p.eat(&Tok::Semi) {
            continue;
        }
        let line = p.line();
        if p.eat_keyword("observer") {
            loader.observer(&mut p, line)?;
        } else if p.eat_keyword("predicate") {
            loader.predicate(&mut p, line)?;
        } else if p.eat_keyword("snni") {
            loader.snni(&mut p, line)?;
        } else if p.eat_keyword("check") {
            loader.check(&mut p, line)?;
        } else {
            loader.definition(&mut p, line)?;
        }
    }
    loader.finish()
}

#[derive(Default)]
struct Loader {
    defs: Vec<(String, usize, Term)>,
    model: Model,
    /// Predicates that refer to test processes, converted once all
    /// definitions are known.
    pending_tests: Vec<(usize, String, PExpr)>,
}

#[derive(Clone, Debug)]
enum PExpr {
    Ready(Predicate),
    Named(String),
    Test(String),
    Not(Box<PExpr>),
    And(Box<PExpr>, Box<PExpr>),
    Or(Box<PExpr>, Box<PExpr>),
}

fn model_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Model { line, msg: msg.into() }
}

impl Loader {
    fn fresh_name(&self, line: usize, name: &str, kind: &str) -> Result<()> {
        let taken = match kind {
            "process" => self.defs.iter().any(|(n, _, _)| n == name),
            "observer" => self.model.observers.contains_key(name),
            _ => self.model.predicates.contains_key(name) || self.pending_tests.iter().any(|(_, n, _)| n == name),
        };
        if taken {
            return Err(model_err(line, format!("{kind} `{name}` is defined twice")));
        }
        if DECL_KEYWORDS.contains(&name) {
            return Err(model_err(line, format!("`{name}` is a keyword")));
        }
        Ok(())
    }

    fn definition(&mut self, p: &mut Parser, line: usize) -> Result<()> {
        let name = p.ident()?;
        self.fresh_name(line, &name, "process")?;
        p.expect(Tok::Eq)?;
        let t = p.term()?;
        self.defs.push((name, line, t));
        Ok(())
    }

    /// image := "eps" | label
    fn image(p: &mut Parser) -> Result<Option<Label>> {
        if p.eat_keyword("eps") {
            Ok(None)
        } else {
            Ok(Some(p.label()?))
        }
    }

    fn observer(&mut self, p: &mut Parser, line: usize) -> Result<()> {
        let name = p.ident()?;
        self.fresh_name(line, &name, "observer")?;
        if p.eat(&Tok::Eq) {
            p.expect_keyword("untimed")?;
            let base_line = p.line();
            let base = p.ident()?;
            let o = self
                .model
                .observers
                .get(&base)
                .ok_or_else(|| model_err(base_line, format!("undefined observer `{base}`")))?;
            let o = o.derive_untimed();
            self.model.observers.insert(name, o);
            return Ok(());
        }
        let window = if p.eat_keyword("window") {
            let m = p.number()? as usize;
            if m == 0 {
                return Err(model_err(line, "window size must be at least 1"));
            }
            Some(m)
        } else {
            None
        };
        let mut base = StaticObserver { map: BTreeMap::new(), default: Fallback::Id };
        let mut rules = vec![];
        p.expect(Tok::LBrace)?;
        while !p.eat(&Tok::RBrace) {
            if p.eat(&Tok::Semi) {
                continue;
            }
            if p.eat_keyword("default") {
                p.expect(Tok::Arrow)?;
                base.default = if p.eat_keyword("id") {
                    Fallback::Id
                } else if p.eat_keyword("eps") {
                    Fallback::Eps
                } else {
                    return Err(p.unexpected("`id` or `eps`"));
                };
                continue;
            }
            let letter = p.label()?;
            let context = if window.is_some() && p.eat_keyword("if") { Some(p.label()?) } else { None };
            p.expect(Tok::Arrow)?;
            let image = Self::image(p)?;
            match context {
                Some(c) => rules.push(WindowRule { letter, context: Some(c), image }),
                None => {
                    if base.map.insert(letter.clone(), image).is_some() {
                        return Err(p.error(format!("`{letter}` is mapped twice")));
                    }
                }
            }
        }
        let o = match window {
            None => Observer::Static(base),
            Some(m) => Observer::Windowed(WindowedObserver { m, rules, base, untimed: false }),
        };
        self.model.observers.insert(name, o);
        Ok(())
    }

    fn label_set(p: &mut Parser) -> Result<BTreeSet<Label>> {
        let mut out = BTreeSet::new();
        p.expect(Tok::LBrace)?;
        if p.eat(&Tok::RBrace) {
            return Ok(out);
        }
        loop {
            out.insert(p.label()?);
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
        p.expect(Tok::RBrace)?;
        Ok(out)
    }

    fn snni(&mut self, p: &mut Parser, line: usize) -> Result<()> {
        let name = p.ident()?;
        self.fresh_name(line, &name, "observer")?;
        self.fresh_name(line, &name, "predicate")?;
        let hidden = Self::label_set(p)?;
        let (mut phi, o) = builtin_contains(&hidden).map_err(|e| model_err(line, e.to_string()))?;
        phi.name = name.clone();
        self.model.observers.insert(name.clone(), o);
        self.model.predicates.insert(name, phi);
        Ok(())
    }

    fn predicate(&mut self, p: &mut Parser, line: usize) -> Result<()> {
        let name = p.ident()?;
        self.fresh_name(line, &name, "predicate")?;
        p.expect(Tok::Eq)?;
        let e = self.pexpr(p)?;
        self.pending_tests.push((line, name, e));
        Ok(())
    }

    fn pexpr(&mut self, p: &mut Parser) -> Result<PExpr> {
        let mut e = self.pterm(p)?;
        loop {
            if p.eat_keyword("and") {
                e = PExpr::And(Box::new(e), Box::new(self.pterm(p)?));
            } else if p.eat_keyword("or") {
                e = PExpr::Or(Box::new(e), Box::new(self.pterm(p)?));
            } else {
                return Ok(e);
            }
        }
    }

    fn pterm(&mut self, p: &mut Parser) -> Result<PExpr> {
        let line = p.line();
        if p.eat_keyword("not") {
            return Ok(PExpr::Not(Box::new(self.pterm(p)?)));
        }
        if p.eat_keyword("contains") {
            let hidden = Self::label_set(p)?;
            let (phi, _) = builtin_contains(&hidden).map_err(|e| model_err(line, e.to_string()))?;
            return Ok(PExpr::Ready(phi));
        }
        if p.eat_keyword("dfa") {
            let dfa = Self::dfa(p, line)?;
            return Ok(PExpr::Ready(Predicate::from_dfa("dfa", dfa).map_err(|e| model_err(line, e.to_string()))?));
        }
        if p.eat_keyword("test") {
            return Ok(PExpr::Test(p.ident()?));
        }
        if p.eat(&Tok::LParen) {
            let e = self.pexpr(p)?;
            p.expect(Tok::RParen)?;
            return Ok(e);
        }
        Ok(PExpr::Named(p.ident()?))
    }

    /// dfa { states 2; initial 0; accept 1; 0 -h-> 1; default self }
    fn dfa(p: &mut Parser, line: usize) -> Result<Dfa> {
        p.expect(Tok::LBrace)?;
        p.expect_keyword("states")?;
        let n = p.number()? as usize;
        if n == 0 {
            return Err(model_err(line, "an automaton needs at least one state"));
        }
        let mut d = Dfa::new(n, 0);
        let in_range = |p: &Parser, s: u64| -> Result<usize> {
            if (s as usize) < n {
                Ok(s as usize)
            } else {
                Err(p.error(format!("state {s} out of range (states {n})")))
            }
        };
        while !p.eat(&Tok::RBrace) {
            if p.eat(&Tok::Semi) {
                continue;
            }
            if p.eat_keyword("initial") {
                let s = p.number()?;
                d.initial = in_range(p, s)?;
            } else if p.eat_keyword("accept") {
                loop {
                    let s = p.number()?;
                    d.accepting[in_range(p, s)?] = true;
                    if !p.eat(&Tok::Comma) {
                        break;
                    }
                }
            } else if p.eat_keyword("default") {
                if !p.eat_keyword("self") {
                    let s = p.number()?;
                    let s = in_range(p, s)?;
                    d.default = vec![s; n];
                }
            } else {
                let s = p.number()?;
                let from = in_range(p, s)?;
                p.expect(Tok::Minus)?;
                let l = p.label()?;
                p.expect(Tok::Arrow)?;
                let s = p.number()?;
                let to = in_range(p, s)?;
                d.add_transition(from, l, to);
            }
        }
        Ok(d)
    }

    fn check(&mut self, p: &mut Parser, line: usize) -> Result<()> {
        let kind = p.ident()?;
        let kind = match kind.as_str() {
            "opacity" | "timing" | "dependable" => {
                let process = p.ident()?;
                p.expect_keyword("observer")?;
                let observer = p.ident()?;
                p.expect_keyword("predicate")?;
                let predicate = p.ident()?;
                match kind.as_str() {
                    "opacity" => CheckKind::Opacity { process, observer, predicate },
                    "timing" => CheckKind::Timing { process, observer, predicate },
                    _ => CheckKind::Dependable { process, observer, predicate },
                }
            }
            "synth" | "insertion" => {
                let process = p.ident()?;
                p.expect_keyword("attacker")?;
                let attacker = p.ident()?;
                p.expect_keyword("sup_observer")?;
                let sup_observer = p.ident()?;
                p.expect_keyword("predicate")?;
                let predicate = p.ident()?;
                let mut controllable = BTreeSet::new();
                let mut max_insert = 4;
                loop {
                    if kind == "synth" && p.eat_keyword("controllable") {
                        controllable = Self::label_set(p)?;
                    } else if p.eat_keyword("max_insert") {
                        max_insert = p.number()? as usize;
                    } else {
                        break;
                    }
                }
                if kind == "synth" {
                    CheckKind::Synth { process, attacker, sup_observer, predicate, controllable, max_insert }
                } else {
                    CheckKind::Insertion { process, attacker, sup_observer, predicate, max_insert }
                }
            }
            "bisim" => CheckKind::Bisim { left: p.ident()?, right: p.ident()? },
            "wtrace" => CheckKind::WeakTrace { left: p.ident()?, right: p.ident()? },
            other => return Err(model_err(line, format!("unknown check `{other}`"))),
        };
        self.model.checks.push(Check { line, kind });
        Ok(())
    }

    /// Closes definition `name` by inlining the definitions it uses; cycles
    /// become `rec` binders.
    fn resolve(&self, name: &str, stack: &mut Vec<String>) -> Result<Term> {
        let (_, line, body) = self.defs.iter().find(|(n, _, _)| n == name).expect("known definition");
        stack.push(name.to_string());
        let mut t = body.clone();
        for v in body.free_vars() {
            if stack.iter().any(|s| **s == *v) {
                continue;
            }
            if !self.defs.iter().any(|(n, _, _)| **n == *v) {
                stack.pop();
                return Err(model_err(*line, format!("undefined process `{v}` in `{name}`")));
            }
            let sub = self.resolve(&v, stack)?;
            t = t.subst(&v, &sub);
        }
        stack.pop();
        if t.free_vars().iter().any(|v| &**v == name) {
            t = Term::rec(name, t);
        }
        Ok(t)
    }

    fn eval(&self, line: usize, e: &PExpr) -> Result<Predicate> {
        Ok(match e {
            PExpr::Ready(p) => p.clone(),
            PExpr::Named(n) => self
                .model
                .predicates
                .get(n)
                .cloned()
                .ok_or_else(|| model_err(line, format!("undefined predicate `{n}`")))?,
            PExpr::Test(n) => {
                let t = self
                    .model
                    .process(n)
                    .ok_or_else(|| model_err(line, format!("undefined process `{n}`")))?;
                from_test_process(n, t).map_err(|e| model_err(line, e.to_string()))?
            }
            PExpr::Not(a) => self.eval(line, a)?.complement(),
            PExpr::And(a, b) => self.eval(line, a)?.and(&self.eval(line, b)?),
            PExpr::Or(a, b) => self.eval(line, a)?.or(&self.eval(line, b)?),
        })
    }

    fn finish(mut self) -> Result<Model> {
        for (name, line, _) in &self.defs {
            let t = self.resolve(name, &mut vec![])?;
            let report = t.check_wellformed();
            if !report.ok() {
                return Err(model_err(*line, format!("`{name}`: {}", report.describe())));
            }
            self.model.processes.push((name.clone(), t));
        }
        for (line, name, e) in std::mem::take(&mut self.pending_tests) {
            let mut phi = self.eval(line, &e)?;
            phi.name = name.clone();
            self.model.predicates.insert(name, phi);
        }
        for c in &self.model.checks {
            let m = &self.model;
            let need_p = |n: &str| -> Result<()> {
                m.process(n).map(|_| ()).ok_or_else(|| model_err(c.line, format!("undefined process `{n}`")))
            };
            let need_o = |n: &str| -> Result<()> {
                m.observers.get(n).map(|_| ()).ok_or_else(|| model_err(c.line, format!("undefined observer `{n}`")))
            };
            let need_f = |n: &str| -> Result<()> {
                m.predicates.get(n).map(|_| ()).ok_or_else(|| model_err(c.line, format!("undefined predicate `{n}`")))
            };
            match &c.kind {
                CheckKind::Opacity { process, observer, predicate }
                | CheckKind::Timing { process, observer, predicate }
                | CheckKind::Dependable { process, observer, predicate } => {
                    need_p(process)?;
                    need_o(observer)?;
                    need_f(predicate)?;
                }
                CheckKind::Synth { process, attacker, sup_observer, predicate, .. }
                | CheckKind::Insertion { process, attacker, sup_observer, predicate, .. } => {
                    need_p(process)?;
                    need_o(attacker)?;
                    need_o(sup_observer)?;
                    need_f(predicate)?;
                }
                CheckKind::Bisim { left, right } | CheckKind::WeakTrace { left, right } => {
                    need_p(left)?;
                    need_p(right)?;
                }
            }
        }
        Ok(self.model)
    }
}
