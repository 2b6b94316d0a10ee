//! Running the checks declared in a model.

use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::equivalence::{check_bisimilar, check_weak_trace_equiv};
use crate::error::{Error, Result};
use crate::label::show_trace;
use crate::lts::Lts;
use crate::model::{Check, CheckKind, Model};
use crate::opacity::{check_opacity_bounded, check_timing_attack, is_time_dependable, OpacityVerdict, Reading, TimingVerdict};
use crate::semantics::Semantics;
use crate::supervisor::{insertion_only_enforceable, synthesize, SynthesisConfig, SynthesisOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Incomplete,
    Violation,
    Error,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Violation => 1,
            Outcome::Incomplete => 2,
            Outcome::Error => 3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub index: usize,
    pub line: usize,
    pub description: String,
    pub outcome: Outcome,
    pub summary: String,
    pub detail: Value,
    pub millis: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub input_sha256: String,
    pub checks: Vec<CheckReport>,
    pub outcome: Outcome,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        self.outcome.exit_code()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "[{}] line {}: {}\n    {}\n",
                match c.outcome {
                    Outcome::Pass => "pass",
                    Outcome::Violation => "VIOLATION",
                    Outcome::Incomplete => "incomplete",
                    Outcome::Error => "ERROR",
                },
                c.line,
                c.description,
                c.summary
            ));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub semantics: Semantics,
    pub max_states: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { semantics: Semantics::default(), max_states: crate::semantics::DEFAULT_MAX_STATES }
    }
}

pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Runs the selected checks (all if `selection` is `None`), in declaration
/// order. Failures of one check do not stop the others.
pub fn run_checks(model: &Model, source: &str, selection: Option<&[usize]>, opts: &RunOptions) -> RunReport {
    let indices: Vec<usize> = match selection {
        Some(s) => s.to_vec(),
        None => (0..model.checks.len()).collect(),
    };
    let mut checks = vec![];
    for i in indices {
        let Some(check) = model.checks.get(i) else {
            checks.push(CheckReport {
                index: i,
                line: 0,
                description: format!("check #{i}"),
                outcome: Outcome::Error,
                summary: "no such check".into(),
                detail: Value::Null,
                millis: 0,
            });
            continue;
        };
        let start = Instant::now();
        let (outcome, summary, detail) = match run_one(model, check, opts) {
            Ok(r) => r,
            Err(Error::Incomplete(n)) => (Outcome::Incomplete, format!("state budget of {n} exceeded"), Value::Null),
            Err(e) => (Outcome::Error, e.to_string(), Value::Null),
        };
        checks.push(CheckReport {
            index: i,
            line: check.line,
            description: check.describe(),
            outcome,
            summary,
            detail,
            millis: start.elapsed().as_millis(),
        });
    }
    let outcome = checks.iter().map(|c| c.outcome).max().unwrap_or(Outcome::Pass);
    RunReport {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        input_sha256: digest(source),
        checks,
        outcome,
    }
}

fn plant(model: &Model, name: &str, opts: &RunOptions) -> Result<Lts> {
    let t = model.process(name).ok_or_else(|| Error::Model { line: 0, msg: format!("undefined process `{name}`") })?;
    opts.semantics.build_lts(t, opts.max_states)
}

fn opacity_summary(v: &OpacityVerdict) -> String {
    match v {
        OpacityVerdict::Opaque => "opaque".into(),
        OpacityVerdict::NotOpaque { witness, observable } => {
            format!("not opaque: `{}` is observed as `{}`", show_trace(witness), show_trace(observable))
        }
        OpacityVerdict::Incomplete { bound } => format!("incomplete (bound {bound})"),
    }
}

fn run_one(model: &Model, check: &Check, opts: &RunOptions) -> Result<(Outcome, String, Value)> {
    Ok(match &check.kind {
        CheckKind::Opacity { process, observer, predicate } => {
            let p = plant(model, process, opts)?;
            let v = check_opacity_bounded(&p, model.predicate(predicate)?, model.observer(observer)?, opts.max_states)?;
            let outcome = match v {
                OpacityVerdict::Opaque => Outcome::Pass,
                OpacityVerdict::NotOpaque { .. } => Outcome::Violation,
                OpacityVerdict::Incomplete { .. } => Outcome::Incomplete,
            };
            (outcome, opacity_summary(&v), serde_json::to_value(&v)?)
        }
        CheckKind::Timing { process, observer, predicate } => {
            let p = plant(model, process, opts)?;
            let v = check_timing_attack(&p, model.predicate(predicate)?, model.observer(observer)?)?;
            let (outcome, summary) = match &v {
                TimingVerdict::Prone { timed } => {
                    (Outcome::Violation, format!("prone to timing attacks ({})", opacity_summary(timed)))
                }
                TimingVerdict::NotProne { timed, .. } => {
                    (Outcome::Pass, format!("not prone to timing attacks (timed: {})", opacity_summary(timed)))
                }
                TimingVerdict::Incomplete { bound } => (Outcome::Incomplete, format!("incomplete (bound {bound})")),
            };
            (outcome, summary, serde_json::to_value(&v)?)
        }
        CheckKind::Dependable { process, observer, predicate } => {
            let p = plant(model, process, opts)?;
            let d = is_time_dependable(&p, model.predicate(predicate)?, model.observer(observer)?, Reading::Repaired)?;
            let summary = match &d.counterexample {
                None => "time dependable".into(),
                Some(w) => format!("not time dependable: `{}` cannot be padded into a safe trace", show_trace(w)),
            };
            (if d.holds { Outcome::Pass } else { Outcome::Violation }, summary, serde_json::to_value(&d)?)
        }
        CheckKind::Synth { process, attacker, sup_observer, predicate, controllable, max_insert } => {
            let p = plant(model, process, opts)?;
            let cfg = SynthesisConfig {
                controllable: controllable.clone(),
                max_insert: *max_insert,
                max_states: opts.max_states,
            };
            let r = synthesize(
                &p,
                model.predicate(predicate)?,
                model.observer(attacker)?,
                model.observer(sup_observer)?,
                &cfg,
            )?;
            let (outcome, summary) = match &r.outcome {
                SynthesisOutcome::Supervisor { supervisor } => {
                    (Outcome::Pass, format!("supervisor with {} state(s)", supervisor.num_states()))
                }
                SynthesisOutcome::TrivialOnly { .. } => {
                    (Outcome::Pass, "only a supervisor blocking every visible action exists".into())
                }
                SynthesisOutcome::NoSupervisor { reason } => (Outcome::Violation, format!("no supervisor: {reason}")),
            };
            (outcome, summary, serde_json::to_value(&r)?)
        }
        CheckKind::Insertion { process, attacker, sup_observer, predicate, max_insert } => {
            let p = plant(model, process, opts)?;
            let ok = insertion_only_enforceable(
                &p,
                model.predicate(predicate)?,
                model.observer(attacker)?,
                model.observer(sup_observer)?,
                *max_insert,
            )?;
            let summary = if ok {
                "enforceable by inserting time alone"
            } else {
                "not enforceable by inserting time alone"
            };
            (if ok { Outcome::Pass } else { Outcome::Violation }, summary.into(), json!({ "enforceable": ok }))
        }
        CheckKind::Bisim { left, right } | CheckKind::WeakTrace { left, right } => {
            let a = plant(model, left, opts)?;
            let b = plant(model, right, opts)?;
            let bisim = matches!(check.kind, CheckKind::Bisim { .. });
            let r = if bisim { check_bisimilar(&a, &b)? } else { check_weak_trace_equiv(&a, &b)? };
            let summary = match (&r.equivalent, &r.witness) {
                (true, _) => "equivalent".to_string(),
                (false, Some(w)) => format!("not equivalent, distinguished by `{}`", show_trace(w)),
                (false, None) => "not equivalent".to_string(),
            };
            let outcome = if r.equivalent { Outcome::Pass } else { Outcome::Violation };
            (outcome, summary, json!({ "equivalent": r.equivalent, "witness": r.witness }))
        }
    })
}
