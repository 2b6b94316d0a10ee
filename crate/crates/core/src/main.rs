use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use tpa::equivalence::{check_bisimilar, check_weak_trace_equiv};
use tpa::model::{load_model, Model};
use tpa::opacity::{check_opacity_bounded, check_timing_attack, OpacityVerdict, TimingVerdict};
use tpa::report::{run_checks, RunOptions};
use tpa::semantics::{Semantics, DEFAULT_MAX_STATES};
use tpa::supervisor::{
    compare_supervisors, simulate, synthesize, verify_supervisor, Permissiveness, SupervisorAutomaton, SynthesisConfig,
    SynthesisOutcome, Verification,
};
use tpa::{parse_term, print_term, show_trace, Label, Term};

#[derive(Parser)]
#[command(name = "tpa", version, about = "Opacity checking and time-inserting supervisors for timed CCS")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// State budget for every exploration.
    #[arg(long, global = true, env = "TPA_MAX_STATES", default_value_t = DEFAULT_MAX_STATES)]
    max_states: usize,

    /// Make tau-prefixes urgent: they no longer let time pass.
    #[arg(long, global = true)]
    strict_tau_urgency: bool,

    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum EquivKind {
    Bisim,
    Wtrace,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a model and print its resolved contents.
    Parse { model: PathBuf },
    /// Build the transition system of a process (a model name or a term).
    Lts {
        model: Option<PathBuf>,
        #[arg(long)]
        process: String,
        /// Write a DOT rendering to this file.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// List the traces of a process up to a depth.
    Traces {
        model: Option<PathBuf>,
        #[arg(long)]
        process: String,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Compare two processes.
    Equiv {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum)]
        kind: EquivKind,
        left: String,
        right: String,
    },
    /// Decide language opacity.
    CheckOpacity {
        model: PathBuf,
        #[arg(long)]
        process: String,
        #[arg(long)]
        observer: String,
        #[arg(long)]
        predicate: String,
    },
    /// Decide whether a process leaks only through timing.
    CheckTiming {
        model: PathBuf,
        #[arg(long)]
        process: String,
        #[arg(long)]
        observer: String,
        #[arg(long)]
        predicate: String,
    },
    /// Synthesize a supervisor.
    Synth {
        model: PathBuf,
        #[arg(long)]
        process: String,
        #[arg(long)]
        attacker: String,
        #[arg(long)]
        sup_observer: String,
        #[arg(long)]
        predicate: String,
        #[arg(long, value_delimiter = ',')]
        controllable: Vec<String>,
        #[arg(long, default_value_t = 4)]
        max_insert: usize,
        /// Write the supervisor as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a supervisor keeps every trace safe.
    VerifySup {
        model: PathBuf,
        #[arg(long)]
        process: String,
        #[arg(long)]
        attacker: String,
        #[arg(long)]
        sup_observer: String,
        #[arg(long)]
        predicate: String,
        #[arg(long)]
        sup: PathBuf,
    },
    /// Compare the permissiveness of two supervisors.
    CompareSup {
        model: PathBuf,
        #[arg(long)]
        process: String,
        #[arg(long)]
        sup_observer: String,
        first: PathBuf,
        second: PathBuf,
    },
    /// Random runs of a supervised process.
    Simulate {
        model: PathBuf,
        #[arg(long)]
        process: String,
        #[arg(long)]
        sup_observer: String,
        #[arg(long)]
        sup: PathBuf,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the checks declared in a model.
    Run {
        model: PathBuf,
        /// Only run these checks (0-based, in declaration order).
        #[arg(long)]
        check: Vec<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let error_code = if matches!(cli.command, Command::Equiv { .. }) { 2 } else { 3 };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code)
        }
    }
}

fn load(path: Option<&Path>) -> tpa::Result<Model> {
    match path {
        Some(p) => load_model(p),
        None => Ok(Model::default()),
    }
}

/// A process given by name, or written out as a term.
fn process(model: &Model, s: &str) -> tpa::Result<Term> {
    match model.process(s) {
        Some(t) => Ok(t.clone()),
        None => parse_term(s),
    }
}

fn read_sup(path: &Path) -> tpa::Result<SupervisorAutomaton> {
    SupervisorAutomaton::from_json(&std::fs::read_to_string(path)?)
}

fn print_json(v: &impl serde::Serialize) -> tpa::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> tpa::Result<i32> {
    let sem = Semantics { strict_tau_urgency: cli.strict_tau_urgency };
    let max = cli.max_states;
    match cli.command {
        Command::Parse { model } => {
            let m = load_model(&model)?;
            if cli.json {
                let procs: Vec<_> = m.processes.iter().map(|(n, t)| json!({ "name": n, "term": print_term(t) })).collect();
                print_json(&json!({
                    "processes": procs,
                    "observers": m.observers,
                    "predicates": m.predicates.keys().collect::<Vec<_>>(),
                    "checks": m.checks,
                }))?;
            } else {
                for (n, t) in &m.processes {
                    println!("{n} = {}", print_term(t));
                }
                for n in m.observers.keys() {
                    println!("observer {n}");
                }
                for (n, p) in &m.predicates {
                    println!("predicate {n}: {} state(s)", p.dfa.num_states());
                }
                for (i, c) in m.checks.iter().enumerate() {
                    println!("check #{i} (line {}): {}", c.line, c.describe());
                }
            }
            Ok(0)
        }
        Command::Lts { model, process: p, dot } => {
            let m = load(model.as_deref())?;
            let lts = sem.build_lts(&process(&m, &p)?, max)?;
            if let Some(path) = dot {
                std::fs::write(path, lts.to_dot())?;
            }
            if cli.json {
                print_json(&lts.to_json())?;
            } else {
                println!("{} state(s), {} transition(s){}", lts.num_states(), lts.num_transitions(),
                    if lts.complete { "" } else { " (incomplete)" });
                for (s, l, d) in lts.transitions() {
                    println!("  {} --{}--> {}", lts.names[s], l, lts.names[d]);
                }
            }
            Ok(if lts.complete { 0 } else { 2 })
        }
        Command::Traces { model, process: p, depth } => {
            let m = load(model.as_deref())?;
            let lts = sem.build_lts(&process(&m, &p)?, max)?;
            let traces = lts.traces(depth);
            if cli.json {
                let ts: Vec<String> = traces.traces.iter().map(|t| show_trace(t)).collect();
                print_json(&json!({ "traces": ts, "partial": traces.partial }))?;
            } else {
                for t in &traces.traces {
                    println!("{}", show_trace(t));
                }
            }
            Ok(if traces.partial { 2 } else { 0 })
        }
        Command::Equiv { model, kind, left, right } => {
            let m = load(model.as_deref())?;
            let a = sem.build_lts(&process(&m, &left)?, max)?;
            let b = sem.build_lts(&process(&m, &right)?, max)?;
            let r = match kind {
                EquivKind::Bisim => check_bisimilar(&a, &b),
                EquivKind::Wtrace => check_weak_trace_equiv(&a, &b),
            }?;
            if cli.json {
                print_json(&json!({ "equivalent": r.equivalent, "witness": r.witness }))?;
            } else if r.equivalent {
                println!("equivalent");
            } else {
                match &r.witness {
                    Some(w) => println!("not equivalent, distinguished by {}", show_trace(w)),
                    None => println!("not equivalent"),
                }
            }
            Ok(if r.equivalent { 0 } else { 1 })
        }
        Command::CheckOpacity { model, process: p, observer, predicate } => {
            let m = load_model(&model)?;
            let lts = sem.build_lts(&process(&m, &p)?, max)?;
            let v = check_opacity_bounded(&lts, m.predicate(&predicate)?, m.observer(&observer)?, max)?;
            if cli.json {
                print_json(&json!({ "result": v, "plant_states": lts.num_states() }))?;
            } else {
                match &v {
                    OpacityVerdict::Opaque => println!("opaque"),
                    OpacityVerdict::NotOpaque { witness, observable } => {
                        println!("not opaque: {} is observed as {}", show_trace(witness), show_trace(observable))
                    }
                    OpacityVerdict::Incomplete { bound } => println!("incomplete: state budget {bound} exceeded"),
                }
            }
            Ok(match v {
                OpacityVerdict::Opaque => 0,
                OpacityVerdict::NotOpaque { .. } => 1,
                OpacityVerdict::Incomplete { .. } => 2,
            })
        }
        Command::CheckTiming { model, process: p, observer, predicate } => {
            let m = load_model(&model)?;
            let lts = sem.build_lts(&process(&m, &p)?, max)?;
            let v = check_timing_attack(&lts, m.predicate(&predicate)?, m.observer(&observer)?)?;
            if cli.json {
                print_json(&v)?;
            } else {
                match &v {
                    TimingVerdict::Prone { .. } => println!("prone to timing attacks"),
                    TimingVerdict::NotProne { .. } => println!("not prone to timing attacks"),
                    TimingVerdict::Incomplete { bound } => println!("incomplete: state budget {bound} exceeded"),
                }
            }
            Ok(match v {
                TimingVerdict::NotProne { .. } => 0,
                TimingVerdict::Prone { .. } => 1,
                TimingVerdict::Incomplete { .. } => 2,
            })
        }
        Command::Synth { model, process: p, attacker, sup_observer, predicate, controllable, max_insert, out } => {
            let m = load_model(&model)?;
            let lts = sem.build_lts(&process(&m, &p)?, max)?;
            let controllable = controllable.iter().map(|s| Label::parse(s)).collect::<tpa::Result<BTreeSet<_>>>()?;
            let cfg = SynthesisConfig { controllable, max_insert, max_states: max };
            let r = synthesize(&lts, m.predicate(&predicate)?, m.observer(&attacker)?, m.observer(&sup_observer)?, &cfg)?;
            if let (Some(path), Some(sup)) = (out, r.supervisor()) {
                std::fs::write(path, sup.to_json()?)?;
            }
            if cli.json {
                print_json(&r)?;
            } else {
                match &r.outcome {
                    SynthesisOutcome::Supervisor { supervisor } | SynthesisOutcome::TrivialOnly { supervisor } => {
                        if matches!(r.outcome, SynthesisOutcome::TrivialOnly { .. }) {
                            println!("only a supervisor blocking every visible action exists");
                        }
                        println!("supervisor with {} state(s)", supervisor.num_states());
                        for q in &supervisor.states {
                            let d = supervisor.decision(*q);
                            let dis: Vec<String> = d.disabled.iter().map(|l| l.to_string()).collect();
                            println!("  q{q}: disable {{{}}}, insert {}", dis.join(", "), d.insert);
                            if let Some(steps) = supervisor.step.get(q) {
                                for (sym, d) in steps {
                                    println!("    on {sym} -> q{d}");
                                }
                            }
                        }
                    }
                    SynthesisOutcome::NoSupervisor { reason } => println!("no supervisor: {reason}"),
                }
            }
            Ok(if r.supervisor().is_some() { 0 } else { 1 })
        }
        Command::VerifySup { model, process: p, attacker, sup_observer, predicate, sup } => {
            let m = load_model(&model)?;
            let lts = sem.build_lts(&process(&m, &p)?, max)?;
            let sup = read_sup(&sup)?;
            let v = verify_supervisor(&lts, m.predicate(&predicate)?, m.observer(&attacker)?, m.observer(&sup_observer)?, &sup)?;
            if cli.json {
                print_json(&v)?;
            } else {
                match &v {
                    Verification::Valid => println!("valid"),
                    Verification::Invalid { witness } => println!("invalid: unsafe trace {}", show_trace(witness)),
                }
            }
            Ok(if v == Verification::Valid { 0 } else { 1 })
        }
        Command::CompareSup { model, process: p, sup_observer, first, second } => {
            let m = load_model(&model)?;
            let lts = sem.build_lts(&process(&m, &p)?, max)?;
            let r = compare_supervisors(&lts, m.observer(&sup_observer)?, &read_sup(&first)?, &read_sup(&second)?)?;
            if cli.json {
                print_json(&json!({ "first_is": r }))?;
            } else {
                let rel = match r {
                    Permissiveness::Equal => "as permissive as",
                    Permissiveness::MorePermissive => "strictly more permissive than",
                    Permissiveness::LessPermissive => "strictly less permissive than",
                    Permissiveness::Incomparable => "incomparable with",
                };
                println!("first supervisor is {rel} the second");
            }
            Ok(0)
        }
        Command::Simulate { model, process: p, sup_observer, sup, steps, runs, seed } => {
            let m = load_model(&model)?;
            let lts = sem.build_lts(&process(&m, &p)?, max)?;
            let runs = simulate(&lts, m.observer(&sup_observer)?, &read_sup(&sup)?, runs, steps, seed)?;
            if cli.json {
                print_json(&runs)?;
            } else {
                for r in &runs {
                    println!("{}  =>  {}", show_trace(&r.original), show_trace(&r.supervised));
                }
            }
            Ok(0)
        }
        Command::Run { model, check } => {
            let source = std::fs::read_to_string(&model)?;
            let m = tpa::model::parse_model(&source)?;
            let selection = if check.is_empty() { None } else { Some(check.as_slice()) };
            let report = run_checks(&m, &source, selection, &RunOptions { semantics: sem, max_states: max });
            if cli.json {
                print_json(&report)?;
            } else {
                print!("{}", report.render());
            }
            Ok(report.exit_code())
        }
    }
}
