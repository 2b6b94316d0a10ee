//! Verification and supervisor synthesis for a discrete-time extension of
//! CCS: parsing, structural operational semantics, equivalences, language
//! opacity, timing-attack detection and time-inserting supervisors.

pub mod automata;
pub mod equivalence;
pub mod error;
pub mod label;
pub mod lts;
pub mod model;
pub mod observation;
pub mod opacity;
pub mod parser;
pub mod predicate;
pub mod report;
pub mod semantics;
pub mod supervisor;
pub mod term;

pub use error::{Error, Result};
pub use label::{show_trace, Action, Label, Trace};
pub use parser::parse_term;
pub use term::{print_term, Term};
