//! Actions, labels and traces.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Names that can never be used as visible actions.
pub const RESERVED: [&str; 3] = ["tau", "t", "tick"];

/// A visible action: a channel name together with its polarity.
///
/// `co == true` is the co-action, written `'a` in the concrete syntax.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Action {
    pub name: Arc<str>,
    pub co: bool,
}

impl Action {
    pub fn new(name: &str) -> Self {
        Action { name: Arc::from(name), co: false }
    }

    pub fn co_of(name: &str) -> Self {
        Action { name: Arc::from(name), co: true }
    }

    pub fn complement(&self) -> Self {
        Action { name: self.name.clone(), co: !self.co }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.co {
            write!(f, "'{}", self.name)
        } else {
            write!(f, "{}", self.name)
        }
    }
}

/// A transition label: a visible action, the internal action, the time
/// action, or the test-success action produced by test processes.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Label {
    Act(Action),
    Tau,
    Time,
    Tick,
}

impl Label {
    pub fn act(name: &str) -> Self {
        Label::Act(Action::new(name))
    }

    pub fn coact(name: &str) -> Self {
        Label::Act(Action::co_of(name))
    }

    pub fn is_visible(&self) -> bool {
        matches!(self, Label::Act(_))
    }

    pub fn is_time(&self) -> bool {
        matches!(self, Label::Time)
    }

    pub fn action(&self) -> Option<&Action> {
        match self {
            Label::Act(a) => Some(a),
            _ => None,
        }
    }

    /// Parses the serialized form used by the JSON and model formats:
    /// `tau`, `t`, `tick`, `a` or `'a`.
    pub fn parse(s: &str) -> Result<Label, Error> {
        let s = s.trim();
        match s {
            "tau" => return Ok(Label::Tau),
            "t" => return Ok(Label::Time),
            "tick" => return Ok(Label::Tick),
            _ => {}
        }
        let (co, name) = match s.strip_prefix('\'') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        if !is_ident(name) {
            return Err(Error::InvalidLabel(s.to_string()));
        }
        if RESERVED.contains(&name) {
            return Err(Error::ReservedName(name.to_string()));
        }
        Ok(Label::Act(Action { name: Arc::from(name), co }))
    }
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Act(a) => a.fmt(f),
            Label::Tau => f.write_str("tau"),
            Label::Time => f.write_str("t"),
            Label::Tick => f.write_str("tick"),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Label::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A finite sequence of labels. The empty trace is ε.
pub type Trace = Vec<Label>;

/// Renders a trace as dot-separated labels, `eps` for the empty trace.
pub fn show_trace(trace: &[Label]) -> String {
    if trace.is_empty() {
        return "eps".to_string();
    }
    trace.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(".")
}

/// Parses a dot-separated trace; `eps` or the empty string is ε.
pub fn parse_trace(s: &str) -> Result<Trace, Error> {
    let s = s.trim();
    if s.is_empty() || s == "eps" {
        return Ok(Vec::new());
    }
    s.split('.').map(Label::parse).collect()
}
