//! Observation functions: what an attacker (or a supervisor) sees of a trace.
//!
//! Static observers map every letter independently, erasing letters mapped
//! to `eps`. Windowed observers may look at up to `m - 1` neighbours on each
//! side of a letter. Custom observers are arbitrary functions on words and
//! are only usable for evaluation and bounded checks.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::automata::fresh_label;
use crate::label::{Label, Trace};

/// Image of letters without an explicit entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fallback {
    Id,
    Eps,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticObserver {
    /// Explicit images; `None` is the empty observation.
    pub map: BTreeMap<Label, Option<Label>>,
    pub default: Fallback,
}

impl StaticObserver {
    pub fn identity() -> Self {
        StaticObserver { map: BTreeMap::new(), default: Fallback::Id }
    }

    /// Identity except that the given letters are erased.
    pub fn hiding<'a>(hidden: impl IntoIterator<Item = &'a Label>) -> Self {
        let map = hidden.into_iter().map(|l| (l.clone(), None)).collect();
        StaticObserver { map, default: Fallback::Id }
    }

    pub fn image(&self, l: &Label) -> Option<Label> {
        if let Some(img) = self.map.get(l) {
            return img.clone();
        }
        match (self.default, l) {
            (_, Label::Tau) => None,
            (Fallback::Id, _) => Some(l.clone()),
            (Fallback::Eps, _) => None,
        }
    }

    pub fn observe(&self, w: &[Label]) -> Trace {
        w.iter().filter_map(|l| self.image(l)).collect()
    }

    pub fn letters(&self) -> BTreeSet<Label> {
        let mut s: BTreeSet<Label> = self.map.keys().cloned().collect();
        s.extend(self.map.values().flatten().cloned());
        s
    }
}

/// `letter if context -> image`: applies to `letter` when `context` occurs
/// elsewhere in its window (always, if there is no context).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRule {
    pub letter: Label,
    pub context: Option<Label>,
    pub image: Option<Label>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowedObserver {
    pub m: usize,
    /// First matching rule wins; otherwise `base` decides.
    pub rules: Vec<WindowRule>,
    pub base: StaticObserver,
    /// Delete `t` letters before anything else.
    #[serde(default)]
    pub untimed: bool,
}

impl WindowedObserver {
    pub fn lift(base: StaticObserver) -> Self {
        WindowedObserver { m: 1, rules: vec![], base, untimed: false }
    }

    /// Image of position `i` of `w`, where `w` has already been stripped of
    /// `t` if the observer is untimed.
    fn image_at(&self, w: &[Label], i: usize) -> Option<Label> {
        let lo = (i + 1).saturating_sub(self.m);
        let hi = (i + self.m).min(w.len());
        for r in &self.rules {
            if r.letter != w[i] {
                continue;
            }
            let fires = match &r.context {
                None => true,
                Some(c) => (lo..hi).any(|j| j != i && w[j] == *c),
            };
            if fires {
                return r.image.clone();
            }
        }
        self.base.image(&w[i])
    }

    fn strip(&self, w: &[Label]) -> Trace {
        w.iter().filter(|l| !(self.untimed && l.is_time())).cloned().collect()
    }

    pub fn observe(&self, w: &[Label]) -> Trace {
        let w = self.strip(w);
        (0..w.len()).filter_map(|i| self.image_at(&w, i)).collect()
    }

    /// Capacity of the transducer buffer.
    pub fn lookback(&self) -> usize {
        2 * self.m.max(1) - 2
    }

    /// Feeds one letter to the streaming evaluator. The buffer keeps the last
    /// `2m - 2` letters; a position is emitted once its right context is known.
    pub fn step(&self, buf: &[Label], x: &Label) -> (Vec<Label>, Option<Label>) {
        if self.untimed && x.is_time() {
            return (buf.to_vec(), None);
        }
        let mut next: Vec<Label> = buf.to_vec();
        next.push(x.clone());
        let m = self.m.max(1);
        let out = if next.len() >= m { self.image_at(&next, next.len() - m) } else { None };
        let cap = self.lookback();
        if next.len() > cap {
            next.drain(..next.len() - cap);
        }
        (next, out)
    }

    /// Images of the positions still waiting for right context at the end
    /// of the word.
    pub fn flush(&self, buf: &[Label]) -> Trace {
        let pending = buf.len().min(self.m.max(1) - 1);
        (buf.len() - pending..buf.len()).filter_map(|i| self.image_at(buf, i)).collect()
    }

    pub fn letters(&self) -> BTreeSet<Label> {
        let mut s = self.base.letters();
        for r in &self.rules {
            s.insert(r.letter.clone());
            s.extend(r.context.iter().cloned());
            s.extend(r.image.iter().cloned());
        }
        s
    }
}

type WordFn = dyn Fn(&[Label]) -> Trace + Send + Sync;

/// Black-box observer given by an arbitrary function on words.
#[derive(Clone)]
pub struct CustomObserver {
    pub name: String,
    /// Letters worth trying in bounded comparisons.
    pub alphabet: Vec<Label>,
    pub f: Arc<WordFn>,
}

impl fmt::Debug for CustomObserver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomObserver({})", self.name)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Observer {
    Static(StaticObserver),
    Windowed(WindowedObserver),
    #[serde(skip)]
    Custom(CustomObserver),
}

impl Observer {
    pub fn identity() -> Self {
        Observer::Static(StaticObserver::identity())
    }

    pub fn hiding<'a>(hidden: impl IntoIterator<Item = &'a Label>) -> Self {
        Observer::Static(StaticObserver::hiding(hidden))
    }

    pub fn custom(name: &str, alphabet: Vec<Label>, f: impl Fn(&[Label]) -> Trace + Send + Sync + 'static) -> Self {
        Observer::Custom(CustomObserver { name: name.into(), alphabet, f: Arc::new(f) })
    }

    pub fn observe(&self, w: &[Label]) -> Trace {
        match self {
            Observer::Static(s) => s.observe(w),
            Observer::Windowed(o) => o.observe(w),
            Observer::Custom(c) => (c.f)(w),
        }
    }

    pub fn as_static(&self) -> Option<&StaticObserver> {
        match self {
            Observer::Static(s) => Some(s),
            _ => None,
        }
    }

    /// Finite-state form usable by the automata constructions.
    pub fn as_windowed(&self) -> Option<WindowedObserver> {
        match self {
            Observer::Static(s) => Some(WindowedObserver::lift(s.clone())),
            Observer::Windowed(o) => Some(o.clone()),
            Observer::Custom(_) => None,
        }
    }

    pub fn letters(&self) -> BTreeSet<Label> {
        match self {
            Observer::Static(s) => s.letters(),
            Observer::Windowed(o) => o.letters(),
            Observer::Custom(c) => c.alphabet.iter().cloned().collect(),
        }
    }

    /// The observer that behaves as if all `t` letters were deleted first.
    pub fn derive_untimed(&self) -> Observer {
        match self {
            Observer::Static(s) => {
                let mut s = s.clone();
                s.map.insert(Label::Time, None);
                Observer::Static(s)
            }
            Observer::Windowed(o) => Observer::Windowed(WindowedObserver { untimed: true, ..o.clone() }),
            Observer::Custom(c) => {
                let f = c.f.clone();
                Observer::custom(&format!("untimed {}", c.name), c.alphabet.clone(), move |w| {
                    let stripped: Trace = w.iter().filter(|l| !l.is_time()).cloned().collect();
                    f(&stripped)
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Comparison {
    Stronger,
    /// `o2` identifies the two words, `o1` tells them apart.
    NotStronger { w1: Trace, w2: Trace },
    UnknownUpTo { bound: usize },
}

/// Is `o2` stronger than `o1`, i.e. does `o2(w) = o2(w')` imply
/// `o1(w) = o1(w')`? Exact for two static observers, bounded otherwise.
pub fn compare_observers(o1: &Observer, o2: &Observer, bound: usize) -> Comparison {
    let mut used = o1.letters();
    used.extend(o2.letters());
    used.insert(Label::Tau);
    used.insert(Label::Time);
    let mut alphabet: Vec<Label> = used.iter().cloned().collect();
    alphabet.push(fresh_label(&used, 0));
    alphabet.push(fresh_label(&used, 1));

    if let (Some(a), Some(b)) = (o1.as_static(), o2.as_static()) {
        // letterwise evaluation with erasure: it suffices to compare single letters
        for x in &alphabet {
            if b.image(x).is_none() && a.image(x).is_some() {
                return Comparison::NotStronger { w1: vec![x.clone()], w2: vec![] };
            }
        }
        for x in &alphabet {
            for y in &alphabet {
                if b.image(x).is_some() && b.image(x) == b.image(y) && a.image(x) != a.image(y) {
                    return Comparison::NotStronger { w1: vec![x.clone()], w2: vec![y.clone()] };
                }
            }
        }
        return Comparison::Stronger;
    }

    let mut seen: HashMap<Trace, (Trace, Trace)> = HashMap::new();
    let mut layer: Vec<Trace> = vec![vec![]];
    for len in 0..=bound {
        for w in &layer {
            let (k, v) = (o2.observe(w), o1.observe(w));
            match seen.get(&k) {
                Some((w0, v0)) if *v0 != v => {
                    return Comparison::NotStronger { w1: w0.clone(), w2: w.clone() };
                }
                Some(_) => {}
                None => {
                    seen.insert(k, (w.clone(), v));
                }
            }
        }
        if len == bound {
            break;
        }
        layer = layer
            .iter()
            .flat_map(|w| {
                alphabet.iter().map(move |x| {
                    let mut n = w.clone();
                    n.push(x.clone());
                    n
                })
            })
            .collect();
    }
    Comparison::UnknownUpTo { bound }
}

/// Mutual strength.
pub fn comparable(o1: &Observer, o2: &Observer, bound: usize) -> Option<bool> {
    match (compare_observers(o1, o2, bound), compare_observers(o2, o1, bound)) {
        (Comparison::Stronger, Comparison::Stronger) => Some(true),
        (Comparison::NotStronger { .. }, _) | (_, Comparison::NotStronger { .. }) => Some(false),
        _ => None,
    }
}
