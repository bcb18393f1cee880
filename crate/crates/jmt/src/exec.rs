//! Symbolic execution graphs.
//!
//! A graph is a set of labelled events together with program order, a
//! reads-from map, and a constraint set over the program's registers. Events
//! are identified across graphs by a canonical key: initializer writes by
//! their location, program events by thread, kind, location and the number of
//! preceding same-kind events in their thread. Two events in different graphs
//! denote "the same" action exactly when their keys are equal, which lets
//! relations over keys be compared between graphs directly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::expr::{Expr, Sxp};
use crate::rel::Relation;

/// A shared memory location name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Loc(pub String);

impl Loc {
    pub fn new(name: impl Into<String>) -> Self {
        Loc(name.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Threads are numbered from 1 in source order; 0 is never used so thread ids
/// match the customary T1, T2, ... naming.
pub type ThreadId = usize;

/// Access mode of a load or store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum AccessMode {
    Plain,
    Opaque,
    Release,
    Acquire,
    Volatile,
}

impl AccessMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AccessMode::Plain => "pln",
            AccessMode::Opaque => "opq",
            AccessMode::Release => "rel",
            AccessMode::Acquire => "acq",
            AccessMode::Volatile => "vol",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "pln" => AccessMode::Plain,
            "opq" => AccessMode::Opaque,
            "rel" => AccessMode::Release,
            "acq" => AccessMode::Acquire,
            "vol" => AccessMode::Volatile,
            _ => return None,
        })
    }
}

impl fmt::Display for AccessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fence flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FenceMode {
    /// Store-store fence.
    Ww,
    /// Load-load fence.
    Rr,
    /// Acquire fence.
    Acq,
    /// Release fence.
    Rel,
    /// Full fence.
    Full,
}

impl FenceMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FenceMode::Ww => "ww",
            FenceMode::Rr => "rr",
            FenceMode::Acq => "acq",
            FenceMode::Rel => "rel",
            FenceMode::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ww" => FenceMode::Ww,
            "rr" => FenceMode::Rr,
            "acq" => FenceMode::Acq,
            "rel" => FenceMode::Rel,
            "full" => FenceMode::Full,
            _ => return None,
        })
    }
}

impl fmt::Display for FenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The kind of an event. Read-modify-writes are a kind of their own and count
/// as both reads and writes for the purposes of set membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EventType {
    R,
    W,
    Rmw,
    F,
}

impl EventType {
    pub fn is_read(&self) -> bool {
        matches!(self, EventType::R | EventType::Rmw)
    }
    pub fn is_write(&self) -> bool {
        matches!(self, EventType::W | EventType::Rmw)
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventType::R => "R",
            EventType::W => "W",
            EventType::Rmw => "U",
            EventType::F => "F",
        })
    }
}

/// Canonical cross-graph identity of an event.
///
/// `idx` counts the similar events (same kind, location, and fence flavour)
/// that precede this one in its thread's program order, so the n-th read of
/// `x` in thread 2 has the same key in every graph of the same program.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EventKey {
    Init { loc: Loc },
    Prog {
        tid: ThreadId,
        typ: EventType,
        loc: Option<Loc>,
        fence: Option<FenceMode>,
        idx: usize,
    },
}

impl EventKey {
    pub fn init(loc: impl Into<String>) -> Self {
        EventKey::Init { loc: Loc::new(loc) }
    }

    pub fn prog(tid: ThreadId, typ: EventType, loc: Option<Loc>, fence: Option<FenceMode>, idx: usize) -> Self {
        EventKey::Prog { tid, typ, loc, fence, idx }
    }

    pub fn typ(&self) -> EventType {
        match self {
            EventKey::Init { .. } => EventType::W,
            EventKey::Prog { typ, .. } => *typ,
        }
    }

    pub fn loc(&self) -> Option<&Loc> {
        match self {
            EventKey::Init { loc } => Some(loc),
            EventKey::Prog { loc, .. } => loc.as_ref(),
        }
    }

    pub fn tid(&self) -> Option<ThreadId> {
        match self {
            EventKey::Init { .. } => None,
            EventKey::Prog { tid, .. } => Some(*tid),
        }
    }

    pub fn is_init(&self) -> bool {
        matches!(self, EventKey::Init { .. })
    }

    pub fn is_read(&self) -> bool {
        !self.is_init() && self.typ().is_read()
    }

    pub fn is_write(&self) -> bool {
        self.typ().is_write()
    }

    /// Position index within the key's similarity class.
    pub fn idx(&self) -> usize {
        match self {
            EventKey::Init { .. } => 0,
            EventKey::Prog { idx, .. } => *idx,
        }
    }
}

impl fmt::Display for EventKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKey::Init { loc } => write!(f, "Wini({loc})"),
            EventKey::Prog { tid, typ, loc, fence, idx } => {
                write!(f, "{typ}{tid}")?;
                if let Some(l) = loc {
                    write!(f, "({l}")?;
                    if *idx > 0 {
                        write!(f, "#{idx}")?;
                    }
                    write!(f, ")")
                } else {
                    let fm = fence.map(|m| m.as_str()).unwrap_or("?");
                    if *idx > 0 {
                        write!(f, "({fm}#{idx})")
                    } else {
                        write!(f, "({fm})")
                    }
                }
            }
        }
    }
}

/// A fully labelled event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub key: EventKey,
    /// Expression read, for reads and read-modify-writes.
    pub read_sxp: Option<Sxp>,
    /// Expression written, for writes, read-modify-writes, and initializers.
    pub write_sxp: Option<Sxp>,
    pub read_mode: Option<AccessMode>,
    pub write_mode: Option<AccessMode>,
}

impl Event {
    pub fn init(loc: impl Into<String>) -> Self {
        Event {
            key: EventKey::init(loc),
            read_sxp: None,
            write_sxp: Some(Sxp::Val(0)),
            read_mode: None,
            write_mode: Some(AccessMode::Plain),
        }
    }

    /// Does the event participate in synchronization, i.e. does any of its
    /// accesses use volatile mode?
    pub fn is_volatile(&self) -> bool {
        self.read_mode == Some(AccessMode::Volatile) || self.write_mode == Some(AccessMode::Volatile)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("event {0} appears in a relation but not in the event set")]
    UnknownEvent(String),
    #[error("program order is not a union of per-thread total orders: {0}")]
    BadProgramOrder(String),
    #[error("read {0} has {1} incoming reads-from edges, expected exactly one")]
    BadReadsFrom(String, usize),
    #[error("reads-from edge {0} -> {1} is not a same-location write-to-read edge")]
    IllTypedReadsFrom(String, String),
}

/// A symbolic execution graph.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    pub events: BTreeMap<EventKey, Event>,
    pub po: Relation<EventKey>,
    pub rf: Relation<EventKey>,
    /// Constraint set Γ: boolean expressions over the program's registers.
    pub gamma: Vec<Expr>,
}

impl Graph {
    pub fn keys(&self) -> impl Iterator<Item = &EventKey> {
        self.events.keys()
    }

    pub fn key_set(&self) -> BTreeSet<EventKey> {
        self.events.keys().cloned().collect()
    }

    pub fn contains(&self, key: &EventKey) -> bool {
        self.events.contains_key(key)
    }

    pub fn reads(&self) -> impl Iterator<Item = &EventKey> {
        self.events.keys().filter(|k| k.is_read())
    }

    pub fn writes(&self) -> impl Iterator<Item = &EventKey> {
        self.events.keys().filter(|k| k.is_write())
    }

    /// Initializer writes.
    pub fn init_writes(&self) -> impl Iterator<Item = &EventKey> {
        self.events.keys().filter(|k| k.is_init())
    }

    /// The write feeding read `r`, if an rf edge is present.
    pub fn rf_source(&self, r: &EventKey) -> Option<EventKey> {
        self.rf.preimage(r).into_iter().next()
    }

    /// Same-location pairs (`loc` in cat terms), over events that have a
    /// location.
    pub fn loc_rel(&self) -> Relation<EventKey> {
        let mut rel = Relation::new();
        let keys: Vec<&EventKey> = self.events.keys().collect();
        for a in &keys {
            for b in &keys {
                if let (Some(la), Some(lb)) = (a.loc(), b.loc()) {
                    if la == lb {
                        rel.insert((*a).clone(), (*b).clone());
                    }
                }
            }
        }
        rel
    }

    /// The constraints contributed by reads-from edges: for each edge the read
    /// expression equals the written expression.
    pub fn rf_constraints(&self) -> Vec<Expr> {
        let mut out = Vec::new();
        for (w, r) in self.rf.iter() {
            let wexp = self.events[w].write_sxp.as_ref().expect("rf source is a write").to_expr();
            let rexp = self.events[r].read_sxp.as_ref().expect("rf target is a read").to_expr();
            out.push(Expr::eq(rexp, wexp));
        }
        out
    }

    /// Γ together with the reads-from equalities, as one conjunction list.
    pub fn all_constraints(&self) -> Vec<Expr> {
        let mut out = self.gamma.clone();
        out.extend(self.rf_constraints());
        out
    }

    /// Structural well-formedness: relations mention only known events, po is
    /// a disjoint union of per-thread total orders, every rf edge goes from a
    /// write to a same-location read, and no read has two sources. `complete`
    /// additionally requires every read to have exactly one source.
    pub fn validate(&self, complete_rf: bool) -> Result<(), GraphError> {
        for (a, b) in self.po.iter().chain(self.rf.iter()) {
            for k in [a, b] {
                if !self.contains(k) {
                    return Err(GraphError::UnknownEvent(k.to_string()));
                }
            }
        }
        // po: irreflexive, transitive, total per thread, empty across threads
        if !self.po.is_irreflexive() || !self.po.is_transitive() {
            return Err(GraphError::BadProgramOrder("not a strict partial order".into()));
        }
        let prog: Vec<&EventKey> = self.events.keys().filter(|k| !k.is_init()).collect();
        for a in &prog {
            for b in &prog {
                if a == b {
                    continue;
                }
                let related = self.po.contains(a, b) || self.po.contains(b, a);
                if a.tid() == b.tid() && !related {
                    return Err(GraphError::BadProgramOrder(format!("{a} and {b} unordered")));
                }
                if a.tid() != b.tid() && related {
                    return Err(GraphError::BadProgramOrder(format!("{a} and {b} cross threads")));
                }
            }
        }
        if self.po.iter().any(|(a, b)| a.is_init() || b.is_init()) {
            return Err(GraphError::BadProgramOrder("initializers are not in po".into()));
        }
        for (w, r) in self.rf.iter() {
            let ok = w.is_write() && r.is_read() && w.loc() == r.loc() && w.loc().is_some();
            if !ok {
                return Err(GraphError::IllTypedReadsFrom(w.to_string(), r.to_string()));
            }
        }
        for r in self.reads() {
            let n = self.rf.preimage(r).len();
            let bad = if complete_rf { n != 1 } else { n > 1 };
            if bad {
                return Err(GraphError::BadReadsFrom(r.to_string(), n));
            }
        }
        Ok(())
    }

    /// Human-readable dump used by the CLI's verbose output.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        s.push_str("events:\n");
        for (k, e) in &self.events {
            s.push_str(&format!("  {k}"));
            if let Some(r) = &e.read_sxp {
                s.push_str(&format!(" reads {r}"));
            }
            if let Some(w) = &e.write_sxp {
                s.push_str(&format!(" writes {w}"));
            }
            s.push('\n');
        }
        s.push_str(&format!("po: {}\n", self.po));
        s.push_str(&format!("rf: {}\n", self.rf));
        s.push_str("gamma:\n");
        for c in &self.gamma {
            s.push_str(&format!("  {c}\n"));
        }
        s
    }
}

/// An execution graph enhanced with the relations computed by a memory model:
/// synchronization order, synchronizes-with, and happens-before.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnhancedGraph {
    pub graph: Graph,
    pub so: Relation<EventKey>,
    pub sw: Relation<EventKey>,
    pub hb: Relation<EventKey>,
}
