//! The multi-execution layer: justification-sequence search.
//!
//! A target graph is valid when a sequence of stages — each a well-formed
//! enhanced graph with a set of committed events — grows the committed set
//! from the initializer writes to all of the target's events while
//! respecting the commit conditions. Value agreement of committed events
//! (condition 4) is not enforced structurally; it is delegated to the
//! solver via [`crate::smt::encode`], together with the behavior formula.

use std::collections::BTreeSet;

use crate::exec::{EnhancedGraph, EventKey};
use crate::expr::Expr;
use crate::smt::encode::enc_justification;
use crate::smt::{Model, SatOracle, SatResult, SmtError};

/// One stage of a justification: a graph and the events committed so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    pub graph: EnhancedGraph,
    pub committed: BTreeSet<EventKey>,
}

impl Stage {
    /// The starting stage for a well-behaved graph: exactly the initializer
    /// writes are committed.
    pub fn initial(g: &EnhancedGraph) -> Stage {
        Stage {
            graph: g.clone(),
            committed: g.graph.init_writes().cloned().collect(),
        }
    }
}

/// A complete justification for a target graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Justification {
    pub target: EnhancedGraph,
    pub stages: Vec<Stage>,
}

impl Justification {
    /// Structural re-validation, independent of the search: every stage must
    /// pass `ok` against its predecessor's committed set, the first stage
    /// must commit exactly the initializer writes of a well-behaved graph,
    /// the last stage must have committed every target event, the final
    /// check against the target itself must pass, and the synchronization
    /// edges used to justify committed events must persist.
    pub fn validate(&self) -> Result<(), String> {
        let Some(first) = self.stages.first() else {
            return Err("justification has no stages".into());
        };
        if !is_well_behaved(&first.graph) {
            return Err("first stage graph is not well-behaved".into());
        }
        let inits: BTreeSet<EventKey> = first.graph.graph.init_writes().cloned().collect();
        if first.committed != inits {
            return Err("first stage must commit exactly the initializer writes".into());
        }
        let mut prev: BTreeSet<EventKey> = BTreeSet::new();
        for (i, s) in self.stages.iter().enumerate() {
            if !prev.is_subset(&s.committed) {
                return Err(format!("committed set shrinks at stage {}", i + 1));
            }
            if !ok(&self.target, s, &prev) {
                return Err(format!("commit conditions fail at stage {}", i + 1));
            }
            prev = s.committed.clone();
        }
        let tkeys = self.target.graph.key_set();
        if prev != tkeys {
            return Err("final stage does not commit every target event".into());
        }
        let final_stage = Stage { graph: self.target.clone(), committed: tkeys };
        if !ok(&self.target, &final_stage, &prev) {
            return Err("final check against the target fails".into());
        }
        if !check_condition8(self) {
            return Err("a justifying synchronization edge does not persist".into());
        }
        Ok(())
    }

    /// Human-readable numbered stage listing.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for (i, s) in self.stages.iter().enumerate() {
            let committed: Vec<String> = s.committed.iter().map(|k| k.to_string()).collect();
            let _ = writeln!(out, "stage {}: committed {{{}}}", i + 1, committed.join(", "));
            for line in s.graph.graph.dump().lines() {
                let _ = writeln!(out, "  {line}");
            }
        }
        let _ = writeln!(out, "target:");
        for line in self.target.graph.dump().lines() {
            let _ = writeln!(out, "  {line}");
        }
        out
    }
}

/// A graph is well-behaved when every read sees a write it is ordered after:
/// rf ⊆ hb.
pub fn is_well_behaved(g: &EnhancedGraph) -> bool {
    g.graph.rf.is_subset(&g.hb)
}

/// The commit conditions relating a candidate stage to the target, given the
/// previous stage's committed set. Checks conditions 1, 2, 3, 5, 6 and 7;
/// value agreement of committed events is left to the solver encoding.
pub fn ok(target: &EnhancedGraph, cand: &Stage, prev: &BTreeSet<EventKey>) -> bool {
    ok_graph(target, &cand.graph, &cand.committed, prev)
}

fn ok_graph(
    target: &EnhancedGraph,
    g: &EnhancedGraph,
    c: &BTreeSet<EventKey>,
    prev: &BTreeSet<EventKey>,
) -> bool {
    // 1: committed events occur in the graph
    if !c.iter().all(|k| g.graph.contains(k)) {
        return false;
    }
    // 2, 3: hb and so over the committed events agree with the target
    if g.hb.restrict(c) != target.hb.restrict(c) {
        return false;
    }
    if g.so.restrict(c) != target.so.restrict(c) {
        return false;
    }
    // 5: rf over the previously committed events agrees with the target
    if g.graph.rf.restrict(prev) != target.graph.rf.restrict(prev) {
        return false;
    }
    // 6: reads not committed before must be in hb-order with their writes
    for r in g.graph.reads() {
        if prev.contains(r) {
            continue;
        }
        match g.graph.rf_source(r) {
            Some(w) if g.hb.contains(&w, r) => {}
            _ => return false,
        }
    }
    // 7: reads can only be committed after their writes, in both graphs
    for r in c.difference(prev).filter(|k| k.is_read()) {
        let in_g = g.graph.rf_source(r).is_some_and(|w| prev.contains(&w));
        let in_t = target.graph.rf_source(r).is_some_and(|w| prev.contains(&w));
        if !in_g || !in_t {
            return false;
        }
    }
    true
}

/// All k-element subsets of `items`, in lexicographic order.
fn combinations<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if k > items.len() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, first) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            rest.insert(0, first.clone());
            out.push(rest);
        }
    }
    out
}

/// Successor stages of `stage`: pick a pool graph, keep the committed events
/// it contains, and commit a nonempty set of up to `bound` fresh events.
/// Only events of the target are worth committing (the final stage must
/// reach exactly the target's events), and the committed set must not lose
/// events when changing graphs. Results are deterministic in pool order.
pub fn gen_successors(
    target: &EnhancedGraph,
    stage: &Stage,
    pool: &[EnhancedGraph],
    bound: Option<usize>,
) -> Vec<Stage> {
    let tkeys = target.graph.key_set();
    let mut out = Vec::new();
    for g in pool {
        let ekeys = g.graph.key_set();
        if !stage.committed.is_subset(&ekeys) {
            continue;
        }
        let frontier: Vec<EventKey> = ekeys
            .intersection(&tkeys)
            .filter(|k| !stage.committed.contains(*k))
            .cloned()
            .collect();
        for size in 1..=bound.unwrap_or(usize::MAX).min(frontier.len()) {
            for x in combinations(&frontier, size) {
                let mut committed = stage.committed.clone();
                committed.extend(x);
                if ok_graph(target, g, &committed, &stage.committed) {
                    out.push(Stage { graph: g.clone(), committed });
                }
            }
        }
    }
    out
}

/// Once an event is committed, the release-acquire synchronization used to
/// justify what it sees must persist: every sw edge of stage i that is a
/// non-po edge of the transitive reduction of hb and leads (via hb) to a
/// committed event must be an sw edge of every later stage and of the
/// target.
pub fn check_condition8(j: &Justification) -> bool {
    for (i, s) in j.stages.iter().enumerate() {
        let g = &s.graph;
        // hb is reflexive; strip the identity pairs before reducing
        let id = crate::rel::Relation::identity(g.graph.keys().cloned());
        let core = g.hb.difference(&id).transitive_reduction().difference(&g.graph.po);
        for (x, y) in g.sw.intersection(&core).iter() {
            let justifies_committed = s.committed.iter().any(|z| g.hb.contains(y, z));
            if !justifies_committed {
                continue;
            }
            let persists = j.stages[i + 1..].iter().all(|later| later.graph.sw.contains(x, y))
                && j.target.sw.contains(x, y);
            if !persists {
                return false;
            }
        }
    }
    true
}

/// Search parameters.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Maximum number of events committed per stage; `None` allows any
    /// nonempty subset of the frontier. Some behaviors (e.g. two reads whose
    /// agreement guards a write) are only justifiable by committing several
    /// events at once, so a bound trades completeness for a smaller search
    /// space.
    pub commit_bound: Option<usize>,
    /// Hard cap on the stage count of a candidate sequence.
    pub max_stages: usize,
    /// Number of search-tree nodes to expand before giving up.
    pub node_budget: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { commit_bound: None, max_stages: 64, node_budget: 1_000_000 }
    }
}

/// Outcome of the search, distinguishing exhaustion of the search space
/// from exhaustion of the budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    /// A justification together with the register model the solver found.
    Found(Justification, Model),
    NoJustification,
    BudgetExhausted,
}

struct Search<'a> {
    target: &'a EnhancedGraph,
    pool: &'a [EnhancedGraph],
    phi: &'a Expr,
    oracle: &'a dyn SatOracle,
    cfg: &'a SearchConfig,
    tkeys: BTreeSet<EventKey>,
    nodes: u64,
    exhausted: bool,
}

impl Search<'_> {
    /// Depth-first extension of `path`. Paths are explored fully rather than
    /// memoized per stage: whether a completed sequence survives the
    /// synchronization-persistence check and the solver depends on the whole
    /// path, so a stage that failed on one path may succeed on another.
    fn dfs(&mut self, path: &mut Vec<Stage>) -> Result<Option<(Justification, Model)>, SmtError> {
        if self.nodes >= self.cfg.node_budget {
            self.exhausted = true;
            return Ok(None);
        }
        self.nodes += 1;
        let last = path.last().expect("path is never empty");
        if last.committed == self.tkeys {
            if let Some(found) = self.try_finish(path)? {
                return Ok(Some(found));
            }
            // the frontier is empty, so no successors exist
            return Ok(None);
        }
        if path.len() >= self.cfg.max_stages {
            return Ok(None);
        }
        for s in gen_successors(self.target, last, self.pool, self.cfg.commit_bound) {
            path.push(s);
            let found = self.dfs(path)?;
            path.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }

    /// Final checks on a sequence that committed every target event: the
    /// closing check against the target itself, synchronization persistence,
    /// and the solver validation of value agreement plus the behavior
    /// formula.
    fn try_finish(&mut self, path: &[Stage]) -> Result<Option<(Justification, Model)>, SmtError> {
        let last = path.last().expect("path is never empty");
        let final_stage = Stage { graph: self.target.clone(), committed: self.tkeys.clone() };
        if !ok(self.target, &final_stage, &last.committed) {
            return Ok(None);
        }
        let j = Justification { target: self.target.clone(), stages: path.to_vec() };
        if !check_condition8(&j) {
            return Ok(None);
        }
        let staged: Vec<_> = j.stages.iter().map(|s| (&s.graph.graph, &s.committed)).collect();
        let constraints = enc_justification(&self.target.graph, &staged, self.phi);
        match self.oracle.check(&constraints)? {
            SatResult::Sat(model) => Ok(Some((j, model))),
            SatResult::Unsat | SatResult::Unknown => Ok(None),
        }
    }

    /// A well-behaved target justifies itself: commit its events one by one
    /// over copies of itself, writers before their readers. This avoids the
    /// search entirely in the common case.
    fn well_behaved_shortcut(&mut self) -> Result<Option<(Justification, Model)>, SmtError> {
        if !is_well_behaved(self.target) {
            return Ok(None);
        }
        let mut order: Vec<EventKey> = Vec::new();
        let mut remaining: BTreeSet<EventKey> =
            self.tkeys.iter().filter(|k| !k.is_init()).cloned().collect();
        // rf ∪ po is acyclic here (both are contained in hb, which is
        // antisymmetric), so this always terminates
        while !remaining.is_empty() {
            let next = remaining
                .iter()
                .find(|k| {
                    let rf_ready = !k.is_read()
                        || self
                            .target
                            .graph
                            .rf_source(k)
                            .is_some_and(|w| !remaining.contains(&w));
                    rf_ready
                        && !remaining
                            .iter()
                            .any(|p| p != *k && self.target.graph.po.contains(p, k))
                })
                .cloned()
                .expect("acyclic order has a minimal element");
            remaining.remove(&next);
            order.push(next);
        }
        let mut path = vec![Stage::initial(self.target)];
        for key in order {
            let prev = path.last().unwrap();
            let mut committed = prev.committed.clone();
            committed.insert(key);
            let cand = Stage { graph: self.target.clone(), committed };
            if !ok(self.target, &cand, &prev.committed) {
                return Ok(None);
            }
            path.push(cand);
        }
        self.try_finish(&path)
    }
}

/// Search for a solver-validated justification of `target` over `pool`.
/// Deterministic for a fixed pool order and configuration.
pub fn find_justification(
    target: &EnhancedGraph,
    pool: &[EnhancedGraph],
    phi: &Expr,
    oracle: &dyn SatOracle,
    cfg: &SearchConfig,
) -> Result<SearchOutcome, SmtError> {
    let mut search = Search {
        target,
        pool,
        phi,
        oracle,
        cfg,
        tkeys: target.graph.key_set(),
        nodes: 0,
        exhausted: false,
    };
    if let Some((j, m)) = search.well_behaved_shortcut()? {
        return Ok(SearchOutcome::Found(j, m));
    }
    for start in pool {
        if !is_well_behaved(start) {
            continue;
        }
        let s1 = Stage::initial(start);
        if !ok(target, &s1, &BTreeSet::new()) {
            continue;
        }
        let mut path = vec![s1];
        if let Some((j, m)) = search.dfs(&mut path)? {
            return Ok(SearchOutcome::Found(j, m));
        }
    }
    if search.exhausted {
        Ok(SearchOutcome::BudgetExhausted)
    } else {
        Ok(SearchOutcome::NoJustification)
    }
}
