//! Construction of symbolic execution graphs from programs: per-thread
//! control-flow expansion, product composition with initializer writes, and
//! exhaustive reads-from enumeration with satisfiability pruning.

use std::collections::BTreeMap;

use crate::exec::{Event, EventKey, EventType, FenceMode, Graph, Loc};
use crate::expr::{Expr, Sxp, Value};
use crate::litmus::{Instruction, LitmusTest};
use crate::smt::{SatOracle, SatResult, SmtError};

/// One fully expanded control path of a thread: events in program order plus
/// the branch/assignment constraints collected along the path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadGraph {
    pub events: Vec<Event>,
    pub gamma: Vec<Expr>,
}

/// Counters assigning each event its position among similar events (same
/// kind, location, fence flavour) of the thread, which determines its key.
type SimilarityCounters = BTreeMap<(EventType, Option<Loc>, Option<FenceMode>), usize>;

#[derive(Debug, Clone)]
struct PathState {
    events: Vec<Event>,
    gamma: Vec<Expr>,
    counters: SimilarityCounters,
}

impl PathState {
    fn next_idx(&mut self, typ: EventType, loc: Option<Loc>, fence: Option<FenceMode>) -> usize {
        let c = self.counters.entry((typ, loc, fence)).or_insert(0);
        let idx = *c;
        *c += 1;
        idx
    }

    fn push_event(&mut self, tid: usize, typ: EventType, loc: Option<Loc>, fence: Option<FenceMode>, mut build: impl FnMut(EventKey) -> Event) {
        let idx = self.next_idx(typ, loc.clone(), fence);
        let key = EventKey::prog(tid, typ, loc, fence, idx);
        self.events.push(build(key));
    }
}

fn exec_block(tid: usize, instrs: &[Instruction], states: Vec<PathState>) -> Vec<PathState> {
    let mut states = states;
    for instr in instrs {
        let mut next = Vec::new();
        for mut st in states {
            match instr {
                Instruction::Skip => next.push(st),
                Instruction::Assign { reg, exp } => {
                    st.gamma.push(Expr::eq(Expr::Reg(reg.clone()), exp.clone()));
                    next.push(st);
                }
                Instruction::Store { loc, sxp, mode } => {
                    st.push_event(tid, EventType::W, Some(loc.clone()), None, |key| Event {
                        key,
                        read_sxp: None,
                        write_sxp: Some(sxp.clone()),
                        read_mode: None,
                        write_mode: Some(*mode),
                    });
                    next.push(st);
                }
                Instruction::Load { reg, loc, mode } => {
                    st.push_event(tid, EventType::R, Some(loc.clone()), None, |key| Event {
                        key,
                        read_sxp: Some(Sxp::Reg(reg.clone())),
                        write_sxp: None,
                        read_mode: Some(*mode),
                        write_mode: None,
                    });
                    next.push(st);
                }
                Instruction::Fence { mode } => {
                    st.push_event(tid, EventType::F, None, Some(*mode), |key| Event {
                        key,
                        read_sxp: None,
                        write_sxp: None,
                        read_mode: None,
                        write_mode: None,
                    });
                    next.push(st);
                }
                Instruction::Cax { reg, loc, expected, desired, read_mode, write_mode } => {
                    // success: a read-modify-write that saw `expected` and
                    // wrote `desired`; the destination register gets the
                    // value read
                    let mut succ = st.clone();
                    succ.push_event(tid, EventType::Rmw, Some(loc.clone()), None, |key| Event {
                        key,
                        read_sxp: Some(expected.clone()),
                        write_sxp: Some(desired.clone()),
                        read_mode: Some(*read_mode),
                        write_mode: Some(*write_mode),
                    });
                    succ.gamma.push(Expr::eq(Expr::Reg(reg.clone()), expected.to_expr()));
                    next.push(succ);
                    // failure: a plain read whose value — bound to the
                    // destination register — differs from `expected`
                    let mut fail = st;
                    fail.push_event(tid, EventType::R, Some(loc.clone()), None, |key| Event {
                        key,
                        read_sxp: Some(Sxp::Reg(reg.clone())),
                        write_sxp: None,
                        read_mode: Some(*read_mode),
                        write_mode: None,
                    });
                    fail.gamma.push(Expr::ne(Expr::Reg(reg.clone()), expected.to_expr()));
                    next.push(fail);
                }
                Instruction::IfThenElse { cond, then_branch, else_branch } => {
                    let mut taken = st.clone();
                    taken.gamma.push(cond.clone());
                    next.extend(exec_block(tid, then_branch, vec![taken]));
                    let mut untaken = st;
                    untaken.gamma.push(Expr::not(cond.clone()));
                    next.extend(exec_block(tid, else_branch, vec![untaken]));
                }
            }
        }
        states = next;
    }
    states
}

/// Stage 1, per thread: every control path of every thread as a partial graph.
pub fn build_thread_graphs(test: &LitmusTest) -> Vec<Vec<ThreadGraph>> {
    test.threads
        .iter()
        .enumerate()
        .map(|(i, instrs)| {
            let init = PathState {
                events: Vec::new(),
                gamma: Vec::new(),
                counters: BTreeMap::new(),
            };
            exec_block(i + 1, instrs, vec![init])
                .into_iter()
                .map(|st| ThreadGraph { events: st.events, gamma: st.gamma })
                .collect()
        })
        .collect()
}

/// Stage 1, program level: the Cartesian product of the per-thread graphs,
/// with an initializer write added for every location of the program.
pub fn product_with_init(test: &LitmusTest, per_thread: &[Vec<ThreadGraph>]) -> Vec<Graph> {
    let inits: Vec<(Loc, Value)> = test
        .locations()
        .into_iter()
        .map(|l| {
            let v = test.init.get(&l).copied().unwrap_or(0);
            (l, v)
        })
        .collect();

    let mut products: Vec<Vec<&ThreadGraph>> = vec![Vec::new()];
    for options in per_thread {
        let mut next = Vec::new();
        for partial in &products {
            for opt in options {
                let mut p = partial.clone();
                p.push(opt);
                next.push(p);
            }
        }
        products = next;
    }

    products
        .into_iter()
        .map(|choice| {
            let mut g = Graph::default();
            for (loc, v) in &inits {
                let ev = Event {
                    key: EventKey::Init { loc: loc.clone() },
                    read_sxp: None,
                    write_sxp: Some(Sxp::Val(*v)),
                    read_mode: None,
                    write_mode: Some(crate::exec::AccessMode::Plain),
                };
                g.events.insert(ev.key.clone(), ev);
            }
            for tg in choice {
                for (i, e) in tg.events.iter().enumerate() {
                    for later in &tg.events[i + 1..] {
                        g.po.insert(e.key.clone(), later.key.clone());
                    }
                    g.events.insert(e.key.clone(), e.clone());
                }
                g.gamma.extend(tg.gamma.iter().cloned());
            }
            g
        })
        .collect()
}

/// All total rf assignments for `g`, without satisfiability pruning. Each
/// read may read from any same-location write, including po-later ones —
/// the single-execution model is what rules those out. The rf equality
/// constraints are appended to each result's Γ.
pub fn rf_candidates(g: &Graph) -> Vec<Graph> {
    let reads: Vec<EventKey> = g.reads().cloned().collect();
    let mut out = vec![g.clone()];
    for r in &reads {
        let writers: Vec<EventKey> = g
            .writes()
            .filter(|w| w.loc() == r.loc() && **w != *r)
            .cloned()
            .collect();
        let mut next = Vec::new();
        for partial in &out {
            for w in &writers {
                let mut gg = partial.clone();
                gg.rf.insert(w.clone(), r.clone());
                let wexp = g.events[w].write_sxp.as_ref().unwrap().to_expr();
                let rexp = g.events[r].read_sxp.as_ref().unwrap().to_expr();
                gg.gamma.push(Expr::eq(rexp, wexp));
                next.push(gg);
            }
        }
        out = next;
    }
    out
}

/// Stage 2: rf enumeration with unsatisfiable graphs removed. A solver
/// timeout keeps the graph — dropping it could hide real behaviors.
pub fn enumerate_rf(g: &Graph, oracle: &dyn SatOracle) -> Result<Vec<Graph>, SmtError> {
    let mut out = Vec::new();
    for cand in rf_candidates(g) {
        match oracle.check(&cand.gamma)? {
            SatResult::Unsat => {}
            SatResult::Sat(_) | SatResult::Unknown => out.push(cand),
        }
    }
    Ok(out)
}

/// Stages 1 and 2 together: all satisfiable execution graphs of the program.
pub fn build_graphs(test: &LitmusTest, oracle: &dyn SatOracle) -> Result<Vec<Graph>, SmtError> {
    let per_thread = build_thread_graphs(test);
    let mut out = Vec::new();
    for g in product_with_init(test, &per_thread) {
        out.extend(enumerate_rf(&g, oracle)?);
    }
    Ok(out)
}
