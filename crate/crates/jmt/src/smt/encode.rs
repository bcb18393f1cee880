//! Encoding of justifications into word constraints.
//!
//! Every graph in a justification gets a tag (`G1`, `G2`, …, `T` for the
//! target). Registers of graph `G` become variables `G:r`; the value read or
//! written by an event becomes `G:τ:Rd x@p` / `G:τ:Wr x@p`, where `p`
//! numbers same-kind same-location events of the thread from 1. The encoding
//! ties committed writes to their target counterparts, which is exactly what
//! enforces agreement of committed values across stages (the condition the
//! justification search deliberately leaves to the solver).

use std::collections::BTreeSet;

use crate::exec::{EventKey, Graph};
use crate::expr::{Expr, Reg};

/// The tag of the target graph.
pub const TARGET_TAG: &str = "T";

/// Tag for the i-th stage (1-based), rendered `G1`, `G2`, ….
pub fn stage_tag(i: usize) -> String {
    format!("G{i}")
}

/// Rename a register into a graph's local-variable namespace.
pub fn local_var(tag: &str, r: &Reg) -> Reg {
    Reg::new(format!("{tag}:{}", r.0))
}

/// Apply the event-to-local-variable substitution to an expression.
pub fn elv(tag: &str, e: &Expr) -> Expr {
    e.map_regs(&|r| local_var(tag, r))
}

/// The solver variable holding the value *written* by `w` under `tag`.
/// Read-modify-writes use the `WrX` kind so they cannot collide with a plain
/// write at the same location and position.
pub fn write_var(tag: &str, w: &EventKey) -> Reg {
    let tid = w.tid().expect("initializer writes are not encoded");
    let loc = w.loc().expect("writes have a location");
    let kind = match w.typ() {
        crate::exec::EventType::W => "Wr",
        crate::exec::EventType::Rmw => "WrX",
        other => panic!("write_var on {other:?}"),
    };
    Reg::new(format!("{tag}:{tid}:{kind} {loc}@{}", w.idx() + 1))
}

/// The solver variable holding the value *read* by `r` under `tag`.
pub fn read_var(tag: &str, r: &EventKey) -> Reg {
    let tid = r.tid().expect("reads are program events");
    let loc = r.loc().expect("reads have a location");
    let kind = match r.typ() {
        crate::exec::EventType::R => "Rd",
        crate::exec::EventType::Rmw => "RdX",
        other => panic!("read_var on {other:?}"),
    };
    Reg::new(format!("{tag}:{tid}:{kind} {loc}@{}", r.idx() + 1))
}

/// Constraints for one write event in one stage. Initializer writes emit
/// nothing: they write the program's initial constants in every graph, so no
/// agreement needs enforcing.
pub fn enc_write(tag: &str, g: &Graph, w: &EventKey, committed: bool, out: &mut Vec<Expr>) {
    if w.is_init() {
        return;
    }
    let var = Expr::Reg(write_var(tag, w));
    let wexpr = elv(
        tag,
        &g.events[w].write_sxp.as_ref().expect("write event has a written expression").to_expr(),
    );
    out.push(Expr::eq(var.clone(), wexpr));
    if committed && tag != TARGET_TAG {
        out.push(Expr::eq(var, Expr::Reg(write_var(TARGET_TAG, w))));
    }
}

/// Constraint for one read event in one stage.
pub fn enc_read(tag: &str, g: &Graph, r: &EventKey, out: &mut Vec<Expr>) {
    let var = Expr::Reg(read_var(tag, r));
    let rexpr = elv(
        tag,
        &g.events[r].read_sxp.as_ref().expect("read event has a read expression").to_expr(),
    );
    out.push(Expr::eq(var, rexpr));
}

/// All constraints of one stage: every write, every read, and the graph's
/// constraint set Γ with registers renamed into the stage's namespace.
pub fn enc_stage(tag: &str, g: &Graph, committed: &BTreeSet<EventKey>, out: &mut Vec<Expr>) {
    for w in g.writes() {
        enc_write(tag, g, w, committed.contains(w), out);
    }
    for r in g.reads() {
        enc_read(tag, g, r, out);
    }
    for c in &g.gamma {
        out.push(elv(tag, c));
    }
}

/// The full encoding of a justification: the behavior formula over the
/// target's locals, the target stage (all events committed), and every
/// intermediate stage.
pub fn enc_justification(
    target: &Graph,
    stages: &[(&Graph, &BTreeSet<EventKey>)],
    phi: &Expr,
) -> Vec<Expr> {
    let mut out = Vec::new();
    out.push(elv(TARGET_TAG, phi));
    let all: BTreeSet<EventKey> = target.key_set();
    enc_stage(TARGET_TAG, target, &all, &mut out);
    for (i, (g, committed)) in stages.iter().enumerate() {
        enc_stage(&stage_tag(i + 1), g, committed, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{AccessMode, Event, EventType, Loc};
    use crate::expr::Sxp;

    fn wkey(tid: usize, loc: &str) -> EventKey {
        EventKey::prog(tid, EventType::W, Some(Loc::new(loc)), None, 0)
    }

    fn rkey(tid: usize, loc: &str) -> EventKey {
        EventKey::prog(tid, EventType::R, Some(Loc::new(loc)), None, 0)
    }

    fn graph_with(events: Vec<Event>) -> Graph {
        let mut g = Graph::default();
        for e in events {
            g.events.insert(e.key.clone(), e);
        }
        g
    }

    #[test]
    fn committed_write_chains_to_target() {
        let w = Event {
            key: wkey(1, "y"),
            read_sxp: None,
            write_sxp: Some(Sxp::Reg(Reg::new("b"))),
            read_mode: None,
            write_mode: Some(AccessMode::Plain),
        };
        let g = graph_with(vec![w]);
        let mut out = Vec::new();
        enc_write("G2", &g, &wkey(1, "y"), true, &mut out);
        assert_eq!(
            out,
            vec![
                Expr::eq(Expr::reg("G2:1:Wr y@1"), Expr::reg("G2:b")),
                Expr::eq(Expr::reg("G2:1:Wr y@1"), Expr::reg("T:1:Wr y@1")),
            ]
        );
        // uncommitted: no chain to the target
        let mut out = Vec::new();
        enc_write("G1", &g, &wkey(1, "y"), false, &mut out);
        assert_eq!(out, vec![Expr::eq(Expr::reg("G1:1:Wr y@1"), Expr::reg("G1:b"))]);
    }

    #[test]
    fn initializer_writes_are_not_encoded() {
        let g = graph_with(vec![Event::init("x")]);
        let mut out = Vec::new();
        enc_write("G1", &g, &EventKey::init("x"), true, &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn read_encoding() {
        let r = Event {
            key: rkey(1, "x"),
            read_sxp: Some(Sxp::Reg(Reg::new("a"))),
            write_sxp: None,
            read_mode: Some(AccessMode::Plain),
            write_mode: None,
        };
        let g = graph_with(vec![r]);
        let mut out = Vec::new();
        enc_read("G4", &g, &rkey(1, "x"), &mut out);
        assert_eq!(out, vec![Expr::eq(Expr::reg("G4:1:Rd x@1"), Expr::reg("G4:a"))]);
        let mut out = Vec::new();
        enc_read(TARGET_TAG, &g, &rkey(1, "x"), &mut out);
        assert_eq!(out, vec![Expr::eq(Expr::reg("T:1:Rd x@1"), Expr::reg("T:a"))]);
    }

    #[test]
    fn rmw_variables_do_not_collide_with_plain_accesses() {
        let u = EventKey::prog(1, EventType::Rmw, Some(Loc::new("x")), None, 0);
        assert_eq!(read_var("G1", &u).0, "G1:1:RdX x@1");
        assert_eq!(write_var("G1", &u).0, "G1:1:WrX x@1");
        assert_ne!(read_var("G1", &u), read_var("G1", &rkey(1, "x")));
        assert_ne!(write_var("G1", &u), write_var("G1", &wkey(1, "x")));
    }

    #[test]
    fn tags_partition_the_namespace() {
        let r = rkey(2, "y");
        assert_ne!(read_var("G1", &r), read_var("G2", &r));
        assert_ne!(local_var("G1", &Reg::new("a")), local_var("T", &Reg::new("a")));
    }
}
