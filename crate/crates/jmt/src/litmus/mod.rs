//! Litmus test representation: programs plus a behavior assertion.
//!
//! The concrete file format is documented in `docs/litmus-format.md`. In
//! short: a `Java <name>` header, an optional `{ x=0; y=0; }` initialization
//! block, thread bodies separated by lines containing `|||`, and a final
//! `exists (...)`, `~exists (...)` or `forall (...)` assertion.

mod parse;

pub use parse::parse_litmus;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::exec::{AccessMode, FenceMode, Loc, ThreadId};
use crate::expr::{Expr, Reg, Sxp, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    /// `r := exp` — pure register assignment, produces no event.
    Assign { reg: Reg, exp: Expr },
    /// `x.mode := sxp`
    Store { loc: Loc, sxp: Sxp, mode: AccessMode },
    /// `r := x.mode`
    Load { reg: Reg, loc: Loc, mode: AccessMode },
    /// `fence.mode`
    Fence { mode: FenceMode },
    /// `r := cax.rm.wm(x, expected, desired)` — compare-and-exchange; `r`
    /// receives the value read from `x` whether or not the exchange succeeds.
    Cax {
        reg: Reg,
        loc: Loc,
        expected: Sxp,
        desired: Sxp,
        read_mode: AccessMode,
        write_mode: AccessMode,
    },
    /// `if (exp) { ... } else { ... }`
    IfThenElse {
        cond: Expr,
        then_branch: Vec<Instruction>,
        else_branch: Vec<Instruction>,
    },
    /// `skip`
    Skip,
}

/// Register mention in an assertion, optionally qualified by thread
/// (`2:r = 1`). Registers are program-unique, so qualification is redundant
/// but checked when present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualReg {
    pub tid: Option<ThreadId>,
    pub reg: Reg,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssertExpr {
    True,
    False,
    Eq(QualReg, Value),
    And(Box<AssertExpr>, Box<AssertExpr>),
    Or(Box<AssertExpr>, Box<AssertExpr>),
    Not(Box<AssertExpr>),
}

impl AssertExpr {
    /// Lower to a plain expression over registers (thread qualifiers drop
    /// away since registers are disjoint between threads).
    pub fn to_expr(&self) -> Expr {
        match self {
            AssertExpr::True => Expr::eq(Expr::Val(0), Expr::Val(0)),
            AssertExpr::False => Expr::not(Expr::eq(Expr::Val(0), Expr::Val(0))),
            AssertExpr::Eq(qr, v) => Expr::eq(Expr::Reg(qr.reg.clone()), Expr::Val(*v)),
            AssertExpr::And(a, b) => Expr::and(a.to_expr(), b.to_expr()),
            AssertExpr::Or(a, b) => Expr::bin(crate::expr::BinOp::Or, a.to_expr(), b.to_expr()),
            AssertExpr::Not(a) => Expr::not(a.to_expr()),
        }
    }

    fn registers(&self, out: &mut Vec<QualReg>) {
        match self {
            AssertExpr::True | AssertExpr::False => {}
            AssertExpr::Eq(qr, _) => out.push(qr.clone()),
            AssertExpr::And(a, b) | AssertExpr::Or(a, b) => {
                a.registers(out);
                b.registers(out);
            }
            AssertExpr::Not(a) => a.registers(out),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    /// `exists` — the behavior must be allowed.
    Exists,
    /// `~exists` — the behavior must be forbidden.
    NotExists,
    /// `forall` — the formula must hold in every execution: it is required,
    /// and its negation is forbidden.
    Forall,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorAssertion {
    pub quantifier: Quantifier,
    pub formula: AssertExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LitmusTest {
    pub name: String,
    /// Initial value per location; locations accessed but not listed default
    /// to 0 (`normalize` makes the default explicit).
    pub init: BTreeMap<Loc, Value>,
    /// Thread bodies in source order; thread ids are 1-based positions.
    pub threads: Vec<Vec<Instruction>>,
    pub assertion: BehaviorAssertion,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LitmusError {
    #[error("syntax error at line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("register {0} is assigned more than once (programs must be in static single assignment form)")]
    SsaViolation(String),
    #[error("register {0} is used by more than one thread")]
    SharedRegister(String),
    #[error("register {0} is used before it is assigned")]
    UseBeforeDef(String),
    #[error("assertion mentions unknown register {0}")]
    UnknownAssertReg(String),
    #[error("assertion qualifies register {reg} with thread {tid}, but it belongs to thread {actual}")]
    WrongThread { reg: String, tid: ThreadId, actual: ThreadId },
    #[error("unsupported feature: {0}")]
    Unsupported(String),
    #[error("invalid {kind} mode `{mode}`")]
    BadMode { kind: &'static str, mode: String },
}

impl LitmusTest {
    /// All locations loaded, stored, or exchanged anywhere in the program.
    pub fn locations(&self) -> BTreeSet<Loc> {
        fn walk(instrs: &[Instruction], out: &mut BTreeSet<Loc>) {
            for i in instrs {
                match i {
                    Instruction::Store { loc, .. }
                    | Instruction::Load { loc, .. }
                    | Instruction::Cax { loc, .. } => {
                        out.insert(loc.clone());
                    }
                    Instruction::IfThenElse { then_branch, else_branch, .. } => {
                        walk(then_branch, out);
                        walk(else_branch, out);
                    }
                    Instruction::Assign { .. } | Instruction::Fence { .. } | Instruction::Skip => {}
                }
            }
        }
        let mut out: BTreeSet<Loc> = self.init.keys().cloned().collect();
        for t in &self.threads {
            walk(t, &mut out);
        }
        out
    }

    /// All registers with their owning (1-based) thread id.
    pub fn registers_of(&self) -> BTreeSet<(ThreadId, Reg)> {
        fn walk(tid: ThreadId, instrs: &[Instruction], out: &mut BTreeSet<(ThreadId, Reg)>) {
            for i in instrs {
                match i {
                    Instruction::Assign { reg, exp } => {
                        out.insert((tid, reg.clone()));
                        let mut used = BTreeSet::new();
                        exp.registers(&mut used);
                        out.extend(used.into_iter().map(|r| (tid, r)));
                    }
                    Instruction::Load { reg, .. } => {
                        out.insert((tid, reg.clone()));
                    }
                    Instruction::Cax { reg, expected, desired, .. } => {
                        out.insert((tid, reg.clone()));
                        for s in [expected, desired] {
                            if let Sxp::Reg(r) = s {
                                out.insert((tid, r.clone()));
                            }
                        }
                    }
                    Instruction::Store { sxp, .. } => {
                        if let Sxp::Reg(r) = sxp {
                            out.insert((tid, r.clone()));
                        }
                    }
                    Instruction::IfThenElse { cond, then_branch, else_branch } => {
                        let mut used = BTreeSet::new();
                        cond.registers(&mut used);
                        out.extend(used.into_iter().map(|r| (tid, r)));
                        walk(tid, then_branch, out);
                        walk(tid, else_branch, out);
                    }
                    Instruction::Fence { .. } | Instruction::Skip => {}
                }
            }
        }
        let mut out = BTreeSet::new();
        for (i, t) in self.threads.iter().enumerate() {
            walk(i + 1, t, &mut out);
        }
        out
    }

    /// Make the implicit zero-initialization of accessed locations explicit.
    pub fn normalize(&mut self) {
        for loc in self.locations() {
            self.init.entry(loc).or_insert(0);
        }
    }

    /// Semantic checks beyond grammar: single assignment, register ownership,
    /// definition before use, assertion register resolution. Called by the
    /// parser; exposed for programmatically built tests.
    pub fn check(&self) -> Result<(), LitmusError> {
        // single static assignment, program-wide
        let mut assigned: BTreeMap<Reg, ThreadId> = BTreeMap::new();
        fn defs(instrs: &[Instruction], out: &mut Vec<Reg>) {
            for i in instrs {
                match i {
                    Instruction::Assign { reg, .. }
                    | Instruction::Load { reg, .. }
                    | Instruction::Cax { reg, .. } => out.push(reg.clone()),
                    Instruction::IfThenElse { then_branch, else_branch, .. } => {
                        defs(then_branch, out);
                        defs(else_branch, out);
                    }
                    _ => {}
                }
            }
        }
        for (i, t) in self.threads.iter().enumerate() {
            let tid = i + 1;
            let mut ds = Vec::new();
            defs(t, &mut ds);
            for r in ds {
                if assigned.insert(r.clone(), tid).is_some() {
                    return Err(LitmusError::SsaViolation(r.0));
                }
            }
        }
        // no register crosses threads (covers uses, not just definitions)
        let mut owner: BTreeMap<Reg, ThreadId> = BTreeMap::new();
        for (tid, r) in self.registers_of() {
            if let Some(prev) = owner.insert(r.clone(), tid) {
                if prev != tid {
                    return Err(LitmusError::SharedRegister(r.0));
                }
            }
        }
        // definition before use within each thread; a branch's definitions
        // are visible after the conditional
        fn check_uses(
            instrs: &[Instruction],
            defined: &mut BTreeSet<Reg>,
        ) -> Result<(), LitmusError> {
            let require = |e: &Expr, defined: &BTreeSet<Reg>| {
                let mut used = BTreeSet::new();
                e.registers(&mut used);
                for r in used {
                    if !defined.contains(&r) {
                        return Err(LitmusError::UseBeforeDef(r.0));
                    }
                }
                Ok(())
            };
            for i in instrs {
                match i {
                    Instruction::Assign { reg, exp } => {
                        require(exp, defined)?;
                        defined.insert(reg.clone());
                    }
                    Instruction::Load { reg, .. } => {
                        defined.insert(reg.clone());
                    }
                    Instruction::Store { sxp, .. } => {
                        require(&sxp.to_expr(), defined)?;
                    }
                    Instruction::Cax { reg, expected, desired, .. } => {
                        require(&expected.to_expr(), defined)?;
                        require(&desired.to_expr(), defined)?;
                        defined.insert(reg.clone());
                    }
                    Instruction::IfThenElse { cond, then_branch, else_branch } => {
                        require(cond, defined)?;
                        let mut then_defs = defined.clone();
                        check_uses(then_branch, &mut then_defs)?;
                        let mut else_defs = defined.clone();
                        check_uses(else_branch, &mut else_defs)?;
                        defined.extend(then_defs);
                        defined.extend(else_defs);
                    }
                    Instruction::Fence { .. } | Instruction::Skip => {}
                }
            }
            Ok(())
        }
        for t in &self.threads {
            check_uses(t, &mut BTreeSet::new())?;
        }
        // assertion registers exist; thread qualifiers are accurate
        let mut mentioned = Vec::new();
        self.assertion.formula.registers(&mut mentioned);
        for qr in mentioned {
            match owner.get(&qr.reg) {
                None => return Err(LitmusError::UnknownAssertReg(qr.reg.0)),
                Some(actual) => {
                    if let Some(tid) = qr.tid {
                        if tid != *actual {
                            return Err(LitmusError::WrongThread {
                                reg: qr.reg.0,
                                tid,
                                actual: *actual,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

// ===== pretty-printing =====

fn fmt_block(f: &mut fmt::Formatter<'_>, instrs: &[Instruction], indent: usize) -> fmt::Result {
    for i in instrs {
        for _ in 0..indent {
            f.write_str("  ")?;
        }
        match i {
            Instruction::Assign { reg, exp } => writeln!(f, "{reg} := {exp};")?,
            Instruction::Store { loc, sxp, mode } => writeln!(f, "{loc}.{mode} := {sxp};")?,
            Instruction::Load { reg, loc, mode } => writeln!(f, "{reg} := {loc}.{mode};")?,
            Instruction::Fence { mode } => writeln!(f, "fence.{mode};")?,
            Instruction::Cax { reg, loc, expected, desired, read_mode, write_mode } => {
                writeln!(f, "{reg} := cax.{read_mode}.{write_mode}({loc}, {expected}, {desired});")?
            }
            Instruction::IfThenElse { cond, then_branch, else_branch } => {
                writeln!(f, "if ({cond}) {{")?;
                fmt_block(f, then_branch, indent + 1)?;
                if else_branch.is_empty() {
                    for _ in 0..indent {
                        f.write_str("  ")?;
                    }
                    writeln!(f, "}}")?;
                } else {
                    for _ in 0..indent {
                        f.write_str("  ")?;
                    }
                    writeln!(f, "}} else {{")?;
                    fmt_block(f, else_branch, indent + 1)?;
                    for _ in 0..indent {
                        f.write_str("  ")?;
                    }
                    writeln!(f, "}}")?;
                }
            }
            Instruction::Skip => writeln!(f, "skip;")?,
        }
    }
    Ok(())
}

impl fmt::Display for AssertExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssertExpr::True => f.write_str("true"),
            AssertExpr::False => f.write_str("false"),
            AssertExpr::Eq(qr, v) => match qr.tid {
                Some(t) => write!(f, "{t}:{} = {v}", qr.reg),
                None => write!(f, "{} = {v}", qr.reg),
            },
            AssertExpr::And(a, b) => write!(f, "({a} /\\ {b})"),
            AssertExpr::Or(a, b) => write!(f, "({a} \\/ {b})"),
            AssertExpr::Not(a) => write!(f, "~{a}"),
        }
    }
}

impl fmt::Display for LitmusTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Java {}", self.name)?;
        if !self.init.is_empty() {
            write!(f, "{{ ")?;
            for (loc, v) in &self.init {
                write!(f, "{loc}={v}; ")?;
            }
            writeln!(f, "}}")?;
        }
        for (i, t) in self.threads.iter().enumerate() {
            if i > 0 {
                writeln!(f, "|||")?;
            }
            fmt_block(f, t, 0)?;
        }
        let q = match self.assertion.quantifier {
            Quantifier::Exists => "exists",
            Quantifier::NotExists => "~exists",
            Quantifier::Forall => "forall",
        };
        writeln!(f, "{q} ({})", self.assertion.formula)
    }
}
