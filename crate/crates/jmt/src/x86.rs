//! Compilation to x86 litmus tests and comparison against a hardware model.
//!
//! The compiler is deliberately non-optimizing: every source instruction
//! maps to a fixed instruction sequence, so the compilation scheme itself is
//! what gets tested. The compiled test is handed to an external `herd`
//! process; the final states it reports are translated back into source
//! registers and checked for inclusion in the source model's behaviors.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::Duration;

use wait_timeout::ChildExt;

use crate::behavior::{Allowed, Behavior, EngineError, Prepared};
use crate::causality::SearchConfig;
use crate::exec::{AccessMode, FenceMode, Loc, ThreadId};
use crate::expr::{BinOp, Expr, Reg, Sxp, Value};
use crate::litmus::{AssertExpr, Instruction, LitmusTest, Quantifier};
use crate::smt::SatOracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum X86Reg {
    Eax,
    Ebx,
    Ecx,
    Edx,
    Esi,
    Edi,
}

impl X86Reg {
    pub const POOL: [X86Reg; 6] =
        [X86Reg::Eax, X86Reg::Ebx, X86Reg::Ecx, X86Reg::Edx, X86Reg::Esi, X86Reg::Edi];

    pub fn name(&self) -> &'static str {
        match self {
            X86Reg::Eax => "EAX",
            X86Reg::Ebx => "EBX",
            X86Reg::Ecx => "ECX",
            X86Reg::Edx => "EDX",
            X86Reg::Esi => "ESI",
            X86Reg::Edi => "EDI",
        }
    }

    pub fn parse(s: &str) -> Option<X86Reg> {
        X86Reg::POOL.iter().copied().find(|r| r.name() == s)
    }
}

impl fmt::Display for X86Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A register or immediate operand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operand {
    Reg(X86Reg),
    Imm(Value),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Reg(r) => write!(f, "{r}"),
            Operand::Imm(v) => write!(f, "${v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum X86Instr {
    /// `MOV r,[x]`
    Load { dst: X86Reg, loc: Loc },
    /// `MOV [x],op`
    Store { loc: Loc, src: Operand },
    /// `MOV r,op`
    Mov { dst: X86Reg, src: Operand },
    Mfence,
    Nop,
    /// `XCHG [x],r`
    Xchg { loc: Loc, reg: X86Reg },
    /// `LOCK XADD [x],r`
    LockXadd { loc: Loc, reg: X86Reg },
    /// `LOCK CMPXCHG [x],r`
    LockCmpxchg { loc: Loc, reg: X86Reg },
    /// `SETE r`
    Sete { reg: X86Reg },
    /// Two-operand arithmetic `OP r,op` (ADD, SUB, OR) — needed because the
    /// source language allows arithmetic in assignments.
    Alu { op: BinOp, dst: X86Reg, src: Operand },
}

impl fmt::Display for X86Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            X86Instr::Load { dst, loc } => write!(f, "MOV {dst},[{loc}]"),
            X86Instr::Store { loc, src } => write!(f, "MOV [{loc}],{src}"),
            X86Instr::Mov { dst, src } => write!(f, "MOV {dst},{src}"),
            X86Instr::Mfence => write!(f, "MFENCE"),
            X86Instr::Nop => write!(f, "NOP"),
            X86Instr::Xchg { loc, reg } => write!(f, "XCHG [{loc}],{reg}"),
            X86Instr::LockXadd { loc, reg } => write!(f, "LOCK XADD [{loc}],{reg}"),
            X86Instr::LockCmpxchg { loc, reg } => write!(f, "LOCK CMPXCHG [{loc}],{reg}"),
            X86Instr::Sete { reg } => write!(f, "SETE {reg}"),
            X86Instr::Alu { op, dst, src } => {
                let mnemonic = match op {
                    BinOp::Add => "ADD",
                    BinOp::Sub => "SUB",
                    BinOp::BitOr => "OR",
                    other => panic!("no x86 mnemonic for {other:?}"),
                };
                write!(f, "{mnemonic} {dst},{src}")
            }
        }
    }
}

/// Source-to-x86 register assignment, per thread.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterMap {
    /// `by_thread[tid]` maps the source registers of thread `tid` (1-based).
    by_thread: BTreeMap<ThreadId, BTreeMap<Reg, X86Reg>>,
}

impl RegisterMap {
    pub fn lookup(&self, tid: ThreadId, reg: &Reg) -> Option<X86Reg> {
        self.by_thread.get(&tid)?.get(reg).copied()
    }

    /// The thread owning a source register (registers are program-unique).
    pub fn thread_of(&self, reg: &Reg) -> Option<ThreadId> {
        self.by_thread
            .iter()
            .find(|(_, m)| m.contains_key(reg))
            .map(|(tid, _)| *tid)
    }

    /// Invert an x86-side binding back to the source register.
    pub fn source_of(&self, tid: ThreadId, x86: X86Reg) -> Option<&Reg> {
        self.by_thread
            .get(&tid)?
            .iter()
            .find(|(_, r)| **r == x86)
            .map(|(src, _)| src)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct X86Program {
    pub name: String,
    pub init: BTreeMap<Loc, Value>,
    pub threads: Vec<Vec<X86Instr>>,
    pub condition: String,
}

#[derive(Debug, thiserror::Error)]
pub enum X86Error {
    #[error("thread {tid}: instruction not compilable to x86: {what}")]
    Unsupported { tid: ThreadId, what: String },
    #[error("thread {tid}: out of x86 registers")]
    RegisterPressure { tid: ThreadId },
    #[error("assertion register `{0}` has no x86 mapping")]
    Unmapped(String),
    #[error("failed to run herd `{0}`: {1}")]
    Spawn(PathBuf, std::io::Error),
    #[error("herd timed out after {0:?}")]
    Timeout(Duration),
    #[error("herd exited with {status}: {stderr}")]
    HerdFailed { status: String, stderr: String },
    #[error("unparseable herd output: {0}")]
    BadOutput(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Per-thread compilation state.
struct ThreadCompiler<'a> {
    tid: ThreadId,
    map: &'a mut BTreeMap<Reg, X86Reg>,
    /// Next index into [`X86Reg::POOL`].
    next: usize,
    /// EAX is reserved for `LOCK CMPXCHG`'s implicit operand.
    reserve_eax: bool,
    out: Vec<X86Instr>,
}

impl ThreadCompiler<'_> {
    fn alloc(&mut self) -> Result<X86Reg, X86Error> {
        loop {
            let Some(&reg) = X86Reg::POOL.get(self.next) else {
                return Err(X86Error::RegisterPressure { tid: self.tid });
            };
            self.next += 1;
            if reg == X86Reg::Eax && self.reserve_eax {
                continue;
            }
            return Ok(reg);
        }
    }

    fn define(&mut self, r: &Reg) -> Result<X86Reg, X86Error> {
        if let Some(&reg) = self.map.get(r) {
            return Ok(reg);
        }
        let reg = self.alloc()?;
        self.map.insert(r.clone(), reg);
        Ok(reg)
    }

    fn unsupported(&self, what: impl Into<String>) -> X86Error {
        X86Error::Unsupported { tid: self.tid, what: what.into() }
    }

    fn reg_of(&self, r: &Reg) -> Result<X86Reg, X86Error> {
        self.map
            .get(r)
            .copied()
            .ok_or_else(|| X86Error::Unmapped(r.0.clone()))
    }

    fn operand(&self, sxp: &Sxp) -> Result<Operand, X86Error> {
        Ok(match sxp {
            Sxp::Reg(r) => Operand::Reg(self.reg_of(r)?),
            Sxp::Val(v) => Operand::Imm(*v),
        })
    }

    fn expr_operand(&self, e: &Expr) -> Result<Operand, X86Error> {
        match e {
            Expr::Reg(r) => Ok(Operand::Reg(self.reg_of(r)?)),
            Expr::Val(v) => Ok(Operand::Imm(*v)),
            other => Err(self.unsupported(format!("nested expression `{other}`"))),
        }
    }

    fn instruction(&mut self, instr: &Instruction) -> Result<(), X86Error> {
        match instr {
            Instruction::Load { reg, loc, .. } => {
                // all four access modes compile to a plain load
                let dst = self.define(reg)?;
                self.out.push(X86Instr::Load { dst, loc: loc.clone() });
            }
            Instruction::Store { loc, sxp, mode } => {
                let src = self.operand(sxp)?;
                self.out.push(X86Instr::Store { loc: loc.clone(), src });
                if *mode == AccessMode::Volatile {
                    self.out.push(X86Instr::Mfence);
                }
            }
            Instruction::Fence { mode } => {
                self.out.push(match mode {
                    FenceMode::Full => X86Instr::Mfence,
                    _ => X86Instr::Nop,
                });
            }
            Instruction::Assign { reg, exp } => {
                // not part of the VarHandle scheme: plain arithmetic on
                // locals, compiled as mov + two-operand ALU op
                let (first, rest) = match exp {
                    Expr::Bin(op, a, b) => match op {
                        BinOp::Add | BinOp::Sub | BinOp::BitOr => {
                            (self.expr_operand(a)?, Some((*op, self.expr_operand(b)?)))
                        }
                        other => {
                            return Err(self.unsupported(format!(
                                "operator `{}` in assignment",
                                other.symbol()
                            )))
                        }
                    },
                    simple => (self.expr_operand(simple)?, None),
                };
                let dst = self.define(reg)?;
                self.out.push(X86Instr::Mov { dst, src: first });
                if let Some((op, src)) = rest {
                    self.out.push(X86Instr::Alu { op, dst, src });
                }
            }
            Instruction::Cax { reg, loc, expected, desired, .. } => {
                // compare-and-exchange: the read value lands in EAX
                let expected = self.operand(expected)?;
                let desired = self.operand(desired)?;
                let tmp = self.alloc()?;
                let dst = self.define(reg)?;
                self.out.push(X86Instr::Mov { dst: X86Reg::Eax, src: expected });
                self.out.push(X86Instr::Mov { dst: tmp, src: desired });
                self.out.push(X86Instr::LockCmpxchg { loc: loc.clone(), reg: tmp });
                self.out.push(X86Instr::Mov { dst, src: Operand::Reg(X86Reg::Eax) });
            }
            Instruction::IfThenElse { .. } => {
                return Err(self.unsupported("if-then-else"));
            }
            Instruction::Skip => {}
        }
        Ok(())
    }
}

fn uses_cax(instrs: &[Instruction]) -> bool {
    instrs.iter().any(|i| match i {
        Instruction::Cax { .. } => true,
        Instruction::IfThenElse { then_branch, else_branch, .. } => {
            uses_cax(then_branch) || uses_cax(else_branch)
        }
        _ => false,
    })
}

/// Compile a litmus test per the fixed VarHandle-to-x86 scheme. Source
/// registers are assigned x86 registers in order of first definition,
/// starting from EAX (EBX when the thread needs EAX for compare-and-
/// exchange).
pub fn compile_to_x86(test: &LitmusTest) -> Result<(X86Program, RegisterMap), X86Error> {
    let mut by_thread = BTreeMap::new();
    let mut threads = Vec::new();
    for (i, body) in test.threads.iter().enumerate() {
        let tid = i + 1;
        let mut map = BTreeMap::new();
        let mut tc = ThreadCompiler {
            tid,
            map: &mut map,
            next: 0,
            reserve_eax: uses_cax(body),
            out: Vec::new(),
        };
        for instr in body {
            tc.instruction(instr)?;
        }
        threads.push(tc.out);
        by_thread.insert(tid, map);
    }
    let map = RegisterMap { by_thread };
    let condition = render_condition(&test.assertion.quantifier, &test.assertion.formula, &map)?;
    let program = X86Program {
        name: test.name.clone(),
        init: test.init.clone(),
        threads,
        condition,
    };
    Ok((program, map))
}

fn render_condition(
    quantifier: &Quantifier,
    formula: &AssertExpr,
    map: &RegisterMap,
) -> Result<String, X86Error> {
    let keyword = match quantifier {
        Quantifier::Exists => "exists",
        Quantifier::NotExists => "~exists",
        Quantifier::Forall => "forall",
    };
    Ok(format!("{keyword} ({})", render_assert(formula, map)?))
}

/// Render with minimal parentheses; in herd's condition grammar `/\`
/// binds tighter than `\/`.
fn render_assert(e: &AssertExpr, map: &RegisterMap) -> Result<String, X86Error> {
    fn go(e: &AssertExpr, map: &RegisterMap, prec: u8) -> Result<String, X86Error> {
        Ok(match e {
            AssertExpr::True => "true".into(),
            AssertExpr::False => "false".into(),
            AssertExpr::Eq(qr, v) => {
                let tid = qr
                    .tid
                    .or_else(|| map.thread_of(&qr.reg))
                    .ok_or_else(|| X86Error::Unmapped(qr.reg.0.clone()))?;
                let x86 = map
                    .lookup(tid, &qr.reg)
                    .ok_or_else(|| X86Error::Unmapped(qr.reg.0.clone()))?;
                // herd numbers threads from 0
                format!("{}:{}={}", tid - 1, x86, v)
            }
            AssertExpr::And(a, b) => {
                let s = format!("{} /\\ {}", go(a, map, 2)?, go(b, map, 2)?);
                if prec > 2 { format!("({s})") } else { s }
            }
            AssertExpr::Or(a, b) => {
                let s = format!("{} \\/ {}", go(a, map, 1)?, go(b, map, 1)?);
                if prec > 1 { format!("({s})") } else { s }
            }
            AssertExpr::Not(a) => format!("~({})", go(a, map, 0)?),
        })
    }
    go(e, map, 0)
}

impl X86Program {
    /// Render in the herd x86 litmus format: header, init block, one column
    /// per thread, and the final condition.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("X86 {}\n", self.name));
        let inits: Vec<String> = self.init.iter().map(|(l, v)| format!("{l}={v};")).collect();
        out.push_str(&format!("{{ {} }}\n", inits.join(" ")));
        let rows = self.threads.iter().map(Vec::len).max().unwrap_or(0);
        let mut table: Vec<Vec<String>> = Vec::new();
        table.push((0..self.threads.len()).map(|i| format!("P{i}")).collect());
        for row in 0..rows {
            table.push(
                self.threads
                    .iter()
                    .map(|t| t.get(row).map(|i| i.to_string()).unwrap_or_default())
                    .collect(),
            );
        }
        let widths: Vec<usize> = (0..self.threads.len())
            .map(|col| table.iter().map(|r| r[col].len()).max().unwrap_or(0))
            .collect();
        for row in &table {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!(" {cell:<w$} "))
                .collect();
            out.push_str(&cells.join("|"));
            out.push_str(";\n");
        }
        out.push_str(&self.condition);
        out.push('\n');
        out
    }
}

/// How to invoke herd.
#[derive(Debug, Clone)]
pub struct HerdConfig {
    pub path: PathBuf,
    pub timeout: Duration,
}

impl Default for HerdConfig {
    fn default() -> Self {
        HerdConfig { path: PathBuf::from("herd7"), timeout: Duration::from_secs(60) }
    }
}

/// One final state reported by herd: values of the x86 registers appearing
/// in the condition, keyed by 1-based source thread id.
pub type X86State = BTreeMap<(ThreadId, X86Reg), Value>;

/// Run herd on the rendered program and parse the `States` section.
pub fn run_herd(program: &X86Program, config: &HerdConfig) -> Result<Vec<X86State>, X86Error> {
    let dir = std::env::temp_dir();
    let file = dir.join(format!("jmt-{}-{}.litmus", program.name, std::process::id()));
    let mut f = std::fs::File::create(&file)
        .map_err(|e| X86Error::Spawn(config.path.clone(), e))?;
    f.write_all(program.render().as_bytes())
        .map_err(|e| X86Error::Spawn(config.path.clone(), e))?;
    drop(f);

    let mut child = Command::new(&config.path)
        .arg(&file)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| X86Error::Spawn(config.path.clone(), e))?;
    let status = match child
        .wait_timeout(config.timeout)
        .map_err(|e| X86Error::Spawn(config.path.clone(), e))?
    {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            let _ = std::fs::remove_file(&file);
            return Err(X86Error::Timeout(config.timeout));
        }
    };
    let output = child
        .wait_with_output()
        .map_err(|e| X86Error::Spawn(config.path.clone(), e))?;
    let _ = std::fs::remove_file(&file);
    if !status.success() {
        return Err(X86Error::HerdFailed {
            status: status.to_string(),
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        });
    }
    parse_herd_states(&String::from_utf8_lossy(&output.stdout))
}

/// Parse herd's `States <n>` section: `n` lines of `t:REG=v;` assignments.
pub fn parse_herd_states(output: &str) -> Result<Vec<X86State>, X86Error> {
    let mut lines = output.lines();
    let count: usize = loop {
        let Some(line) = lines.next() else {
            return Err(X86Error::BadOutput("no `States` section".into()));
        };
        if let Some(rest) = line.trim().strip_prefix("States ") {
            break rest
                .trim()
                .parse()
                .map_err(|_| X86Error::BadOutput(format!("bad state count: {line}")))?;
        }
    };
    let mut states = Vec::with_capacity(count);
    for _ in 0..count {
        let Some(line) = lines.next() else {
            return Err(X86Error::BadOutput("truncated `States` section".into()));
        };
        let mut state = X86State::new();
        for part in line.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| X86Error::BadOutput(format!("bad binding: {part}")))?;
            let (tid, reg) = key
                .split_once(':')
                .ok_or_else(|| X86Error::BadOutput(format!("bad register: {key}")))?;
            let tid: ThreadId = tid
                .trim()
                .parse()
                .map_err(|_| X86Error::BadOutput(format!("bad thread id: {key}")))?;
            let reg = X86Reg::parse(reg.trim())
                .ok_or_else(|| X86Error::BadOutput(format!("unknown register: {key}")))?;
            let value: Value = value
                .trim()
                .parse()
                .map_err(|_| X86Error::BadOutput(format!("bad value: {part}")))?;
            // herd numbers threads from 0; source thread ids are 1-based
            state.insert((tid + 1, reg), value);
        }
        states.push(state);
    }
    Ok(states)
}

/// Translate herd states back into source-register behaviors.
pub fn restore_behaviors(
    raw: &[X86State],
    map: &RegisterMap,
) -> Result<Vec<Behavior>, X86Error> {
    let mut out = Vec::new();
    for state in raw {
        let mut values = BTreeMap::new();
        for ((tid, x86), v) in state {
            let src = map
                .source_of(*tid, *x86)
                .ok_or_else(|| X86Error::Unmapped(format!("{}:{}", tid - 1, x86)))?;
            values.insert(src.0.clone(), *v);
        }
        out.push(Behavior { values });
    }
    Ok(out)
}

/// The result of the compilation-soundness check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InclusionResult {
    /// Every hardware behavior is allowed by the source model.
    Pass { checked: usize },
    /// A hardware behavior the source model does not allow.
    Fail { witness: Behavior },
    /// The justification search gave up on at least one behavior.
    Unknown { behavior: Behavior },
}

/// Check that every behavior herd reports for the compiled program is also
/// allowed by the source memory model, querying the source side on demand
/// per behavior.
pub fn check_inclusion(
    prepared: &Prepared,
    oracle: &dyn SatOracle,
    cfg: &SearchConfig,
    herd: &HerdConfig,
) -> Result<InclusionResult, X86Error> {
    let (program, map) = compile_to_x86(&prepared.test)?;
    let states = run_herd(&program, herd)?;
    let behaviors = restore_behaviors(&states, &map)?;
    for behavior in &behaviors {
        let phi = behavior.to_formula();
        match prepared.behavior_allowed(&phi, oracle, cfg)? {
            Allowed::Witness(..) => {}
            Allowed::Absent => return Ok(InclusionResult::Fail { witness: behavior.clone() }),
            Allowed::Unknown => {
                return Ok(InclusionResult::Unknown { behavior: behavior.clone() })
            }
        }
    }
    Ok(InclusionResult::Pass { checked: behaviors.len() })
}
