//! Generation of jcstress-annotated Java sources.
//!
//! Each litmus test becomes one self-contained class: shared locations are
//! `int` fields accessed through `VarHandle`s, every thread becomes an
//! `@Actor` method, and the assertion registers are published through a
//! standard jcstress result record. When an allowed-behavior list is given,
//! those outcomes are marked `ACCEPTABLE` and everything else is left to
//! jcstress's default of `FORBIDDEN`, so behavior inclusion is checked by
//! the harness itself; without a list, a catch-all
//! `ACCEPTABLE_INTERESTING` outcome records whatever shows up.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::behavior::Behavior;
use crate::exec::{AccessMode, FenceMode, ThreadId};
use crate::expr::{BinOp, Expr, Reg, Sort};
use crate::litmus::{Instruction, LitmusTest};

#[derive(Debug, thiserror::Error)]
pub enum JcstressError {
    #[error("the assertion names no registers; nothing to observe")]
    NoObservables,
    #[error("more than 8 observed registers is not supported by the standard result records")]
    TooManyObservables,
    #[error("behavior in the allowed list does not cover register `{0}`")]
    IncompleteBehavior(String),
}

/// Java class-name from a litmus test name: keep alphanumerics, capitalize
/// after separators.
fn class_name(name: &str) -> String {
    let mut out = String::new();
    let mut upper = true;
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(if upper { c.to_ascii_uppercase() } else { c });
            upper = false;
        } else {
            upper = true;
        }
    }
    if out.is_empty() || out.chars().next().unwrap().is_ascii_digit() {
        out.insert(0, 'T');
    }
    out
}

fn vh_name(loc: &str) -> String {
    loc.to_ascii_uppercase()
}

fn load_method(mode: AccessMode) -> &'static str {
    match mode {
        AccessMode::Plain => "get",
        AccessMode::Opaque => "getOpaque",
        AccessMode::Acquire => "getAcquire",
        AccessMode::Volatile => "getVolatile",
        AccessMode::Release => unreachable!("release is not a load mode"),
    }
}

fn store_method(mode: AccessMode) -> &'static str {
    match mode {
        AccessMode::Plain => "set",
        AccessMode::Opaque => "setOpaque",
        AccessMode::Release => "setRelease",
        AccessMode::Volatile => "setVolatile",
        AccessMode::Acquire => unreachable!("acquire is not a store mode"),
    }
}

fn fence_method(mode: FenceMode) -> &'static str {
    match mode {
        FenceMode::Full => "fullFence",
        FenceMode::Acq => "acquireFence",
        FenceMode::Rel => "releaseFence",
        FenceMode::Rr => "loadLoadFence",
        FenceMode::Ww => "storeStoreFence",
    }
}

fn cax_method(read_mode: AccessMode, write_mode: AccessMode) -> &'static str {
    match (read_mode, write_mode) {
        (AccessMode::Acquire, _) => "compareAndExchangeAcquire",
        (_, AccessMode::Release) => "compareAndExchangeRelease",
        _ => "compareAndExchange",
    }
}

/// Render a word-sorted expression as a Java `int` expression. Values wrap
/// like our 32-bit words do.
fn java_word(e: &Expr) -> String {
    match e {
        Expr::Reg(r) => r.0.clone(),
        Expr::Val(v) => format!("{}", *v as i32),
        Expr::Bin(op, a, b) => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::BitOr => "|",
                _ => unreachable!("boolean operator in word position"),
            };
            format!("({} {} {})", java_word(a), sym, java_word(b))
        }
        Expr::Not(_) => unreachable!("boolean expression in word position"),
    }
}

/// Render a boolean-sorted expression as a Java `boolean` expression.
/// Comparisons are unsigned, matching the tool's word semantics.
fn java_bool(e: &Expr) -> String {
    match e {
        Expr::Bin(BinOp::Eq, a, b) => format!("({} == {})", java_word(a), java_word(b)),
        Expr::Bin(BinOp::Gt, a, b) => {
            format!("(Integer.compareUnsigned({}, {}) > 0)", java_word(a), java_word(b))
        }
        Expr::Bin(BinOp::And, a, b) => format!("({} && {})", java_bool(a), java_bool(b)),
        Expr::Bin(BinOp::Or, a, b) => format!("({} || {})", java_bool(a), java_bool(b)),
        Expr::Not(a) => format!("!{}", java_bool(a)),
        other => unreachable!("not a boolean expression: {other}"),
    }
}

fn defined_regs(instrs: &[Instruction], out: &mut Vec<Reg>) {
    for i in instrs {
        match i {
            Instruction::Assign { reg, .. }
            | Instruction::Load { reg, .. }
            | Instruction::Cax { reg, .. } => out.push(reg.clone()),
            Instruction::IfThenElse { then_branch, else_branch, .. } => {
                defined_regs(then_branch, out);
                defined_regs(else_branch, out);
            }
            _ => {}
        }
    }
}

fn emit_instrs(out: &mut String, instrs: &[Instruction], indent: usize) {
    let pad = " ".repeat(indent);
    for i in instrs {
        match i {
            Instruction::Assign { reg, exp } => {
                let rhs = match exp.sort_of() {
                    Ok(Sort::Bool) => format!("{} ? 1 : 0", java_bool(exp)),
                    _ => java_word(exp),
                };
                let _ = writeln!(out, "{pad}{} = {};", reg.0, rhs);
            }
            Instruction::Load { reg, loc, mode } => {
                let _ = writeln!(
                    out,
                    "{pad}{} = (int) {}.{}(this);",
                    reg.0,
                    vh_name(loc.as_str()),
                    load_method(*mode)
                );
            }
            Instruction::Store { loc, sxp, mode } => {
                let _ = writeln!(
                    out,
                    "{pad}{}.{}(this, {});",
                    vh_name(loc.as_str()),
                    store_method(*mode),
                    java_word(&sxp.to_expr())
                );
            }
            Instruction::Fence { mode } => {
                let _ = writeln!(out, "{pad}VarHandle.{}();", fence_method(*mode));
            }
            Instruction::Cax { reg, loc, expected, desired, read_mode, write_mode } => {
                let _ = writeln!(
                    out,
                    "{pad}{} = (int) {}.{}(this, {}, {});",
                    reg.0,
                    vh_name(loc.as_str()),
                    cax_method(*read_mode, *write_mode),
                    java_word(&expected.to_expr()),
                    java_word(&desired.to_expr())
                );
            }
            Instruction::IfThenElse { cond, then_branch, else_branch } => {
                let _ = writeln!(out, "{pad}if {} {{", java_bool(cond));
                emit_instrs(out, then_branch, indent + 4);
                if else_branch.is_empty() {
                    let _ = writeln!(out, "{pad}}}");
                } else {
                    let _ = writeln!(out, "{pad}}} else {{");
                    emit_instrs(out, else_branch, indent + 4);
                    let _ = writeln!(out, "{pad}}}");
                }
            }
            Instruction::Skip => {}
        }
    }
}

/// Generate the jcstress source text. `allowed`, when present, is the
/// complete list of behaviors the memory model permits over the observed
/// registers.
pub fn to_jcstress(
    test: &LitmusTest,
    allowed: Option<&[Behavior]>,
) -> Result<String, JcstressError> {
    // observed registers, in name order, mapped to result fields r1..rn
    let mut observed: BTreeSet<Reg> = BTreeSet::new();
    test.assertion.formula.to_expr().registers(&mut observed);
    let observed: Vec<Reg> = observed.into_iter().collect();
    if observed.is_empty() {
        return Err(JcstressError::NoObservables);
    }
    if observed.len() > 8 {
        return Err(JcstressError::TooManyObservables);
    }
    let result_class = format!("{}_Result", "I".repeat(observed.len()));
    let class = class_name(&test.name);

    // which thread defines which register
    let mut owner: BTreeMap<Reg, ThreadId> = BTreeMap::new();
    for (i, body) in test.threads.iter().enumerate() {
        let mut defs = Vec::new();
        defined_regs(body, &mut defs);
        for r in defs {
            owner.insert(r, i + 1);
        }
    }

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "// Generated by jmt from litmus test `{}`.", test.name);
    let _ = writeln!(w, "// Result fields: {}.",
        observed
            .iter()
            .enumerate()
            .map(|(i, r)| format!("r{} = {}", i + 1, r.0))
            .collect::<Vec<_>>()
            .join(", "));
    let _ = writeln!(w);
    let _ = writeln!(w, "import java.lang.invoke.MethodHandles;");
    let _ = writeln!(w, "import java.lang.invoke.VarHandle;");
    let _ = writeln!(w);
    let _ = writeln!(w, "import org.openjdk.jcstress.annotations.Actor;");
    let _ = writeln!(w, "import org.openjdk.jcstress.annotations.JCStressTest;");
    let _ = writeln!(w, "import org.openjdk.jcstress.annotations.Outcome;");
    let _ = writeln!(w, "import org.openjdk.jcstress.annotations.State;");
    let _ = writeln!(w, "import org.openjdk.jcstress.infra.results.{result_class};");
    let _ = writeln!(w);
    let expect = if allowed.is_some() { "ACCEPTABLE" } else { "ACCEPTABLE_INTERESTING" };
    let _ = writeln!(w, "import static org.openjdk.jcstress.annotations.Expect.{expect};");
    let _ = writeln!(w);
    let _ = writeln!(w, "@JCStressTest");
    match allowed {
        Some(behaviors) => {
            // unmatched outcomes default to FORBIDDEN under jcstress
            for b in behaviors {
                let mut row = Vec::new();
                let mut desc = Vec::new();
                for r in &observed {
                    let v = *b
                        .values
                        .get(&r.0)
                        .ok_or_else(|| JcstressError::IncompleteBehavior(r.0.clone()))?;
                    row.push(format!("{}", v as i32));
                    desc.push(format!("{}={}", r.0, v));
                }
                let _ = writeln!(
                    w,
                    "@Outcome(id = \"{}\", expect = ACCEPTABLE, desc = \"{}\")",
                    row.join(", "),
                    desc.join(", ")
                );
            }
        }
        None => {
            let _ = writeln!(
                w,
                "@Outcome(expect = ACCEPTABLE_INTERESTING, desc = \"all outcomes are of interest\")"
            );
        }
    }
    let _ = writeln!(w, "@State");
    let _ = writeln!(w, "public class {class} {{");

    // VarHandles for the shared locations
    let locs: Vec<String> = test.init.keys().map(|l| l.as_str().to_string()).collect();
    for loc in &locs {
        let _ = writeln!(w, "    static final VarHandle {};", vh_name(loc));
    }
    let _ = writeln!(w);
    let _ = writeln!(w, "    static {{");
    let _ = writeln!(w, "        try {{");
    let _ = writeln!(w, "            MethodHandles.Lookup l = MethodHandles.lookup();");
    for loc in &locs {
        let _ = writeln!(
            w,
            "            {} = l.findVarHandle({class}.class, \"{loc}\", int.class);",
            vh_name(loc)
        );
    }
    let _ = writeln!(w, "        }} catch (ReflectiveOperationException e) {{");
    let _ = writeln!(w, "            throw new ExceptionInInitializerError(e);");
    let _ = writeln!(w, "        }}");
    let _ = writeln!(w, "    }}");
    let _ = writeln!(w);
    for (loc, v) in &test.init {
        let _ = writeln!(w, "    int {} = {};", loc.as_str(), *v as i32);
    }

    for (i, body) in test.threads.iter().enumerate() {
        let tid = i + 1;
        let _ = writeln!(w);
        let _ = writeln!(w, "    @Actor");
        let _ = writeln!(w, "    public void actor{tid}({result_class} r) {{");
        let mut defs = Vec::new();
        defined_regs(body, &mut defs);
        let mut seen = BTreeSet::new();
        for reg in defs {
            if seen.insert(reg.clone()) {
                let _ = writeln!(w, "        int {} = 0;", reg.0);
            }
        }
        emit_instrs(w, body, 8);
        for (k, reg) in observed.iter().enumerate() {
            if owner.get(reg) == Some(&tid) {
                let _ = writeln!(w, "        r.r{} = {};", k + 1, reg.0);
            }
        }
        let _ = writeln!(w, "    }}");
    }
    let _ = writeln!(w, "}}");
    Ok(out)
}
