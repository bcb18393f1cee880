//! SMT-LIB v2 emission and external-solver subprocess driver.
//!
//! Constraints are rendered over `QF_BV` with 32-bit vectors. Variable names
//! may contain spaces and punctuation (they mirror the encoding's
//! `G2:1:Wr y@1` naming), so every symbol is emitted in `|...|` quotes.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use wait_timeout::ChildExt;

use crate::expr::{BinOp, Expr, Reg};

use super::{Model, SatResult, SmtError};

fn quote(name: &str) -> String {
    debug_assert!(!name.contains('|') && !name.contains('\\'));
    format!("|{name}|")
}

fn render_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Val(v) => out.push_str(&format!("(_ bv{v} 32)")),
        Expr::Reg(r) => out.push_str(&quote(&r.0)),
        Expr::Not(x) => {
            out.push_str("(not ");
            render_expr(x, out);
            out.push(')');
        }
        Expr::Bin(op, l, r) => {
            let name = match op {
                BinOp::Add => "bvadd",
                BinOp::Sub => "bvsub",
                BinOp::Mul => "bvmul",
                BinOp::BitOr => "bvor",
                BinOp::Eq => "=",
                BinOp::Gt => "bvugt",
                BinOp::And => "and",
                BinOp::Or => "or",
            };
            out.push('(');
            out.push_str(name);
            out.push(' ');
            render_expr(l, out);
            out.push(' ');
            render_expr(r, out);
            out.push(')');
        }
    }
}

/// Render a conjunction of constraints as a complete SMT-LIB v2 script.
/// Output is byte-stable for a fixed input: declarations are sorted by
/// variable name and assertions keep their given order.
pub fn render_smtlib(constraints: &[Expr]) -> String {
    let mut vars = BTreeSet::new();
    for c in constraints {
        c.registers(&mut vars);
    }
    let mut s = String::new();
    s.push_str("(set-logic QF_BV)\n(set-option :produce-models true)\n");
    for v in &vars {
        s.push_str(&format!("(declare-const {} (_ BitVec 32))\n", quote(&v.0)));
    }
    for c in constraints {
        s.push_str("(assert ");
        render_expr(c, &mut s);
        s.push_str(")\n");
    }
    s.push_str("(check-sat)\n(get-model)\n");
    s
}

static QUERY_ID: AtomicU64 = AtomicU64::new(0);

pub fn check_external(
    solver: &Path,
    timeout: Duration,
    constraints: &[Expr],
) -> Result<SatResult, SmtError> {
    let script = render_smtlib(constraints);
    let file = std::env::temp_dir().join(format!(
        "jmt-{}-{}.smt2",
        std::process::id(),
        QUERY_ID.fetch_add(1, Ordering::Relaxed)
    ));
    let spawn_err = |e| SmtError::Spawn(solver.display().to_string(), e);
    std::fs::write(&file, &script).map_err(spawn_err)?;
    let run = (|| {
        let mut child = Command::new(solver)
            .arg(&file)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(spawn_err)?;
        let finished = child.wait_timeout(timeout).map_err(spawn_err)?;
        if finished.is_none() {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(SatResult::Unknown);
        }
        let output = child.wait_with_output().map_err(spawn_err)?;
        let stdout = String::from_utf8_lossy(&output.stdout);
        parse_solver_output(&stdout)
    })();
    let _ = std::fs::remove_file(&file);
    run
}

fn parse_solver_output(out: &str) -> Result<SatResult, SmtError> {
    let mut lines = out.lines().map(str::trim).filter(|l| !l.is_empty());
    match lines.next() {
        Some("unsat") => Ok(SatResult::Unsat),
        Some("unknown") | Some("timeout") => Ok(SatResult::Unknown),
        Some("sat") => {
            let rest: String = out
                .lines()
                .skip_while(|l| l.trim() != "sat")
                .skip(1)
                .collect::<Vec<_>>()
                .join("\n");
            Ok(SatResult::Sat(parse_model(&rest)?))
        }
        other => Err(SmtError::BadOutput(format!(
            "expected sat/unsat/unknown, got {:?}",
            other.unwrap_or("")
        ))),
    }
}

/// Extract `(define-fun |name| () (_ BitVec 32) <value>)` entries. Solvers
/// differ in layout and value syntax (`#x…`, `#b…`, `(_ bvN 32)`), so this
/// scans token-wise instead of parsing full s-expressions.
fn parse_model(s: &str) -> Result<Model, SmtError> {
    let mut model = Model::new();
    let mut rest = s;
    while let Some(pos) = rest.find("define-fun") {
        rest = &rest[pos + "define-fun".len()..];
        let rest_trim = rest.trim_start();
        let (name, after_name) = if let Some(stripped) = rest_trim.strip_prefix('|') {
            let end = stripped
                .find('|')
                .ok_or_else(|| SmtError::BadOutput("unterminated quoted symbol".into()))?;
            (&stripped[..end], &stripped[end + 1..])
        } else {
            let end = rest_trim
                .find(|c: char| c.is_whitespace() || c == '(')
                .unwrap_or(rest_trim.len());
            (&rest_trim[..end], &rest_trim[end..])
        };
        let value = parse_value(after_name)?;
        model.insert(Reg::new(name), value);
        rest = after_name;
    }
    Ok(model)
}

fn parse_value(s: &str) -> Result<u32, SmtError> {
    if let Some(pos) = s.find("#x") {
        let hex: String = s[pos + 2..].chars().take_while(|c| c.is_ascii_hexdigit()).collect();
        return u32::from_str_radix(&hex, 16)
            .map_err(|_| SmtError::BadOutput(format!("bad hex literal #x{hex}")));
    }
    if let Some(pos) = s.find("#b") {
        let bin: String = s[pos + 2..].chars().take_while(|c| *c == '0' || *c == '1').collect();
        return u32::from_str_radix(&bin, 2)
            .map_err(|_| SmtError::BadOutput(format!("bad binary literal #b{bin}")));
    }
    if let Some(pos) = s.find("bv") {
        let dec: String = s[pos + 2..].chars().take_while(|c| c.is_ascii_digit()).collect();
        return dec
            .parse()
            .map_err(|_| SmtError::BadOutput(format!("bad decimal literal bv{dec}")));
    }
    Err(SmtError::BadOutput(format!("no bit-vector value in {s:?}")))
}
