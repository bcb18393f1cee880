//! Expressions over registers and 32-bit values.
//!
//! The same expression type serves three roles: right-hand sides of
//! assignments and branch conditions in programs, constraint sets attached to
//! symbolic execution graphs, and the formulas handed to the satisfiability
//! backend (where register names have been replaced by tagged variables).

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

/// Values are unsigned 32-bit integers; arithmetic wraps.
pub type Value = u32;

/// A register name. Registers are program-unique (static single assignment,
/// disjoint between threads), so a bare name identifies a register.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Reg(pub String);

impl Reg {
    pub fn new(name: impl Into<String>) -> Self {
        Reg(name.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A simple expression: a register or a constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sxp {
    Reg(Reg),
    Val(Value),
}

impl Sxp {
    pub fn to_expr(&self) -> Expr {
        match self {
            Sxp::Reg(r) => Expr::Reg(r.clone()),
            Sxp::Val(v) => Expr::Val(*v),
        }
    }
}

impl fmt::Display for Sxp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sxp::Reg(r) => write!(f, "{r}"),
            Sxp::Val(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    /// Wrapping addition.
    Add,
    /// Wrapping subtraction.
    Sub,
    /// Wrapping multiplication.
    Mul,
    /// Bitwise or.
    BitOr,
    /// Equality; yields a boolean.
    Eq,
    /// Unsigned greater-than; yields a boolean.
    Gt,
    /// Logical conjunction of booleans.
    And,
    /// Logical disjunction of booleans.
    Or,
}

/// An expression tree. Word-typed and boolean-typed subexpressions are mixed
/// in one tree; `sort_of` recovers the typing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Reg(Reg),
    Val(Value),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

/// The sort of an expression: a 32-bit word or a boolean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    Word,
    Bool,
}

/// Result of evaluating an expression under a register assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalValue {
    Word(Value),
    Bool(bool),
}

impl EvalValue {
    pub fn as_word(&self) -> Result<Value, ExprError> {
        match self {
            EvalValue::Word(v) => Ok(*v),
            EvalValue::Bool(_) => Err(ExprError::SortMismatch),
        }
    }
    pub fn as_bool(&self) -> Result<bool, ExprError> {
        match self {
            EvalValue::Bool(b) => Ok(*b),
            EvalValue::Word(_) => Err(ExprError::SortMismatch),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("word expression used where a boolean was expected (or vice versa)")]
    SortMismatch,
    #[error("unbound register {0}")]
    UnboundRegister(String),
}

impl Expr {
    pub fn reg(name: impl Into<String>) -> Self {
        Expr::Reg(Reg::new(name))
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn eq(lhs: Expr, rhs: Expr) -> Self {
        Expr::bin(BinOp::Eq, lhs, rhs)
    }

    pub fn ne(lhs: Expr, rhs: Expr) -> Self {
        Expr::Not(Box::new(Expr::eq(lhs, rhs)))
    }

    pub fn and(lhs: Expr, rhs: Expr) -> Self {
        Expr::bin(BinOp::And, lhs, rhs)
    }

    pub fn not(e: Expr) -> Self {
        Expr::Not(Box::new(e))
    }

    /// Conjunction of a list of boolean expressions; `true` is `1 = 1`.
    pub fn conj(mut es: Vec<Expr>) -> Expr {
        match es.len() {
            0 => Expr::eq(Expr::Val(1), Expr::Val(1)),
            1 => es.pop().unwrap(),
            _ => {
                let mut it = es.into_iter();
                let first = it.next().unwrap();
                it.fold(first, Expr::and)
            }
        }
    }

    /// Infer the sort of this expression, checking operand sorts.
    pub fn sort_of(&self) -> Result<Sort, ExprError> {
        match self {
            Expr::Reg(_) | Expr::Val(_) => Ok(Sort::Word),
            Expr::Not(e) => match e.sort_of()? {
                Sort::Bool => Ok(Sort::Bool),
                Sort::Word => Err(ExprError::SortMismatch),
            },
            Expr::Bin(op, l, r) => {
                let (ls, rs) = (l.sort_of()?, r.sort_of()?);
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::BitOr => {
                        if ls == Sort::Word && rs == Sort::Word {
                            Ok(Sort::Word)
                        } else {
                            Err(ExprError::SortMismatch)
                        }
                    }
                    BinOp::Eq | BinOp::Gt => {
                        if ls == Sort::Word && rs == Sort::Word {
                            Ok(Sort::Bool)
                        } else {
                            Err(ExprError::SortMismatch)
                        }
                    }
                    BinOp::And | BinOp::Or => {
                        if ls == Sort::Bool && rs == Sort::Bool {
                            Ok(Sort::Bool)
                        } else {
                            Err(ExprError::SortMismatch)
                        }
                    }
                }
            }
        }
    }

    /// Evaluate under a total register assignment.
    pub fn eval(&self, env: &BTreeMap<Reg, Value>) -> Result<EvalValue, ExprError> {
        match self {
            Expr::Val(v) => Ok(EvalValue::Word(*v)),
            Expr::Reg(r) => env
                .get(r)
                .map(|v| EvalValue::Word(*v))
                .ok_or_else(|| ExprError::UnboundRegister(r.0.clone())),
            Expr::Not(e) => Ok(EvalValue::Bool(!e.eval(env)?.as_bool()?)),
            Expr::Bin(op, l, r) => {
                let lv = l.eval(env)?;
                let rv = r.eval(env)?;
                Ok(match op {
                    BinOp::Add => EvalValue::Word(lv.as_word()?.wrapping_add(rv.as_word()?)),
                    BinOp::Sub => EvalValue::Word(lv.as_word()?.wrapping_sub(rv.as_word()?)),
                    BinOp::Mul => EvalValue::Word(lv.as_word()?.wrapping_mul(rv.as_word()?)),
                    BinOp::BitOr => EvalValue::Word(lv.as_word()? | rv.as_word()?),
                    BinOp::Eq => EvalValue::Bool(lv.as_word()? == rv.as_word()?),
                    BinOp::Gt => EvalValue::Bool(lv.as_word()? > rv.as_word()?),
                    BinOp::And => EvalValue::Bool(lv.as_bool()? && rv.as_bool()?),
                    BinOp::Or => EvalValue::Bool(lv.as_bool()? || rv.as_bool()?),
                })
            }
        }
    }

    /// Collect all registers appearing in the expression.
    pub fn registers(&self, out: &mut std::collections::BTreeSet<Reg>) {
        match self {
            Expr::Reg(r) => {
                out.insert(r.clone());
            }
            Expr::Val(_) => {}
            Expr::Not(e) => e.registers(out),
            Expr::Bin(_, l, r) => {
                l.registers(out);
                r.registers(out);
            }
        }
    }

    /// Rename every register through `f` (used to tag registers per graph
    /// before encoding).
    pub fn map_regs(&self, f: &impl Fn(&Reg) -> Reg) -> Expr {
        match self {
            Expr::Reg(r) => Expr::Reg(f(r)),
            Expr::Val(v) => Expr::Val(*v),
            Expr::Not(e) => Expr::Not(Box::new(e.map_regs(f))),
            Expr::Bin(op, l, r) => Expr::Bin(*op, Box::new(l.map_regs(f)), Box::new(r.map_regs(f))),
        }
    }
}

impl BinOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::BitOr => "|",
            BinOp::Eq => "=",
            BinOp::Gt => ">",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

// Every binary node is parenthesized, which round-trips through the parser
// unambiguously.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Reg(r) => write!(f, "{r}"),
            Expr::Val(v) => write!(f, "{v}"),
            Expr::Not(e) => write!(f, "!{e}"),
            Expr::Bin(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}
