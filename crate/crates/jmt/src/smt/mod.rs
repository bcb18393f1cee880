//! Satisfiability backend.
//!
//! All queries are conjunctions of boolean expressions over 32-bit word
//! variables. Two interchangeable oracles answer them: a built-in one that
//! bit-blasts to CNF and runs an embedded SAT solver (the default, no
//! external dependencies), and an external SMT-LIB v2 solver run as a child
//! process. Either way, a reported model is re-checked by substitution
//! before it is trusted.

mod bitblast;
pub mod encode;
mod smtlib;

pub use smtlib::render_smtlib;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Duration;

use crate::expr::{Expr, Reg, Sort, Value};

/// A satisfying assignment: one 32-bit value per variable.
pub type Model = BTreeMap<Reg, Value>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Model),
    Unsat,
    /// Timeout or solver gave up; callers must treat this conservatively.
    Unknown,
}

#[derive(Debug, thiserror::Error)]
pub enum SmtError {
    #[error("ill-sorted constraint: {0}")]
    IllSorted(String),
    #[error("failed to run solver `{0}`: {1}")]
    Spawn(String, std::io::Error),
    #[error("solver returned unparseable output: {0}")]
    BadOutput(String),
    #[error("solver model does not satisfy the constraints (solver bug or protocol mismatch)")]
    BadModel,
    #[error("internal solver error: {0}")]
    Internal(String),
}

/// Answers satisfiability queries over conjunctions of word constraints.
pub trait SatOracle: Sync {
    fn check(&self, constraints: &[Expr]) -> Result<SatResult, SmtError>;
}

/// Solver selection, mapped from CLI flags.
#[derive(Debug, Clone)]
pub enum SolverConfig {
    /// Embedded bit-blasting SAT solver.
    Builtin,
    /// External SMT-LIB v2 solver invoked as `<path> <file.smt2>`.
    External { path: PathBuf, timeout: Duration },
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::Builtin
    }
}

/// The concrete oracle built from a [`SolverConfig`].
pub struct Solver {
    config: SolverConfig,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Self {
        Solver { config }
    }

    pub fn builtin() -> Self {
        Solver::new(SolverConfig::Builtin)
    }
}

fn check_sorts(constraints: &[Expr]) -> Result<(), SmtError> {
    for c in constraints {
        match c.sort_of() {
            Ok(Sort::Bool) => {}
            Ok(Sort::Word) => return Err(SmtError::IllSorted(c.to_string())),
            Err(e) => return Err(SmtError::IllSorted(format!("{c}: {e}"))),
        }
    }
    Ok(())
}

/// Substitute `model` into every constraint and evaluate. Variables absent
/// from the model default to 0 (solvers may omit don't-care variables).
pub fn model_satisfies(model: &Model, constraints: &[Expr]) -> bool {
    let mut env = model.clone();
    let mut vars = BTreeSet::new();
    for c in constraints {
        c.registers(&mut vars);
    }
    for v in vars {
        env.entry(v).or_insert(0);
    }
    constraints
        .iter()
        .all(|c| matches!(c.eval(&env), Ok(crate::expr::EvalValue::Bool(true))))
}

impl SatOracle for Solver {
    fn check(&self, constraints: &[Expr]) -> Result<SatResult, SmtError> {
        check_sorts(constraints)?;
        let result = match &self.config {
            SolverConfig::Builtin => bitblast::check(constraints)?,
            SolverConfig::External { path, timeout } => {
                smtlib::check_external(path, *timeout, constraints)?
            }
        };
        if let SatResult::Sat(model) = &result {
            if !model_satisfies(model, constraints) {
                return Err(SmtError::BadModel);
            }
        }
        Ok(result)
    }
}
