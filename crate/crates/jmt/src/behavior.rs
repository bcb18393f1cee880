//! Deciding behaviors and judging assertions.
//!
//! A behavior is an assignment to the registers named in the assertion. The
//! full behavior set is never materialized: each query runs the whole
//! pipeline — graph construction, model evaluation, justification search —
//! for one formula and reports a witness or its absence.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;

use crate::builder::build_graphs;
use crate::cat::{evaluate_sem, CatError, CatModel};
use crate::causality::{find_justification, Justification, SearchConfig, SearchOutcome};
use crate::exec::EnhancedGraph;
use crate::expr::{EvalValue, Expr, Reg, Value};
use crate::litmus::{LitmusTest, Quantifier};
use crate::smt::encode::{local_var, TARGET_TAG};
use crate::smt::{Model, SatOracle, SatResult, SmtError};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    Cat(#[from] CatError),
}

/// A register assignment, keyed by register name.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Behavior {
    pub values: BTreeMap<String, Value>,
}

impl Behavior {
    /// Extract the values of `regs` for the target graph from a solver
    /// model. Variables the solver left out are don't-cares and default to 0.
    pub fn from_model(model: &Model, regs: &BTreeSet<Reg>) -> Behavior {
        let values = regs
            .iter()
            .map(|r| {
                let v = model.get(&local_var(TARGET_TAG, r)).copied().unwrap_or(0);
                (r.0.clone(), v)
            })
            .collect();
        Behavior { values }
    }

    /// The exact-equality formula describing this behavior.
    pub fn to_formula(&self) -> Expr {
        Expr::conj(
            self.values
                .iter()
                .map(|(r, v)| Expr::eq(Expr::reg(r.clone()), Expr::Val(*v)))
                .collect(),
        )
    }

    /// Whether this assignment satisfies `phi` by direct evaluation.
    pub fn satisfies(&self, phi: &Expr) -> bool {
        let mut env: BTreeMap<Reg, Value> =
            self.values.iter().map(|(r, v)| (Reg::new(r.clone()), *v)).collect();
        let mut regs = BTreeSet::new();
        phi.registers(&mut regs);
        for r in regs {
            env.entry(r).or_insert(0);
        }
        matches!(phi.eval(&env), Ok(EvalValue::Bool(true)))
    }
}

impl std::fmt::Display for Behavior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> =
            self.values.iter().map(|(r, v)| format!("{r}={v}")).collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// The answer to "is some behavior satisfying φ allowed?".
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Allowed {
    /// A justified target whose decoded model satisfies φ.
    Witness(Behavior, Justification),
    /// The search space was exhausted without finding one.
    Absent,
    /// The search budget ran out on at least one target before a witness
    /// appeared; absence is not established.
    Unknown,
}

/// A program with its pipeline results, reusable across behavior queries.
pub struct Prepared {
    pub test: LitmusTest,
    /// All SEM-consistent enhanced graphs, in deterministic construction
    /// order. Doubles as the justification pool.
    pub pool: Vec<EnhancedGraph>,
}

impl Prepared {
    /// Run stages 1–3 once: build all rf-complete graphs and evaluate the
    /// model on each.
    pub fn new(
        test: &LitmusTest,
        sem: &CatModel,
        oracle: &dyn SatOracle,
    ) -> Result<Prepared, EngineError> {
        let mut pool = Vec::new();
        for g in build_graphs(test, oracle)? {
            pool.extend(evaluate_sem(sem, &g)?);
        }
        Ok(Prepared { test: test.clone(), pool })
    }

    /// Target candidates ordered for the search: graphs whose rf edges are
    /// already covered by hb (fewer "races") come first, since well-behaved
    /// targets justify themselves without search.
    fn ordered_targets(&self) -> Vec<&EnhancedGraph> {
        let mut targets: Vec<&EnhancedGraph> = self.pool.iter().collect();
        targets.sort_by_key(|g| g.graph.rf.difference(&g.hb).len());
        targets
    }

    /// Look for a target graph with a solver-validated justification whose
    /// model satisfies `phi`. Targets are examined in parallel; the winner
    /// is the first in order.
    pub fn behavior_allowed(
        &self,
        phi: &Expr,
        oracle: &dyn SatOracle,
        cfg: &SearchConfig,
    ) -> Result<Allowed, EngineError> {
        let exhausted = AtomicBool::new(false);
        let targets = self.ordered_targets();
        let hit = targets
            .par_iter()
            .map(|target| -> Result<Option<(Behavior, Justification)>, EngineError> {
                // cheap pre-filter: the target's own constraints must admit φ
                let mut constraints = target.graph.all_constraints();
                constraints.push(phi.clone());
                if matches!(oracle.check(&constraints)?, SatResult::Unsat) {
                    return Ok(None);
                }
                match find_justification(target, &self.pool, phi, oracle, cfg)? {
                    SearchOutcome::Found(j, model) => {
                        let mut regs = BTreeSet::new();
                        phi.registers(&mut regs);
                        let behavior = Behavior::from_model(&model, &regs);
                        debug_assert!(behavior.satisfies(phi));
                        debug_assert!(j.validate().is_ok());
                        Ok(Some((behavior, j)))
                    }
                    SearchOutcome::NoJustification => Ok(None),
                    SearchOutcome::BudgetExhausted => {
                        exhausted.store(true, Ordering::Relaxed);
                        Ok(None)
                    }
                }
            })
            .find_first(|r| !matches!(r, Ok(None)));
        match hit {
            Some(Err(e)) => Err(e),
            Some(Ok(Some((b, j)))) => Ok(Allowed::Witness(b, j)),
            Some(Ok(None)) => unreachable!("filtered by find_first"),
            None if exhausted.load(Ordering::Relaxed) => Ok(Allowed::Unknown),
            None => Ok(Allowed::Absent),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Unsupported,
    /// The search budget was exhausted before the verdict was decided.
    Unknown,
}

/// The result of judging a test's assertion.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub outcome: Outcome,
    /// For a failed forbidden (or forall) assertion: the offending behavior
    /// and its justification.
    pub witness: Option<(Behavior, Justification)>,
    /// For a passing required assertion: the justified behavior.
    pub evidence: Option<(Behavior, Justification)>,
    pub detail: String,
}

impl Verdict {
    fn pass(detail: impl Into<String>) -> Verdict {
        Verdict { outcome: Outcome::Pass, witness: None, evidence: None, detail: detail.into() }
    }

    fn fail(detail: impl Into<String>) -> Verdict {
        Verdict { outcome: Outcome::Fail, witness: None, evidence: None, detail: detail.into() }
    }

    fn unknown(detail: impl Into<String>) -> Verdict {
        Verdict { outcome: Outcome::Unknown, witness: None, evidence: None, detail: detail.into() }
    }
}

/// Judge the test's own assertion: `exists` formulas are required,
/// `~exists` formulas are forbidden, and `forall` formulas are required
/// while their negation is forbidden.
pub fn judge(
    prepared: &Prepared,
    oracle: &dyn SatOracle,
    cfg: &SearchConfig,
) -> Result<Verdict, EngineError> {
    let assertion = &prepared.test.assertion;
    let phi = assertion.formula.to_expr();
    match assertion.quantifier {
        Quantifier::Exists => {
            match prepared.behavior_allowed(&phi, oracle, cfg)? {
                Allowed::Witness(b, j) => Ok(Verdict {
                    detail: format!("required behavior is allowed: {b}"),
                    evidence: Some((b, j)),
                    ..Verdict::pass("")
                }),
                Allowed::Absent => Ok(Verdict::fail("required behavior has no justification")),
                Allowed::Unknown => Ok(Verdict::unknown(budget_note(cfg))),
            }
        }
        Quantifier::NotExists => {
            match prepared.behavior_allowed(&phi, oracle, cfg)? {
                Allowed::Witness(b, j) => Ok(Verdict {
                    detail: format!("forbidden behavior is allowed: {b}"),
                    witness: Some((b, j)),
                    ..Verdict::fail("")
                }),
                Allowed::Absent => Ok(Verdict::pass("forbidden behavior is absent")),
                Allowed::Unknown => Ok(Verdict::unknown(budget_note(cfg))),
            }
        }
        Quantifier::Forall => {
            // the negation must be forbidden …
            match prepared.behavior_allowed(&Expr::not(phi.clone()), oracle, cfg)? {
                Allowed::Witness(b, j) => {
                    return Ok(Verdict {
                        detail: format!("behavior violating the formula is allowed: {b}"),
                        witness: Some((b, j)),
                        ..Verdict::fail("")
                    });
                }
                Allowed::Unknown => return Ok(Verdict::unknown(budget_note(cfg))),
                Allowed::Absent => {}
            }
            // … and the formula itself must be realizable
            match prepared.behavior_allowed(&phi, oracle, cfg)? {
                Allowed::Witness(b, j) => Ok(Verdict {
                    detail: format!("formula holds in all executions; e.g. {b}"),
                    evidence: Some((b, j)),
                    ..Verdict::pass("")
                }),
                Allowed::Absent => {
                    Ok(Verdict::fail("no execution realizes the formula"))
                }
                Allowed::Unknown => Ok(Verdict::unknown(budget_note(cfg))),
            }
        }
    }
}

fn budget_note(cfg: &SearchConfig) -> String {
    let bound = match cfg.commit_bound {
        Some(n) => n.to_string(),
        None => "unbounded".to_string(),
    };
    format!(
        "search budget exhausted (commit bound {bound}, max stages {}, node budget {})",
        cfg.max_stages, cfg.node_budget
    )
}
