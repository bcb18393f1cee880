//! The supported `.cat` subset: parsing and evaluation over symbolic
//! execution graphs.
//!
//! A model is an ordered list of statements evaluated per graph. `with`
//! clauses branch the evaluation over every linearisation they generate;
//! requirement statements filter branches. Surviving branches yield enhanced
//! graphs carrying the model's `so`, `sw` and `hb` relations.

mod parse;

pub use parse::parse_cat;

use std::collections::{BTreeMap, BTreeSet};

use crate::exec::{EnhancedGraph, EventKey, Graph};
use crate::rel::Relation;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CatExpr {
    Id(String),
    Union(Box<CatExpr>, Box<CatExpr>),
    Inter(Box<CatExpr>, Box<CatExpr>),
    Diff(Box<CatExpr>, Box<CatExpr>),
    Seq(Box<CatExpr>, Box<CatExpr>),
    Inverse(Box<CatExpr>),
    /// Reflexive-transitive closure (postfix `*`).
    Star(Box<CatExpr>),
    /// Transitive closure (postfix `+`).
    Plus(Box<CatExpr>),
    /// `[S]`: the identity relation on the set S.
    SetToRel(Box<CatExpr>),
    /// `~e`: complement w.r.t. the event universe.
    Complement(Box<CatExpr>),
    /// `S * S`: cartesian product of two sets.
    Cross(Box<CatExpr>, Box<CatExpr>),
    Domain(Box<CatExpr>),
    Range(Box<CatExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    Irreflexive,
    Acyclic,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Let(String, CatExpr),
    /// `with <name> from linearisations(<set>, <order>)`
    With { name: String, set: CatExpr, order: CatExpr },
    Require(CheckKind, CatExpr),
    Show(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatModel {
    pub name: Option<String>,
    pub statements: Vec<Stmt>,
}

impl CatModel {
    pub fn lets(&self) -> impl Iterator<Item = (&str, &CatExpr)> {
        self.statements.iter().filter_map(|s| match s {
            Stmt::Let(n, e) => Some((n.as_str(), e)),
            _ => None,
        })
    }

    pub fn with_clauses(&self) -> impl Iterator<Item = &Stmt> {
        self.statements.iter().filter(|s| matches!(s, Stmt::With { .. }))
    }

    pub fn requirements(&self) -> impl Iterator<Item = (CheckKind, &CatExpr)> {
        self.statements.iter().filter_map(|s| match s {
            Stmt::Require(k, e) => Some((*k, e)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatError {
    #[error("cat syntax error at line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("identifier `{0}` is not defined at its point of use (forward and recursive references are not supported)")]
    Undefined(String),
    #[error("type error in cat expression: {0}")]
    TypeError(String),
    #[error("model does not define relation `{0}`, which the multi-execution semantics requires")]
    MissingRelation(String),
    #[error("model produced an ill-formed enhancement: {0}")]
    IllFormed(String),
}

/// A cat value: an event set or a binary relation over events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CatValue {
    Set(BTreeSet<EventKey>),
    Rel(Relation<EventKey>),
}

impl CatValue {
    fn as_set(&self, ctx: &str) -> Result<&BTreeSet<EventKey>, CatError> {
        match self {
            CatValue::Set(s) => Ok(s),
            CatValue::Rel(_) => Err(CatError::TypeError(format!("{ctx}: expected a set, got a relation"))),
        }
    }

    fn as_rel(&self, ctx: &str) -> Result<&Relation<EventKey>, CatError> {
        match self {
            CatValue::Rel(r) => Ok(r),
            CatValue::Set(_) => Err(CatError::TypeError(format!("{ctx}: expected a relation, got a set"))),
        }
    }
}

/// Built-in identifiers available to every model.
pub const BUILTINS: &[&str] = &["po", "rf", "id", "loc", "W", "R", "F", "V", "IW"];

struct Env {
    universe: BTreeSet<EventKey>,
    bindings: BTreeMap<String, CatValue>,
}

impl Env {
    fn new(graph: &Graph) -> Self {
        let universe = graph.key_set();
        let mut bindings = BTreeMap::new();
        bindings.insert("po".into(), CatValue::Rel(graph.po.clone()));
        bindings.insert("rf".into(), CatValue::Rel(graph.rf.clone()));
        bindings.insert("id".into(), CatValue::Rel(Relation::identity(universe.iter().cloned())));
        bindings.insert("loc".into(), CatValue::Rel(graph.loc_rel()));
        bindings.insert(
            "W".into(),
            CatValue::Set(graph.writes().cloned().collect()),
        );
        bindings.insert("R".into(), CatValue::Set(graph.reads().cloned().collect()));
        bindings.insert(
            "F".into(),
            CatValue::Set(
                graph.keys().filter(|k| k.typ() == crate::exec::EventType::F).cloned().collect(),
            ),
        );
        bindings.insert(
            "V".into(),
            CatValue::Set(
                graph
                    .events
                    .values()
                    .filter(|e| e.is_volatile())
                    .map(|e| e.key.clone())
                    .collect(),
            ),
        );
        bindings.insert(
            "IW".into(),
            CatValue::Set(graph.init_writes().cloned().collect()),
        );
        Env { universe, bindings }
    }

    fn lookup(&self, name: &str) -> Result<&CatValue, CatError> {
        self.bindings.get(name).ok_or_else(|| CatError::Undefined(name.into()))
    }

    fn eval(&self, e: &CatExpr) -> Result<CatValue, CatError> {
        Ok(match e {
            CatExpr::Id(n) => self.lookup(n)?.clone(),
            CatExpr::Union(a, b) => {
                self.combine(a, b, "union", <BTreeSet<EventKey> as SetOps>::union_owned, Relation::union)?
            }
            CatExpr::Inter(a, b) => self.combine(
                a,
                b,
                "intersection",
                <BTreeSet<EventKey> as SetOps>::inter_owned,
                Relation::intersection,
            )?,
            CatExpr::Diff(a, b) => self.combine(
                a,
                b,
                "difference",
                <BTreeSet<EventKey> as SetOps>::diff_owned,
                Relation::difference,
            )?,
            CatExpr::Seq(a, b) => {
                let a = self.eval(a)?;
                let b = self.eval(b)?;
                CatValue::Rel(a.as_rel("`;`")?.compose(b.as_rel("`;`")?))
            }
            CatExpr::Inverse(a) => CatValue::Rel(self.eval(a)?.as_rel("`^-1`")?.inverse()),
            CatExpr::Star(a) => CatValue::Rel(
                self.eval(a)?
                    .as_rel("`*`")?
                    .reflexive_transitive_closure(self.universe.iter().cloned()),
            ),
            CatExpr::Plus(a) => CatValue::Rel(self.eval(a)?.as_rel("`+`")?.transitive_closure()),
            CatExpr::SetToRel(a) => {
                let s = self.eval(a)?;
                CatValue::Rel(Relation::identity(s.as_set("`[_]`")?.iter().cloned()))
            }
            CatExpr::Complement(a) => match self.eval(a)? {
                CatValue::Set(s) => CatValue::Set(self.universe.difference(&s).cloned().collect()),
                CatValue::Rel(r) => {
                    let full = Relation::cross(self.universe.iter().cloned(), self.universe.iter().cloned());
                    CatValue::Rel(full.difference(&r))
                }
            },
            CatExpr::Cross(a, b) => {
                let a = self.eval(a)?;
                let b = self.eval(b)?;
                CatValue::Rel(Relation::cross(
                    a.as_set("`*` product")?.iter().cloned(),
                    b.as_set("`*` product")?.iter().cloned(),
                ))
            }
            CatExpr::Domain(a) => CatValue::Set(self.eval(a)?.as_rel("domain")?.domain()),
            CatExpr::Range(a) => CatValue::Set(self.eval(a)?.as_rel("range")?.range()),
        })
    }

    fn combine(
        &self,
        a: &CatExpr,
        b: &CatExpr,
        ctx: &str,
        fs: impl Fn(BTreeSet<EventKey>, &BTreeSet<EventKey>) -> BTreeSet<EventKey>,
        fr: impl Fn(&Relation<EventKey>, &Relation<EventKey>) -> Relation<EventKey>,
    ) -> Result<CatValue, CatError> {
        let av = self.eval(a)?;
        let bv = self.eval(b)?;
        match (av, bv) {
            (CatValue::Set(x), CatValue::Set(y)) => Ok(CatValue::Set(fs(x, &y))),
            (CatValue::Rel(x), CatValue::Rel(y)) => Ok(CatValue::Rel(fr(&x, &y))),
            _ => Err(CatError::TypeError(format!("{ctx} mixes a set and a relation"))),
        }
    }
}

// set helpers taking ownership of the left operand, for `combine`
trait SetOps {
    fn union_owned(a: BTreeSet<EventKey>, b: &BTreeSet<EventKey>) -> BTreeSet<EventKey>;
    fn inter_owned(a: BTreeSet<EventKey>, b: &BTreeSet<EventKey>) -> BTreeSet<EventKey>;
    fn diff_owned(a: BTreeSet<EventKey>, b: &BTreeSet<EventKey>) -> BTreeSet<EventKey>;
}

impl SetOps for BTreeSet<EventKey> {
    fn union_owned(mut a: BTreeSet<EventKey>, b: &BTreeSet<EventKey>) -> BTreeSet<EventKey> {
        a.extend(b.iter().cloned());
        a
    }
    fn inter_owned(a: BTreeSet<EventKey>, b: &BTreeSet<EventKey>) -> BTreeSet<EventKey> {
        a.intersection(b).cloned().collect()
    }
    fn diff_owned(a: BTreeSet<EventKey>, b: &BTreeSet<EventKey>) -> BTreeSet<EventKey> {
        a.difference(b).cloned().collect()
    }
}

fn check_requirement(kind: CheckKind, value: &CatValue) -> Result<bool, CatError> {
    Ok(match (kind, value) {
        (CheckKind::Irreflexive, CatValue::Rel(r)) => r.is_irreflexive(),
        (CheckKind::Acyclic, CatValue::Rel(r)) => r.is_acyclic(),
        (CheckKind::Empty, CatValue::Rel(r)) => r.is_empty(),
        (CheckKind::Empty, CatValue::Set(s)) => s.is_empty(),
        (k, CatValue::Set(_)) => {
            return Err(CatError::TypeError(format!("{k:?} check applied to a set")))
        }
    })
}

fn extract_rel(env: &Env, name: &str) -> Result<Relation<EventKey>, CatError> {
    match env.bindings.get(name) {
        Some(CatValue::Rel(r)) => Ok(r.clone()),
        Some(CatValue::Set(_)) => Err(CatError::TypeError(format!("`{name}` is bound to a set, expected a relation"))),
        None => Err(CatError::MissingRelation(name.into())),
    }
}

/// Check the §-contract on an enhancement: `hb` is a partial order, `sw`
/// is contained in it, and `so` totally orders the volatile accesses.
fn check_well_formed(g: &EnhancedGraph) -> Result<(), CatError> {
    let hb = &g.hb;
    if !hb.is_transitive() {
        return Err(CatError::IllFormed("hb is not transitive".into()));
    }
    if hb.intersection(&hb.inverse()).iter().any(|(a, b)| a != b) {
        return Err(CatError::IllFormed("hb is not antisymmetric".into()));
    }
    if !g.sw.is_subset(hb) {
        return Err(CatError::IllFormed("sw is not contained in hb".into()));
    }
    let vol: Vec<&EventKey> = g
        .graph
        .events
        .values()
        .filter(|e| e.is_volatile())
        .map(|e| &e.key)
        .collect();
    if !g.so.is_irreflexive() || !g.so.is_transitive() {
        return Err(CatError::IllFormed("so is not a strict order".into()));
    }
    for a in &vol {
        for b in &vol {
            if a != b && !g.so.contains(a, b) && !g.so.contains(b, a) {
                return Err(CatError::IllFormed(format!("so does not order {a} and {b}")));
            }
        }
    }
    Ok(())
}

/// Stage 3: evaluate the model on one graph. Branches over every
/// linearisation of each `with` clause, discards branches violating a
/// requirement, and returns the surviving enhanced graphs (deduplicated).
pub fn evaluate_sem(model: &CatModel, g: &Graph) -> Result<Vec<EnhancedGraph>, CatError> {
    let base = Env::new(g);
    // branches: bindings overlaid per linearisation choice; requirements
    // already passed stay implicit (a failed one drops the branch)
    let mut branches: Vec<BTreeMap<String, CatValue>> = vec![base.bindings.clone()];
    for stmt in &model.statements {
        let mut next = Vec::new();
        for bindings in branches {
            let env = Env { universe: base.universe.clone(), bindings };
            match stmt {
                Stmt::Let(name, e) => {
                    let v = env.eval(e)?;
                    let mut b = env.bindings;
                    b.insert(name.clone(), v);
                    next.push(b);
                }
                Stmt::With { name, set, order } => {
                    let s = env.eval(set)?;
                    let s = s.as_set("linearisations")?;
                    let r = env.eval(order)?;
                    let r = r.as_rel("linearisations")?;
                    for lin in r.linearisations(s) {
                        let mut b = env.bindings.clone();
                        b.insert(name.clone(), CatValue::Rel(lin));
                        next.push(b);
                    }
                }
                Stmt::Require(kind, e) => {
                    let v = env.eval(e)?;
                    if check_requirement(*kind, &v)? {
                        next.push(env.bindings);
                    }
                }
                Stmt::Show(_) => next.push(env.bindings),
            }
        }
        branches = next;
    }

    let mut out: Vec<EnhancedGraph> = Vec::new();
    for bindings in branches {
        let env = Env { universe: base.universe.clone(), bindings };
        let eg = EnhancedGraph {
            graph: g.clone(),
            so: extract_rel(&env, "so")?,
            sw: extract_rel(&env, "sw")?,
            hb: extract_rel(&env, "hb")?,
        };
        check_well_formed(&eg)?;
        if !out.contains(&eg) {
            out.push(eg);
        }
    }
    Ok(out)
}

/// Convenience: parse a model from a file.
pub fn load_cat(path: &std::path::Path) -> Result<CatModel, CatError> {
    let text = std::fs::read_to_string(path).map_err(|e| CatError::Syntax {
        line: 0,
        msg: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_cat(&text)
}

/// The JLS04 model shipped with the tool.
pub const JLS04_CAT: &str = include_str!("../../models/jls04.cat");
