//! Property tests: printer/parser round-trips, relational-algebra laws, and
//! solver soundness against brute-force evaluation.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use jmt::builder::rf_candidates;
use jmt::exec::{AccessMode, FenceMode, Loc};
use jmt::expr::{BinOp, Expr, Reg, Sxp, Value};
use jmt::litmus::{
    parse_litmus, AssertExpr, BehaviorAssertion, Instruction, LitmusTest, QualReg, Quantifier,
};
use jmt::rel::Relation;
use jmt::smt::{model_satisfies, SatOracle, SatResult, Solver};

// ---------------------------------------------------------------------------
// strategies

const LOAD_MODES: [AccessMode; 4] =
    [AccessMode::Plain, AccessMode::Opaque, AccessMode::Acquire, AccessMode::Volatile];

const STORE_MODES: [AccessMode; 4] =
    [AccessMode::Plain, AccessMode::Opaque, AccessMode::Release, AccessMode::Volatile];

const FENCES: [FenceMode; 5] =
    [FenceMode::Ww, FenceMode::Rr, FenceMode::Acq, FenceMode::Rel, FenceMode::Full];

fn arb_word_expr(defined: Vec<Reg>) -> impl Strategy<Value = Expr> {
    let leaf = if defined.is_empty() {
        (0u32..16).prop_map(Expr::Val).boxed()
    } else {
        prop_oneof![
            (0u32..16).prop_map(Expr::Val),
            proptest::sample::select(defined).prop_map(Expr::Reg),
        ]
        .boxed()
    };
    leaf.prop_recursive(3, 12, 2, |inner| {
        (
            proptest::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::BitOr]),
            inner.clone(),
            inner,
        )
            .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b)))
    })
}

fn arb_bool_expr(defined: Vec<Reg>) -> impl Strategy<Value = Expr> {
    let word = arb_word_expr(defined).boxed();
    let leaf = (
        proptest::sample::select(vec![BinOp::Eq, BinOp::Gt]),
        word.clone(),
        word,
    )
        .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b)));
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (
                proptest::sample::select(vec![BinOp::And, BinOp::Or]),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
            inner.prop_map(|e| Expr::Not(Box::new(e))),
        ]
    })
}

fn arb_relation(n: usize) -> impl Strategy<Value = Relation<usize>> {
    proptest::collection::btree_set((0..n, 0..n), 0..=2 * n)
        .prop_map(Relation::from_pairs)
}

/// A random well-formed litmus program built from a seed: fresh registers
/// keep the single-assignment and ownership rules, uses only follow
/// definitions, and every instruction form and access mode can appear.
fn gen_test(seed: u64) -> LitmusTest {
    struct Rng(u64);
    impl Rng {
        fn next(&mut self) -> u64 {
            let mut x = self.0;
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            self.0 = x;
            x.wrapping_mul(2685821657736338717)
        }
        fn below(&mut self, n: usize) -> usize {
            (self.next() % n as u64) as usize
        }
    }
    let mut rng = Rng(seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493));
    let locs = ["x", "y", "z"];
    let mut regno = 0usize;
    let mut threads = Vec::new();
    for tid in 1..=(1 + rng.below(3)) {
        let mut defined: Vec<Reg> = Vec::new();
        let mut instrs = Vec::new();
        for _ in 0..(1 + rng.below(4)) {
            let loc = Loc::new(locs[rng.below(3)]);
            let load_mode = LOAD_MODES[rng.below(4)];
            let store_mode = STORE_MODES[rng.below(4)];
            let mut fresh = || {
                regno += 1;
                Reg::new(format!("t{tid}v{regno}"))
            };
            let sxp = |rng: &mut Rng, defined: &[Reg]| {
                if !defined.is_empty() && rng.below(2) == 0 {
                    Sxp::Reg(defined[rng.below(defined.len())].clone())
                } else {
                    Sxp::Val(rng.below(7) as Value)
                }
            };
            match rng.below(8) {
                0 | 1 => {
                    let reg = fresh();
                    defined.push(reg.clone());
                    instrs.push(Instruction::Load { reg, loc, mode: load_mode });
                }
                2 | 3 => {
                    let sxp = sxp(&mut rng, &defined);
                    instrs.push(Instruction::Store { loc, sxp, mode: store_mode });
                }
                4 => {
                    let reg = fresh();
                    let exp = if defined.is_empty() {
                        Expr::Val(rng.below(7) as Value)
                    } else {
                        Expr::Bin(
                            BinOp::Add,
                            Box::new(Expr::Reg(defined[rng.below(defined.len())].clone())),
                            Box::new(Expr::Val(rng.below(7) as Value)),
                        )
                    };
                    defined.push(reg.clone());
                    instrs.push(Instruction::Assign { reg, exp });
                }
                5 => instrs.push(Instruction::Fence { mode: FENCES[rng.below(5)] }),
                6 => {
                    let expected = sxp(&mut rng, &defined);
                    let desired = sxp(&mut rng, &defined);
                    let reg = fresh();
                    defined.push(reg.clone());
                    instrs.push(Instruction::Cax {
                        reg,
                        loc,
                        expected,
                        desired,
                        read_mode: load_mode,
                        write_mode: store_mode,
                    });
                }
                _ => {
                    let cond = if defined.is_empty() {
                        Expr::eq(Expr::Val(0), Expr::Val(0))
                    } else {
                        Expr::eq(
                            Expr::Reg(defined[rng.below(defined.len())].clone()),
                            Expr::Val(rng.below(3) as Value),
                        )
                    };
                    let then_branch = vec![Instruction::Store {
                        loc: loc.clone(),
                        sxp: Sxp::Val(rng.below(7) as Value),
                        mode: store_mode,
                    }];
                    let else_branch = if rng.below(2) == 0 {
                        vec![Instruction::Skip]
                    } else {
                        Vec::new()
                    };
                    instrs.push(Instruction::IfThenElse { cond, then_branch, else_branch });
                }
            }
        }
        threads.push(instrs);
    }
    let mut test = LitmusTest {
        name: format!("Prop{seed}"),
        init: BTreeMap::new(),
        threads,
        assertion: BehaviorAssertion {
            quantifier: [Quantifier::Exists, Quantifier::NotExists, Quantifier::Forall]
                [rng.below(3)],
            formula: AssertExpr::True,
        },
    };
    // a random assertion over the registers the program defines
    let regs: Vec<(usize, Reg)> = test.registers_of().into_iter().collect();
    if !regs.is_empty() {
        let atom = |rng: &mut Rng| {
            let (tid, reg) = regs[rng.below(regs.len())].clone();
            let tid = if rng.below(2) == 0 { Some(tid) } else { None };
            AssertExpr::Eq(QualReg { tid, reg }, rng.below(7) as Value)
        };
        let a = atom(&mut rng);
        test.assertion.formula = match rng.below(4) {
            0 => a,
            1 => AssertExpr::And(Box::new(a), Box::new(atom(&mut rng))),
            2 => AssertExpr::Or(Box::new(a), Box::new(atom(&mut rng))),
            _ => AssertExpr::Not(Box::new(a)),
        };
    }
    test.normalize();
    test.check().expect("generated program must be well-formed");
    test
}

// ---------------------------------------------------------------------------
// properties

proptest! {
    /// Printing a program and parsing it back is the identity.
    #[test]
    fn litmus_print_parse_roundtrip(seed in any::<u64>()) {
        let test = gen_test(seed);
        let printed = test.to_string();
        let reparsed = parse_litmus(&printed)
            .unwrap_or_else(|e| panic!("reparse failed: {e}\n{printed}"));
        prop_assert_eq!(reparsed, test);
    }

    /// The transitive closure contains the relation, is transitive, and is
    /// a fixed point.
    #[test]
    fn closure_laws(r in arb_relation(8)) {
        let tc = r.transitive_closure();
        prop_assert!(r.is_subset(&tc));
        prop_assert!(tc.is_transitive());
        prop_assert_eq!(tc.transitive_closure(), tc);
    }

    /// For acyclic relations, the transitive reduction preserves the
    /// transitive closure.
    #[test]
    fn reduction_preserves_closure(r in arb_relation(8)) {
        prop_assume!(r.is_acyclic());
        let reduced = r.transitive_reduction();
        prop_assert!(reduced.is_subset(&r));
        prop_assert_eq!(reduced.transitive_closure(), r.transitive_closure());
    }

    /// Composition distributes over union on the left.
    #[test]
    fn compose_distributes_over_union(a in arb_relation(6), b in arb_relation(6), c in arb_relation(6)) {
        prop_assert_eq!(
            a.union(&b).compose(&c),
            a.compose(&c).union(&b.compose(&c))
        );
    }

    /// Inverse is an involution and swaps composition order.
    #[test]
    fn inverse_laws(a in arb_relation(6), b in arb_relation(6)) {
        prop_assert_eq!(a.inverse().inverse(), a.clone());
        prop_assert_eq!(a.compose(&b).inverse(), b.inverse().compose(&a.inverse()));
    }

    /// Every linearisation of a partial order is a strict total order over
    /// the set that extends the original order.
    #[test]
    fn linearisations_extend_order(n in 1usize..5, r in arb_relation(5)) {
        let set: BTreeSet<usize> = (0..n).collect();
        // keep only forward pairs inside the set so the order is acyclic
        let order = Relation::from_pairs(
            r.iter().filter(|(a, b)| a < b && b < &n).cloned(),
        );
        let lins = order.linearisations(&set);
        prop_assert!(!lins.is_empty());
        for lin in &lins {
            prop_assert_eq!(lin.len(), n * (n - 1) / 2);
            prop_assert!(lin.is_acyclic());
            prop_assert!(lin.is_transitive());
            prop_assert!(order.is_subset(lin));
        }
        // with no constraints there are exactly n! of them
        if order.is_empty() {
            let fact: usize = (1..=n).product();
            prop_assert_eq!(lins.len(), fact);
        }
    }

    /// Any model the builtin solver returns really satisfies the
    /// constraints, and the solver never reports unsat when brute force over
    /// a small domain finds a model.
    #[test]
    fn builtin_solver_sound(cs in proptest::collection::vec(
        arb_bool_expr(vec![Reg::new("p"), Reg::new("q"), Reg::new("s")]), 1..4))
    {
        let solver = Solver::builtin();
        let verdict = solver.check(&cs).unwrap();
        if let SatResult::Sat(model) = &verdict {
            prop_assert!(model_satisfies(model, &cs), "bad model {model:?} for {cs:?}");
        }
        // brute-force completeness check over a tiny domain
        let regs = [Reg::new("p"), Reg::new("q"), Reg::new("s")];
        let mut found = None;
        'outer: for p in 0u32..4 {
            for q in 0u32..4 {
                for s in 0u32..4 {
                    let env: BTreeMap<Reg, Value> =
                        regs.iter().cloned().zip([p, q, s]).collect();
                    if cs.iter().all(|c| {
                        matches!(c.eval(&env), Ok(jmt::expr::EvalValue::Bool(true)))
                    }) {
                        found = Some(env);
                        break 'outer;
                    }
                }
            }
        }
        if let Some(env) = found {
            prop_assert!(
                !matches!(verdict, SatResult::Unsat),
                "solver said unsat but {env:?} satisfies {cs:?}"
            );
        }
    }

    /// rf enumeration is exhaustive: one candidate per way of choosing a
    /// same-location writer (other than the read itself) for every read.
    #[test]
    fn rf_candidate_count(seed in any::<u64>()) {
        let test = gen_test(seed);
        let per_thread = jmt::builder::build_thread_graphs(&test);
        for g in jmt::builder::product_with_init(&test, &per_thread).into_iter().take(4) {
            let expected: usize = g
                .reads()
                .map(|r| {
                    g.writes()
                        .filter(|w| w.loc() == r.loc() && *w != r)
                        .count()
                })
                .product();
            let cands = rf_candidates(&g);
            prop_assert_eq!(cands.len(), expected);
            for c in &cands {
                // total: every read got a writer
                prop_assert_eq!(c.rf.len(), g.reads().count());
            }
        }
    }
}
