//! Built-in oracle: bit-blast 32-bit word constraints to CNF and solve with
//! an embedded SAT solver.

use std::collections::BTreeMap;

use varisat::{ExtendFormula, Lit, Solver as SatSolver};

use crate::expr::{BinOp, Expr, Reg};

use super::{Model, SatResult, SmtError};

const WIDTH: usize = 32;

/// A boolean value during blasting: a known constant or a CNF literal.
/// Constant folding keeps the formula small for the common constant-heavy
/// constraints of litmus tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bit {
    T,
    F,
    L(Lit),
}

/// A 32-bit word, least-significant bit first.
type Word = Vec<Bit>;

struct Blaster<'a> {
    solver: SatSolver<'a>,
    vars: BTreeMap<Reg, Word>,
    /// Set once a constraint folded to constant-false.
    contradiction: bool,
}

impl<'a> Blaster<'a> {
    fn new() -> Self {
        Blaster {
            solver: SatSolver::new(),
            vars: BTreeMap::new(),
            contradiction: false,
        }
    }

    fn fresh(&mut self) -> Lit {
        self.solver.new_lit()
    }

    fn not(&mut self, a: Bit) -> Bit {
        match a {
            Bit::T => Bit::F,
            Bit::F => Bit::T,
            Bit::L(l) => Bit::L(!l),
        }
    }

    fn and2(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::F, _) | (_, Bit::F) => Bit::F,
            (Bit::T, x) | (x, Bit::T) => x,
            (Bit::L(x), Bit::L(y)) => {
                if x == y {
                    return Bit::L(x);
                }
                if x == !y {
                    return Bit::F;
                }
                let c = self.fresh();
                self.solver.add_clause(&[!c, x]);
                self.solver.add_clause(&[!c, y]);
                self.solver.add_clause(&[c, !x, !y]);
                Bit::L(c)
            }
        }
    }

    fn or2(&mut self, a: Bit, b: Bit) -> Bit {
        let na = self.not(a);
        let nb = self.not(b);
        let n = self.and2(na, nb);
        self.not(n)
    }

    fn xor2(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::F, x) | (x, Bit::F) => x,
            (Bit::T, x) | (x, Bit::T) => self.not(x),
            (Bit::L(x), Bit::L(y)) => {
                if x == y {
                    return Bit::F;
                }
                if x == !y {
                    return Bit::T;
                }
                let c = self.fresh();
                self.solver.add_clause(&[!c, x, y]);
                self.solver.add_clause(&[!c, !x, !y]);
                self.solver.add_clause(&[c, !x, y]);
                self.solver.add_clause(&[c, x, !y]);
                Bit::L(c)
            }
        }
    }

    fn and_many(&mut self, bits: &[Bit]) -> Bit {
        bits.iter().fold(Bit::T, |acc, &b| self.and2(acc, b))
    }

    fn var_word(&mut self, r: &Reg) -> Word {
        if let Some(w) = self.vars.get(r) {
            return w.clone();
        }
        let w: Word = (0..WIDTH).map(|_| Bit::L(self.fresh())).collect();
        self.vars.insert(r.clone(), w.clone());
        w
    }

    fn const_word(v: u32) -> Word {
        (0..WIDTH)
            .map(|i| if (v >> i) & 1 == 1 { Bit::T } else { Bit::F })
            .collect()
    }

    /// Ripple-carry addition with the given carry-in.
    fn add(&mut self, a: &Word, b: &Word, mut carry: Bit) -> Word {
        let mut out = Vec::with_capacity(WIDTH);
        for i in 0..WIDTH {
            let axb = self.xor2(a[i], b[i]);
            out.push(self.xor2(axb, carry));
            let ab = self.and2(a[i], b[i]);
            let ac = self.and2(axb, carry);
            carry = self.or2(ab, ac);
        }
        out
    }

    fn sub(&mut self, a: &Word, b: &Word) -> Word {
        let nb: Word = b.iter().map(|&x| self.not(x)).collect();
        self.add(a, &nb, Bit::T)
    }

    /// Shift-and-add multiplication, truncated to 32 bits.
    fn mul(&mut self, a: &Word, b: &Word) -> Word {
        let mut acc = Self::const_word(0);
        for i in 0..WIDTH {
            if b[i] == Bit::F {
                continue;
            }
            let mut partial = Self::const_word(0);
            for j in i..WIDTH {
                partial[j] = self.and2(a[j - i], b[i]);
            }
            acc = self.add(&acc, &partial, Bit::F);
        }
        acc
    }

    fn eq(&mut self, a: &Word, b: &Word) -> Bit {
        let mut eqs = Vec::with_capacity(WIDTH);
        for i in 0..WIDTH {
            let x = self.xor2(a[i], b[i]);
            eqs.push(self.not(x));
        }
        self.and_many(&eqs)
    }

    /// Unsigned a > b: scan from the most significant bit.
    fn ugt(&mut self, a: &Word, b: &Word) -> Bit {
        let mut gt = Bit::F;
        let mut eq_prefix = Bit::T;
        for i in (0..WIDTH).rev() {
            let nb = self.not(b[i]);
            let here = self.and2(a[i], nb);
            let win = self.and2(eq_prefix, here);
            gt = self.or2(gt, win);
            let x = self.xor2(a[i], b[i]);
            let same = self.not(x);
            eq_prefix = self.and2(eq_prefix, same);
        }
        gt
    }

    fn word(&mut self, e: &Expr) -> Result<Word, SmtError> {
        Ok(match e {
            Expr::Val(v) => Self::const_word(*v),
            Expr::Reg(r) => self.var_word(r),
            Expr::Bin(op, l, r) => {
                let a = self.word(l)?;
                let b = self.word(r)?;
                match op {
                    BinOp::Add => self.add(&a, &b, Bit::F),
                    BinOp::Sub => self.sub(&a, &b),
                    BinOp::Mul => self.mul(&a, &b),
                    BinOp::BitOr => (0..WIDTH).map(|i| self.or2(a[i], b[i])).collect(),
                    _ => return Err(SmtError::Internal(format!("boolean operator in word position: {e}"))),
                }
            }
            Expr::Not(_) => return Err(SmtError::Internal(format!("boolean operator in word position: {e}"))),
        })
    }

    fn bool(&mut self, e: &Expr) -> Result<Bit, SmtError> {
        Ok(match e {
            Expr::Not(x) => {
                let b = self.bool(x)?;
                self.not(b)
            }
            Expr::Bin(BinOp::Eq, l, r) => {
                let a = self.word(l)?;
                let b = self.word(r)?;
                self.eq(&a, &b)
            }
            Expr::Bin(BinOp::Gt, l, r) => {
                let a = self.word(l)?;
                let b = self.word(r)?;
                self.ugt(&a, &b)
            }
            Expr::Bin(BinOp::And, l, r) => {
                let a = self.bool(l)?;
                let b = self.bool(r)?;
                self.and2(a, b)
            }
            Expr::Bin(BinOp::Or, l, r) => {
                let a = self.bool(l)?;
                let b = self.bool(r)?;
                self.or2(a, b)
            }
            _ => return Err(SmtError::Internal(format!("word expression in boolean position: {e}"))),
        })
    }

    fn assert(&mut self, e: &Expr) -> Result<(), SmtError> {
        match self.bool(e)? {
            Bit::T => {}
            Bit::F => self.contradiction = true,
            Bit::L(l) => self.solver.add_clause(&[l]),
        }
        Ok(())
    }
}

pub fn check(constraints: &[Expr]) -> Result<SatResult, SmtError> {
    let mut b = Blaster::new();
    for c in constraints {
        b.assert(c)?;
    }
    if b.contradiction {
        return Ok(SatResult::Unsat);
    }
    let sat = b
        .solver
        .solve()
        .map_err(|e| SmtError::Internal(e.to_string()))?;
    if !sat {
        return Ok(SatResult::Unsat);
    }
    let lits = b
        .solver
        .model()
        .ok_or_else(|| SmtError::Internal("sat without model".into()))?;
    let mut assignment: BTreeMap<usize, bool> = BTreeMap::new();
    for l in lits {
        assignment.insert(l.var().index(), l.is_positive());
    }
    let mut model = Model::new();
    for (reg, word) in &b.vars {
        let mut v: u32 = 0;
        for (i, bit) in word.iter().enumerate() {
            let set = match bit {
                Bit::T => true,
                Bit::F => false,
                Bit::L(l) => {
                    let raw = assignment.get(&l.var().index()).copied().unwrap_or(false);
                    if l.is_positive() {
                        raw
                    } else {
                        !raw
                    }
                }
            };
            if set {
                v |= 1 << i;
            }
        }
        model.insert(reg.clone(), v);
    }
    Ok(SatResult::Sat(model))
}
