//! Hand-rolled tokenizer and recursive-descent parser for litmus files.

use std::collections::BTreeMap;

use crate::exec::{AccessMode, FenceMode, Loc};
use crate::expr::{BinOp, Expr, Reg, Sxp};

use super::{
    AssertExpr, BehaviorAssertion, Instruction, LitmusError, LitmusTest, QualReg, Quantifier,
};

/// Keywords that flag features the tool deliberately does not model. They are
/// recognized so tests exercising them produce an "unsupported" verdict
/// rather than a confusing parse error.
const UNSUPPORTED: &[&str] = &[
    "while", "for", "do", "synchronized", "lock", "unlock", "monitorenter", "monitorexit",
    "final", "new", "return", "join", "start",
];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u32),
    Assign, // :=
    Term,   // ; or newline
    Dot,
    Comma,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Eq,
    Gt,
    Plus,
    Minus,
    Star,
    Bar,
    Bang,
    AndAnd,  // &&
    OrOr,    // ||
    Colon,
    Tilde,
    AndSym, // /\
    OrSym,  // \/
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Assign => "`:=`".into(),
            Tok::Term => "end of statement".into(),
            Tok::Dot => "`.`".into(),
            Tok::Comma => "`,`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Bang => "`!`".into(),
            Tok::AndAnd => "`&&`".into(),
            Tok::OrOr => "`||`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::AndSym => "`/\\`".into(),
            Tok::OrSym => "`\\/`".into(),
        }
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> LitmusError {
    LitmusError::Syntax { line, msg: msg.into() }
}

/// Strip `//` line comments and `(* ... *)` block comments, preserving line
/// structure so reported line numbers match the source.
fn strip_comments(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let mut chars = src.chars().peekable();
    let mut in_block = false;
    while let Some(c) = chars.next() {
        if in_block {
            if c == '*' && chars.peek() == Some(&')') {
                chars.next();
                in_block = false;
            } else if c == '\n' {
                out.push('\n');
            }
            continue;
        }
        match c {
            '/' if chars.peek() == Some(&'/') => {
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' if chars.peek() == Some(&'*') => {
                chars.next();
                in_block = true;
            }
            _ => out.push(c),
        }
    }
    out
}

fn tokenize(src: &str, first_line: usize) -> Result<Vec<(Tok, usize)>, LitmusError> {
    let mut toks = Vec::new();
    let mut line = first_line;
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        let tok = match c {
            '\n' => {
                toks.push((Tok::Term, line));
                line += 1;
                continue;
            }
            ' ' | '\t' | '\r' => continue,
            ';' => Tok::Term,
            '.' => Tok::Dot,
            ',' => Tok::Comma,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '=' => Tok::Eq,
            '>' => Tok::Gt,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '!' => Tok::Bang,
            '~' => Tok::Tilde,
            ':' => {
                if chars.peek() == Some(&'=') {
                    chars.next();
                    Tok::Assign
                } else {
                    Tok::Colon
                }
            }
            '&' => {
                if chars.peek() == Some(&'&') {
                    chars.next();
                    Tok::AndAnd
                } else {
                    return Err(syntax(line, "single `&`; conjunction is `&&`"));
                }
            }
            '|' => {
                if chars.peek() == Some(&'|') {
                    chars.next();
                    Tok::OrOr
                } else {
                    Tok::Bar
                }
            }
            '/' => {
                if chars.peek() == Some(&'\\') {
                    chars.next();
                    Tok::AndSym
                } else {
                    return Err(syntax(line, "stray `/`"));
                }
            }
            '\\' => {
                if chars.peek() == Some(&'/') {
                    chars.next();
                    Tok::OrSym
                } else {
                    return Err(syntax(line, "stray `\\`"));
                }
            }
            c if c.is_ascii_digit() => {
                let mut s = String::from(c);
                while let Some(&n) = chars.peek() {
                    if n.is_ascii_digit() {
                        s.push(n);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let v: u32 = s
                    .parse()
                    .map_err(|_| syntax(line, format!("value {s} does not fit in 32 bits")))?;
                Tok::Num(v)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::from(c);
                while let Some(&n) = chars.peek() {
                    if n.is_ascii_alphanumeric() || n == '_' {
                        s.push(n);
                        chars.next();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            other => return Err(syntax(line, format!("unexpected character `{other}`"))),
        };
        toks.push((tok, line));
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    last_line: usize,
}

impl Parser {
    fn new(toks: Vec<(Tok, usize)>, last_line: usize) -> Self {
        Parser { toks, pos: 0, last_line }
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).map(|(_, l)| *l).unwrap_or(self.last_line)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(t, _)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), LitmusError> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(syntax(
                self.toks[self.pos - 1].1,
                format!("expected {}, found {}", want.describe(), t.describe()),
            )),
            None => Err(syntax(self.last_line, format!("expected {}, found end of input", want.describe()))),
        }
    }

    fn expect_ident(&mut self) -> Result<String, LitmusError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            Some(t) => Err(syntax(self.toks[self.pos - 1].1, format!("expected a name, found {}", t.describe()))),
            None => Err(syntax(self.last_line, "expected a name, found end of input")),
        }
    }

    fn skip_terms(&mut self) {
        while self.peek() == Some(&Tok::Term) {
            self.pos += 1;
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    /// End of a statement: `;`/newline (consumed), `}` or end of input (left).
    fn end_statement(&mut self) -> Result<(), LitmusError> {
        match self.peek() {
            Some(Tok::Term) => {
                self.skip_terms();
                Ok(())
            }
            Some(Tok::RBrace) | None => Ok(()),
            Some(t) => Err(syntax(self.line(), format!("expected end of statement, found {}", t.describe()))),
        }
    }

    // ----- program expressions -----
    // precedence, loosest first: || ; && ; = > ; | ; + - ; * ; unary !

    fn expr(&mut self) -> Result<Expr, LitmusError> {
        let mut e = self.conj()?;
        while self.peek() == Some(&Tok::OrOr) {
            self.next();
            e = Expr::bin(BinOp::Or, e, self.conj()?);
        }
        Ok(e)
    }

    fn conj(&mut self) -> Result<Expr, LitmusError> {
        let mut e = self.cmp()?;
        while self.peek() == Some(&Tok::AndAnd) {
            self.next();
            e = Expr::bin(BinOp::And, e, self.cmp()?);
        }
        Ok(e)
    }

    fn cmp(&mut self) -> Result<Expr, LitmusError> {
        let e = self.bitor()?;
        match self.peek() {
            Some(Tok::Eq) => {
                self.next();
                Ok(Expr::bin(BinOp::Eq, e, self.bitor()?))
            }
            Some(Tok::Gt) => {
                self.next();
                Ok(Expr::bin(BinOp::Gt, e, self.bitor()?))
            }
            _ => Ok(e),
        }
    }

    fn bitor(&mut self) -> Result<Expr, LitmusError> {
        let mut e = self.additive()?;
        while self.peek() == Some(&Tok::Bar) {
            self.next();
            e = Expr::bin(BinOp::BitOr, e, self.additive()?);
        }
        Ok(e)
    }

    fn additive(&mut self) -> Result<Expr, LitmusError> {
        let mut e = self.mul()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                    e = Expr::bin(BinOp::Add, e, self.mul()?);
                }
                Some(Tok::Minus) => {
                    self.next();
                    e = Expr::bin(BinOp::Sub, e, self.mul()?);
                }
                _ => return Ok(e),
            }
        }
    }

    fn mul(&mut self) -> Result<Expr, LitmusError> {
        let mut e = self.unary()?;
        while self.peek() == Some(&Tok::Star) {
            self.next();
            e = Expr::bin(BinOp::Mul, e, self.unary()?);
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr, LitmusError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.next();
                Ok(Expr::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Num(_)) => {
                if let Some(Tok::Num(v)) = self.next() {
                    Ok(Expr::Val(v))
                } else {
                    unreachable!()
                }
            }
            Some(Tok::Ident(_)) => {
                let name = self.expect_ident()?;
                Ok(Expr::Reg(Reg::new(name)))
            }
            Some(t) => Err(syntax(self.line(), format!("expected an expression, found {}", t.describe()))),
            None => Err(syntax(self.last_line, "expected an expression, found end of input")),
        }
    }

    fn sxp(&mut self) -> Result<Sxp, LitmusError> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Sxp::Val(v)),
            Some(Tok::Ident(s)) => Ok(Sxp::Reg(Reg::new(s))),
            Some(t) => Err(syntax(
                self.toks[self.pos - 1].1,
                format!("expected a register or value, found {}", t.describe()),
            )),
            None => Err(syntax(self.last_line, "expected a register or value, found end of input")),
        }
    }

    // ----- statements -----

    fn mode(&mut self, kind: &'static str, allowed: &[AccessMode]) -> Result<AccessMode, LitmusError> {
        let line = self.line();
        let name = self.expect_ident()?;
        let mode = AccessMode::parse(&name)
            .filter(|m| allowed.contains(m))
            .ok_or(LitmusError::BadMode { kind, mode: name })?;
        let _ = line;
        Ok(mode)
    }

    fn block(&mut self) -> Result<Vec<Instruction>, LitmusError> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        loop {
            self.skip_terms();
            if self.peek() == Some(&Tok::RBrace) {
                self.next();
                return Ok(out);
            }
            if self.at_end() {
                return Err(syntax(self.last_line, "unterminated block: missing `}`"));
            }
            out.push(self.statement()?);
        }
    }

    fn statement(&mut self) -> Result<Instruction, LitmusError> {
        const LOAD_MODES: &[AccessMode] =
            &[AccessMode::Plain, AccessMode::Opaque, AccessMode::Acquire, AccessMode::Volatile];
        const STORE_MODES: &[AccessMode] =
            &[AccessMode::Plain, AccessMode::Opaque, AccessMode::Release, AccessMode::Volatile];

        let line = self.line();
        let head = match self.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            Some(t) => return Err(syntax(line, format!("expected a statement, found {}", t.describe()))),
            None => return Err(syntax(line, "expected a statement, found end of input")),
        };

        if UNSUPPORTED.contains(&head.as_str()) {
            return Err(LitmusError::Unsupported(head));
        }

        match head.as_str() {
            "skip" => {
                self.next();
                self.end_statement()?;
                return Ok(Instruction::Skip);
            }
            "fence" => {
                self.next();
                self.expect(Tok::Dot)?;
                let name = self.expect_ident()?;
                let mode = FenceMode::parse(&name)
                    .ok_or(LitmusError::BadMode { kind: "fence", mode: name })?;
                self.end_statement()?;
                return Ok(Instruction::Fence { mode });
            }
            "if" => {
                self.next();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                self.skip_terms();
                let then_branch = self.block()?;
                let mut save = self.pos;
                self.skip_terms();
                let else_branch = if self.peek() == Some(&Tok::Ident("else".into())) {
                    self.next();
                    self.skip_terms();
                    save = self.pos; // consumed else-block ends the statement
                    let b = self.block()?;
                    let _ = save;
                    b
                } else {
                    self.pos = save;
                    Vec::new()
                };
                self.end_statement()?;
                return Ok(Instruction::IfThenElse { cond, then_branch, else_branch });
            }
            _ => {}
        }

        // remaining forms start with a name: `loc.mode := sxp` or `reg := ...`
        self.next();
        match self.peek() {
            Some(Tok::Dot) => {
                self.next();
                let mode = self.mode("store", STORE_MODES)?;
                self.expect(Tok::Assign)?;
                let sxp = self.sxp()?;
                self.end_statement()?;
                Ok(Instruction::Store { loc: Loc::new(head), sxp, mode })
            }
            Some(Tok::Assign) => {
                self.next();
                let reg = Reg::new(head);
                // `cax.` and `loc.` right-hand sides; anything else is an expression
                if let (Some(Tok::Ident(rhs)), Some(Tok::Dot)) = (self.peek(), self.peek2()) {
                    if rhs == "cax" {
                        self.next();
                        self.next();
                        let read_mode = self.mode("cax read", LOAD_MODES)?;
                        self.expect(Tok::Dot)?;
                        let write_mode = self.mode("cax write", STORE_MODES)?;
                        self.expect(Tok::LParen)?;
                        let loc = Loc::new(self.expect_ident()?);
                        self.expect(Tok::Comma)?;
                        let expected = self.sxp()?;
                        self.expect(Tok::Comma)?;
                        let desired = self.sxp()?;
                        self.expect(Tok::RParen)?;
                        self.end_statement()?;
                        return Ok(Instruction::Cax { reg, loc, expected, desired, read_mode, write_mode });
                    }
                    let loc = Loc::new(rhs.clone());
                    self.next();
                    self.next();
                    let mode = self.mode("load", LOAD_MODES)?;
                    self.end_statement()?;
                    return Ok(Instruction::Load { reg, loc, mode });
                }
                let exp = self.expr()?;
                self.end_statement()?;
                Ok(Instruction::Assign { reg, exp })
            }
            Some(t) => Err(syntax(line, format!("expected `:=` or `.mode :=`, found {}", t.describe()))),
            None => Err(syntax(line, "unexpected end of input after name")),
        }
    }

    fn thread_body(&mut self) -> Result<Vec<Instruction>, LitmusError> {
        let mut out = Vec::new();
        loop {
            self.skip_terms();
            if self.at_end() {
                return Ok(out);
            }
            out.push(self.statement()?);
        }
    }

    // ----- assertions -----

    fn assertion(&mut self) -> Result<BehaviorAssertion, LitmusError> {
        self.skip_terms();
        let quantifier = match self.next() {
            Some(Tok::Tilde) => {
                let kw = self.expect_ident()?;
                if kw != "exists" {
                    return Err(syntax(self.line(), format!("expected `exists` after `~`, found `{kw}`")));
                }
                Quantifier::NotExists
            }
            Some(Tok::Ident(kw)) if kw == "exists" => Quantifier::Exists,
            Some(Tok::Ident(kw)) if kw == "forall" => Quantifier::Forall,
            other => {
                let d = other.map(|t| t.describe()).unwrap_or_else(|| "end of input".into());
                return Err(syntax(self.line(), format!("expected `exists`, `~exists` or `forall`, found {d}")));
            }
        };
        self.expect(Tok::LParen)?;
        let formula = self.assert_or()?;
        self.expect(Tok::RParen)?;
        self.skip_terms();
        if !self.at_end() {
            return Err(syntax(self.line(), "trailing input after assertion"));
        }
        Ok(BehaviorAssertion { quantifier, formula })
    }

    fn assert_or(&mut self) -> Result<AssertExpr, LitmusError> {
        let mut e = self.assert_and()?;
        while self.peek() == Some(&Tok::OrSym) {
            self.next();
            e = AssertExpr::Or(Box::new(e), Box::new(self.assert_and()?));
        }
        Ok(e)
    }

    fn assert_and(&mut self) -> Result<AssertExpr, LitmusError> {
        let mut e = self.assert_atom()?;
        while self.peek() == Some(&Tok::AndSym) {
            self.next();
            e = AssertExpr::And(Box::new(e), Box::new(self.assert_atom()?));
        }
        Ok(e)
    }

    fn assert_atom(&mut self) -> Result<AssertExpr, LitmusError> {
        self.skip_terms();
        match self.next() {
            Some(Tok::Tilde) => Ok(AssertExpr::Not(Box::new(self.assert_atom()?))),
            Some(Tok::LParen) => {
                let e = self.assert_or()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(s)) if s == "true" => Ok(AssertExpr::True),
            Some(Tok::Ident(s)) if s == "false" => Ok(AssertExpr::False),
            Some(Tok::Ident(s)) => {
                self.expect(Tok::Eq)?;
                match self.next() {
                    Some(Tok::Num(v)) => {
                        Ok(AssertExpr::Eq(QualReg { tid: None, reg: Reg::new(s) }, v))
                    }
                    other => {
                        let d = other.map(|t| t.describe()).unwrap_or_else(|| "end of input".into());
                        Err(syntax(self.line(), format!("expected a value, found {d}")))
                    }
                }
            }
            Some(Tok::Num(tid)) => {
                self.expect(Tok::Colon)?;
                let reg = Reg::new(self.expect_ident()?);
                self.expect(Tok::Eq)?;
                match self.next() {
                    Some(Tok::Num(v)) => {
                        Ok(AssertExpr::Eq(QualReg { tid: Some(tid as usize), reg }, v))
                    }
                    other => {
                        let d = other.map(|t| t.describe()).unwrap_or_else(|| "end of input".into());
                        Err(syntax(self.line(), format!("expected a value, found {d}")))
                    }
                }
            }
            other => {
                let d = other.map(|t| t.describe()).unwrap_or_else(|| "end of input".into());
                Err(syntax(self.line(), format!("expected an assertion atom, found {d}")))
            }
        }
    }
}

/// Parse a litmus test from source text. Performs full semantic checking
/// (single assignment, register ownership, assertion resolution) and makes
/// the implicit zero-initialization explicit.
pub fn parse_litmus(source: &str) -> Result<LitmusTest, LitmusError> {
    let clean = strip_comments(source);
    let lines: Vec<&str> = clean.lines().collect();

    // header
    let mut idx = 0;
    while idx < lines.len() && lines[idx].trim().is_empty() {
        idx += 1;
    }
    if idx >= lines.len() {
        return Err(syntax(1, "empty file; expected `Java <name>` header"));
    }
    let header = lines[idx].trim();
    let name = header
        .strip_prefix("Java")
        .map(str::trim)
        .filter(|n| !n.is_empty() && n.chars().all(|c| c.is_ascii_alphanumeric() || "_-+.".contains(c)))
        .ok_or_else(|| syntax(idx + 1, "expected header `Java <name>`"))?
        .to_string();
    idx += 1;

    // optional init block `{ x=0; y=0; }`, possibly spanning lines
    let mut init = BTreeMap::new();
    while idx < lines.len() && lines[idx].trim().is_empty() {
        idx += 1;
    }
    if idx < lines.len() && lines[idx].trim_start().starts_with('{') {
        let start = idx;
        let mut region = String::new();
        let mut end = None;
        for (off, line) in lines[idx..].iter().enumerate() {
            region.push_str(line);
            region.push('\n');
            if line.contains('}') {
                end = Some(idx + off);
                break;
            }
        }
        let end = end.ok_or_else(|| syntax(start + 1, "unterminated initialization block"))?;
        let mut p = Parser::new(tokenize(&region, start + 1)?, end + 1);
        p.skip_terms();
        p.expect(Tok::LBrace)?;
        loop {
            p.skip_terms();
            if p.peek() == Some(&Tok::RBrace) {
                p.next();
                break;
            }
            let loc = Loc::new(p.expect_ident()?);
            p.expect(Tok::Eq)?;
            let v = match p.next() {
                Some(Tok::Num(v)) => v,
                _ => return Err(syntax(p.line(), "expected a value in initialization block")),
            };
            if init.insert(loc.clone(), v).is_some() {
                return Err(syntax(p.line(), format!("location {loc} initialized twice")));
            }
            p.skip_terms();
        }
        idx = end + 1;
    }

    // assertion: last line block starting with exists / ~exists / forall
    let mut assert_start = None;
    for (i, line) in lines.iter().enumerate().skip(idx) {
        let t = line.trim_start();
        if t.starts_with("exists") || t.starts_with("~exists") || t.starts_with("forall")
            || t.starts_with("~ exists")
        {
            assert_start = Some(i);
        }
    }
    let assert_start = assert_start
        .ok_or_else(|| syntax(lines.len(), "missing `exists`/`~exists`/`forall` assertion"))?;

    // thread bodies between init and assertion, split on `|||` lines
    let mut chunks: Vec<(usize, String)> = Vec::new(); // (first line number, text)
    let mut cur = String::new();
    let mut cur_start = idx + 1;
    let mut saw_sep = false;
    for (i, line) in lines[idx..assert_start].iter().enumerate() {
        if line.trim() == "|||" {
            chunks.push((cur_start, std::mem::take(&mut cur)));
            cur_start = idx + i + 2;
            saw_sep = true;
        } else {
            cur.push_str(line);
            cur.push('\n');
        }
    }
    chunks.push((cur_start, cur));

    let mut threads = Vec::new();
    for (first_line, text) in &chunks {
        let mut p = Parser::new(tokenize(text, *first_line)?, assert_start);
        threads.push(p.thread_body()?);
    }
    // a single empty chunk with no separators means zero threads
    if !saw_sep && threads.len() == 1 && threads[0].is_empty() {
        threads.clear();
    }

    let assert_text: String = lines[assert_start..].join("\n");
    let mut p = Parser::new(tokenize(&assert_text, assert_start + 1)?, lines.len());
    let assertion = p.assertion()?;

    let mut test = LitmusTest { name, init, threads, assertion };
    test.check()?;
    test.normalize();
    Ok(test)
}
