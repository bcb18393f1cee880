//! Parser for the supported `.cat` subset.
//!
//! Newlines are insignificant; a statement ends where the next statement
//! keyword begins. Identifiers may contain hyphens (`sync-act`), `(* ... *)`
//! comments are ignored, and a leading quoted string names the model.

use super::{CatError, CatExpr, CatModel, CheckKind, Stmt, BUILTINS};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Str(String),
    KwLet,
    KwWith,
    KwFrom,
    KwIrreflexive,
    KwAcyclic,
    KwEmpty,
    KwShow,
    Eq,
    Bar,
    Amp,
    Backslash,
    Semi,
    Star,
    Plus,
    Tilde,
    Inverse, // ^-1
    Comma,
    LParen,
    RParen,
    LBracket,
    RBracket,
}

impl Tok {
    fn starts_primary(&self) -> bool {
        matches!(self, Tok::Ident(_) | Tok::LParen | Tok::LBracket | Tok::Tilde)
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> CatError {
    CatError::Syntax { line, msg: msg.into() }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, CatError> {
    let mut toks = Vec::new();
    let mut line = 1;
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\n' => line += 1,
            ' ' | '\t' | '\r' => {}
            '(' if chars.peek() == Some(&'*') => {
                chars.next();
                let mut prev = ' ';
                loop {
                    match chars.next() {
                        Some('\n') => {
                            line += 1;
                            prev = '\n';
                        }
                        Some(')') if prev == '*' => break,
                        Some(c) => prev = c,
                        None => return Err(syntax(line, "unterminated comment")),
                    }
                }
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some('\n') | None => return Err(syntax(line, "unterminated string")),
                        Some(c) => s.push(c),
                    }
                }
                toks.push((Tok::Str(s), line));
            }
            '=' => toks.push((Tok::Eq, line)),
            '|' => toks.push((Tok::Bar, line)),
            '&' => toks.push((Tok::Amp, line)),
            '\\' => toks.push((Tok::Backslash, line)),
            ';' => toks.push((Tok::Semi, line)),
            '*' => toks.push((Tok::Star, line)),
            '+' => toks.push((Tok::Plus, line)),
            '~' => toks.push((Tok::Tilde, line)),
            ',' => toks.push((Tok::Comma, line)),
            '(' => toks.push((Tok::LParen, line)),
            ')' => toks.push((Tok::RParen, line)),
            '[' => toks.push((Tok::LBracket, line)),
            ']' => toks.push((Tok::RBracket, line)),
            '^' => {
                if chars.next() == Some('-') && chars.next() == Some('1') {
                    toks.push((Tok::Inverse, line));
                } else {
                    return Err(syntax(line, "expected `^-1`"));
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::from(c);
                while let Some(&n) = chars.peek() {
                    if n.is_ascii_alphanumeric() || n == '_' || n == '-' || n == '.' {
                        s.push(n);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let tok = match s.as_str() {
                    "let" => Tok::KwLet,
                    "with" => Tok::KwWith,
                    "from" => Tok::KwFrom,
                    "irreflexive" => Tok::KwIrreflexive,
                    "acyclic" => Tok::KwAcyclic,
                    "empty" => Tok::KwEmpty,
                    "show" => Tok::KwShow,
                    _ => Tok::Ident(s),
                };
                toks.push((tok, line));
            }
            other => return Err(syntax(line, format!("unexpected character `{other}`"))),
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(_, l)| *l)
            .unwrap_or(1)
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

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), CatError> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            _ => Err(syntax(self.line(), format!("expected {what}"))),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, CatError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            _ => Err(syntax(self.line(), format!("expected {what}"))),
        }
    }

    // precedence, loosest first: `|`  `\`  `&`  `;`  cross-`*`  postfix
    fn expr(&mut self) -> Result<CatExpr, CatError> {
        let mut e = self.diff()?;
        while self.peek() == Some(&Tok::Bar) {
            self.next();
            e = CatExpr::Union(Box::new(e), Box::new(self.diff()?));
        }
        Ok(e)
    }

    fn diff(&mut self) -> Result<CatExpr, CatError> {
        let mut e = self.inter()?;
        while self.peek() == Some(&Tok::Backslash) {
            self.next();
            e = CatExpr::Diff(Box::new(e), Box::new(self.inter()?));
        }
        Ok(e)
    }

    fn inter(&mut self) -> Result<CatExpr, CatError> {
        let mut e = self.seq()?;
        while self.peek() == Some(&Tok::Amp) {
            self.next();
            e = CatExpr::Inter(Box::new(e), Box::new(self.seq()?));
        }
        Ok(e)
    }

    fn seq(&mut self) -> Result<CatExpr, CatError> {
        let mut e = self.cross()?;
        while self.peek() == Some(&Tok::Semi) {
            self.next();
            e = CatExpr::Seq(Box::new(e), Box::new(self.cross()?));
        }
        Ok(e)
    }

    fn cross(&mut self) -> Result<CatExpr, CatError> {
        let mut e = self.postfix()?;
        // `*` is the cartesian product when an operand follows, and the
        // reflexive-transitive closure otherwise; `postfix` leaves the
        // product case for us
        while self.peek() == Some(&Tok::Star)
            && self.peek2().map(Tok::starts_primary).unwrap_or(false)
        {
            self.next();
            e = CatExpr::Cross(Box::new(e), Box::new(self.postfix()?));
        }
        Ok(e)
    }

    fn postfix(&mut self) -> Result<CatExpr, CatError> {
        let mut e = self.primary()?;
        loop {
            match self.peek() {
                Some(Tok::Inverse) => {
                    self.next();
                    e = CatExpr::Inverse(Box::new(e));
                }
                Some(Tok::Plus) => {
                    self.next();
                    e = CatExpr::Plus(Box::new(e));
                }
                Some(Tok::Star) if !self.peek2().map(Tok::starts_primary).unwrap_or(false) => {
                    self.next();
                    e = CatExpr::Star(Box::new(e));
                }
                _ => return Ok(e),
            }
        }
    }

    fn primary(&mut self) -> Result<CatExpr, CatError> {
        match self.next() {
            Some(Tok::Ident(name)) => {
                if (name == "domain" || name == "range") && self.peek() == Some(&Tok::LParen) {
                    self.next();
                    let e = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    let b = Box::new(e);
                    Ok(if name == "domain" { CatExpr::Domain(b) } else { CatExpr::Range(b) })
                } else {
                    Ok(CatExpr::Id(name))
                }
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::LBracket) => {
                let e = self.expr()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(CatExpr::SetToRel(Box::new(e)))
            }
            Some(Tok::Tilde) => Ok(CatExpr::Complement(Box::new(self.postfix()?))),
            _ => Err(syntax(self.line(), "expected an expression")),
        }
    }

    fn statements(&mut self) -> Result<(Option<String>, Vec<Stmt>), CatError> {
        let mut name = None;
        if let Some(Tok::Str(_)) = self.peek() {
            if let Some(Tok::Str(s)) = self.next() {
                name = Some(s);
            }
        }
        let mut out = Vec::new();
        while let Some(tok) = self.peek() {
            match tok {
                Tok::KwLet => {
                    self.next();
                    let id = self.expect_ident("a name after `let`")?;
                    self.expect(Tok::Eq, "`=`")?;
                    out.push(Stmt::Let(id, self.expr()?));
                }
                Tok::KwWith => {
                    self.next();
                    let id = self.expect_ident("a name after `with`")?;
                    self.expect(Tok::KwFrom, "`from`")?;
                    let gen = self.expect_ident("`linearisations`")?;
                    if gen != "linearisations" {
                        return Err(syntax(self.line(), "only `linearisations` generators are supported"));
                    }
                    self.expect(Tok::LParen, "`(`")?;
                    let set = self.expr()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let order = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    out.push(Stmt::With { name: id, set, order });
                }
                Tok::KwIrreflexive | Tok::KwAcyclic | Tok::KwEmpty => {
                    let kind = match self.next() {
                        Some(Tok::KwIrreflexive) => CheckKind::Irreflexive,
                        Some(Tok::KwAcyclic) => CheckKind::Acyclic,
                        _ => CheckKind::Empty,
                    };
                    out.push(Stmt::Require(kind, self.expr()?));
                }
                Tok::KwShow => {
                    self.next();
                    let mut ids = vec![self.expect_ident("a name after `show`")?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.next();
                        ids.push(self.expect_ident("a name")?);
                    }
                    out.push(Stmt::Show(ids));
                }
                other => {
                    return Err(syntax(
                        self.line(),
                        format!("expected a statement, found {other:?}"),
                    ))
                }
            }
        }
        Ok((name, out))
    }
}

fn referenced(e: &CatExpr, out: &mut Vec<String>) {
    match e {
        CatExpr::Id(n) => out.push(n.clone()),
        CatExpr::Union(a, b)
        | CatExpr::Inter(a, b)
        | CatExpr::Diff(a, b)
        | CatExpr::Seq(a, b)
        | CatExpr::Cross(a, b) => {
            referenced(a, out);
            referenced(b, out);
        }
        CatExpr::Inverse(a)
        | CatExpr::Star(a)
        | CatExpr::Plus(a)
        | CatExpr::SetToRel(a)
        | CatExpr::Complement(a)
        | CatExpr::Domain(a)
        | CatExpr::Range(a) => referenced(a, out),
    }
}

/// Parse a `.cat` model. Every identifier must be a built-in or bound by an
/// earlier statement — this is what rules out (mutually) recursive
/// definitions.
pub fn parse_cat(source: &str) -> Result<CatModel, CatError> {
    let toks = tokenize(source)?;
    let mut p = Parser { toks, pos: 0 };
    let (name, statements) = p.statements()?;

    let mut bound: Vec<String> = BUILTINS.iter().map(|s| s.to_string()).collect();
    for stmt in &statements {
        let mut used = Vec::new();
        match stmt {
            Stmt::Let(id, e) => {
                referenced(e, &mut used);
                for u in &used {
                    if !bound.contains(u) {
                        return Err(CatError::Undefined(u.clone()));
                    }
                }
                bound.push(id.clone());
            }
            Stmt::With { name, set, order } => {
                referenced(set, &mut used);
                referenced(order, &mut used);
                for u in &used {
                    if !bound.contains(u) {
                        return Err(CatError::Undefined(u.clone()));
                    }
                }
                bound.push(name.clone());
            }
            Stmt::Require(_, e) => {
                referenced(e, &mut used);
                for u in &used {
                    if !bound.contains(u) {
                        return Err(CatError::Undefined(u.clone()));
                    }
                }
            }
            Stmt::Show(ids) => {
                for id in ids {
                    if !bound.contains(id) {
                        return Err(CatError::Undefined(id.clone()));
                    }
                }
            }
        }
    }
    Ok(CatModel { name, statements })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_composition_binding() {
        let m = parse_cat("let r = po ; rf").unwrap();
        assert_eq!(
            m.statements,
            vec![Stmt::Let(
                "r".into(),
                CatExpr::Seq(Box::new(CatExpr::Id("po".into())), Box::new(CatExpr::Id("rf".into()))),
            )]
        );
    }

    #[test]
    fn recursion_is_rejected() {
        assert_eq!(parse_cat("let a = b let b = a").unwrap_err(), CatError::Undefined("b".into()));
        assert_eq!(parse_cat("let a = a").unwrap_err(), CatError::Undefined("a".into()));
    }

    #[test]
    fn star_disambiguation() {
        // postfix closure
        let m = parse_cat("let hb = ( po | rf )*").unwrap();
        assert!(matches!(&m.statements[0], Stmt::Let(_, CatExpr::Star(_))));
        // infix product
        let m = parse_cat("let sw = IW * R").unwrap();
        assert!(matches!(&m.statements[0], Stmt::Let(_, CatExpr::Cross(_, _))));
        // closure immediately before the next statement keyword
        let m = parse_cat("let hb = po* let x = hb").unwrap();
        assert!(matches!(&m.statements[0], Stmt::Let(_, CatExpr::Star(_))));
    }

    #[test]
    fn inverse_and_brackets() {
        let m = parse_cat("irreflexive [W];loc;rf^-1").unwrap();
        match &m.statements[0] {
            Stmt::Require(CheckKind::Irreflexive, e) => {
                // ((⟨[W]⟩ ; loc) ; rf⁻¹)
                let printed = format!("{e:?}");
                assert!(printed.contains("SetToRel"));
                assert!(printed.contains("Inverse"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn complement_of_range() {
        let m = parse_cat("let first = ~range(po) \\ IW").unwrap();
        match &m.statements[0] {
            Stmt::Let(_, CatExpr::Diff(l, _)) => {
                assert!(matches!(&**l, CatExpr::Complement(inner) if matches!(&**inner, CatExpr::Range(_))))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn with_clause_and_name() {
        let m = parse_cat("\"My Model\"\nlet s = V & W\nwith so from linearisations(s, po)\nshow so").unwrap();
        assert_eq!(m.name.as_deref(), Some("My Model"));
        assert!(matches!(&m.statements[1], Stmt::With { name, .. } if name == "so"));
    }

    #[test]
    fn comments_and_errors() {
        parse_cat("(* a comment\n spanning lines *) let r = po").unwrap();
        assert!(matches!(parse_cat("let = po"), Err(CatError::Syntax { .. })));
        assert!(matches!(parse_cat("with so from permutations(V, po)"), Err(CatError::Syntax { .. })));
    }
}
