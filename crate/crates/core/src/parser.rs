//! Concrete syntax:
//!
//! ```text
//! theory Name =
//!   include Other.
//!   #keep 1
//!   c : {a: tp} tm a -> tp.
//!   d : tp -> tp := [a: tp] c a.
//!
//! morph M : Source -> Target =
//!   include Base.
//!   c := expr.
//!
//! logrel R on M =
//!   c := expr.
//! ```
//!
//! `{x: A} B` is a dependent function type, `[x: A] t` an abstraction,
//! `A -> B` the non-dependent arrow, `{a, b: tp} B` multi-binder sugar.
//! `//` starts a line comment. Identifiers may contain letters, digits,
//! underscores and primes. Names are resolved during parsing: binders
//! shadow constants; constants are looked up in the theory's includes and
//! earlier local declarations (for morphism and relation bodies, in the
//! codomain of the morphism).

use std::collections::HashMap;

use crate::error::{Error, Loc, Result};
use crate::logrel::{LogicalRelation, LogrelItem};
use crate::morphism::{MorphItem, Morphism};
use crate::syntax::{shift, Expr, QName};
use crate::theory::{flatten, Annotation, Declaration, Diagram, Theory, TheoryItem};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(usize),
    KwTheory,
    KwMorph,
    KwLogrel,
    KwInclude,
    KwOn,
    KwType,
    KwKind,
    Eq,
    Colon,
    ColonEq,
    Dot,
    Comma,
    Arrow,
    LBrace,
    RBrace,
    LBrack,
    RBrack,
    LParen,
    RParen,
    KeepPragma,
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Num(n) => return write!(f, "`{n}`"),
            Tok::KwTheory => "`theory`",
            Tok::KwMorph => "`morph`",
            Tok::KwLogrel => "`logrel`",
            Tok::KwInclude => "`include`",
            Tok::KwOn => "`on`",
            Tok::KwType => "`type`",
            Tok::KwKind => "`kind`",
            Tok::Eq => "`=`",
            Tok::Colon => "`:`",
            Tok::ColonEq => "`:=`",
            Tok::Dot => "`.`",
            Tok::Comma => "`,`",
            Tok::Arrow => "`->`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LBrack => "`[`",
            Tok::RBrack => "`]`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::KeepPragma => "`#keep`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

fn lex(file: &str, src: &str) -> Result<Vec<(Tok, Loc)>> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = src.chars().peekable();
    let loc = |line: usize, col: usize| Loc { file: file.to_string(), line, col };

    while let Some(&c) = chars.peek() {
        let start = loc(line, col);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '/' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'/') {
                    for c in chars.by_ref() {
                        if c == '\n' {
                            line += 1;
                            col = 1;
                            break;
                        }
                    }
                } else {
                    return Err(Error::parse(
                        &start.file,
                        start.line,
                        start.col,
                        "expected `//` to start a comment",
                    ));
                }
            }
            '#' => {
                chars.next();
                col += 1;
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                if word == "keep" {
                    toks.push((Tok::KeepPragma, start));
                } else {
                    return Err(Error::parse(
                        &start.file,
                        start.line,
                        start.col,
                        format!("unknown pragma `#{word}`"),
                    ));
                }
            }
            '-' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'>') {
                    chars.next();
                    col += 1;
                    toks.push((Tok::Arrow, start));
                } else {
                    return Err(Error::parse(
                        &start.file,
                        start.line,
                        start.col,
                        "expected `->`",
                    ));
                }
            }
            ':' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'=') {
                    chars.next();
                    col += 1;
                    toks.push((Tok::ColonEq, start));
                } else {
                    toks.push((Tok::Colon, start));
                }
            }
            '=' => {
                chars.next();
                col += 1;
                toks.push((Tok::Eq, start));
            }
            '.' => {
                chars.next();
                col += 1;
                toks.push((Tok::Dot, start));
            }
            ',' => {
                chars.next();
                col += 1;
                toks.push((Tok::Comma, start));
            }
            '{' => {
                chars.next();
                col += 1;
                toks.push((Tok::LBrace, start));
            }
            '}' => {
                chars.next();
                col += 1;
                toks.push((Tok::RBrace, start));
            }
            '[' => {
                chars.next();
                col += 1;
                toks.push((Tok::LBrack, start));
            }
            ']' => {
                chars.next();
                col += 1;
                toks.push((Tok::RBrack, start));
            }
            '(' => {
                chars.next();
                col += 1;
                toks.push((Tok::LParen, start));
            }
            ')' => {
                chars.next();
                col += 1;
                toks.push((Tok::RParen, start));
            }
            c if c.is_ascii_digit() => {
                let mut n = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        n.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let v: usize = n.parse().map_err(|_| {
                    Error::parse(&start.file, start.line, start.col, "number out of range")
                })?;
                toks.push((Tok::Num(v), start));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                        s.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let tok = match s.as_str() {
                    "theory" => Tok::KwTheory,
                    "morph" => Tok::KwMorph,
                    "logrel" => Tok::KwLogrel,
                    "include" => Tok::KwInclude,
                    "on" => Tok::KwOn,
                    "type" => Tok::KwType,
                    "kind" => Tok::KwKind,
                    _ => Tok::Ident(s),
                };
                toks.push((tok, start));
            }
            other => {
                return Err(Error::parse(
                    &start.file,
                    start.line,
                    start.col,
                    format!("unexpected character `{other}`"),
                ));
            }
        }
    }
    toks.push((Tok::Eof, loc(line, col)));
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, Loc)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].1.clone()
    }

    fn next(&mut self) -> (Tok, Loc) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let l = self.loc();
        Error::parse(&l.file, l.line, l.col, msg)
    }

    fn expect(&mut self, want: Tok) -> Result<Loc> {
        if *self.peek() == want {
            Ok(self.next().1)
        } else {
            Err(self.err(format!("expected {want}, found {}", self.peek())))
        }
    }

    fn ident(&mut self) -> Result<(String, Loc)> {
        match self.next() {
            (Tok::Ident(s), l) => Ok((s, l)),
            (other, l) => Err(Error::parse(
                &l.file,
                l.line,
                l.col,
                format!("expected an identifier, found {other}"),
            )),
        }
    }

    fn parse_expr(
        &mut self,
        scope: &mut Vec<String>,
        visible: &HashMap<String, QName>,
    ) -> Result<Expr> {
        match self.peek() {
            Tok::LBrace => self.parse_binder(Tok::LBrace, Tok::RBrace, scope, visible),
            Tok::LBrack => self.parse_binder(Tok::LBrack, Tok::RBrack, scope, visible),
            _ => self.parse_arrow(scope, visible),
        }
    }

    fn parse_binder(
        &mut self,
        open: Tok,
        close: Tok,
        scope: &mut Vec<String>,
        visible: &HashMap<String, QName>,
    ) -> Result<Expr> {
        let is_pi = open == Tok::LBrace;
        self.expect(open)?;
        let mut names = vec![self.ident()?.0];
        while *self.peek() == Tok::Comma {
            self.next();
            names.push(self.ident()?.0);
        }
        self.expect(Tok::Colon)?;
        let ty = self.parse_expr(scope, visible)?;
        self.expect(close)?;
        for name in &names {
            scope.push(name.clone());
        }
        let body = self.parse_expr(scope, visible)?;
        for _ in &names {
            scope.pop();
        }
        let mut out = body;
        for (k, name) in names.iter().enumerate().rev() {
            let bty = shift(&ty, k as isize);
            out = if is_pi {
                Expr::pi(name.clone(), bty, out)
            } else {
                Expr::lam(name.clone(), bty, out)
            };
        }
        Ok(out)
    }

    fn parse_arrow(
        &mut self,
        scope: &mut Vec<String>,
        visible: &HashMap<String, QName>,
    ) -> Result<Expr> {
        let lhs = self.parse_app(scope, visible)?;
        if *self.peek() == Tok::Arrow {
            self.next();
            // the arrow body sits under an anonymous binder: a placeholder in
            // scope keeps the indices of everything outside one step away
            scope.push(String::new());
            let rhs = self.parse_expr(scope, visible)?;
            scope.pop();
            Ok(Expr::arrow(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_) | Tok::KwType | Tok::KwKind | Tok::LParen
        )
    }

    fn parse_app(
        &mut self,
        scope: &mut Vec<String>,
        visible: &HashMap<String, QName>,
    ) -> Result<Expr> {
        let mut out = self.parse_atom(scope, visible)?;
        while self.starts_atom() {
            let arg = self.parse_atom(scope, visible)?;
            out = Expr::app(out, arg);
        }
        Ok(out)
    }

    fn parse_atom(
        &mut self,
        scope: &mut Vec<String>,
        visible: &HashMap<String, QName>,
    ) -> Result<Expr> {
        match self.next() {
            (Tok::KwType, _) => Ok(Expr::TypeSort),
            (Tok::KwKind, _) => Ok(Expr::KindSort),
            (Tok::LParen, _) => {
                let e = self.parse_expr(scope, visible)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            (Tok::Ident(name), l) => {
                if let Some(i) = scope.iter().rev().position(|s| *s == name) {
                    return Ok(Expr::Var(i));
                }
                if let Some(q) = visible.get(&name) {
                    return Ok(Expr::Const(q.clone()));
                }
                Err(Error::parse(
                    &l.file,
                    l.line,
                    l.col,
                    format!("unknown identifier `{name}`"),
                ))
            }
            (other, l) => Err(Error::parse(
                &l.file,
                l.line,
                l.col,
                format!("expected an expression, found {other}"),
            )),
        }
    }

    fn parse_theory(&mut self, diagram: &Diagram) -> Result<Theory> {
        self.expect(Tok::KwTheory)?;
        let (name, _) = self.ident()?;
        self.expect(Tok::Eq)?;
        let mut theory = Theory::new(name.clone());
        let mut visible: HashMap<String, QName> = HashMap::new();
        let mut origin: HashMap<String, String> = HashMap::new();

        loop {
            match self.peek().clone() {
                Tok::KwInclude => {
                    self.next();
                    let (inc, l) = self.ident()?;
                    self.expect(Tok::Dot)?;
                    if diagram.theory(&inc).is_none() {
                        return Err(Error::parse(
                            &l.file,
                            l.line,
                            l.col,
                            format!("include of unknown theory `{inc}`"),
                        ));
                    }
                    let flat = flatten(diagram, &inc)?;
                    for entry in &flat.entries {
                        let short = entry.decl.name.clone();
                        let q = entry.qname();
                        match visible.get(&short) {
                            Some(prev) if *prev != q => {
                                return Err(Error::NameClash {
                                    context: format!("theory `{name}`"),
                                    name: short.clone(),
                                    first: origin
                                        .get(&short)
                                        .cloned()
                                        .unwrap_or_else(|| prev.theory.clone()),
                                    second: q.theory.clone(),
                                });
                            }
                            _ => {
                                origin.insert(short.clone(), q.theory.clone());
                                visible.insert(short, q);
                            }
                        }
                    }
                    theory.items.push(TheoryItem::Include(inc));
                }
                Tok::KeepPragma | Tok::Ident(_) => {
                    let mut annotations = Vec::new();
                    while *self.peek() == Tok::KeepPragma {
                        self.next();
                        let mut got = false;
                        while let Tok::Num(n) = self.peek().clone() {
                            self.next();
                            annotations.push(Annotation::KeepParam(n));
                            got = true;
                        }
                        if !got {
                            return Err(self.err("`#keep` expects one or more argument positions"));
                        }
                    }
                    let (cname, l) = self.ident()?;
                    if visible.contains_key(&cname) {
                        return Err(Error::NameClash {
                            context: format!("theory `{name}`"),
                            name: cname.clone(),
                            first: origin
                                .get(&cname)
                                .cloned()
                                .unwrap_or_else(|| name.clone()),
                            second: name.clone(),
                        });
                    }
                    self.expect(Tok::Colon).map_err(|_| {
                        Error::parse(
                            &l.file,
                            l.line,
                            l.col,
                            format!("declaration of `{cname}` must continue with `:`"),
                        )
                    })?;
                    let mut scope = Vec::new();
                    let ty = self.parse_expr(&mut scope, &visible)?;
                    let definiens = if *self.peek() == Tok::ColonEq {
                        self.next();
                        Some(self.parse_expr(&mut scope, &visible)?)
                    } else {
                        None
                    };
                    self.expect(Tok::Dot)?;
                    let q = QName::new(name.clone(), cname.clone());
                    origin.insert(cname.clone(), name.clone());
                    visible.insert(cname.clone(), q);
                    theory.items.push(TheoryItem::Decl(Declaration {
                        name: cname,
                        ty,
                        definiens,
                        annotations,
                        loc: Some(l),
                    }));
                }
                _ => break,
            }
        }
        Ok(theory)
    }

    fn parse_assign_items<F>(&mut self, visible: &HashMap<String, QName>, mut push: F) -> Result<()>
    where
        F: FnMut(&mut Self, Option<String>, Option<(String, Expr, Loc)>) -> Result<()>,
    {
        loop {
            match self.peek().clone() {
                Tok::KwInclude => {
                    self.next();
                    let (inc, _) = self.ident()?;
                    self.expect(Tok::Dot)?;
                    push(self, Some(inc), None)?;
                }
                Tok::Ident(lhs) => {
                    let (_, l) = self.ident()?;
                    self.expect(Tok::ColonEq)?;
                    let mut scope = Vec::new();
                    let body = self.parse_expr(&mut scope, visible)?;
                    self.expect(Tok::Dot)?;
                    push(self, None, Some((lhs, body, l)))?;
                }
                _ => break,
            }
        }
        Ok(())
    }

    fn parse_morphism(&mut self, diagram: &Diagram) -> Result<Morphism> {
        self.expect(Tok::KwMorph)?;
        let (name, _) = self.ident()?;
        self.expect(Tok::Colon)?;
        let (dom, dl) = self.ident()?;
        self.expect(Tok::Arrow)?;
        let (cod, cl) = self.ident()?;
        self.expect(Tok::Eq)?;
        if diagram.theory(&dom).is_none() {
            return Err(Error::parse(
                &dl.file,
                dl.line,
                dl.col,
                format!("unknown theory `{dom}`"),
            ));
        }
        if diagram.theory(&cod).is_none() {
            return Err(Error::parse(
                &cl.file,
                cl.line,
                cl.col,
                format!("unknown theory `{cod}`"),
            ));
        }
        let visible = visible_map(diagram, &cod)?;
        let mut m = Morphism::new(name, dom, cod);
        self.parse_assign_items(&visible, |_, inc, assign| {
            if let Some(inc) = inc {
                m.items.push(MorphItem::Include(inc));
            }
            if let Some((lhs, body, loc)) = assign {
                m.items.push(MorphItem::Assign { name: lhs, body, loc: Some(loc) });
            }
            Ok(())
        })?;
        Ok(m)
    }

    fn parse_logrel(&mut self, diagram: &Diagram) -> Result<LogicalRelation> {
        self.expect(Tok::KwLogrel)?;
        let (name, _) = self.ident()?;
        self.expect(Tok::KwOn)?;
        let (over, ol) = self.ident()?;
        self.expect(Tok::Eq)?;
        let Some(m) = diagram.morphism(&over) else {
            return Err(Error::parse(
                &ol.file,
                ol.line,
                ol.col,
                format!("unknown morphism `{over}`"),
            ));
        };
        let visible = visible_map(diagram, &m.codomain.clone())?;
        let mut r = LogicalRelation::new(name, over);
        self.parse_assign_items(&visible, |_, inc, assign| {
            if let Some(inc) = inc {
                r.items.push(LogrelItem::Include(inc));
            }
            if let Some((lhs, body, loc)) = assign {
                r.items.push(LogrelItem::Case { name: lhs, body, loc: Some(loc) });
            }
            Ok(())
        })?;
        Ok(r)
    }
}

fn visible_map(diagram: &Diagram, theory: &str) -> Result<HashMap<String, QName>> {
    let flat = flatten(diagram, theory)?;
    Ok(flat
        .entries
        .iter()
        .map(|e| (e.decl.name.clone(), e.qname()))
        .collect())
}

/// Parse the blocks of `src` and append them to `diagram` in order. Names in
/// later blocks may refer to anything parsed earlier (including blocks from
/// previously parsed files).
pub fn parse_file_into(diagram: &mut Diagram, file: &str, src: &str) -> Result<()> {
    let toks = lex(file, src)?;
    let mut p = Parser { toks, pos: 0 };
    loop {
        match p.peek() {
            Tok::KwTheory => {
                let t = p.parse_theory(diagram)?;
                diagram.push_theory(t)?;
            }
            Tok::KwMorph => {
                let m = p.parse_morphism(diagram)?;
                diagram.push_morphism(m)?;
            }
            Tok::KwLogrel => {
                let r = p.parse_logrel(diagram)?;
                diagram.push_logrel(r)?;
            }
            Tok::Eof => return Ok(()),
            other => {
                return Err(p.err(format!(
                    "expected `theory`, `morph` or `logrel`, found {other}"
                )))
            }
        }
    }
}

/// Parse a standalone file into a fresh diagram.
pub fn parse_diagram(file: &str, src: &str) -> Result<Diagram> {
    let mut d = Diagram::new();
    parse_file_into(&mut d, file, src)?;
    Ok(d)
}
