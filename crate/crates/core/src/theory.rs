//! Theories, diagrams, include resolution and well-formedness checking.
//!
//! A theory is an ordered list of includes and constant declarations. A
//! diagram is an ordered collection of theories, morphisms and logical
//! relations; order matters, since every item may refer only to items that
//! appear before it.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Loc, Result};
use crate::kernel;
use crate::logrel::{check_logrel, LogicalRelation};
use crate::morphism::{check_morphism, Morphism};
use crate::syntax::{Context, Expr, QName};

/// Per-declaration annotation, written as a `#keep i` pragma line in concrete
/// syntax. Argument position indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Annotation {
    /// Protect the i-th argument position from parameter removal.
    KeepParam(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declaration {
    pub name: String,
    pub ty: Expr,
    pub definiens: Option<Expr>,
    pub annotations: Vec<Annotation>,
    pub loc: Option<Loc>,
}

impl Declaration {
    pub fn new(name: impl Into<String>, ty: Expr) -> Self {
        Declaration { name: name.into(), ty, definiens: None, annotations: Vec::new(), loc: None }
    }

    pub fn with_definiens(mut self, t: Expr) -> Self {
        self.definiens = Some(t);
        self
    }

    pub fn keep(mut self, index: usize) -> Self {
        self.annotations.push(Annotation::KeepParam(index));
        self
    }

    pub fn qname(&self, origin: &str) -> QName {
        QName::new(origin, self.name.clone())
    }

    pub fn kept_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.annotations.iter().map(|Annotation::KeepParam(i)| *i)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TheoryItem {
    Include(String),
    Decl(Declaration),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theory {
    pub name: String,
    pub items: Vec<TheoryItem>,
}

impl Theory {
    pub fn new(name: impl Into<String>) -> Self {
        Theory { name: name.into(), items: Vec::new() }
    }

    pub fn include(mut self, t: impl Into<String>) -> Self {
        self.items.push(TheoryItem::Include(t.into()));
        self
    }

    pub fn decl(mut self, d: Declaration) -> Self {
        self.items.push(TheoryItem::Decl(d));
        self
    }

    /// Directly included theory names, in order.
    pub fn includes(&self) -> impl Iterator<Item = &str> {
        self.items.iter().filter_map(|i| match i {
            TheoryItem::Include(s) => Some(s.as_str()),
            TheoryItem::Decl(_) => None,
        })
    }

    /// Locally declared constants, in order.
    pub fn decls(&self) -> impl Iterator<Item = &Declaration> {
        self.items.iter().filter_map(|i| match i {
            TheoryItem::Decl(d) => Some(d),
            TheoryItem::Include(_) => None,
        })
    }

    pub fn local(&self, name: &str) -> Option<&Declaration> {
        self.decls().find(|d| d.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagramItem {
    Theory(Theory),
    Morphism(Morphism),
    Logrel(LogicalRelation),
}

impl DiagramItem {
    pub fn name(&self) -> &str {
        match self {
            DiagramItem::Theory(t) => &t.name,
            DiagramItem::Morphism(m) => &m.name,
            DiagramItem::Logrel(r) => &r.name,
        }
    }
}

/// An ordered collection of theories, morphisms and logical relations sharing
/// one top-level namespace.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagram {
    pub items: Vec<DiagramItem>,
}

impl Diagram {
    pub fn new() -> Self {
        Diagram::default()
    }

    pub fn theory(&self, name: &str) -> Option<&Theory> {
        self.items.iter().find_map(|i| match i {
            DiagramItem::Theory(t) if t.name == name => Some(t),
            _ => None,
        })
    }

    pub fn morphism(&self, name: &str) -> Option<&Morphism> {
        self.items.iter().find_map(|i| match i {
            DiagramItem::Morphism(m) if m.name == name => Some(m),
            _ => None,
        })
    }

    pub fn logrel(&self, name: &str) -> Option<&LogicalRelation> {
        self.items.iter().find_map(|i| match i {
            DiagramItem::Logrel(r) if r.name == name => Some(r),
            _ => None,
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.items.iter().any(|i| i.name() == name)
    }

    /// Append an item, rejecting duplicate top-level names.
    pub fn push(&mut self, item: DiagramItem) -> Result<()> {
        if self.contains(item.name()) {
            return Err(Error::DuplicateTopLevel(item.name().to_string()));
        }
        self.items.push(item);
        Ok(())
    }

    pub fn push_theory(&mut self, t: Theory) -> Result<()> {
        self.push(DiagramItem::Theory(t))
    }

    pub fn push_morphism(&mut self, m: Morphism) -> Result<()> {
        self.push(DiagramItem::Morphism(m))
    }

    pub fn push_logrel(&mut self, r: LogicalRelation) -> Result<()> {
        self.push(DiagramItem::Logrel(r))
    }

    /// Swap in a new version of an existing theory, keeping its position.
    pub fn replace_theory(&mut self, t: Theory) -> Result<()> {
        for item in self.items.iter_mut() {
            if let DiagramItem::Theory(old) = item {
                if old.name == t.name {
                    *old = t;
                    return Ok(());
                }
            }
        }
        Err(Error::UnknownTheory(t.name))
    }

    /// Swap in a new version of an existing morphism, keeping its position.
    pub fn replace_morphism(&mut self, m: Morphism) -> Result<()> {
        for item in self.items.iter_mut() {
            if let DiagramItem::Morphism(old) = item {
                if old.name == m.name {
                    *old = m;
                    return Ok(());
                }
            }
        }
        Err(Error::UnknownMorphism(m.name))
    }

    pub fn theories(&self) -> impl Iterator<Item = &Theory> {
        self.items.iter().filter_map(|i| match i {
            DiagramItem::Theory(t) => Some(t),
            _ => None,
        })
    }

    pub fn morphisms(&self) -> impl Iterator<Item = &Morphism> {
        self.items.iter().filter_map(|i| match i {
            DiagramItem::Morphism(m) => Some(m),
            _ => None,
        })
    }

    /// Names of all theories transitively included by `theory`, including
    /// `theory` itself.
    pub fn included_closure(&self, theory: &str) -> Result<HashSet<String>> {
        let mut out = HashSet::new();
        let mut stack = vec![theory.to_string()];
        while let Some(name) = stack.pop() {
            if !out.insert(name.clone()) {
                continue;
            }
            let t = self.theory(&name).ok_or_else(|| Error::UnknownTheory(name.clone()))?;
            for inc in t.includes() {
                stack.push(inc.to_string());
            }
        }
        Ok(out)
    }

    /// Does `theory` include `target`, directly or transitively (or is it
    /// `target` itself)?
    pub fn includes_transitively(&self, theory: &str, target: &str) -> bool {
        self.included_closure(theory).map(|c| c.contains(target)).unwrap_or(false)
    }
}

/// One entry of a flattened theory: the declaring theory plus the declaration.
#[derive(Debug, Clone)]
pub struct FlatEntry<'a> {
    pub origin: &'a str,
    pub decl: &'a Declaration,
}

impl FlatEntry<'_> {
    pub fn qname(&self) -> QName {
        self.decl.qname(self.origin)
    }
}

/// Flattened view of a theory: every visible declaration in declaration
/// order, includes resolved and deduplicated.
#[derive(Debug, Clone)]
pub struct FlatTheory<'a> {
    pub name: String,
    pub entries: Vec<FlatEntry<'a>>,
    by_qname: HashMap<QName, usize>,
    by_short: HashMap<&'a str, usize>,
}

impl<'a> FlatTheory<'a> {
    pub fn position(&self, q: &QName) -> Option<usize> {
        self.by_qname.get(q).copied()
    }

    pub fn get(&self, q: &QName) -> Option<&FlatEntry<'a>> {
        self.position(q).map(|i| &self.entries[i])
    }

    pub fn get_short(&self, name: &str) -> Option<&FlatEntry<'a>> {
        self.by_short.get(name).map(|i| &self.entries[*i])
    }

    pub fn contains(&self, q: &QName) -> bool {
        self.by_qname.contains_key(q)
    }
}

/// Resolve all includes of `theory` into a flat declaration list. Diamond
/// includes contribute once; short-name clashes across distinct origins are
/// rejected.
pub fn flatten<'a>(diagram: &'a Diagram, theory: &str) -> Result<FlatTheory<'a>> {
    let mut flat = FlatTheory {
        name: theory.to_string(),
        entries: Vec::new(),
        by_qname: HashMap::new(),
        by_short: HashMap::new(),
    };
    let mut visited: HashSet<&str> = HashSet::new();
    flatten_into(diagram, theory, &mut flat, &mut visited)?;
    Ok(flat)
}

fn flatten_into<'a>(
    diagram: &'a Diagram,
    theory: &str,
    flat: &mut FlatTheory<'a>,
    visited: &mut HashSet<&'a str>,
) -> Result<()> {
    let t = diagram.theory(theory).ok_or_else(|| Error::UnknownTheory(theory.to_string()))?;
    if !visited.insert(&t.name) {
        return Ok(());
    }
    for item in &t.items {
        match item {
            TheoryItem::Include(inc) => flatten_into(diagram, inc, flat, visited)?,
            TheoryItem::Decl(decl) => {
                if let Some(prev) = flat.by_short.get(decl.name.as_str()) {
                    return Err(Error::NameClash {
                        context: format!("flattening theory `{}`", flat.name),
                        name: decl.name.clone(),
                        first: flat.entries[*prev].origin.to_string(),
                        second: t.name.clone(),
                    });
                }
                let idx = flat.entries.len();
                flat.by_qname.insert(decl.qname(&t.name), idx);
                flat.by_short.insert(decl.name.as_str(), idx);
                flat.entries.push(FlatEntry { origin: &t.name, decl });
            }
        }
    }
    Ok(())
}

/// Constant lookup environment used by the kernel: a flattened theory with a
/// visibility limit, so a declaration can only see what precedes it.
pub struct Env<'a> {
    pub flat: &'a FlatTheory<'a>,
    pub limit: usize,
}

impl<'a> Env<'a> {
    /// Environment seeing the whole flattened theory.
    pub fn full(flat: &'a FlatTheory<'a>) -> Self {
        Env { flat, limit: flat.entries.len() }
    }

    /// Environment seeing only the first `limit` entries.
    pub fn prefix(flat: &'a FlatTheory<'a>, limit: usize) -> Self {
        Env { flat, limit }
    }

    pub fn lookup(&self, q: &QName) -> Option<&'a Declaration> {
        match self.flat.position(q) {
            Some(i) if i < self.limit => Some(self.flat.entries[i].decl),
            _ => None,
        }
    }
}

/// Check every local declaration of `theory`: its type must classify to
/// `type` or a kind, its definiens (if any) must check against the type, and
/// `#keep` annotations must be in range. Included theories are assumed to
/// have been checked already (diagrams are checked in order).
pub fn check_theory(diagram: &Diagram, theory: &str) -> Result<()> {
    let flat = flatten(diagram, theory)?;
    let t = diagram.theory(theory).ok_or_else(|| Error::UnknownTheory(theory.to_string()))?;
    for decl in t.decls() {
        let q = decl.qname(theory);
        let pos = flat
            .position(&q)
            .expect("local declaration must appear in its own flattened theory");
        let env = Env::prefix(&flat, pos);
        let ctx = Context::new();
        let context = format!("theory `{}`, declaration `{}`", theory, decl.name);

        let sort = kernel::infer_type(&env, &ctx, &decl.ty)?;
        let sort = kernel::normalize_expr(&env, &sort, true)?;
        match sort {
            Expr::TypeSort | Expr::KindSort => {}
            other => {
                return Err(Error::NotAClassifier {
                    context,
                    found: crate::printer::print_expr_debug(&other),
                })
            }
        }

        if let Some(def) = &decl.definiens {
            kernel::check_type(&env, &ctx, def, &decl.ty)?;
        }

        let arity = kernel::normalize_expr(&env, &decl.ty, false)?.count_pis();
        for kept in decl.kept_positions() {
            if kept == 0 || kept > arity {
                return Err(Error::KeepOutOfRange { constant: q.clone(), index: kept, arity });
            }
        }
    }
    Ok(())
}

/// Check an entire diagram in order: theories, morphisms and logical
/// relations.
pub fn check_diagram(diagram: &Diagram) -> Result<()> {
    for item in &diagram.items {
        match item {
            DiagramItem::Theory(t) => check_theory(diagram, &t.name)?,
            DiagramItem::Morphism(m) => check_morphism(diagram, &m.name)?,
            DiagramItem::Logrel(r) => check_logrel(diagram, &r.name)?,
        }
    }
    Ok(())
}

/// Check that every entry of a context is well-formed over `env`: names
/// distinct, each type classifying to the sort `type`.
pub fn check_context(env: &Env, ctx: &Context) -> Result<()> {
    let mut seen: HashSet<&str> = HashSet::new();
    for (i, entry) in ctx.entries.iter().enumerate() {
        if !seen.insert(entry.name.as_str()) {
            return Err(Error::Other(format!(
                "context binds `{}` twice",
                entry.name
            )));
        }
        let prefix = Context { entries: ctx.entries[..i].to_vec() };
        let sort = kernel::infer_type(env, &prefix, &entry.ty)?;
        let sort = kernel::normalize_expr(env, &sort, true)?;
        if sort != Expr::TypeSort {
            return Err(Error::BinderNotAType {
                context: format!("context entry `{}`", entry.name),
                found: crate::printer::print_expr_debug(&sort),
            });
        }
    }
    Ok(())
}
