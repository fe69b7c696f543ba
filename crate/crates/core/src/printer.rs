//! Canonical pretty-printer. Printing is deterministic: equal diagrams print
//! to identical bytes, and printed output reparses to an alpha-equal diagram.
//!
//! Naming policy, applied at print time:
//! - A pi binder whose variable is not referenced in the body prints as an
//!   arrow `A -> B`, whether or not a name is stored.
//! - A referenced pi binder and every lambda binder print with their stored
//!   name; anonymous ones draw from a pool (`x y z u v w` for atomic types,
//!   `F G H K L M` for function types).
//! - Chosen names are kept distinct from everything in scope and from every
//!   constant name in the diagram, appending `'` as needed.

use std::collections::HashSet;

use crate::logrel::{LogicalRelation, LogrelItem};
use crate::morphism::{MorphItem, Morphism};
use crate::syntax::{Binder, Expr};
use crate::theory::{Annotation, Declaration, Diagram, DiagramItem, Theory, TheoryItem};

const ATOM_POOL: [&str; 6] = ["x", "y", "z", "u", "v", "w"];
const FUN_POOL: [&str; 6] = ["F", "G", "H", "K", "L", "M"];

/// Precedence levels for expression printing.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    /// Binders and arrows print bare.
    Expr,
    /// Left of an arrow: applications bare, binders and arrows in parens.
    ArrowLhs,
    /// Application argument: only atoms bare.
    AppArg,
}

struct PrinterState<'a> {
    reserved: &'a HashSet<String>,
    /// Display names per binder, outermost first. Arrow-form binders hold a
    /// placeholder that is never referenced.
    scope: Vec<String>,
}

impl<'a> PrinterState<'a> {
    fn new(reserved: &'a HashSet<String>) -> Self {
        PrinterState { reserved, scope: Vec::new() }
    }

    fn var_name(&self, idx: usize) -> String {
        if idx < self.scope.len() {
            self.scope[self.scope.len() - 1 - idx].clone()
        } else {
            format!("#{idx}")
        }
    }

    fn taken(&self, name: &str) -> bool {
        self.reserved.contains(name) || self.scope.iter().any(|s| s == name)
    }

    fn pick_name(&self, b: &Binder, ty: &Expr) -> String {
        if let Some(stored) = &b.name {
            let mut cand = stored.clone();
            while self.taken(&cand) {
                cand.push('\'');
            }
            return cand;
        }
        let pool: &[&str; 6] =
            if matches!(ty, Expr::Pi(_, _, _)) { &FUN_POOL } else { &ATOM_POOL };
        for p in pool {
            if !self.taken(p) {
                return (*p).to_string();
            }
        }
        for k in 0.. {
            let cand = format!("{}{}", pool[k % pool.len()], 1 + k / pool.len());
            if !self.taken(&cand) {
                return cand;
            }
        }
        unreachable!()
    }

    fn print(&mut self, e: &Expr, prec: Prec) -> String {
        match e {
            Expr::Var(i) => self.var_name(*i),
            Expr::Const(q) => q.name.clone(),
            Expr::TypeSort => "type".to_string(),
            Expr::KindSort => "kind".to_string(),
            Expr::Pi(b, ty, body) => {
                let s = if body.var_occurs(0) {
                    let name = self.pick_name(b, ty);
                    let ty_s = self.print(ty, Prec::Expr);
                    self.scope.push(name.clone());
                    let body_s = self.print(body, Prec::Expr);
                    self.scope.pop();
                    format!("{{{name}: {ty_s}}} {body_s}")
                } else {
                    let lhs = self.print(ty, Prec::ArrowLhs);
                    self.scope.push(String::new());
                    let rhs = self.print(body, Prec::Expr);
                    self.scope.pop();
                    format!("{lhs} -> {rhs}")
                };
                if prec > Prec::Expr {
                    format!("({s})")
                } else {
                    s
                }
            }
            Expr::Lambda(b, ty, body) => {
                let name = self.pick_name(b, ty);
                let ty_s = self.print(ty, Prec::Expr);
                self.scope.push(name.clone());
                let body_s = self.print(body, Prec::Expr);
                self.scope.pop();
                let s = format!("[{name}: {ty_s}] {body_s}");
                if prec > Prec::Expr {
                    format!("({s})")
                } else {
                    s
                }
            }
            Expr::App(_, _) => {
                let (head, args) = e.spine();
                let mut parts = vec![self.print(head, Prec::AppArg)];
                for a in args {
                    parts.push(self.print(a, Prec::AppArg));
                }
                let s = parts.join(" ");
                if prec > Prec::ArrowLhs {
                    format!("({s})")
                } else {
                    s
                }
            }
        }
    }
}

fn reserved_names(d: &Diagram) -> HashSet<String> {
    let mut set = HashSet::new();
    set.insert("type".to_string());
    set.insert("kind".to_string());
    for t in d.theories() {
        for decl in t.decls() {
            set.insert(decl.name.clone());
        }
    }
    set
}

/// Print a closed expression canonically against a diagram's constant names.
pub fn print_expr(d: &Diagram, e: &Expr) -> String {
    let reserved = reserved_names(d);
    PrinterState::new(&reserved).print(e, Prec::Expr)
}

/// Context-free rendering for error messages; out-of-scope variables print
/// as `#i`.
pub fn print_expr_debug(e: &Expr) -> String {
    let reserved = HashSet::new();
    PrinterState::new(&reserved).print(e, Prec::Expr)
}

fn print_decl(out: &mut String, reserved: &HashSet<String>, decl: &Declaration) {
    let mut keeps: Vec<usize> = decl
        .annotations
        .iter()
        .map(|Annotation::KeepParam(i)| *i)
        .collect();
    keeps.sort_unstable();
    keeps.dedup();
    if !keeps.is_empty() {
        out.push_str("  #keep");
        for k in keeps {
            out.push_str(&format!(" {k}"));
        }
        out.push('\n');
    }
    let ty = PrinterState::new(reserved).print(&decl.ty, Prec::Expr);
    match &decl.definiens {
        Some(def) => {
            let def_s = PrinterState::new(reserved).print(def, Prec::Expr);
            out.push_str(&format!("  {} : {} := {}.\n", decl.name, ty, def_s));
        }
        None => out.push_str(&format!("  {} : {}.\n", decl.name, ty)),
    }
}

pub fn print_theory(d: &Diagram, t: &Theory) -> String {
    let reserved = reserved_names(d);
    let mut out = format!("theory {} =\n", t.name);
    for item in &t.items {
        match item {
            TheoryItem::Include(name) => out.push_str(&format!("  include {name}.\n")),
            TheoryItem::Decl(decl) => print_decl(&mut out, &reserved, decl),
        }
    }
    out
}

pub fn print_morphism(d: &Diagram, m: &Morphism) -> String {
    let reserved = reserved_names(d);
    let mut out = format!("morph {} : {} -> {} =\n", m.name, m.domain, m.codomain);
    for item in &m.items {
        match item {
            MorphItem::Include(name) => out.push_str(&format!("  include {name}.\n")),
            MorphItem::Assign { name, body, .. } => {
                let body_s = PrinterState::new(&reserved).print(body, Prec::Expr);
                out.push_str(&format!("  {name} := {body_s}.\n"));
            }
        }
    }
    out
}

pub fn print_logrel(d: &Diagram, r: &LogicalRelation) -> String {
    let reserved = reserved_names(d);
    let mut out = format!("logrel {} on {} =\n", r.name, r.over);
    for item in &r.items {
        match item {
            LogrelItem::Include(name) => out.push_str(&format!("  include {name}.\n")),
            LogrelItem::Case { name, body, .. } => {
                let body_s = PrinterState::new(&reserved).print(body, Prec::Expr);
                out.push_str(&format!("  {name} := {body_s}.\n"));
            }
        }
    }
    out
}

/// Print a whole diagram: blocks in order, separated by blank lines.
pub fn print_diagram(d: &Diagram) -> String {
    let mut blocks = Vec::new();
    for item in &d.items {
        match item {
            DiagramItem::Theory(t) => blocks.push(print_theory(d, t)),
            DiagramItem::Morphism(m) => blocks.push(print_morphism(d, m)),
            DiagramItem::Logrel(r) => blocks.push(print_logrel(d, r)),
        }
    }
    blocks.join("\n")
}
