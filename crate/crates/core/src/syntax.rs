//! Expression syntax: dependently typed lambda calculus terms with de Bruijn
//! indices for bound variables and qualified names for constants.
//!
//! Binder names are retained for printing only; all comparisons that matter
//! (alpha equality, conversion) ignore them.

use std::fmt;

/// Qualified constant name: the theory that declares it plus the short name.
///
/// Short names are unique within any flattened theory (clashes are rejected),
/// so printers emit just the short name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QName {
    pub theory: String,
    pub name: String,
}

impl QName {
    pub fn new(theory: impl Into<String>, name: impl Into<String>) -> Self {
        QName { theory: theory.into(), name: name.into() }
    }
}

impl fmt::Display for QName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.theory, self.name)
    }
}

/// A binder. `name == None` marks an anonymous binder, as introduced by the
/// arrow sugar `A -> B`; anonymous pis print back as arrows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binder {
    pub name: Option<String>,
}

impl Binder {
    pub fn named(name: impl Into<String>) -> Self {
        Binder { name: Some(name.into()) }
    }

    pub fn anon() -> Self {
        Binder { name: None }
    }
}

/// Expressions. Bound variables are de Bruijn indices (innermost binder = 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    /// Reference to a declared constant.
    Const(QName),
    /// Bound variable (de Bruijn index).
    Var(usize),
    /// The sort of types.
    TypeSort,
    /// The classifier of the sort of types; only legal as the inferred
    /// classifier of `TypeSort` and of type-family types.
    KindSort,
    Pi(Binder, Box<Expr>, Box<Expr>),
    Lambda(Binder, Box<Expr>, Box<Expr>),
    App(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn cnst(q: QName) -> Expr {
        Expr::Const(q)
    }

    pub fn pi(name: impl Into<String>, ty: Expr, body: Expr) -> Expr {
        Expr::Pi(Binder::named(name), Box::new(ty), Box::new(body))
    }

    pub fn arrow(ty: Expr, body: Expr) -> Expr {
        Expr::Pi(Binder::anon(), Box::new(ty), Box::new(body))
    }

    pub fn lam(name: impl Into<String>, ty: Expr, body: Expr) -> Expr {
        Expr::Lambda(Binder::named(name), Box::new(ty), Box::new(body))
    }

    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::App(Box::new(f), Box::new(a))
    }

    /// Left-associated application of `head` to `args`.
    pub fn apps(head: Expr, args: impl IntoIterator<Item = Expr>) -> Expr {
        args.into_iter().fold(head, Expr::app)
    }

    /// Decompose into spine head and arguments: `f a b c` gives `(f, [a, b, c])`.
    pub fn spine(&self) -> (&Expr, Vec<&Expr>) {
        let mut head = self;
        let mut args = Vec::new();
        while let Expr::App(f, a) = head {
            args.push(a.as_ref());
            head = f;
        }
        args.reverse();
        (head, args)
    }

    /// Decompose a leading Pi telescope: `{x: A} {y: B} C` gives
    /// `([(x, A), (y, B)], C)`.
    pub fn pi_telescope(&self) -> (Vec<(&Binder, &Expr)>, &Expr) {
        let mut bindings = Vec::new();
        let mut body = self;
        while let Expr::Pi(b, ty, rest) = body {
            bindings.push((b, ty.as_ref()));
            body = rest;
        }
        (bindings, body)
    }

    /// Decompose a leading lambda telescope.
    pub fn lambda_telescope(&self) -> (Vec<(&Binder, &Expr)>, &Expr) {
        let mut bindings = Vec::new();
        let mut body = self;
        while let Expr::Lambda(b, ty, rest) = body {
            bindings.push((b, ty.as_ref()));
            body = rest;
        }
        (bindings, body)
    }

    /// Number of leading Pi binders.
    pub fn count_pis(&self) -> usize {
        self.pi_telescope().0.len()
    }

    /// Does the variable with index `index` (counted at the root of `self`)
    /// occur free in `self`?
    pub fn var_occurs(&self, index: usize) -> bool {
        match self {
            Expr::Var(i) => *i == index,
            Expr::Const(_) | Expr::TypeSort | Expr::KindSort => false,
            Expr::Pi(_, ty, body) | Expr::Lambda(_, ty, body) => {
                ty.var_occurs(index) || body.var_occurs(index + 1)
            }
            Expr::App(f, a) => f.var_occurs(index) || a.var_occurs(index),
        }
    }

    /// Visit every constant occurrence.
    pub fn visit_constants<'a>(&'a self, f: &mut impl FnMut(&'a QName)) {
        match self {
            Expr::Const(q) => f(q),
            Expr::Var(_) | Expr::TypeSort | Expr::KindSort => {}
            Expr::Pi(_, ty, body) | Expr::Lambda(_, ty, body) => {
                ty.visit_constants(f);
                body.visit_constants(f);
            }
            Expr::App(g, a) => {
                g.visit_constants(f);
                a.visit_constants(f);
            }
        }
    }

    pub fn mentions_constant(&self, q: &QName) -> bool {
        let mut found = false;
        self.visit_constants(&mut |c| {
            if c == q {
                found = true;
            }
        });
        found
    }
}

/// Shift all free variables with index `>= cutoff` by `amount`.
pub fn shift_above(e: &Expr, cutoff: usize, amount: isize) -> Expr {
    match e {
        Expr::Var(i) => {
            if *i >= cutoff {
                let j = *i as isize + amount;
                debug_assert!(j >= 0, "variable shifted below zero");
                Expr::Var(j as usize)
            } else {
                Expr::Var(*i)
            }
        }
        Expr::Const(_) | Expr::TypeSort | Expr::KindSort => e.clone(),
        Expr::Pi(b, ty, body) => Expr::Pi(
            b.clone(),
            Box::new(shift_above(ty, cutoff, amount)),
            Box::new(shift_above(body, cutoff + 1, amount)),
        ),
        Expr::Lambda(b, ty, body) => Expr::Lambda(
            b.clone(),
            Box::new(shift_above(ty, cutoff, amount)),
            Box::new(shift_above(body, cutoff + 1, amount)),
        ),
        Expr::App(f, a) => Expr::app(shift_above(f, cutoff, amount), shift_above(a, cutoff, amount)),
    }
}

/// Shift all free variables by `amount`.
pub fn shift(e: &Expr, amount: isize) -> Expr {
    shift_above(e, 0, amount)
}

fn subst_at(e: &Expr, depth: usize, value: &Expr) -> Expr {
    match e {
        Expr::Var(i) => {
            if *i == depth {
                shift(value, depth as isize)
            } else if *i > depth {
                Expr::Var(*i - 1)
            } else {
                Expr::Var(*i)
            }
        }
        Expr::Const(_) | Expr::TypeSort | Expr::KindSort => e.clone(),
        Expr::Pi(b, ty, body) => Expr::Pi(
            b.clone(),
            Box::new(subst_at(ty, depth, value)),
            Box::new(subst_at(body, depth + 1, value)),
        ),
        Expr::Lambda(b, ty, body) => Expr::Lambda(
            b.clone(),
            Box::new(subst_at(ty, depth, value)),
            Box::new(subst_at(body, depth + 1, value)),
        ),
        Expr::App(f, a) => Expr::app(subst_at(f, depth, value), subst_at(a, depth, value)),
    }
}

/// Substitute `value` for the outermost bound variable of `body` (the variable
/// a binder directly above `body` would bind). Capture-avoiding by
/// construction; remaining free variables are renumbered down by one.
pub fn substitute(body: &Expr, value: &Expr) -> Expr {
    subst_at(body, 0, value)
}

/// Alpha equality: structural equality ignoring binder names and anonymity.
pub fn alpha_equal(a: &Expr, b: &Expr) -> bool {
    match (a, b) {
        (Expr::Const(p), Expr::Const(q)) => p == q,
        (Expr::Var(i), Expr::Var(j)) => i == j,
        (Expr::TypeSort, Expr::TypeSort) => true,
        (Expr::KindSort, Expr::KindSort) => true,
        (Expr::Pi(_, ty1, b1), Expr::Pi(_, ty2, b2))
        | (Expr::Lambda(_, ty1, b1), Expr::Lambda(_, ty2, b2)) => {
            alpha_equal(ty1, ty2) && alpha_equal(b1, b2)
        }
        (Expr::App(f1, a1), Expr::App(f2, a2)) => alpha_equal(f1, f2) && alpha_equal(a1, a2),
        _ => false,
    }
}

/// A typing context: ordered variable bindings, innermost last. The last entry
/// is `Var(0)` from the point of view of an expression used under the context.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Context {
    pub entries: Vec<CtxEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CtxEntry {
    pub name: String,
    pub ty: Expr,
}

impl Context {
    pub fn new() -> Self {
        Context::default()
    }

    pub fn push(&mut self, name: impl Into<String>, ty: Expr) {
        self.entries.push(CtxEntry { name: name.into(), ty });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Type of `Var(index)`, shifted so that it is valid at the point of use
    /// (under the whole context).
    pub fn lookup(&self, index: usize) -> Option<Expr> {
        if index >= self.entries.len() {
            return None;
        }
        let pos = self.entries.len() - 1 - index;
        Some(shift(&self.entries[pos].ty, index as isize + 1))
    }
}
