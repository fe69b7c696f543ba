//! Theory morphisms: homomorphic translation of expressions, morphism
//! checking, and pushout of theories and diagrams along a (possibly partial)
//! morphism.
//!
//! A morphism from S to T assigns a T-expression to every (or, if partial,
//! some) constant of S and extends homomorphically to all expressions.
//! `include X.` inside a morphism body is sugar for the identity on the
//! theory X (when X names a theory visible in both domain and codomain) or
//! inlines the assignments of another morphism (when X names a morphism).

use std::collections::HashMap;

use crate::error::{Error, Loc, Result};
use crate::kernel;
use crate::syntax::{Context, Expr, QName};
use crate::theory::{flatten, Declaration, Diagram, Env, Theory, TheoryItem};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MorphItem {
    /// Identity on a theory, or inlining of another morphism.
    Include(String),
    Assign { name: String, body: Expr, loc: Option<Loc> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphism {
    pub name: String,
    pub domain: String,
    pub codomain: String,
    pub items: Vec<MorphItem>,
}

impl Morphism {
    pub fn new(
        name: impl Into<String>,
        domain: impl Into<String>,
        codomain: impl Into<String>,
    ) -> Self {
        Morphism {
            name: name.into(),
            domain: domain.into(),
            codomain: codomain.into(),
            items: Vec::new(),
        }
    }

    pub fn include(mut self, name: impl Into<String>) -> Self {
        self.items.push(MorphItem::Include(name.into()));
        self
    }

    pub fn assign(mut self, name: impl Into<String>, body: Expr) -> Self {
        self.items.push(MorphItem::Assign { name: name.into(), body, loc: None });
        self
    }
}

/// Resolved assignment map of a morphism: domain constant to codomain
/// expression. Assignment bodies are closed.
#[derive(Debug, Clone, Default)]
pub struct MorphMap {
    pub assignments: HashMap<QName, Expr>,
}

impl MorphMap {
    pub fn get(&self, q: &QName) -> Option<&Expr> {
        self.assignments.get(q)
    }

    pub fn insert(&mut self, q: QName, e: Expr) {
        self.assignments.insert(q, e);
    }
}

/// Resolve the items of a morphism into a flat assignment map. Later items
/// override earlier ones.
pub fn resolve_morphism(diagram: &Diagram, m: &Morphism) -> Result<MorphMap> {
    let mut map = MorphMap::default();
    resolve_items(diagram, m, &mut map)?;
    Ok(map)
}

fn resolve_items(diagram: &Diagram, m: &Morphism, map: &mut MorphMap) -> Result<()> {
    let dom_flat = flatten(diagram, &m.domain)?;
    for item in &m.items {
        match item {
            MorphItem::Include(name) => {
                if let Some(t) = diagram.theory(name) {
                    // identity on t: every constant visible in t maps to itself
                    let inc_flat = flatten(diagram, &t.name)?;
                    for entry in &inc_flat.entries {
                        let q = entry.qname();
                        map.insert(q.clone(), Expr::Const(q));
                    }
                } else if let Some(inner) = diagram.morphism(name) {
                    resolve_items(diagram, inner, map)?;
                } else {
                    return Err(Error::Other(format!(
                        "morphism `{}`: include of unknown theory or morphism `{}`",
                        m.name, name
                    )));
                }
            }
            MorphItem::Assign { name, body, .. } => {
                let entry = dom_flat.get_short(name).ok_or_else(|| {
                    Error::AssignmentOutsideDomain {
                        morphism: m.name.clone(),
                        constant: QName::new(m.domain.clone(), name.clone()),
                    }
                })?;
                map.insert(entry.qname(), body.clone());
            }
        }
    }
    Ok(())
}

/// Why a translation attempt produced no result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Undef {
    /// An occurrence of a constant without an assignment (and without a
    /// definiens to fall back on).
    Constant(QName),
    /// A variable whose binding was dropped by the surrounding translation.
    Variable,
}

/// Tracks how the binders of the input expression map to binders of the
/// output: each input binder either corresponds to an output binder (stored
/// as an absolute output level) or was dropped.
#[derive(Debug, Clone, Default)]
pub struct MEnv {
    slots: Vec<Option<usize>>,
    out_depth: usize,
}

impl MEnv {
    pub fn new() -> Self {
        MEnv::default()
    }

    /// Start from explicit slots (used by the logical-relation translator).
    pub fn from_slots(slots: Vec<Option<usize>>, out_depth: usize) -> Self {
        MEnv { slots, out_depth }
    }

    pub fn push_kept(&mut self) {
        self.slots.push(Some(self.out_depth));
        self.out_depth += 1;
    }

    pub fn push_dropped(&mut self) {
        self.slots.push(None);
    }

    pub fn pop(&mut self) {
        if let Some(Some(_)) = self.slots.pop() {
            self.out_depth -= 1;
        }
    }

    /// Output index for input variable `idx`, if its binder was kept.
    pub fn var(&self, idx: usize) -> Option<usize> {
        if idx >= self.slots.len() {
            // free beyond the tracked binders: keep the distance past them
            return Some(self.out_depth + (idx - self.slots.len()));
        }
        let pos = self.slots.len() - 1 - idx;
        self.slots[pos].map(|level| self.out_depth - 1 - level)
    }
}

/// Translate an open expression through an assignment map. Constants without
/// an assignment fall back to translating their definiens (which is how
/// defined constants are mapped when no explicit assignment is given).
pub fn translate_open(
    diagram: &Diagram,
    domain_env: &Env,
    map: &MorphMap,
    env: &mut MEnv,
    e: &Expr,
) -> std::result::Result<Expr, Undef> {
    match e {
        Expr::Var(i) => env.var(*i).map(Expr::Var).ok_or(Undef::Variable),
        Expr::Const(q) => {
            if let Some(img) = map.get(q) {
                // assignment bodies are closed, so no shifting is needed
                Ok(img.clone())
            } else if let Some(def) =
                domain_env.lookup(q).and_then(|d| d.definiens.as_ref())
            {
                let mut closed = MEnv::from_slots(Vec::new(), env.out_depth);
                translate_open(diagram, domain_env, map, &mut closed, def)
            } else {
                Err(Undef::Constant(q.clone()))
            }
        }
        Expr::TypeSort => Ok(Expr::TypeSort),
        Expr::KindSort => Ok(Expr::KindSort),
        Expr::Pi(b, ty, body) => {
            let ty2 = translate_open(diagram, domain_env, map, env, ty)?;
            env.push_kept();
            let body2 = translate_open(diagram, domain_env, map, env, body);
            env.pop();
            Ok(Expr::Pi(b.clone(), Box::new(ty2), Box::new(body2?)))
        }
        Expr::Lambda(b, ty, body) => {
            let ty2 = translate_open(diagram, domain_env, map, env, ty)?;
            env.push_kept();
            let body2 = translate_open(diagram, domain_env, map, env, body);
            env.pop();
            Ok(Expr::Lambda(b.clone(), Box::new(ty2), Box::new(body2?)))
        }
        Expr::App(f, a) => {
            let f2 = translate_open(diagram, domain_env, map, env, f)?;
            let a2 = translate_open(diagram, domain_env, map, env, a)?;
            Ok(Expr::app(f2, a2))
        }
    }
}

/// Translate a closed expression along a morphism; `None` when the
/// translation is undefined (partial morphism).
pub fn try_apply_morphism(
    diagram: &Diagram,
    morphism: &str,
    e: &Expr,
) -> Result<Option<Expr>> {
    let m = diagram
        .morphism(morphism)
        .ok_or_else(|| Error::UnknownMorphism(morphism.to_string()))?;
    let map = resolve_morphism(diagram, m)?;
    let dom_flat = flatten(diagram, &m.domain)?;
    let dom_env = Env::full(&dom_flat);
    let mut env = MEnv::new();
    match translate_open(diagram, &dom_env, &map, &mut env, e) {
        Ok(out) => Ok(Some(kernel::beta_normalize(&out)?)),
        Err(_) => Ok(None),
    }
}

/// Translate a closed expression along a morphism; error if undefined.
pub fn apply_morphism(diagram: &Diagram, morphism: &str, e: &Expr) -> Result<Expr> {
    let m = diagram
        .morphism(morphism)
        .ok_or_else(|| Error::UnknownMorphism(morphism.to_string()))?;
    let map = resolve_morphism(diagram, m)?;
    let dom_flat = flatten(diagram, &m.domain)?;
    let dom_env = Env::full(&dom_flat);
    let mut env = MEnv::new();
    match translate_open(diagram, &dom_env, &map, &mut env, e) {
        Ok(out) => kernel::beta_normalize(&out),
        Err(Undef::Constant(q)) => {
            Err(Error::MorphismUndefined { morphism: morphism.to_string(), constant: q })
        }
        Err(Undef::Variable) => Err(Error::Other(format!(
            "morphism `{morphism}`: translation undefined on a bound variable"
        ))),
    }
}

/// Translate a context entry-wise.
pub fn apply_morphism_context(
    diagram: &Diagram,
    morphism: &str,
    ctx: &Context,
) -> Result<Context> {
    let m = diagram
        .morphism(morphism)
        .ok_or_else(|| Error::UnknownMorphism(morphism.to_string()))?;
    let map = resolve_morphism(diagram, m)?;
    let dom_flat = flatten(diagram, &m.domain)?;
    let dom_env = Env::full(&dom_flat);
    let mut env = MEnv::new();
    let mut out = Context::new();
    for entry in &ctx.entries {
        match translate_open(diagram, &dom_env, &map, &mut env, &entry.ty) {
            Ok(ty) => out.push(entry.name.clone(), kernel::beta_normalize(&ty)?),
            Err(Undef::Constant(q)) => {
                return Err(Error::MorphismUndefined {
                    morphism: morphism.to_string(),
                    constant: q,
                })
            }
            Err(Undef::Variable) => {
                return Err(Error::Other(format!(
                    "morphism `{morphism}`: context entry `{}` does not translate",
                    entry.name
                )))
            }
        }
        env.push_kept();
    }
    Ok(out)
}

/// Is the morphism partial, i.e. is its homomorphic extension undefined on
/// some domain constant?
pub fn is_partial(diagram: &Diagram, morphism: &str) -> Result<bool> {
    let m = diagram
        .morphism(morphism)
        .ok_or_else(|| Error::UnknownMorphism(morphism.to_string()))?;
    let map = resolve_morphism(diagram, m)?;
    let dom_flat = flatten(diagram, &m.domain)?;
    let dom_env = Env::full(&dom_flat);
    for entry in &dom_flat.entries {
        let mut env = MEnv::new();
        if translate_open(diagram, &dom_env, &map, &mut env, &Expr::Const(entry.qname()))
            .is_err()
        {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Check a morphism: includes must be legal, and every assignment must be
/// well-typed against the translated type of its constant (where that
/// translation is defined). Assignments to defined constants must agree with
/// the translated definiens.
pub fn check_morphism(diagram: &Diagram, morphism: &str) -> Result<()> {
    let m = diagram
        .morphism(morphism)
        .ok_or_else(|| Error::UnknownMorphism(morphism.to_string()))?;
    if diagram.theory(&m.domain).is_none() {
        return Err(Error::UnknownTheory(m.domain.clone()));
    }
    if diagram.theory(&m.codomain).is_none() {
        return Err(Error::UnknownTheory(m.codomain.clone()));
    }

    for item in &m.items {
        if let MorphItem::Include(name) = item {
            if let Some(t) = diagram.theory(name) {
                for (end, label) in [(&m.domain, "domain"), (&m.codomain, "codomain")] {
                    if !diagram.includes_transitively(end, &t.name) {
                        return Err(Error::Other(format!(
                            "morphism `{}`: identity include of `{}` but the {} `{}` does not include it",
                            m.name, t.name, label, end
                        )));
                    }
                }
            } else if let Some(inner) = diagram.morphism(name) {
                if !diagram.includes_transitively(&m.domain, &inner.domain)
                    || !diagram.includes_transitively(&m.codomain, &inner.codomain)
                {
                    return Err(Error::Other(format!(
                        "morphism `{}`: include of morphism `{}` whose endpoints are not included",
                        m.name, name
                    )));
                }
            } else {
                return Err(Error::Other(format!(
                    "morphism `{}`: include of unknown theory or morphism `{}`",
                    m.name, name
                )));
            }
        }
    }

    let map = resolve_morphism(diagram, m)?;
    let dom_flat = flatten(diagram, &m.domain)?;
    let dom_env = Env::full(&dom_flat);
    let cod_flat = flatten(diagram, &m.codomain)?;
    let cod_env = Env::full(&cod_flat);
    let ctx = Context::new();

    for entry in &dom_flat.entries {
        let q = entry.qname();
        let Some(body) = map.get(&q) else { continue };
        let mut env = MEnv::new();
        match translate_open(diagram, &dom_env, &map, &mut env, &entry.decl.ty) {
            Ok(ty) => {
                let ty = kernel::beta_normalize(&ty)?;
                kernel::check_type(&cod_env, &ctx, body, &ty).map_err(|e| {
                    Error::Other(format!(
                        "morphism `{}`, assignment for `{}`: {}",
                        m.name, q, e
                    ))
                })?;
            }
            // Partial morphism: the typing condition only applies where the
            // translated type is defined.
            Err(_) => continue,
        }
        if let Some(def) = &entry.decl.definiens {
            let mut env = MEnv::new();
            if let Ok(img) = translate_open(diagram, &dom_env, &map, &mut env, def) {
                if !kernel::equal_in(&cod_env, body, &img)? {
                    return Err(Error::Other(format!(
                        "morphism `{}`: assignment for defined constant `{}` \
                         conflicts with the image of its definiens",
                        m.name, q
                    )));
                }
            }
        }
    }
    Ok(())
}

/// A declaration dropped by a partial translation, with the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedDecl {
    pub theory: String,
    pub name: String,
    pub reason: String,
}

impl std::fmt::Display for DroppedDecl {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{} dropped: {}", self.theory, self.name, self.reason)
    }
}

/// Naming scheme for pushout outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameScheme {
    /// `E` becomes `E_via_m`, a morphism `f` becomes `f_via_m`.
    Via,
    /// `E` becomes `E_soft`, a morphism `f` becomes `f_soft`.
    Soften,
}

impl NameScheme {
    pub fn theory(&self, t: &str, m: &str) -> String {
        match self {
            NameScheme::Via => format!("{t}_via_{m}"),
            NameScheme::Soften => format!("{t}_soft"),
        }
    }

    pub fn morphism(&self, f: &str, m: &str) -> String {
        match self {
            NameScheme::Via => format!("{f}_via_{m}"),
            NameScheme::Soften => format!("{f}_soft"),
        }
    }
}

/// Name of the natural morphism from `t` into its pushout.
pub fn natural_name(m: &str, t: &str) -> String {
    format!("{m}_{t}")
}

#[derive(Debug, Clone, Default)]
pub struct PushoutOutcome {
    /// New theories, natural morphisms, and translated morphisms, in
    /// dependency order.
    pub items: Vec<crate::theory::DiagramItem>,
    /// Original theory name to pushed theory name (the morphism's domain maps
    /// to its codomain).
    pub theory_map: HashMap<String, String>,
    /// Theory name to the name of its natural morphism (the domain maps to
    /// the base morphism itself).
    pub natural: HashMap<String, String>,
    /// Original morphism name to translated morphism name.
    pub morphism_map: HashMap<String, String>,
    pub dropped: Vec<DroppedDecl>,
    pub warnings: Vec<String>,
}

/// Push out every theory reachable from `roots` that includes the domain of
/// `morphism`, plus every diagram morphism between pushed theories.
///
/// Returned items are new; the input diagram is not modified. Theories in the
/// reachable set that do not include the domain are kept as-is (they are
/// referenced, not copied).
pub fn pushout_diagram(
    diagram: &Diagram,
    morphism: &str,
    roots: &[String],
    scheme: NameScheme,
) -> Result<PushoutOutcome> {
    let m = diagram
        .morphism(morphism)
        .ok_or_else(|| Error::UnknownMorphism(morphism.to_string()))?;
    let base_map = resolve_morphism(diagram, m)?;

    let mut reachable: Vec<String> = Vec::new();
    for root in roots {
        if diagram.theory(root).is_none() {
            return Err(Error::UnknownTheory(root.clone()));
        }
        if !diagram.includes_transitively(root, &m.domain) {
            return Err(Error::MissingInclude {
                theory: root.clone(),
                expected: m.domain.clone(),
            });
        }
        for name in diagram.included_closure(root)? {
            if !reachable.contains(&name) {
                reachable.push(name);
            }
        }
    }

    let mut out = PushoutOutcome::default();
    out.theory_map.insert(m.domain.clone(), m.codomain.clone());
    out.natural.insert(m.domain.clone(), m.name.clone());

    // Working diagram: the input plus everything pushed so far, so that
    // generated items can be flattened and checked incrementally.
    let mut work = diagram.clone();

    // Theories in diagram order are already topologically sorted (a theory
    // can only include earlier theories).
    let theory_names: Vec<String> = diagram.theories().map(|t| t.name.clone()).collect();
    for tname in &theory_names {
        if !reachable.contains(tname) || *tname == m.domain {
            continue;
        }
        if !diagram.includes_transitively(tname, &m.domain) {
            continue; // untouched; identity on it
        }
        let mut warns = Vec::new();
        let (theory, natural, dropped) =
            pushout_one_theory(diagram, &work, m, &base_map, tname, scheme, &out, &mut warns)?;
        out.warnings.extend(warns);
        out.theory_map.insert(tname.clone(), theory.name.clone());
        out.natural.insert(tname.clone(), natural.name.clone());
        out.dropped.extend(dropped);
        work.push_theory(theory.clone())?;
        work.push_morphism(natural.clone())?;
        out.items.push(crate::theory::DiagramItem::Theory(theory));
        out.items.push(crate::theory::DiagramItem::Morphism(natural));
    }

    // Translate morphisms whose endpoints were both pushed. Skip the base
    // morphism itself (its codomain is never pushed).
    for f in diagram.morphisms() {
        if f.name == m.name {
            continue;
        }
        let (Some(new_dom), Some(new_cod)) =
            (out.theory_map.get(&f.domain), out.theory_map.get(&f.codomain))
        else {
            continue;
        };
        if !reachable.contains(&f.domain) || !reachable.contains(&f.codomain) {
            continue;
        }
        let new_name = scheme.morphism(&f.name, &m.name);
        let mut warns = Vec::new();
        let translated = pushout_one_morphism(
            diagram,
            &work,
            f,
            new_name.clone(),
            new_dom.clone(),
            new_cod.clone(),
            &out,
            &mut warns,
        )?;
        out.warnings.extend(warns);
        out.morphism_map.insert(f.name.clone(), new_name);
        work.push_morphism(translated.clone())?;
        out.items.push(crate::theory::DiagramItem::Morphism(translated));
    }

    Ok(out)
}

/// Build the constant translation map for pushing out `theory`: base
/// morphism assignments for the domain part, renamed constants for already
/// pushed includes, identity elsewhere.
fn pushout_translation_map(
    diagram: &Diagram,
    m: &Morphism,
    base_map: &MorphMap,
    theory: &str,
    out: &PushoutOutcome,
) -> Result<MorphMap> {
    let dom_closure = diagram.included_closure(&m.domain)?;
    let flat = flatten(diagram, theory)?;
    let mut map = MorphMap::default();
    for entry in &flat.entries {
        let q = entry.qname();
        if dom_closure.contains(entry.origin) {
            if let Some(img) = base_map.get(&q) {
                map.insert(q, img.clone());
            }
            // no assignment: stays unmapped (partial); defined constants are
            // handled by the definiens fallback in translate_open
        } else if let Some(new_theory) = out.theory_map.get(entry.origin) {
            map.insert(q, Expr::Const(QName::new(new_theory.clone(), entry.decl.name.clone())));
        } else {
            map.insert(q.clone(), Expr::Const(q));
        }
    }
    Ok(map)
}

fn pushout_one_theory(
    diagram: &Diagram,
    work: &Diagram,
    m: &Morphism,
    base_map: &MorphMap,
    theory: &str,
    scheme: NameScheme,
    out: &PushoutOutcome,
    warnings: &mut Vec<String>,
) -> Result<(Theory, Morphism, Vec<DroppedDecl>)> {
    let t = diagram.theory(theory).expect("caller checked");
    let new_name = scheme.theory(theory, &m.name);
    if work.contains(&new_name) {
        return Err(Error::GeneratedNameClash(new_name));
    }

    let mut map = pushout_translation_map(diagram, m, base_map, theory, out)?;
    let dom_flat = flatten(diagram, theory)?;
    let dom_env = Env::full(&dom_flat);

    let mut new_theory = Theory::new(new_name.clone());
    let natural_nm = natural_name(&m.name, theory);
    let mut natural = Morphism::new(natural_nm.clone(), theory.to_string(), new_name.clone());
    natural.items.push(MorphItem::Include(m.name.clone()));
    let mut dropped = Vec::new();

    for item in &t.items {
        match item {
            TheoryItem::Include(inc) => {
                let mapped = if *inc == m.domain {
                    m.codomain.clone()
                } else if let Some(new_inc) = out.theory_map.get(inc) {
                    new_inc.clone()
                } else {
                    inc.clone() // unrelated or below the domain: unchanged
                };
                new_theory.items.push(TheoryItem::Include(mapped));
                // cover the included part in the natural morphism
                if let Some(nat_inc) = out.natural.get(inc) {
                    if nat_inc != &m.name {
                        natural.items.push(MorphItem::Include(nat_inc.clone()));
                    }
                } else if *inc != m.domain && !diagram.includes_transitively(&m.domain, inc) {
                    // untouched theory: identity include
                    natural.items.push(MorphItem::Include(inc.clone()));
                }
            }
            TheoryItem::Decl(decl) => {
                let q = decl.qname(theory);
                let mut env = MEnv::new();
                match translate_open(diagram, &dom_env, &map, &mut env, &decl.ty) {
                    Ok(ty) => {
                        let ty = kernel::beta_normalize(&ty)?;
                        let definiens = match &decl.definiens {
                            Some(def) => {
                                let mut env = MEnv::new();
                                match translate_open(diagram, &dom_env, &map, &mut env, def) {
                                    Ok(d) => Some(kernel::beta_normalize(&d)?),
                                    Err(_) => None,
                                }
                            }
                            None => None,
                        };
                        let new_decl = Declaration {
                            name: decl.name.clone(),
                            ty,
                            definiens,
                            annotations: decl.annotations.clone(),
                            loc: None,
                        };
                        if decl.definiens.is_some() && new_decl.definiens.is_none() {
                            warnings.push(format!(
                                "pushout of `{theory}`: definiens of `{}` does not \
                                 translate; the pushed constant is left undefined",
                                decl.name
                            ));
                        }
                        let new_q = QName::new(new_name.clone(), decl.name.clone());
                        map.insert(q, Expr::Const(new_q));
                        natural.items.push(MorphItem::Assign {
                            name: decl.name.clone(),
                            body: Expr::Const(QName::new(new_name.clone(), decl.name.clone())),
                            loc: None,
                        });
                        new_theory.items.push(TheoryItem::Decl(new_decl));
                    }
                    Err(why) => {
                        let reason = match why {
                            Undef::Constant(c) => {
                                format!("type does not translate (undefined at `{c}`)")
                            }
                            Undef::Variable => "type does not translate".to_string(),
                        };
                        dropped.push(DroppedDecl {
                            theory: theory.to_string(),
                            name: decl.name.clone(),
                            reason,
                        });
                    }
                }
            }
        }
    }

    Ok((new_theory, natural, dropped))
}

#[allow(clippy::too_many_arguments)]
fn pushout_one_morphism(
    diagram: &Diagram,
    work: &Diagram,
    f: &Morphism,
    new_name: String,
    new_dom: String,
    new_cod: String,
    out: &PushoutOutcome,
    warnings: &mut Vec<String>,
) -> Result<Morphism> {
    if work.contains(&new_name) {
        return Err(Error::GeneratedNameClash(new_name));
    }
    let mut translated = Morphism::new(new_name, new_dom.clone(), new_cod);

    // translation map for assignment bodies: they live over f's codomain and
    // must be pushed along the codomain's natural morphism
    let cod_natural = out.natural.get(&f.codomain).expect("codomain was pushed");
    let cod_map = {
        let base = diagram
            .morphism(cod_natural)
            .or_else(|| work.morphism(cod_natural))
            .ok_or_else(|| Error::UnknownMorphism(cod_natural.clone()))?;
        resolve_morphism(work, base)?
    };
    let cod_flat = flatten(diagram, &f.codomain)?;
    let cod_env = Env::full(&cod_flat);
    let new_dom_flat = flatten(work, &new_dom)?;

    for item in &f.items {
        match item {
            MorphItem::Include(name) => {
                if diagram.theory(name).is_some() {
                    let mapped =
                        out.theory_map.get(name).cloned().unwrap_or_else(|| name.clone());
                    translated.items.push(MorphItem::Include(mapped));
                } else if let Some(mapped) = out.morphism_map.get(name) {
                    translated.items.push(MorphItem::Include(mapped.clone()));
                } else if diagram.morphism(name).is_some() {
                    // a morphism between theories that were not pushed (e.g. the
                    // base morphism or one between base theories): keep it
                    translated.items.push(MorphItem::Include(name.clone()));
                } else {
                    return Err(Error::Other(format!(
                        "morphism `{}`: include of unknown item `{}`",
                        f.name, name
                    )));
                }
            }
            MorphItem::Assign { name, body, .. } => {
                if new_dom_flat.get_short(name).is_none() {
                    // the constant was dropped from the pushed domain
                    continue;
                }
                let mut env = MEnv::new();
                match translate_open(diagram, &cod_env, &cod_map, &mut env, body) {
                    Ok(b) => translated.items.push(MorphItem::Assign {
                        name: name.clone(),
                        body: kernel::beta_normalize(&b)?,
                        loc: None,
                    }),
                    Err(_) => warnings.push(format!(
                        "morphism `{}`: assignment for `{}` does not translate; \
                         the translated morphism is partial there",
                        f.name, name
                    )),
                }
            }
        }
    }
    Ok(translated)
}

/// Push out a single theory along a morphism, returning the new theory, its
/// natural morphism, and the declarations dropped because their types do not
/// translate.
pub fn pushout_theory(
    diagram: &Diagram,
    morphism: &str,
    theory: &str,
) -> Result<(Theory, Morphism, Vec<DroppedDecl>)> {
    let outcome = pushout_diagram(diagram, morphism, &[theory.to_string()], NameScheme::Via)?;
    let m = diagram.morphism(morphism).expect("checked by pushout_diagram");
    let new_name = NameScheme::Via.theory(theory, &m.name);
    let mut t = None;
    let mut n = None;
    for item in outcome.items {
        match item {
            crate::theory::DiagramItem::Theory(th) if th.name == new_name => t = Some(th),
            crate::theory::DiagramItem::Morphism(mo)
                if mo.name == natural_name(&m.name, theory) =>
            {
                n = Some(mo)
            }
            _ => {}
        }
    }
    match (t, n) {
        (Some(t), Some(n)) => Ok((t, n, outcome.dropped)),
        _ => Err(Error::Other(format!(
            "pushout of `{theory}` along `{morphism}` produced no output"
        ))),
    }
}
