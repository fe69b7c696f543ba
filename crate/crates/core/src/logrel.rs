//! Partial logical relations over a morphism, and the induced translation
//! that turns every well-typed expression into a proof that its image under
//! the morphism respects the relation.
//!
//! For a relation r over a morphism m : S -> T, the translation r̄ maps
//! S-expressions to T-expressions:
//!
//! - r̄(type)      = [a: type] a -> type
//! - r̄({x: A} B) = [f: m({x: A} B)] {x: m(A)} {x*: r̄(A) x} r̄(B) (f x)
//! - r̄([x: A] t) = [x: m(A)] [x*: r̄(A) x] r̄(t)
//! - r̄(f t)      = r̄(f) m(t) r̄(t)
//! - r̄(x)        = x*
//! - r̄(c)        = the case for c, if any
//!
//! All rules are partial: a binding or argument slot is simply omitted when
//! the corresponding translation is undefined. Declaration types whose
//! m-translation is undefined (proof rules over an erasing morphism) are
//! translated in a type-direct mode that produces the statement of the
//! corresponding admissibility rule instead of a predicate.

use std::collections::HashMap;

use crate::error::{Error, Loc, Result};
use crate::kernel;
use crate::morphism::{resolve_morphism, translate_open, MEnv, MorphMap};
use crate::syntax::{Binder, Context, Expr, QName};
use crate::theory::{flatten, Declaration, Diagram, Env, Theory, TheoryItem};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogrelItem {
    /// Inline the cases of another relation.
    Include(String),
    Case { name: String, body: Expr, loc: Option<Loc> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalRelation {
    pub name: String,
    /// Name of the morphism the relation lives over.
    pub over: String,
    pub items: Vec<LogrelItem>,
}

impl LogicalRelation {
    pub fn new(name: impl Into<String>, over: impl Into<String>) -> Self {
        LogicalRelation { name: name.into(), over: over.into(), items: Vec::new() }
    }

    pub fn include(mut self, name: impl Into<String>) -> Self {
        self.items.push(LogrelItem::Include(name.into()));
        self
    }

    pub fn case(mut self, name: impl Into<String>, body: Expr) -> Self {
        self.items.push(LogrelItem::Case { name: name.into(), body, loc: None });
        self
    }
}

/// Resolved case map: domain constant to codomain expression (closed).
#[derive(Debug, Clone, Default)]
pub struct RelMap {
    pub cases: HashMap<QName, Expr>,
}

pub fn resolve_logrel(diagram: &Diagram, r: &LogicalRelation) -> Result<RelMap> {
    let mut map = RelMap::default();
    resolve_rel_items(diagram, r, &mut map)?;
    Ok(map)
}

fn resolve_rel_items(diagram: &Diagram, r: &LogicalRelation, map: &mut RelMap) -> Result<()> {
    let m = diagram
        .morphism(&r.over)
        .ok_or_else(|| Error::UnknownMorphism(r.over.clone()))?;
    let dom_flat = flatten(diagram, &m.domain)?;
    for item in &r.items {
        match item {
            LogrelItem::Include(name) => {
                let inner = diagram
                    .logrel(name)
                    .ok_or_else(|| Error::UnknownLogrel(name.clone()))?;
                resolve_rel_items(diagram, inner, map)?;
            }
            LogrelItem::Case { name, body, .. } => {
                let entry = dom_flat.get_short(name).ok_or_else(|| {
                    Error::AssignmentOutsideDomain {
                        morphism: r.name.clone(),
                        constant: QName::new(m.domain.clone(), name.clone()),
                    }
                })?;
                map.cases.insert(entry.qname(), body.clone());
            }
        }
    }
    Ok(())
}

/// How one input binder maps to output binders: an optional value slot (the
/// image under m) and an optional witness slot, both as absolute output
/// levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RSlot {
    m: Option<usize>,
    star: Option<usize>,
}

/// Binder bookkeeping for the relation translation.
#[derive(Debug, Clone, Default)]
pub struct REnv {
    slots: Vec<RSlot>,
    out_depth: usize,
}

impl REnv {
    pub fn new() -> Self {
        REnv::default()
    }

    /// Consume one input binder, creating a value slot and/or a witness slot
    /// (in that order).
    fn push_slot(&mut self, m: bool, star: bool) {
        let m_level = m.then_some(self.out_depth);
        let star_level = star.then_some(self.out_depth + usize::from(m));
        self.slots.push(RSlot { m: m_level, star: star_level });
        self.out_depth += usize::from(m) + usize::from(star);
    }

    /// An output-only binder (e.g. the function bound by the pi rule).
    fn push_out_only(&mut self) {
        self.out_depth += 1;
    }

    fn star_var(&self, idx: usize) -> Option<usize> {
        if idx >= self.slots.len() {
            return None;
        }
        let pos = self.slots.len() - 1 - idx;
        self.slots[pos].star.map(|level| self.out_depth - 1 - level)
    }

    fn m_env(&self) -> MEnv {
        MEnv::from_slots(self.slots.iter().map(|s| s.m).collect(), self.out_depth)
    }
}

fn star_binder(b: &Binder) -> Binder {
    Binder { name: b.name.as_ref().map(|n| format!("{n}_star")) }
}

/// The translation engine for one relation.
pub struct RelTranslator<'a> {
    diagram: &'a Diagram,
    dom_env: &'a Env<'a>,
    mmap: &'a MorphMap,
    rmap: &'a RelMap,
}

impl<'a> RelTranslator<'a> {
    pub fn new(
        diagram: &'a Diagram,
        dom_env: &'a Env<'a>,
        mmap: &'a MorphMap,
        rmap: &'a RelMap,
    ) -> Self {
        RelTranslator { diagram, dom_env, mmap, rmap }
    }

    /// The morphism translation with this environment's value slots.
    fn mtr(&self, env: &REnv, e: &Expr) -> Option<Expr> {
        let mut menv = env.m_env();
        translate_open(self.diagram, self.dom_env, self.mmap, &mut menv, e).ok()
    }

    /// Value mode: for a term, the witness that its image respects the
    /// relation; for a type or type family, the relation predicate itself.
    pub fn rtr(&self, env: &REnv, e: &Expr) -> Option<Expr> {
        match e {
            Expr::Var(i) => env.star_var(*i).map(Expr::Var),
            Expr::Const(q) => self.rmap.cases.get(q).cloned(),
            Expr::TypeSort => Some(Expr::lam(
                "a",
                Expr::TypeSort,
                Expr::arrow(Expr::Var(0), Expr::TypeSort),
            )),
            Expr::KindSort => None,
            Expr::App(f, t) => {
                let rf = self.rtr(env, f)?;
                let mt = self.mtr(env, t);
                let rt = self.rtr(env, t);
                if mt.is_none() && rt.is_none() {
                    return None;
                }
                Some(Expr::apps(rf, mt.into_iter().chain(rt)))
            }
            Expr::Lambda(b, a, t) => match self.mtr(env, a) {
                Some(ma) => {
                    // the witness binder's type lives under the value binder:
                    // one more output level, but no new input binder
                    let mut env_star = env.clone();
                    env_star.push_out_only();
                    let ra = self.rtr(&env_star, a);
                    let mut env_body = env.clone();
                    env_body.push_slot(true, ra.is_some());
                    let rt = self.rtr(&env_body, t)?;
                    let inner = match ra {
                        Some(ra) => Expr::Lambda(
                            star_binder(b),
                            Box::new(Expr::app(ra, Expr::Var(0))),
                            Box::new(rt),
                        ),
                        None => rt,
                    };
                    Some(Expr::Lambda(b.clone(), Box::new(ma), Box::new(inner)))
                }
                None => {
                    // value binder erased: bind only the witness
                    let ra_ty = self.rtr_type(env, a)?;
                    let mut env_body = env.clone();
                    env_body.push_slot(false, true);
                    let rt = self.rtr(&env_body, t)?;
                    Some(Expr::Lambda(star_binder(b), Box::new(ra_ty), Box::new(rt)))
                }
            },
            Expr::Pi(b, a, body) => {
                let mpi = self.mtr(env, e)?;
                let mut env_f = env.clone();
                env_f.push_out_only();
                let ma = self.mtr(&env_f, a)?;
                // under f and the value binder: two more output levels
                let mut env_ra = env_f.clone();
                env_ra.push_out_only();
                let ra = self.rtr(&env_ra, a);
                let mut env_body = env_f.clone();
                env_body.push_slot(true, ra.is_some());
                let rb = self.rtr(&env_body, body)?;
                let d = env_body.out_depth;
                let f_var = Expr::Var(d - 1 - env.out_depth);
                let x_var = Expr::Var(d - 1 - (env.out_depth + 1));
                let mut out = Expr::app(rb, Expr::app(f_var, x_var));
                if let Some(ra) = ra {
                    out = Expr::Pi(
                        star_binder(b),
                        Box::new(Expr::app(ra, Expr::Var(0))),
                        Box::new(out),
                    );
                }
                out = Expr::Pi(b.clone(), Box::new(ma), Box::new(out));
                Some(Expr::Lambda(Binder::named("f"), Box::new(mpi), Box::new(out)))
            }
        }
    }

    /// Type-direct mode, for declaration types whose m-translation is
    /// undefined: each binder becomes its translated binding(s), and the head
    /// must itself translate to a type.
    pub fn rtr_type(&self, env: &REnv, e: &Expr) -> Option<Expr> {
        match e {
            Expr::Pi(b, a, body) => match self.mtr(env, a) {
                Some(ma) => {
                    // the witness binder's type lives under the value binder
                    let mut env_star = env.clone();
                    env_star.push_out_only();
                    let ra = self.rtr(&env_star, a);
                    let mut env_body = env.clone();
                    env_body.push_slot(true, ra.is_some());
                    let rb = self.rtr_type(&env_body, body)?;
                    let mut out = rb;
                    if let Some(ra) = ra {
                        out = Expr::Pi(
                            star_binder(b),
                            Box::new(Expr::app(ra, Expr::Var(0))),
                            Box::new(out),
                        );
                    }
                    Some(Expr::Pi(b.clone(), Box::new(ma), Box::new(out)))
                }
                None => {
                    let ra_ty = self.rtr_type(env, a)?;
                    let mut env_body = env.clone();
                    env_body.push_slot(false, true);
                    let rb = self.rtr_type(&env_body, body)?;
                    Some(Expr::Pi(star_binder(b), Box::new(ra_ty), Box::new(rb)))
                }
            },
            Expr::TypeSort => Some(Expr::TypeSort),
            // Atomic heads: if the head erases, its value-mode translation is
            // already a type (e.g. a proof type); if it survives, the
            // declaration should have been translated along m instead.
            other => {
                if self.mtr(env, other).is_some() {
                    None
                } else {
                    self.rtr(env, other)
                }
            }
        }
    }

    /// Translate a context entry-wise, returning the translated context and
    /// the environment mapping the input binders into it.
    pub fn context(&self, ctx: &Context) -> Result<(Context, REnv)> {
        let mut env = REnv::new();
        let mut out = Context::new();
        for entry in &ctx.entries {
            match self.mtr(&env, &entry.ty) {
                Some(ma) => {
                    out.push(entry.name.clone(), kernel::beta_normalize(&ma)?);
                    let mut env_x = env.clone();
                    env_x.push_slot(true, false);
                    let ra = self.rtr(&env_x, &entry.ty);
                    if let Some(ra) = &ra {
                        out.push(
                            format!("{}_star", entry.name),
                            kernel::beta_normalize(&Expr::app(ra.clone(), Expr::Var(0)))?,
                        );
                    }
                    env.push_slot(true, ra.is_some());
                }
                None => {
                    let ra_ty = self.rtr_type(&env, &entry.ty).ok_or_else(|| {
                        Error::Other(format!(
                            "context entry `{}` translates neither along the morphism \
                             nor through the relation",
                            entry.name
                        ))
                    })?;
                    out.push(format!("{}_star", entry.name), kernel::beta_normalize(&ra_ty)?);
                    env.push_slot(false, true);
                }
            }
        }
        Ok((out, env))
    }
}

/// Build a translator for a named relation. Returns the relation's morphism
/// alongside so the caller can pick environments.
fn translator_parts(
    diagram: &Diagram,
    relation: &str,
) -> Result<(String, String, MorphMap, RelMap)> {
    let r = diagram
        .logrel(relation)
        .ok_or_else(|| Error::UnknownLogrel(relation.to_string()))?;
    let m = diagram
        .morphism(&r.over)
        .ok_or_else(|| Error::UnknownMorphism(r.over.clone()))?;
    let mmap = resolve_morphism(diagram, m)?;
    let rmap = resolve_logrel(diagram, r)?;
    Ok((m.domain.clone(), m.codomain.clone(), mmap, rmap))
}

/// Translate a closed expression (or one open in `ctx`) through a relation.
/// The result is beta-normalized.
pub fn apply_logrel(diagram: &Diagram, relation: &str, ctx: &Context, e: &Expr) -> Result<Expr> {
    let (dom, _cod, mmap, rmap) = translator_parts(diagram, relation)?;
    let dom_flat = flatten(diagram, &dom)?;
    let dom_env = Env::full(&dom_flat);
    let tr = RelTranslator::new(diagram, &dom_env, &mmap, &rmap);
    let (_tctx, env) = tr.context(ctx)?;
    let out = tr.rtr(&env, e).ok_or_else(|| {
        Error::Other(format!(
            "logical relation `{relation}` is undefined on `{}`",
            crate::printer::print_expr_debug(e)
        ))
    })?;
    kernel::beta_normalize(&out)
}

/// Translate a context: `x: A` becomes `x: m(A), x*: r̄(A) x` (with slots
/// omitted where undefined).
pub fn apply_logrel_context(diagram: &Diagram, relation: &str, ctx: &Context) -> Result<Context> {
    let (dom, _cod, mmap, rmap) = translator_parts(diagram, relation)?;
    let dom_flat = flatten(diagram, &dom)?;
    let dom_env = Env::full(&dom_flat);
    let tr = RelTranslator::new(diagram, &dom_env, &mmap, &rmap);
    Ok(tr.context(ctx)?.0)
}

/// Check a logical relation:
/// - every case body must be well-typed over the codomain against the
///   classifier induced by the relation: `r̄(A) m(c)` when `m(c)` is defined,
///   or the type-direct translation of `A` otherwise;
/// - cases for defined constants must agree with the translation of the
///   definiens;
/// - the relation must be total on term-level constants (constants whose
///   type classifies as a type rather than a kind).
pub fn check_logrel(diagram: &Diagram, relation: &str) -> Result<()> {
    let r = diagram
        .logrel(relation)
        .ok_or_else(|| Error::UnknownLogrel(relation.to_string()))?;
    let m = diagram
        .morphism(&r.over)
        .ok_or_else(|| Error::UnknownMorphism(r.over.clone()))?;
    let mmap = resolve_morphism(diagram, m)?;
    let rmap = resolve_logrel(diagram, r)?;
    let dom_flat = flatten(diagram, &m.domain)?;
    let dom_env = Env::full(&dom_flat);
    let cod_flat = flatten(diagram, &m.codomain)?;
    let cod_env = Env::full(&cod_flat);
    let tr = RelTranslator::new(diagram, &dom_env, &mmap, &rmap);
    let ctx = Context::new();
    let empty = REnv::new();

    for entry in &dom_flat.entries {
        let q = entry.qname();
        let Some(body) = rmap.cases.get(&q) else { continue };
        let mc = {
            let mut menv = MEnv::new();
            translate_open(diagram, &dom_env, &mmap, &mut menv, &Expr::Const(q.clone())).ok()
        };
        let expected = match mc {
            Some(mc) => tr
                .rtr(&empty, &entry.decl.ty)
                .map(|ra| Expr::app(ra, mc)),
            None => tr.rtr_type(&empty, &entry.decl.ty),
        };
        let Some(expected) = expected else {
            return Err(Error::CaseWithoutType {
                relation: relation.to_string(),
                constant: q,
            });
        };
        let expected = kernel::beta_normalize(&expected)?;
        kernel::check_type(&cod_env, &ctx, body, &expected).map_err(|e| {
            Error::Other(format!(
                "logical relation `{relation}`, case for `{q}`: {e}"
            ))
        })?;
        if let Some(def) = &entry.decl.definiens {
            if let Some(rdef) = tr.rtr(&empty, def) {
                if !kernel::equal_in(&cod_env, body, &rdef)? {
                    return Err(Error::Other(format!(
                        "logical relation `{relation}`: case for defined constant `{q}` \
                         conflicts with the translation of its definiens"
                    )));
                }
            }
        }
    }

    // Term-level totality: every term-level constant (its type is a type,
    // not a kind) that admits a witness classifier must have a case. A
    // constant whose type the relation cannot even state (the classifier is
    // undefined) is exempt.
    for entry in &dom_flat.entries {
        let q = entry.qname();
        if rmap.cases.contains_key(&q) {
            continue;
        }
        let sort = kernel::infer_type(&dom_env, &ctx, &entry.decl.ty)?;
        let sort = kernel::normalize_expr(&dom_env, &sort, true)?;
        if sort != Expr::TypeSort {
            continue;
        }
        let mc = {
            let mut menv = MEnv::new();
            translate_open(diagram, &dom_env, &mmap, &mut menv, &Expr::Const(q.clone())).ok()
        };
        let classifier_defined = match mc {
            Some(_) => tr.rtr(&empty, &entry.decl.ty).is_some(),
            None => tr.rtr_type(&empty, &entry.decl.ty).is_some(),
        };
        if classifier_defined {
            return Err(Error::TermTotalityViolation {
                relation: relation.to_string(),
                constant: q,
            });
        }
    }
    Ok(())
}

/// What happened to each declaration during star extension.
#[derive(Debug, Clone, Default)]
pub struct StarReport {
    /// Constants for which no star could be generated (constant name, reason).
    pub skipped: Vec<(String, String)>,
}

/// Rebuild a pushed-out theory, inserting after each constant `c` of the
/// original a witness constant `c_star` whose type states that the image of
/// `c` respects the relation, and record `c -> c_star` as a new case.
///
/// `include_map` rewires includes of the original to their softened
/// counterparts; `e_map` is the resolved natural morphism into `pushed`;
/// `cases` accumulates relation cases across the whole run.
#[allow(clippy::too_many_arguments)]
pub fn star_extend_theory(
    diagram: &Diagram,
    original: &Theory,
    pushed: &Theory,
    include_map: &HashMap<String, String>,
    e_map: &MorphMap,
    cases: &mut RelMap,
    relation_items: &mut Vec<LogrelItem>,
    report: &mut StarReport,
) -> Result<Theory> {
    let dom_flat = flatten(diagram, &original.name)?;
    let dom_env = Env::full(&dom_flat);
    let pushed_flat = flatten(diagram, &pushed.name)?;
    let mut taken: std::collections::HashSet<String> =
        pushed_flat.entries.iter().map(|e| e.decl.name.clone()).collect();

    let mut out = Theory::new(pushed.name.clone());
    let empty = REnv::new();

    for item in &original.items {
        match item {
            TheoryItem::Include(inc) => {
                let mapped = include_map.get(inc).cloned().unwrap_or_else(|| inc.clone());
                out.items.push(TheoryItem::Include(mapped));
            }
            TheoryItem::Decl(decl) => {
                let q = decl.qname(&original.name);
                let survived = pushed.local(&decl.name).cloned();
                if let Some(pd) = &survived {
                    out.items.push(TheoryItem::Decl(pd.clone()));
                }
                let tr = RelTranslator::new(diagram, &dom_env, e_map, cases);
                let star_ty = match &survived {
                    Some(_) => {
                        let image = {
                            let mut menv = MEnv::new();
                            translate_open(
                                diagram,
                                &dom_env,
                                e_map,
                                &mut menv,
                                &Expr::Const(q.clone()),
                            )
                            .ok()
                        };
                        match (tr.rtr(&empty, &decl.ty), image) {
                            (Some(ra), Some(img)) => Some(Expr::app(ra, img)),
                            _ => None,
                        }
                    }
                    None => tr.rtr_type(&empty, &decl.ty),
                };
                let Some(star_ty) = star_ty else {
                    report.skipped.push((
                        decl.name.clone(),
                        if survived.is_some() {
                            "the relation is undefined on its type".to_string()
                        } else {
                            "neither the morphism nor the relation applies to its type"
                                .to_string()
                        },
                    ));
                    continue;
                };
                let star_ty = kernel::beta_normalize(&star_ty)?;
                let star_def = match &decl.definiens {
                    Some(t) => {
                        let rt = tr.rtr(&empty, t).ok_or_else(|| {
                            Error::DefiniensUntranslatable {
                                context: format!("star extension of `{}`", original.name),
                                constant: q.clone(),
                            }
                        })?;
                        Some(kernel::beta_normalize(&rt)?)
                    }
                    None => None,
                };
                let star_name = format!("{}_star", decl.name);
                if !taken.insert(star_name.clone()) {
                    return Err(Error::GeneratedNameClash(star_name));
                }
                out.items.push(TheoryItem::Decl(Declaration {
                    name: star_name.clone(),
                    ty: star_ty,
                    definiens: star_def,
                    annotations: Vec::new(),
                    loc: None,
                }));
                cases
                    .cases
                    .insert(q, Expr::Const(QName::new(pushed.name.clone(), star_name.clone())));
                relation_items.push(LogrelItem::Case {
                    name: decl.name.clone(),
                    body: Expr::Const(QName::new(pushed.name.clone(), star_name)),
                    loc: None,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relation_of_the_type_sort_is_the_predicate_space() {
        // r̄(type) = [a: type] a -> type, independent of any diagram
        let d = Diagram::new();
        let flat = flatten(&d, "missing");
        assert!(flat.is_err());

        let want = Expr::lam(
            "a",
            Expr::TypeSort,
            Expr::arrow(Expr::Var(0), Expr::TypeSort),
        );
        // exercise the rule through a translator over an empty diagram
        let d = {
            let mut d = Diagram::new();
            d.push_theory(Theory::new("S")).unwrap();
            d.push_theory(Theory::new("T")).unwrap();
            d
        };
        let flat = flatten(&d, "S").unwrap();
        let env = Env::full(&flat);
        let mmap = MorphMap::default();
        let rmap = RelMap::default();
        let tr = RelTranslator::new(&d, &env, &mmap, &rmap);
        assert_eq!(tr.rtr(&REnv::new(), &Expr::TypeSort), Some(want));
        // and the kind sort has no relation
        assert_eq!(tr.rtr(&REnv::new(), &Expr::KindSort), None);
    }

    #[test]
    fn slot_levels_turn_into_correct_indices() {
        let mut env = REnv::new();
        env.push_slot(true, true); // binder 0: value level 0, star level 1
        env.push_slot(true, false); // binder 1: value level 2
        env.push_slot(false, true); // binder 2: star level 3
        // innermost binder is index 0
        assert_eq!(env.star_var(0), Some(0)); // level 3 at depth 4
        assert_eq!(env.star_var(1), None);
        assert_eq!(env.star_var(2), Some(2)); // level 1 at depth 4
        let menv = env.m_env();
        assert_eq!(menv.var(0), None);
        assert_eq!(menv.var(1), Some(1)); // level 2 at depth 4
        assert_eq!(menv.var(2), Some(3)); // level 0 at depth 4
    }
}
