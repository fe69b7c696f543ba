//! Detection and removal of unused argument positions.
//!
//! An argument position `c^i` (1-based, within the leading pi telescope of a
//! constant's type) is *unused* relative to a set `P` of positions when the
//! `i`-th bound variable occurs, in every place where it is bound — the rest
//! of `c`'s telescope, `c`'s definiens, and the body of every morphism
//! assignment to `c` — only inside arguments that sit at positions in `P`.
//! The least such `P` (over candidate positions) is closed under a monotone
//! fixpoint: dropping one parameter can make another one unused.
//!
//! Removal deletes the chosen binders from declarations and definitions and
//! the corresponding arguments from every application, after eta-expanding
//! under-applied occurrences so that every argument list is explicit.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::kernel;
use crate::logrel::{LogicalRelation, LogrelItem};
use crate::morphism::{MEnv, MorphItem, Morphism};
use crate::syntax::{Binder, Expr, QName};
use crate::theory::{flatten, Annotation, Declaration, Diagram, DiagramItem, Theory, TheoryItem};

/// One argument position: the `index`-th (1-based) leading pi binder of the
/// type of `constant`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArgPosition {
    pub constant: QName,
    pub index: usize,
}

impl ArgPosition {
    pub fn new(constant: QName, index: usize) -> Self {
        ArgPosition { constant, index }
    }
}

impl std::fmt::Display for ArgPosition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}^{}", self.constant, self.index)
    }
}

pub type PositionSet = BTreeSet<ArgPosition>;

/// The arity of a constant: the number of leading pis of its beta-normalized
/// declared type.
pub fn arity(diagram: &Diagram, constant: &QName) -> Result<usize> {
    let flat = flatten(diagram, &constant.theory)?;
    let env = crate::theory::Env::full(&flat);
    kernel::arity_of(&env, constant)
}

fn positions_of<'a>(positions: &'a PositionSet, q: &QName) -> BTreeSet<usize> {
    positions
        .iter()
        .filter(|p| p.constant == *q)
        .map(|p| p.index)
        .collect()
}

/// Does `Var(target)` (indexed at the root of `e`) occur in `e` outside of
/// arguments at positions in `positions`?
fn var_visible(e: &Expr, target: usize, positions: &PositionSet) -> bool {
    fn walk(e: &Expr, target: usize, depth: usize, absorbed: bool, positions: &PositionSet) -> bool {
        match e {
            Expr::Var(i) => *i == target + depth && !absorbed,
            Expr::Const(_) | Expr::TypeSort | Expr::KindSort => false,
            Expr::Pi(_, ty, body) | Expr::Lambda(_, ty, body) => {
                walk(ty, target, depth, absorbed, positions)
                    || walk(body, target, depth + 1, absorbed, positions)
            }
            Expr::App(_, _) => {
                let (head, args) = e.spine();
                if walk(head, target, depth, absorbed, positions) {
                    return true;
                }
                let head_positions = match head {
                    Expr::Const(q) => Some(positions_of(positions, q)),
                    _ => None,
                };
                args.iter().enumerate().any(|(j, a)| {
                    let here_absorbed = absorbed
                        || head_positions
                            .as_ref()
                            .is_some_and(|ps| ps.contains(&(j + 1)));
                    walk(a, target, depth, here_absorbed, positions)
                })
            }
        }
    }
    walk(e, target, 0, false, positions)
}

/// Check the binder of a pi telescope: is binder `index` (1-based) visible in
/// the later binder types or the core?
fn binder_visible_in_type(ty: &Expr, index: usize, positions: &PositionSet) -> bool {
    let (binders, core) = ty.pi_telescope();
    if index > binders.len() {
        return true; // no such binder: treat as not removable
    }
    let bi = index - 1;
    for (bj, (_, bty)) in binders.iter().enumerate().skip(bi + 1) {
        if var_visible(bty, bj - 1 - bi, positions) {
            return true;
        }
    }
    var_visible(core, binders.len() - 1 - bi, positions)
}

/// Same for a lambda prefix (definiens or morphism assignment body). The body
/// must be eta-root-expanded by the caller so that at least `index` lambdas
/// are explicit; fewer lambdas count as visible (not removable).
fn binder_visible_in_lambda(e: &Expr, index: usize, positions: &PositionSet) -> bool {
    let (binders, core) = e.lambda_telescope();
    if index > binders.len() {
        return true;
    }
    let bi = index - 1;
    for (bj, (_, bty)) in binders.iter().enumerate().skip(bi + 1) {
        if var_visible(bty, bj - 1 - bi, positions) {
            return true;
        }
    }
    var_visible(core, binders.len() - 1 - bi, positions)
}

/// Eta-expand the root of `e` so that it starts with at least `n` lambdas,
/// using the leading pis of its inferred type for the missing binders.
fn eta_expand_root(
    env: &crate::theory::Env,
    e: &Expr,
    n: usize,
) -> Result<Expr> {
    let have = e.lambda_telescope().0.len();
    if have >= n {
        return Ok(e.clone());
    }
    let ty = kernel::infer_type(env, &crate::syntax::Context::new(), e)?;
    let ty = kernel::normalize_expr(env, &ty, false)?;
    let (binders, _) = ty.pi_telescope();
    if binders.len() < n {
        return Err(Error::Other(format!(
            "cannot eta-expand `{}` to {n} binders: its type has only {} leading pis",
            crate::printer::print_expr_debug(e),
            binders.len()
        )));
    }
    let binders: Vec<(Binder, Expr)> =
        binders.into_iter().take(n).map(|(b, t)| (b.clone(), t.clone())).collect();
    let applied = Expr::apps(
        crate::syntax::shift(e, n as isize),
        (0..n).rev().map(Expr::Var),
    );
    let mut out = kernel::beta_normalize(&applied)?;
    for (b, t) in binders.into_iter().rev() {
        out = Expr::Lambda(b, Box::new(t), Box::new(out));
    }
    Ok(out)
}

/// The three binding sites of a constant, with bodies eta-root-expanded
/// where a lambda prefix is required.
fn binding_sites(
    diagram: &Diagram,
    q: &QName,
    max_index: usize,
) -> Result<(Expr, Option<Expr>, Vec<Expr>)> {
    let t = diagram
        .theory(&q.theory)
        .ok_or_else(|| Error::UnknownTheory(q.theory.clone()))?;
    let decl = t
        .local(&q.name)
        .ok_or_else(|| Error::UnknownConstant(q.clone()))?;
    let flat = flatten(diagram, &q.theory)?;
    let env = crate::theory::Env::full(&flat);
    let ty = kernel::normalize_expr(&env, &decl.ty, false)?;
    let definiens = match &decl.definiens {
        Some(d) => Some(eta_expand_root(&env, d, max_index)?),
        None => None,
    };
    let mut assignments = Vec::new();
    for m in diagram.morphisms() {
        let Ok(dom_flat) = flatten(diagram, &m.domain) else { continue };
        for item in &m.items {
            if let MorphItem::Assign { name, body, .. } = item {
                let Some(entry) = dom_flat.get_short(name) else { continue };
                if entry.qname() != *q {
                    continue;
                }
                let Ok(cod_flat) = flatten(diagram, &m.codomain) else { continue };
                let cod_env = crate::theory::Env::full(&cod_flat);
                assignments.push(eta_expand_root(&cod_env, body, max_index)?);
            }
        }
    }
    Ok((ty, definiens, assignments))
}

/// Is every position in `positions` unused relative to the whole set?
pub fn is_unused(diagram: &Diagram, positions: &PositionSet) -> Result<bool> {
    for p in positions {
        let (ty, definiens, assignments) = binding_sites(diagram, &p.constant, p.index)?;
        if binder_visible_in_type(&ty, p.index, positions) {
            return Ok(false);
        }
        if let Some(d) = &definiens {
            if binder_visible_in_lambda(d, p.index, positions) {
                return Ok(false);
            }
        }
        for a in &assignments {
            if binder_visible_in_lambda(a, p.index, positions) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Candidate positions and the fixpoint, with explicit pairing between the
/// theories whose declarations are candidates and the theories carrying the
/// (possibly translated) constants the positions refer to.
pub(crate) fn choose_positions_paired(
    diagram: &Diagram,
    pairs: &[(String, String)],
) -> Result<PositionSet> {
    let mut candidates: Vec<ArgPosition> = Vec::new();
    for (orig_name, target_name) in pairs {
        let orig = diagram
            .theory(orig_name)
            .ok_or_else(|| Error::UnknownTheory(orig_name.clone()))?;
        let target = diagram
            .theory(target_name)
            .ok_or_else(|| Error::UnknownTheory(target_name.clone()))?;
        for od in orig.decls() {
            let Some(td) = target.local(&od.name) else { continue };
            let oty = kernel::beta_normalize(&od.ty)?;
            let tty = kernel::beta_normalize(&td.ty)?;
            let (obinders, _) = oty.pi_telescope();
            let tarity = tty.count_pis();
            let kept: BTreeSet<usize> = od.kept_positions().collect();
            for (i, (b, _)) in obinders.iter().enumerate().take(tarity) {
                let index = i + 1;
                if b.name.is_none() || kept.contains(&index) {
                    continue;
                }
                candidates.push(ArgPosition::new(
                    QName::new(target_name.clone(), od.name.clone()),
                    index,
                ));
            }
        }
    }

    // Greatest fixpoint: start from every candidate and evict a position
    // while its binder is visible relative to the remaining set.  Starting
    // from above is what lets mutually dependent positions — each occurring
    // only inside argument slots the other would absorb — be removed
    // simultaneously; a fixpoint from below would never admit either.
    let mut sites: BTreeMap<QName, (Expr, Option<Expr>, Vec<Expr>)> = BTreeMap::new();
    for c in &candidates {
        if !sites.contains_key(&c.constant) {
            let max = candidates
                .iter()
                .filter(|p| p.constant == c.constant)
                .map(|p| p.index)
                .max()
                .unwrap_or(0);
            sites.insert(c.constant.clone(), binding_sites(diagram, &c.constant, max)?);
        }
    }
    let mut chosen: PositionSet = candidates.iter().cloned().collect();
    loop {
        let mut evicted = false;
        for c in &candidates {
            if !chosen.contains(c) {
                continue;
            }
            let (ty, definiens, assignments) = &sites[&c.constant];
            let visible = binder_visible_in_type(ty, c.index, &chosen)
                || definiens
                    .as_ref()
                    .is_some_and(|d| binder_visible_in_lambda(d, c.index, &chosen))
                || assignments
                    .iter()
                    .any(|a| binder_visible_in_lambda(a, c.index, &chosen));
            if visible {
                chosen.remove(c);
                evicted = true;
            }
        }
        if !evicted {
            break;
        }
    }
    Ok(chosen)
}

/// Choose all removable positions in a diagram: every named, non-`#keep`
/// parameter of a declared constant whose variable is unused (relative to
/// the chosen set itself, computed as a fixpoint).
pub fn choose_positions(diagram: &Diagram) -> Result<PositionSet> {
    let pairs: Vec<(String, String)> = diagram
        .theories()
        .map(|t| (t.name.clone(), t.name.clone()))
        .collect();
    choose_positions_paired(diagram, &pairs)
}

/// Delete the arguments at `positions` from a constant-headed spine,
/// recursively.
fn spine_delete(e: &Expr, positions: &PositionSet) -> Expr {
    match e {
        Expr::App(_, _) => {
            let (head, args) = e.spine();
            let dropped: BTreeSet<usize> = match head {
                Expr::Const(q) => positions_of(positions, q),
                _ => BTreeSet::new(),
            };
            let head = spine_delete(head, positions);
            let kept = args
                .into_iter()
                .enumerate()
                .filter(|(j, _)| !dropped.contains(&(j + 1)))
                .map(|(_, a)| spine_delete(a, positions));
            Expr::apps(head, kept.collect::<Vec<_>>())
        }
        Expr::Pi(b, ty, body) => Expr::Pi(
            b.clone(),
            Box::new(spine_delete(ty, positions)),
            Box::new(spine_delete(body, positions)),
        ),
        Expr::Lambda(b, ty, body) => Expr::Lambda(
            b.clone(),
            Box::new(spine_delete(ty, positions)),
            Box::new(spine_delete(body, positions)),
        ),
        atom => atom.clone(),
    }
}

/// Renumber variables after deleting binders, erroring if a deleted variable
/// is still referenced.
fn remap_expr(e: &Expr, env: &mut MEnv, context: &str) -> Result<Expr> {
    match e {
        Expr::Var(i) => env.var(*i).map(Expr::Var).ok_or_else(|| Error::UnsoundRemoval {
            context: context.to_string(),
            msg: "a removed parameter is still referenced".to_string(),
        }),
        Expr::Const(_) | Expr::TypeSort | Expr::KindSort => Ok(e.clone()),
        Expr::Pi(b, ty, body) => {
            let ty2 = remap_expr(ty, env, context)?;
            env.push_kept();
            let body2 = remap_expr(body, env, context);
            env.pop();
            Ok(Expr::Pi(b.clone(), Box::new(ty2), Box::new(body2?)))
        }
        Expr::Lambda(b, ty, body) => {
            let ty2 = remap_expr(ty, env, context)?;
            env.push_kept();
            let body2 = remap_expr(body, env, context);
            env.pop();
            Ok(Expr::Lambda(b.clone(), Box::new(ty2), Box::new(body2?)))
        }
        Expr::App(f, a) => Ok(Expr::app(
            remap_expr(f, env, context)?,
            remap_expr(a, env, context)?,
        )),
    }
}

/// Delete the binders at `drops` (1-based) from the leading pi or lambda
/// telescope of `e`.
fn drop_prefix(e: &Expr, drops: &BTreeSet<usize>, is_pi: bool, context: &str) -> Result<Expr> {
    if drops.is_empty() {
        return Ok(e.clone());
    }
    let (binders, core) = if is_pi { e.pi_telescope() } else { e.lambda_telescope() };
    if let Some(&max) = drops.iter().max() {
        if max > binders.len() {
            return Err(Error::UnsoundRemoval {
                context: context.to_string(),
                msg: format!(
                    "position {max} exceeds the {} explicit binders",
                    binders.len()
                ),
            });
        }
    }
    let binders: Vec<(Binder, Expr)> =
        binders.into_iter().map(|(b, t)| (b.clone(), t.clone())).collect();
    let mut env = MEnv::new();
    let mut kept: Vec<(Binder, Expr)> = Vec::new();
    for (j, (b, ty)) in binders.into_iter().enumerate() {
        if drops.contains(&(j + 1)) {
            env.push_dropped();
        } else {
            let ty2 = remap_expr(&ty, &mut env, context)?;
            env.push_kept();
            kept.push((b, ty2));
        }
    }
    let mut out = remap_expr(core, &mut env, context)?;
    for (b, ty) in kept.into_iter().rev() {
        out = if is_pi {
            Expr::Pi(b, Box::new(ty), Box::new(out))
        } else {
            Expr::Lambda(b, Box::new(ty), Box::new(out))
        };
    }
    Ok(out)
}

fn adjust_annotations(annotations: &[Annotation], drops: &BTreeSet<usize>) -> Vec<Annotation> {
    annotations
        .iter()
        .filter_map(|Annotation::KeepParam(i)| {
            if drops.contains(i) {
                None
            } else {
                let shift = drops.iter().filter(|d| **d < *i).count();
                Some(Annotation::KeepParam(i - shift))
            }
        })
        .collect()
}

/// Rewrite one expression: eta-expand occurrences of affected constants,
/// then delete the dropped arguments.
fn rewrite_expr(
    env: &crate::theory::Env,
    e: &Expr,
    positions: &PositionSet,
    arities: &HashMap<QName, usize>,
) -> Result<Expr> {
    let expanded = kernel::eta_expand_applications(env, e, arities)?;
    Ok(spine_delete(&expanded, positions))
}

/// Remove `positions` from the whole diagram: binders disappear from the
/// types, definientia and assignments of the affected constants, and the
/// corresponding arguments disappear from every application. Errors when a
/// removed parameter is still referenced anywhere.
pub fn remove_positions(diagram: &Diagram, positions: &PositionSet) -> Result<Diagram> {
    // arities of every affected constant, for eta expansion
    let mut arities: HashMap<QName, usize> = HashMap::new();
    for p in positions {
        if !arities.contains_key(&p.constant) {
            arities.insert(p.constant.clone(), arity(diagram, &p.constant)?);
        }
    }
    for p in positions {
        let a = arities[&p.constant];
        if p.index > a {
            return Err(Error::UnsoundRemoval {
                context: format!("position {p}"),
                msg: format!("the constant has arity {a}"),
            });
        }
    }

    let mut out = Diagram::new();
    for item in &diagram.items {
        let new_item = match item {
            DiagramItem::Theory(t) => {
                let flat = flatten(diagram, &t.name)?;
                let env = crate::theory::Env::full(&flat);
                let mut nt = Theory::new(t.name.clone());
                for titem in &t.items {
                    match titem {
                        TheoryItem::Include(i) => {
                            nt.items.push(TheoryItem::Include(i.clone()))
                        }
                        TheoryItem::Decl(d) => {
                            let q = d.qname(&t.name);
                            let drops = positions_of(positions, &q);
                            let context = format!("removing parameters of `{q}`");
                            let mut ty = rewrite_expr(&env, &d.ty, positions, &arities)?;
                            if !drops.is_empty() {
                                ty = kernel::beta_normalize(&ty)?;
                                ty = drop_prefix(&ty, &drops, true, &context)?;
                            }
                            let definiens = match &d.definiens {
                                Some(def) => {
                                    let mut body = def.clone();
                                    if !drops.is_empty() {
                                        body = eta_expand_root(
                                            &env,
                                            &body,
                                            *drops.iter().max().unwrap(),
                                        )?;
                                    }
                                    let mut body =
                                        rewrite_expr(&env, &body, positions, &arities)?;
                                    if !drops.is_empty() {
                                        body = drop_prefix(&body, &drops, false, &context)?;
                                    }
                                    Some(body)
                                }
                                None => None,
                            };
                            nt.items.push(TheoryItem::Decl(Declaration {
                                name: d.name.clone(),
                                ty,
                                definiens,
                                annotations: adjust_annotations(&d.annotations, &drops),
                                loc: d.loc.clone(),
                            }));
                        }
                    }
                }
                DiagramItem::Theory(nt)
            }
            DiagramItem::Morphism(m) => {
                let dom_flat = flatten(diagram, &m.domain)?;
                let cod_flat = flatten(diagram, &m.codomain)?;
                let cod_env = crate::theory::Env::full(&cod_flat);
                let mut nm = Morphism::new(m.name.clone(), m.domain.clone(), m.codomain.clone());
                for mitem in &m.items {
                    match mitem {
                        MorphItem::Include(i) => {
                            nm.items.push(MorphItem::Include(i.clone()))
                        }
                        MorphItem::Assign { name, body, loc } => {
                            let drops = match dom_flat.get_short(name) {
                                Some(entry) => positions_of(positions, &entry.qname()),
                                None => BTreeSet::new(),
                            };
                            let context =
                                format!("morphism `{}`, assignment for `{name}`", m.name);
                            let mut b = body.clone();
                            if !drops.is_empty() {
                                b = eta_expand_root(
                                    &cod_env,
                                    &b,
                                    *drops.iter().max().unwrap(),
                                )?;
                            }
                            let mut b = rewrite_expr(&cod_env, &b, positions, &arities)?;
                            if !drops.is_empty() {
                                b = drop_prefix(&b, &drops, false, &context)?;
                            }
                            nm.items.push(MorphItem::Assign {
                                name: name.clone(),
                                body: b,
                                loc: loc.clone(),
                            });
                        }
                    }
                }
                DiagramItem::Morphism(nm)
            }
            DiagramItem::Logrel(r) => {
                let over = diagram
                    .morphism(&r.over)
                    .ok_or_else(|| Error::UnknownMorphism(r.over.clone()))?;
                let cod_flat = flatten(diagram, &over.codomain)?;
                let cod_env = crate::theory::Env::full(&cod_flat);
                let mut nr = LogicalRelation::new(r.name.clone(), r.over.clone());
                for ritem in &r.items {
                    match ritem {
                        LogrelItem::Include(i) => {
                            nr.items.push(LogrelItem::Include(i.clone()))
                        }
                        LogrelItem::Case { name, body, loc } => {
                            nr.items.push(LogrelItem::Case {
                                name: name.clone(),
                                body: rewrite_expr(&cod_env, body, positions, &arities)?,
                                loc: loc.clone(),
                            });
                        }
                    }
                }
                DiagramItem::Logrel(nr)
            }
        };
        out.push(new_item)?;
    }
    Ok(out)
}
