//! The softening pipeline.
//!
//! Softening takes theories written against the hard-typed base, pushes them
//! out along the (partial) type-erasure morphism, removes the parameters the
//! erasure made unused, and then extends every pushed theory with witness
//! constants (`c_star`) derived from the typing logical relation. The
//! pipeline also produces, for each pushed theory, the natural morphism into
//! its softened counterpart and the extended logical relation over it, and it
//! finishes by re-checking the whole extended diagram.
//!
//! The same engine, parameterized by an arbitrary morphism/relation pair and
//! a naming scheme, implements the standalone relation-extension operation.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::kernel;
use crate::logrel::{
    resolve_logrel, star_extend_theory, LogicalRelation, LogrelItem, RelTranslator, StarReport,
};
use crate::morphism::{resolve_morphism, DroppedDecl, MorphItem, NameScheme};
use crate::paramdrop::{choose_positions_paired, remove_positions, PositionSet};
use crate::prelude::{ERASURE, HARD_BASE, TYPING_RELATION};
use crate::syntax::Expr;
use crate::theory::{check_diagram, flatten, Diagram, DiagramItem, Env};

/// Whether relation extension cleans up unused parameters first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarMode {
    /// Keep every parameter of the pushed-out theory.
    Raw,
    /// Remove parameters made unused by the translation before starring.
    Cleaned,
}

/// Name of the extended relation for `t`, derived from the base relation `r`.
pub fn relation_name(r: &str, t: &str) -> String {
    format!("{r}_{t}")
}

/// Everything the pipeline reports besides the new items themselves.
#[derive(Debug, Clone, Default)]
pub struct SoftenReport {
    /// Declarations whose types do not survive the translation (they lose
    /// their value form and keep only a witness, if one exists).
    pub dropped: Vec<DroppedDecl>,
    /// Constants that got no witness: (theory, constant, reason).
    pub skipped_stars: Vec<(String, String, String)>,
    /// Argument positions removed by the cleanup phase.
    pub removed: PositionSet,
    pub warnings: Vec<String>,
}

/// Result of the pipeline: the new items in dependency order, the various
/// name maps, and the full diagram they live in.
#[derive(Debug, Clone)]
pub struct SoftenOutcome {
    /// New theories, natural morphisms, relations, and translated morphisms.
    pub items: Vec<DiagramItem>,
    /// Original theory name to softened theory name. The erasure's domain
    /// maps to its codomain.
    pub theory_map: HashMap<String, String>,
    /// Theory name to its natural morphism into the softened theory.
    pub natural: HashMap<String, String>,
    /// Original morphism name to translated morphism name.
    pub morphism_map: HashMap<String, String>,
    /// Theory name to the extended relation over its natural morphism.
    pub relation_map: HashMap<String, String>,
    /// The input diagram plus all new items, fully re-checked.
    pub work: Diagram,
    pub report: SoftenReport,
}

/// Soften every theory reachable from `roots` using the built-in erasure
/// morphism and typing relation: pushout, parameter cleanup, witnesses.
pub fn soften_diagram(diagram: &Diagram, roots: &[String]) -> Result<SoftenOutcome> {
    star_pipeline(diagram, ERASURE, TYPING_RELATION, roots, true, NameScheme::Soften)
}

/// Push `theory` out along `morphism` and extend the result with witnesses
/// from `relation`; `Raw` keeps the pushed theory as-is, `Cleaned` removes
/// unused parameters first.
pub fn lr_extend_theory(
    diagram: &Diagram,
    morphism: &str,
    relation: &str,
    theory: &str,
    mode: StarMode,
) -> Result<SoftenOutcome> {
    star_pipeline(
        diagram,
        morphism,
        relation,
        &[theory.to_string()],
        mode == StarMode::Cleaned,
        NameScheme::Via,
    )
}

/// Theories that can be softened: they transitively include the hard base
/// and are not listed in `exclude` (normally the prelude's own items).
pub fn softenable_theories(diagram: &Diagram, exclude: &HashSet<String>) -> Vec<String> {
    diagram
        .theories()
        .filter(|t| !exclude.contains(&t.name))
        .filter(|t| diagram.includes_transitively(&t.name, HARD_BASE))
        .map(|t| t.name.clone())
        .collect()
}

/// The full pipeline over an arbitrary morphism/relation pair.
pub fn star_pipeline(
    diagram: &Diagram,
    morphism: &str,
    relation: &str,
    roots: &[String],
    clean: bool,
    scheme: NameScheme,
) -> Result<SoftenOutcome> {
    let m = diagram
        .morphism(morphism)
        .ok_or_else(|| Error::UnknownMorphism(morphism.to_string()))?
        .clone();
    let r = diagram
        .logrel(relation)
        .ok_or_else(|| Error::UnknownLogrel(relation.to_string()))?
        .clone();
    if r.over != m.name {
        return Err(Error::Other(format!(
            "relation `{}` lives over `{}`, not over `{}`",
            r.name, r.over, m.name
        )));
    }

    // A root may name a morphism; it stands for both endpoint theories.
    let mut theory_roots: Vec<String> = Vec::new();
    for root in roots {
        if diagram.theory(root).is_some() {
            if !theory_roots.contains(root) {
                theory_roots.push(root.clone());
            }
        } else if let Some(f) = diagram.morphism(root) {
            for t in [f.domain.clone(), f.codomain.clone()] {
                if !theory_roots.contains(&t) {
                    theory_roots.push(t);
                }
            }
        } else {
            return Err(Error::UnknownTheory(root.clone()));
        }
    }

    // Phase 1: pushout along the base morphism.
    let pushed = crate::morphism::pushout_diagram(diagram, morphism, &theory_roots, scheme)?;
    let mut work = diagram.clone();
    for item in &pushed.items {
        work.push(item.clone())?;
    }

    let mut report = SoftenReport {
        dropped: pushed.dropped.clone(),
        skipped_stars: Vec::new(),
        removed: PositionSet::new(),
        warnings: pushed.warnings.clone(),
    };

    // Pushed theories, paired with their originals, in diagram order.
    let pairs: Vec<(String, String)> = diagram
        .theories()
        .filter(|t| t.name != m.domain)
        .filter_map(|t| pushed.theory_map.get(&t.name).map(|n| (t.name.clone(), n.clone())))
        .collect();

    // Phase 2: remove the argument positions the translation made unused.
    if clean {
        let positions = choose_positions_paired(&work, &pairs)?;
        if !positions.is_empty() {
            work = remove_positions(&work, &positions)?;
        }
        report.removed = positions;
    }

    // Phase 3: witness constants, theory by theory, accumulating relation
    // cases so later theories can refer to earlier witnesses.
    let mut cases = resolve_logrel(&work, &r)?;
    let mut relation_map: HashMap<String, String> = HashMap::new();
    relation_map.insert(m.domain.clone(), r.name.clone());
    let mut star_report = StarReport::default();

    for (orig_name, pushed_name) in &pairs {
        let original = work
            .theory(orig_name)
            .ok_or_else(|| Error::UnknownTheory(orig_name.clone()))?
            .clone();
        let pushed_t = work
            .theory(pushed_name)
            .ok_or_else(|| Error::UnknownTheory(pushed_name.clone()))?
            .clone();
        let natural_nm = pushed.natural[orig_name].clone();
        let natural = work
            .morphism(&natural_nm)
            .ok_or_else(|| Error::UnknownMorphism(natural_nm.clone()))?;
        let e_map = resolve_morphism(&work, natural)?;

        let mut rel_items: Vec<LogrelItem> = Vec::new();
        let skips_before = star_report.skipped.len();
        let rebuilt = star_extend_theory(
            &work,
            &original,
            &pushed_t,
            &pushed.theory_map,
            &e_map,
            &mut cases,
            &mut rel_items,
            &mut star_report,
        )?;
        for (c, reason) in &star_report.skipped[skips_before..] {
            report.skipped_stars.push((orig_name.clone(), c.clone(), reason.clone()));
        }
        work.replace_theory(rebuilt)?;

        let rel_name = relation_name(&r.name, orig_name);
        let mut rel = LogicalRelation::new(rel_name.clone(), natural_nm);
        for inc in original.includes() {
            if let Some(inner) = relation_map.get(inc) {
                rel.items.push(LogrelItem::Include(inner.clone()));
            }
        }
        rel.items.extend(rel_items);
        relation_map.insert(orig_name.clone(), rel_name);
        work.push_logrel(rel)?;
    }

    // Phase 4: witness assignments on the translated morphisms. The witness
    // for `c_star` is the relation translation of the original assignment
    // body, taken on the codomain side of the square.
    for forig in diagram.morphisms() {
        let Some(fnew_name) = pushed.morphism_map.get(&forig.name) else { continue };
        let mut fnew = work
            .morphism(fnew_name)
            .ok_or_else(|| Error::UnknownMorphism(fnew_name.clone()))?
            .clone();

        let cod_flat = flatten(&work, &forig.codomain)?;
        let cod_env = Env::full(&cod_flat);
        let nat_cod = pushed.natural[&forig.codomain].clone();
        let nat_cod_m = work
            .morphism(&nat_cod)
            .ok_or_else(|| Error::UnknownMorphism(nat_cod.clone()))?;
        let e_cod = resolve_morphism(&work, nat_cod_m)?;
        let tr = RelTranslator::new(&work, &cod_env, &e_cod, &cases);
        let empty = crate::logrel::REnv::new();

        let dom_flat = flatten(diagram, &forig.domain)?;
        let mut stars: Vec<MorphItem> = Vec::new();
        for item in &forig.items {
            let MorphItem::Assign { name, body, .. } = item else { continue };
            let Some(entry) = dom_flat.get_short(name) else { continue };
            if !cases.cases.contains_key(&entry.qname()) {
                continue; // the constant has no witness to preserve
            }
            match tr.rtr(&empty, body) {
                Some(b) => stars.push(MorphItem::Assign {
                    name: format!("{name}_star"),
                    body: kernel::beta_normalize(&b)?,
                    loc: None,
                }),
                None => report.warnings.push(format!(
                    "morphism `{}`: no witness assignment for `{name}_star` \
                     (the relation is undefined on the assignment body); the \
                     morphism is partial there",
                    fnew.name
                )),
            }
        }
        if !stars.is_empty() {
            fnew.items.extend(stars);
            work.replace_morphism(fnew)?;
        }
    }

    // Phase 5: assemble the outcome in dependency order and re-check the
    // whole extended diagram.
    let mut items: Vec<DiagramItem> = Vec::new();
    for item in &pushed.items {
        match item {
            DiagramItem::Theory(t) => {
                let cur = work.theory(&t.name).expect("pushed theory is in work").clone();
                items.push(DiagramItem::Theory(cur));
            }
            DiagramItem::Morphism(f) => {
                let cur = work.morphism(&f.name).expect("pushed morphism is in work").clone();
                items.push(DiagramItem::Morphism(cur));
                // a natural morphism is followed by its extended relation
                let orig = pushed
                    .natural
                    .iter()
                    .find(|(t, n)| *n == &f.name && *t != &m.domain)
                    .map(|(t, _)| t.clone());
                if let Some(orig) = orig {
                    if let Some(rn) = relation_map.get(&orig) {
                        let rel = work.logrel(rn).expect("relation was pushed").clone();
                        items.push(DiagramItem::Logrel(rel));
                    }
                }
            }
            DiagramItem::Logrel(r) => {
                let cur = work.logrel(&r.name).expect("pushed relation is in work").clone();
                items.push(DiagramItem::Logrel(cur));
            }
        }
    }

    check_diagram(&work)?;

    Ok(SoftenOutcome {
        items,
        theory_map: pushed.theory_map,
        natural: pushed.natural,
        morphism_map: pushed.morphism_map,
        relation_map,
        work,
        report,
    })
}

/// Convenience: print just the new items of an outcome.
pub fn print_outcome(outcome: &SoftenOutcome) -> String {
    let d = &outcome.work;
    let mut blocks: Vec<String> = Vec::new();
    for item in &outcome.items {
        blocks.push(match item {
            DiagramItem::Theory(t) => crate::printer::print_theory(d, t),
            DiagramItem::Morphism(f) => crate::printer::print_morphism(d, f),
            DiagramItem::Logrel(r) => crate::printer::print_logrel(d, r),
        });
    }
    blocks.join("\n")
}

/// A human-readable rendering of the report, one line per event.
pub fn report_lines(report: &SoftenReport) -> Vec<String> {
    let mut out = Vec::new();
    for d in &report.dropped {
        out.push(format!("dropped: {d}"));
    }
    for (t, c, why) in &report.skipped_stars {
        out.push(format!("no witness for {t}/{c}: {why}"));
    }
    for p in &report.removed {
        out.push(format!("removed parameter {p}"));
    }
    for w in &report.warnings {
        out.push(format!("warning: {w}"));
    }
    out
}

/// Check that an expression is closed and well-typed in a theory of the
/// outcome; used by integration tests to validate generated witnesses.
pub fn infer_in(diagram: &Diagram, theory: &str, e: &Expr) -> Result<Expr> {
    let flat = flatten(diagram, theory)?;
    let env = Env::full(&flat);
    kernel::infer_type(&env, &crate::syntax::Context::new(), e)
}
