//! Structural comparison of two diagrams, modulo alpha or alpha-beta
//! equivalence of the expressions involved.

use crate::kernel;
use crate::logrel::LogrelItem;
use crate::morphism::MorphItem;
use crate::printer::print_expr;
use crate::syntax::{alpha_equal, Expr};
use crate::theory::{Diagram, DiagramItem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffMode {
    /// Compare up to renaming of bound variables.
    Alpha,
    /// Beta-normalize both sides first, then compare up to renaming.
    AlphaBeta,
}

/// One report line per difference; an empty report means the diagrams agree.
#[derive(Debug, Clone, Default)]
pub struct DiffReport {
    pub lines: Vec<String>,
}

impl DiffReport {
    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    fn push(&mut self, line: String) {
        self.lines.push(line);
    }
}

fn exprs_agree(mode: DiffMode, x: &Expr, y: &Expr) -> bool {
    match mode {
        DiffMode::Alpha => alpha_equal(x, y),
        DiffMode::AlphaBeta => match (kernel::beta_normalize(x), kernel::beta_normalize(y)) {
            (Ok(nx), Ok(ny)) => alpha_equal(&nx, &ny),
            _ => alpha_equal(x, y),
        },
    }
}

fn item_kind(item: &DiagramItem) -> &'static str {
    match item {
        DiagramItem::Theory(_) => "theory",
        DiagramItem::Morphism(_) => "morphism",
        DiagramItem::Logrel(_) => "logrel",
    }
}

/// Compare two diagrams item by item, pairing by name.
pub fn diff_diagrams(a: &Diagram, b: &Diagram, mode: DiffMode) -> DiffReport {
    let mut report = DiffReport::default();

    for item in &a.items {
        let name = item.name();
        match (item, b.items.iter().find(|i| i.name() == name)) {
            (_, None) => report.push(format!("only in left: {} {name}", item_kind(item))),
            (DiagramItem::Theory(ta), Some(DiagramItem::Theory(tb))) => {
                diff_theories(a, b, ta, tb, mode, &mut report)
            }
            (DiagramItem::Morphism(ma), Some(DiagramItem::Morphism(mb))) => {
                diff_morphisms(a, b, ma, mb, mode, &mut report)
            }
            (DiagramItem::Logrel(ra), Some(DiagramItem::Logrel(rb))) => {
                diff_logrels(a, b, ra, rb, mode, &mut report)
            }
            (_, Some(other)) => report.push(format!(
                "kind mismatch for `{name}`: {} on the left, {} on the right",
                item_kind(item),
                item_kind(other)
            )),
        }
    }
    for item in &b.items {
        if !a.items.iter().any(|i| i.name() == item.name()) {
            report.push(format!("only in right: {} {}", item_kind(item), item.name()));
        }
    }
    report
}

fn diff_theories(
    a: &Diagram,
    b: &Diagram,
    ta: &crate::theory::Theory,
    tb: &crate::theory::Theory,
    mode: DiffMode,
    report: &mut DiffReport,
) {
    let ia: Vec<&str> = ta.includes().collect();
    let ib: Vec<&str> = tb.includes().collect();
    for i in &ia {
        if !ib.contains(i) {
            report.push(format!("theory {}: include {i} only on the left", ta.name));
        }
    }
    for i in &ib {
        if !ia.contains(i) {
            report.push(format!("theory {}: include {i} only on the right", ta.name));
        }
    }
    for da in ta.decls() {
        let Some(db) = tb.local(&da.name) else {
            report.push(format!("theory {}: `{}` only on the left", ta.name, da.name));
            continue;
        };
        if !exprs_agree(mode, &da.ty, &db.ty) {
            report.push(format!(
                "theory {}: `{}` has type {} on the left but {} on the right",
                ta.name,
                da.name,
                print_expr(a, &da.ty),
                print_expr(b, &db.ty)
            ));
        }
        match (&da.definiens, &db.definiens) {
            (None, None) => {}
            (Some(x), Some(y)) => {
                if !exprs_agree(mode, x, y) {
                    report.push(format!(
                        "theory {}: `{}` is defined as {} on the left but {} on the right",
                        ta.name,
                        da.name,
                        print_expr(a, x),
                        print_expr(b, y)
                    ));
                }
            }
            (Some(_), None) => report.push(format!(
                "theory {}: `{}` is defined only on the left",
                ta.name, da.name
            )),
            (None, Some(_)) => report.push(format!(
                "theory {}: `{}` is defined only on the right",
                ta.name, da.name
            )),
        }
        let ka: Vec<usize> = da.kept_positions().collect();
        let kb: Vec<usize> = db.kept_positions().collect();
        if ka != kb {
            report.push(format!(
                "theory {}: `{}` keeps {ka:?} on the left but {kb:?} on the right",
                ta.name, da.name
            ));
        }
    }
    for db in tb.decls() {
        if ta.local(&db.name).is_none() {
            report.push(format!("theory {}: `{}` only on the right", ta.name, db.name));
        }
    }
}

fn diff_morphisms(
    a: &Diagram,
    b: &Diagram,
    ma: &crate::morphism::Morphism,
    mb: &crate::morphism::Morphism,
    mode: DiffMode,
    report: &mut DiffReport,
) {
    if ma.domain != mb.domain || ma.codomain != mb.codomain {
        report.push(format!(
            "morphism {}: {} -> {} on the left but {} -> {} on the right",
            ma.name, ma.domain, ma.codomain, mb.domain, mb.codomain
        ));
        return;
    }
    let inc = |m: &crate::morphism::Morphism| -> Vec<String> {
        m.items
            .iter()
            .filter_map(|i| match i {
                MorphItem::Include(n) => Some(n.clone()),
                _ => None,
            })
            .collect()
    };
    let (ia, ib) = (inc(ma), inc(mb));
    if ia != ib {
        report.push(format!(
            "morphism {}: includes {ia:?} on the left but {ib:?} on the right",
            ma.name
        ));
    }
    fn assigns(m: &crate::morphism::Morphism) -> Vec<(&String, &Expr)> {
        m.items
            .iter()
            .filter_map(|i| match i {
                MorphItem::Assign { name, body, .. } => Some((name, body)),
                _ => None,
            })
            .collect()
    }
    for (name, body) in assigns(ma) {
        match assigns(mb).iter().find(|(n, _)| *n == name) {
            None => report.push(format!(
                "morphism {}: assignment for `{name}` only on the left",
                ma.name
            )),
            Some((_, other)) => {
                if !exprs_agree(mode, body, other) {
                    report.push(format!(
                        "morphism {}: `{name}` is {} on the left but {} on the right",
                        ma.name,
                        print_expr(a, body),
                        print_expr(b, other)
                    ));
                }
            }
        }
    }
    for (name, _) in assigns(mb) {
        if !assigns(ma).iter().any(|(n, _)| *n == name) {
            report.push(format!(
                "morphism {}: assignment for `{name}` only on the right",
                ma.name
            ));
        }
    }
}

fn diff_logrels(
    a: &Diagram,
    b: &Diagram,
    ra: &crate::logrel::LogicalRelation,
    rb: &crate::logrel::LogicalRelation,
    mode: DiffMode,
    report: &mut DiffReport,
) {
    if ra.over != rb.over {
        report.push(format!(
            "logrel {}: over {} on the left but {} on the right",
            ra.name, ra.over, rb.over
        ));
        return;
    }
    let cases = |r: &crate::logrel::LogicalRelation| -> Vec<(String, Expr)> {
        r.items
            .iter()
            .filter_map(|i| match i {
                LogrelItem::Case { name, body, .. } => Some((name.clone(), body.clone())),
                _ => None,
            })
            .collect()
    };
    let inc = |r: &crate::logrel::LogicalRelation| -> Vec<String> {
        r.items
            .iter()
            .filter_map(|i| match i {
                LogrelItem::Include(n) => Some(n.clone()),
                _ => None,
            })
            .collect()
    };
    let (ia, ib) = (inc(ra), inc(rb));
    if ia != ib {
        report.push(format!(
            "logrel {}: includes {ia:?} on the left but {ib:?} on the right",
            ra.name
        ));
    }
    for (name, body) in cases(ra) {
        match cases(rb).iter().find(|(n, _)| *n == name) {
            None => report
                .push(format!("logrel {}: case for `{name}` only on the left", ra.name)),
            Some((_, other)) => {
                if !exprs_agree(mode, &body, other) {
                    report.push(format!(
                        "logrel {}: `{name}` is {} on the left but {} on the right",
                        ra.name,
                        print_expr(a, &body),
                        print_expr(b, other)
                    ));
                }
            }
        }
    }
    for (name, _) in cases(rb) {
        if !cases(ra).iter().any(|(n, _)| *n == name) {
            report.push(format!(
                "logrel {}: case for `{name}` only on the right",
                ra.name
            ));
        }
    }
}
