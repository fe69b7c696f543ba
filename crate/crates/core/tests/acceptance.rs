//! End-to-end acceptance suite.
//!
//! Eight criteria, each implemented as a function returning `Ok` or a failure
//! description.  The single `#[test]` below runs all of them and prints one
//! pass/fail line per criterion; it panics at the end if any criterion failed.
//!
//! 1. Softening the bundled hard product theory reproduces the frozen soft
//!    product theory byte-for-byte (and modulo alpha-beta via the CLI differ).
//! 2. Softening the seven hard function-type theories reproduces the frozen
//!    soft library, including the translated morphism.
//! 3. The raw pushout of the product theory along the total erasure, and the
//!    raw logical-relation extension along the partial erasure, reproduce
//!    their frozen intermediate stages.
//! 4. The translated simple-to-dependent morphism matches an independently
//!    hand-written oracle, with the starred application constant in the
//!    starred application assignment.
//! 5. Every output of 1-4 passes the kernel checkers.
//! 6. Property suites (>= 1000 cases each): morphism translation preserves
//!    typing; relation translation commutes with substitution; chosen
//!    drop-positions are unused, named, and never protected; parsing is
//!    stable under printing.
//! 7. Softening a larger diagram preserves its include/morphism graph.
//! 8. Softening is deterministic: repeated runs are byte-identical.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestError, TestRunner};

use softlf::diff::{diff_diagrams, DiffMode};
use softlf::kernel::{beta_normalize, check_type};
use softlf::logrel::apply_logrel;
use softlf::morphism::{apply_morphism, apply_morphism_context, MorphItem, Morphism};
use softlf::paramdrop::{choose_positions, is_unused, ArgPosition};
use softlf::parser::{parse_diagram, parse_file_into};
use softlf::prelude::load_prelude_into;
use softlf::printer::print_expr;
use softlf::soften::{lr_extend_theory, print_outcome, soften_diagram, softenable_theories, StarMode};
use softlf::syntax::{alpha_equal, shift, substitute, Binder, Context, Expr, QName};
use softlf::theory::{check_diagram, flatten, Diagram, Env, TheoryItem};

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn corpus(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel)
}

fn corpus_str(rel: &str) -> String {
    corpus(rel).to_string_lossy().into_owned()
}

fn read_corpus(rel: &str) -> Result<String, String> {
    std::fs::read_to_string(corpus(rel)).map_err(|e| format!("cannot read {rel}: {e}"))
}

/// Run the CLI binary; error (with stderr attached) on nonzero exit.
fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_softlf"))
        .args(args)
        .output()
        .map_err(|e| format!("cannot spawn CLI: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "CLI {:?} exited with {}: {}",
            args,
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Prelude plus the given corpus files, parsed in order.
fn load_with_prelude(rels: &[&str]) -> Result<Diagram, String> {
    let mut d = Diagram::new();
    load_prelude_into(&mut d).map_err(|e| format!("prelude: {e}"))?;
    for rel in rels {
        let src = read_corpus(rel)?;
        parse_file_into(&mut d, rel, &src).map_err(|e| format!("{rel}: {e}"))?;
    }
    Ok(d)
}

/// The given corpus files without any prelude.
fn load_no_prelude(rels: &[&str]) -> Result<Diagram, String> {
    let mut d = Diagram::new();
    for rel in rels {
        let src = read_corpus(rel)?;
        parse_file_into(&mut d, rel, &src).map_err(|e| format!("{rel}: {e}"))?;
    }
    Ok(d)
}

fn konst(theory: &str, name: &str) -> Expr {
    Expr::Const(QName::new(theory, name))
}

const FUN_ROOTS: [&str; 7] =
    ["HEqual", "HSimpFun", "HDepFun", "HBeta", "HEta", "HExten", "HDepBeta"];

fn fun_roots_owned() -> Vec<String> {
    FUN_ROOTS.iter().map(|s| s.to_string()).collect()
}

/// A small deterministic generator (splitmix64) so each proptest case is a
/// pure function of one `u64` seed.
struct Sm(u64);

impl Sm {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn below(&mut self, n: usize) -> usize {
        (self.next() % n.max(1) as u64) as usize
    }

    fn coin(&mut self) -> bool {
        self.next() & 1 == 0
    }
}

/// Run a seeded property under proptest and convert failures into a message.
fn run_property<F>(label: &str, cases: u32, f: F) -> Result<(), String>
where
    F: Fn(u64) -> Result<(), String>,
{
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let result = runner.run(&any::<u64>(), |seed| {
        f(seed).map_err(|m| proptest::test_runner::TestCaseError::fail(m))?;
        Ok(())
    });
    match result {
        Ok(()) => Ok(()),
        Err(TestError::Fail(reason, seed)) => {
            Err(format!("{label}: failed for seed {seed}: {reason}"))
        }
        Err(TestError::Abort(reason)) => Err(format!("{label}: aborted: {reason}")),
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: soft product theory
// ---------------------------------------------------------------------------

fn criterion_1() -> Result<(), String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out_path = tmp.path().join("sprod_out.lf");
    let out_str = out_path.to_string_lossy().into_owned();

    run_cli(&["soften", &corpus_str("hardlib.lf"), "--roots", "HProd", "-o", &out_str])?;

    let got = std::fs::read_to_string(&out_path).map_err(|e| e.to_string())?;
    let want = read_corpus("expected/sprod.lf")?;
    if got != want {
        return Err(format!(
            "soften output differs from frozen soft product theory\n--- got ---\n{got}--- want ---\n{want}"
        ));
    }

    // Independent comparison modulo alpha-beta through the CLI differ.
    let diff = run_cli(&[
        "diff",
        &out_str,
        &corpus_str("expected/sprod.lf"),
        "--modulo",
        "alpha-beta",
    ])?;
    if diff.trim() != "identical" {
        return Err(format!("CLI diff reported differences:\n{diff}"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Criterion 2: soft function-type library
// ---------------------------------------------------------------------------

fn criterion_2() -> Result<(), String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out_path = tmp.path().join("funlib_out.lf");
    let out_str = out_path.to_string_lossy().into_owned();

    let roots = FUN_ROOTS.join(",");
    run_cli(&["soften", &corpus_str("hardlib.lf"), "--roots", &roots, "-o", &out_str])?;

    let got = std::fs::read_to_string(&out_path).map_err(|e| e.to_string())?;
    let want = read_corpus("expected/funlib_soft.lf")?;
    if got != want {
        return Err(format!(
            "soften output differs from frozen soft function-type library\n--- got ---\n{got}--- want ---\n{want}"
        ));
    }

    let diff = run_cli(&[
        "diff",
        &out_str,
        &corpus_str("expected/funlib_soft.lf"),
        "--modulo",
        "alpha-beta",
    ])?;
    if diff.trim() != "identical" {
        return Err(format!("CLI diff reported differences:\n{diff}"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Criterion 3: intermediate stages (raw pushout, raw relation extension)
// ---------------------------------------------------------------------------

fn criterion_3() -> Result<(), String> {
    // Stage 1: pushout of the product theory along the total erasure.
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out_path = tmp.path().join("hprod_pushout_out.lf");
    let out_str = out_path.to_string_lossy().into_owned();

    run_cli(&[
        "pushout",
        &corpus_str("totalte.lf"),
        "--no-prelude",
        "--morph",
        "TE",
        "--roots",
        "HProd",
        "-o",
        &out_str,
    ])?;

    let got = std::fs::read_to_string(&out_path).map_err(|e| e.to_string())?;
    let want = read_corpus("expected/hprod_pushout.lf")?;
    if got != want {
        return Err(format!(
            "pushout output differs from frozen stage\n--- got ---\n{got}--- want ---\n{want}"
        ));
    }

    // The same pair of files compared structurally modulo alpha-beta.
    let base = load_no_prelude(&["totalte.lf"])?;
    let mut d1 = base.clone();
    parse_file_into(&mut d1, "golden", &want).map_err(|e| e.to_string())?;
    let mut d2 = base;
    parse_file_into(&mut d2, "output", &got).map_err(|e| e.to_string())?;
    let report = diff_diagrams(&d1, &d2, DiffMode::AlphaBeta);
    if !report.is_empty() {
        return Err(format!("pushout differs modulo alpha-beta: {:?}", report.lines));
    }

    // Stage 2: raw logical-relation extension along the partial erasure,
    // before unused parameters are removed.
    let d = load_with_prelude(&["hardlib.lf"])?;
    let out = lr_extend_theory(&d, "TE", "TP", "HProd", StarMode::Raw)
        .map_err(|e| format!("raw extension: {e}"))?;
    let printed = print_outcome(&out);
    let want = read_corpus("expected/lr_raw_hprod.lf")?;
    if printed != want {
        return Err(format!(
            "raw relation extension differs from frozen stage\n--- got ---\n{printed}--- want ---\n{want}"
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Criterion 4: translated morphism vs. hand-written oracle
// ---------------------------------------------------------------------------

/// The expected softened simple-to-dependent morphism, written out by hand.
/// The lambda annotations are the unique types the two softened theories
/// force on each binder.  Note the starred dependent application in the
/// starred application assignment.
const SFTODF_ORACLE: &str = "\
morph HSFtoDF_oracle : HSimpFun_soft -> HDepFun_soft =
  include HEqual_soft.
  fun := [a: tp] [b: tp] dfun a ([x: term] b).
  lam := [a: tp] [F: term -> term] dlam a F.
  app := [f: term] [x: term] dapp f x.
  lam_star := [a: tp] [b: tp] [F: term -> term]
    [F_star: {x: term} ded (of x a) -> ded (of (F x) b)]
    dlam_star a ([x: term] b) F F_star.
  app_star := [a: tp] [b: tp] [f: term]
    [f_star: ded (of f (dfun a ([x: term] b)))]
    [x: term] [x_star: ded (of x a)]
    dapp_star a ([y: term] b) f f_star x x_star.
";

fn morphism_assignments(m: &Morphism) -> (Vec<String>, Vec<(String, Expr)>) {
    let mut includes = Vec::new();
    let mut assigns = Vec::new();
    for item in &m.items {
        match item {
            MorphItem::Include(t) => includes.push(t.clone()),
            MorphItem::Assign { name, body, .. } => assigns.push((name.clone(), body.clone())),
        }
    }
    includes.sort();
    assigns.sort_by(|a, b| a.0.cmp(&b.0));
    (includes, assigns)
}

fn criterion_4() -> Result<(), String> {
    let d = load_with_prelude(&["hardlib.lf"])?;
    let out = soften_diagram(&d, &fun_roots_owned()).map_err(|e| e.to_string())?;
    let soft_name = out
        .morphism_map
        .get("HSFtoDF")
        .ok_or("no softened counterpart of HSFtoDF")?;
    let got = out
        .work
        .morphism(soft_name)
        .ok_or("softened morphism missing from work diagram")?
        .clone();

    // Parse the oracle in the context of the computed softened theories.
    let mut with_oracle = out.work.clone();
    parse_file_into(&mut with_oracle, "oracle", SFTODF_ORACLE).map_err(|e| e.to_string())?;
    check_diagram(&with_oracle).map_err(|e| format!("oracle does not check: {e}"))?;
    let want = with_oracle.morphism("HSFtoDF_oracle").unwrap();

    if (got.domain.as_str(), got.codomain.as_str())
        != (want.domain.as_str(), want.codomain.as_str())
    {
        return Err(format!(
            "endpoints differ: got {} -> {}, want {} -> {}",
            got.domain, got.codomain, want.domain, want.codomain
        ));
    }
    let (got_inc, got_assigns) = morphism_assignments(&got);
    let (want_inc, want_assigns) = morphism_assignments(want);
    if got_inc != want_inc {
        return Err(format!("includes differ: got {got_inc:?}, want {want_inc:?}"));
    }
    let got_names: Vec<&String> = got_assigns.iter().map(|(n, _)| n).collect();
    let want_names: Vec<&String> = want_assigns.iter().map(|(n, _)| n).collect();
    if got_names != want_names {
        return Err(format!("assigned constants differ: got {got_names:?}, want {want_names:?}"));
    }
    for ((name, gb), (_, wb)) in got_assigns.iter().zip(&want_assigns) {
        let gn = beta_normalize(gb).map_err(|e| e.to_string())?;
        let wn = beta_normalize(wb).map_err(|e| e.to_string())?;
        if !alpha_equal(&gn, &wn) {
            return Err(format!(
                "assignment for {name} differs:\n  got  {}\n  want {}",
                print_expr(&out.work, gb),
                print_expr(&out.work, wb)
            ));
        }
    }

    // The starred application assignment must use the starred dependent
    // application, not the unstarred one.
    let app_star_body = got_assigns
        .iter()
        .find(|(n, _)| n == "app_star")
        .map(|(_, b)| print_expr(&out.work, b))
        .ok_or("no app_star assignment")?;
    if !app_star_body.contains("dapp_star") {
        return Err(format!("app_star assignment does not use dapp_star: {app_star_body}"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Criterion 5: all outputs of 1-4 pass the checkers
// ---------------------------------------------------------------------------

fn criterion_5() -> Result<(), String> {
    // The frozen outputs, loaded in their proper contexts.
    let loaded: [(&str, Diagram); 4] = [
        ("expected/sprod.lf", load_with_prelude(&["expected/sprod.lf"])?),
        ("expected/funlib_soft.lf", load_with_prelude(&["expected/funlib_soft.lf"])?),
        (
            "expected/hprod_pushout.lf",
            load_no_prelude(&["totalte.lf", "expected/hprod_pushout.lf"])?,
        ),
        (
            "expected/lr_raw_hprod.lf",
            load_with_prelude(&["hardlib.lf", "expected/lr_raw_hprod.lf"])?,
        ),
    ];
    for (name, d) in &loaded {
        check_diagram(d).map_err(|e| format!("{name} does not check: {e}"))?;
    }

    // The freshly computed outcomes, re-checked as whole diagrams (theories,
    // natural morphisms, and extended relations included).
    let d = load_with_prelude(&["hardlib.lf"])?;
    let prod = soften_diagram(&d, &["HProd".to_string()]).map_err(|e| e.to_string())?;
    check_diagram(&prod.work).map_err(|e| format!("soft product work: {e}"))?;
    let funs = soften_diagram(&d, &fun_roots_owned()).map_err(|e| e.to_string())?;
    check_diagram(&funs.work).map_err(|e| format!("soft function-type work: {e}"))?;
    let raw = lr_extend_theory(&d, "TE", "TP", "HProd", StarMode::Raw)
        .map_err(|e| e.to_string())?;
    check_diagram(&raw.work).map_err(|e| format!("raw extension work: {e}"))?;

    let total = load_no_prelude(&["totalte.lf"])?;
    check_diagram(&total).map_err(|e| format!("total-erasure library: {e}"))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Criterion 6a: morphism translation preserves typing
// ---------------------------------------------------------------------------

/// Generate a product type over two type variables; `depth` bounds nesting.
/// Indices are relative to the fixed context [a, b, u, v].
fn gen_prod_ty(r: &mut Sm, depth: usize) -> Expr {
    if depth == 0 || r.below(3) == 0 {
        if r.coin() { Expr::Var(3) } else { Expr::Var(2) }
    } else {
        Expr::apps(
            konst("HProd", "prod"),
            vec![gen_prod_ty(r, depth - 1), gen_prod_ty(r, depth - 1)],
        )
    }
}

/// The canonical inhabitant of a generated product type.
fn base_prod_term(ty: &Expr) -> Expr {
    match ty {
        Expr::Var(3) => Expr::Var(1),
        Expr::Var(2) => Expr::Var(0),
        _ => {
            let (_, args) = ty.spine();
            let s = args[0].clone();
            let t = args[1].clone();
            Expr::apps(
                konst("HProd", "pair"),
                vec![s.clone(), t.clone(), base_prod_term(&s), base_prod_term(&t)],
            )
        }
    }
}

fn is_prod(ty: &Expr) -> Option<(Expr, Expr)> {
    let (head, args) = ty.spine();
    match head {
        Expr::Const(q) if q.name == "prod" && args.len() == 2 => {
            Some((args[0].clone(), args[1].clone()))
        }
        _ => None,
    }
}

/// A random term of the given product type, using pairing and projections.
fn gen_prod_term(r: &mut Sm, ty: &Expr, depth: usize) -> Expr {
    if depth == 0 {
        return base_prod_term(ty);
    }
    match r.below(4) {
        0 => base_prod_term(ty),
        1 => match is_prod(ty) {
            Some((s, t)) => Expr::apps(
                konst("HProd", "pair"),
                vec![
                    s.clone(),
                    t.clone(),
                    gen_prod_term(r, &s, depth - 1),
                    gen_prod_term(r, &t, depth - 1),
                ],
            ),
            None => base_prod_term(ty),
        },
        2 => {
            let other = gen_prod_ty(r, 1);
            let wider = Expr::apps(konst("HProd", "prod"), vec![ty.clone(), other.clone()]);
            Expr::apps(
                konst("HProd", "projL"),
                vec![ty.clone(), other, gen_prod_term(r, &wider, depth - 1)],
            )
        }
        _ => {
            let other = gen_prod_ty(r, 1);
            let wider = Expr::apps(konst("HProd", "prod"), vec![other.clone(), ty.clone()]);
            Expr::apps(
                konst("HProd", "projR"),
                vec![other, ty.clone(), gen_prod_term(r, &wider, depth - 1)],
            )
        }
    }
}

fn property_morphism_typing() -> Result<(), String> {
    let d = load_with_prelude(&["hardlib.lf"])?;
    let out = soften_diagram(&d, &["HProd".to_string()]).map_err(|e| e.to_string())?;
    let work = &out.work;
    let natural = out.natural.get("HProd").ok_or("no natural morphism for HProd")?;
    let soft_name = out.theory_map.get("HProd").ok_or("no softened product theory")?;

    let hard_flat = flatten(work, "HProd").map_err(|e| e.to_string())?;
    let hard_env = Env::full(&hard_flat);
    let soft_flat = flatten(work, soft_name).map_err(|e| e.to_string())?;
    let soft_env = Env::full(&soft_flat);

    let tp = konst("HTyped", "tp");
    let tm = konst("HTyped", "tm");
    let mut ctx = Context::new();
    ctx.push("a", tp.clone());
    ctx.push("b", tp.clone());
    ctx.push("u", Expr::app(tm.clone(), Expr::Var(1)));
    ctx.push("v", Expr::app(tm.clone(), Expr::Var(1)));

    let soft_ctx =
        apply_morphism_context(work, natural, &ctx).map_err(|e| e.to_string())?;
    let soft_tp = konst("STyped", "tp");
    let soft_term = konst("STyped", "term");

    run_property("morphism translation preserves typing", 1000, |seed| {
        let mut r = Sm(seed);
        let ty_depth = 1 + r.below(3);
        let ty = gen_prod_ty(&mut r, ty_depth);
        let term_depth = 1 + r.below(3);
        let term = gen_prod_term(&mut r, &ty, term_depth);

        // Sanity: the generated judgment holds on the hard side.
        let hard_ty = Expr::app(tm.clone(), ty.clone());
        check_type(&hard_env, &ctx, &term, &hard_ty)
            .map_err(|e| format!("generator produced ill-typed input: {e}"))?;

        // Translate along the natural morphism and re-check on the soft side.
        let m_ty = apply_morphism(work, natural, &ty).map_err(|e| e.to_string())?;
        let m_term = apply_morphism(work, natural, &term).map_err(|e| e.to_string())?;
        let m_hard_ty = apply_morphism(work, natural, &hard_ty).map_err(|e| e.to_string())?;

        check_type(&soft_env, &soft_ctx, &m_ty, &soft_tp)
            .map_err(|e| format!("translated type is ill-typed: {e}"))?;
        if !alpha_equal(&m_hard_ty, &soft_term) {
            return Err(format!(
                "translated classifier is not the bare term type: {}",
                print_expr(work, &m_hard_ty)
            ));
        }
        check_type(&soft_env, &soft_ctx, &m_term, &m_hard_ty)
            .map_err(|e| format!("translated term is ill-typed: {e}"))?;
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Criterion 6b: relation translation commutes with substitution
// ---------------------------------------------------------------------------

/// A closed product theory with two base types and one inhabitant of each,
/// appended to the main library so that closed terms exist.
const XPROD_SRC: &str = "\
theory XProd =
  include HProd.
  ca : tp.
  cb : tp.
  cu : tm ca.
  cv : tm cb.
";

fn gen_closed_ty(r: &mut Sm, depth: usize) -> Expr {
    if depth == 0 || r.below(3) == 0 {
        if r.coin() { konst("XProd", "ca") } else { konst("XProd", "cb") }
    } else {
        Expr::apps(
            konst("HProd", "prod"),
            vec![gen_closed_ty(r, depth - 1), gen_closed_ty(r, depth - 1)],
        )
    }
}

fn base_closed_term(ty: &Expr) -> Expr {
    match is_prod(ty) {
        Some((s, t)) => Expr::apps(
            konst("HProd", "pair"),
            vec![s.clone(), t.clone(), base_closed_term(&s), base_closed_term(&t)],
        ),
        None => match ty {
            Expr::Const(q) if q.name == "ca" => konst("XProd", "cu"),
            _ => konst("XProd", "cv"),
        },
    }
}

/// A term of type `ty`, possibly using the variable `Var(0)` when its type
/// (`var0`) matches the goal.
fn gen_open_term(r: &mut Sm, ty: &Expr, depth: usize, var0: Option<&Expr>) -> Expr {
    if let Some(vt) = var0 {
        if alpha_equal(vt, ty) && r.below(3) == 0 {
            return Expr::Var(0);
        }
    }
    if depth == 0 {
        return base_closed_term(ty);
    }
    match r.below(4) {
        0 => base_closed_term(ty),
        1 => match is_prod(ty) {
            Some((s, t)) => Expr::apps(
                konst("HProd", "pair"),
                vec![
                    s.clone(),
                    t.clone(),
                    gen_open_term(r, &s, depth - 1, var0),
                    gen_open_term(r, &t, depth - 1, var0),
                ],
            ),
            None => base_closed_term(ty),
        },
        2 => {
            let other = gen_closed_ty(r, 1);
            let wider = Expr::apps(konst("HProd", "prod"), vec![ty.clone(), other.clone()]);
            Expr::apps(
                konst("HProd", "projL"),
                vec![ty.clone(), other, gen_open_term(r, &wider, depth - 1, var0)],
            )
        }
        _ => {
            let other = gen_closed_ty(r, 1);
            let wider = Expr::apps(konst("HProd", "prod"), vec![other.clone(), ty.clone()]);
            Expr::apps(
                konst("HProd", "projR"),
                vec![other, ty.clone(), gen_open_term(r, &wider, depth - 1, var0)],
            )
        }
    }
}

fn property_relation_substitution() -> Result<(), String> {
    let mut d = load_with_prelude(&["hardlib.lf"])?;
    parse_file_into(&mut d, "xprod", XPROD_SRC).map_err(|e| e.to_string())?;
    let out = soften_diagram(&d, &["XProd".to_string()]).map_err(|e| e.to_string())?;
    let work = &out.work;
    let natural = out.natural.get("XProd").ok_or("no natural morphism for XProd")?;
    let relation = out.relation_map.get("XProd").ok_or("no extended relation for XProd")?;

    let tm = konst("HTyped", "tm");
    let empty = Context::new();

    run_property("relation translation commutes with substitution", 1000, |seed| {
        let mut r = Sm(seed);
        let ty_depth = 1 + r.below(2);
        let ty = gen_closed_ty(&mut r, ty_depth);

        let mut ctx = Context::new();
        ctx.push("x", Expr::app(tm.clone(), ty.clone()));

        let open_depth = 1 + r.below(3);
        let open_term = gen_open_term(&mut r, &ty, open_depth, Some(&ty));
        let arg_depth = 1 + r.below(2);
        let closed_arg = gen_open_term(&mut r, &ty, arg_depth, None);

        // Left side: substitute first, then translate the closed result.
        let substituted = substitute(&open_term, &closed_arg);
        let lhs = apply_logrel(work, relation, &empty, &substituted)
            .map_err(|e| format!("translating substituted term: {e}"))?;

        // Right side: translate the open term (its variable contributes a
        // value slot and a witness slot), then fill the witness slot with the
        // translated argument and the value slot with the erased argument.
        let open_translated = apply_logrel(work, relation, &ctx, &open_term)
            .map_err(|e| format!("translating open term: {e}"))?;
        let arg_translated = apply_logrel(work, relation, &empty, &closed_arg)
            .map_err(|e| format!("translating argument: {e}"))?;
        let arg_erased =
            apply_morphism(work, natural, &closed_arg).map_err(|e| e.to_string())?;
        let rhs = substitute(&substitute(&open_translated, &arg_translated), &arg_erased);

        let lhs_n = beta_normalize(&lhs).map_err(|e| e.to_string())?;
        let rhs_n = beta_normalize(&rhs).map_err(|e| e.to_string())?;
        if !alpha_equal(&lhs_n, &rhs_n) {
            return Err(format!(
                "sides differ:\n  lhs {}\n  rhs {}",
                print_expr(work, &lhs_n),
                print_expr(work, &rhs_n)
            ));
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Criterion 6c: chosen drop-positions are unused, named, and unprotected
// ---------------------------------------------------------------------------

/// One random self-contained theory: a base type, a predicate, and a handful
/// of constants with a mix of named and anonymous parameters, some protected.
struct DropCase {
    src: String,
    protected: Vec<ArgPosition>,
    named: HashSet<(String, usize)>,
}

fn gen_drop_case(r: &mut Sm) -> DropCase {
    let mut src = String::from("theory R =\n  b1 : type.\n  P : b1 -> type.\n  k : b1.\n");
    let mut protected = Vec::new();
    let mut named = HashSet::new();
    // Term-level constants declared so far, with their arities.
    let mut heads: Vec<(String, usize)> = Vec::new();

    // An atom of the base type: the point constant, a variable in scope, or a
    // fully applied earlier constant.
    fn atom(r: &mut Sm, scope: &[String], heads: &[(String, usize)], depth: usize) -> String {
        let use_head = depth > 0 && !heads.is_empty() && r.below(3) == 0;
        if use_head {
            let (name, arity) = heads[r.below(heads.len())].clone();
            if arity == 0 {
                return name;
            }
            let args: Vec<String> =
                (0..arity).map(|_| atom(r, scope, heads, depth - 1)).collect();
            return format!("({} {})", name, args.join(" "));
        }
        let pool = 1 + scope.len();
        let pick = r.below(pool);
        if pick == 0 { "k".to_string() } else { scope[pick - 1].clone() }
    }

    let count = 1 + r.below(5);
    for i in 0..count {
        let name = format!("c{i}");
        let arity = r.below(5);
        let named_mask: Vec<bool> = (0..arity).map(|_| r.below(10) < 6).collect();

        let mut keeps = Vec::new();
        for j in 1..=arity {
            if r.below(8) == 0 {
                keeps.push(j);
            }
        }
        for &j in &keeps {
            src.push_str(&format!("  #keep {j}\n"));
            protected.push(ArgPosition::new(QName::new("R", name.clone()), j));
        }

        let mut ty = String::new();
        let mut scope = Vec::new();
        for (j, &is_named) in named_mask.iter().enumerate() {
            if is_named {
                let v = format!("x{j}");
                ty.push_str(&format!("{{{v}: b1}} "));
                named.insert((name.clone(), j + 1));
                scope.push(v);
            } else {
                ty.push_str("b1 -> ");
            }
        }
        let term_level = r.coin();
        if term_level {
            ty.push_str("b1");
        } else {
            ty.push_str(&format!("P {}", atom(r, &scope, &heads, 1)));
        }
        src.push_str(&format!("  {name} : {ty}.\n"));
        if term_level {
            heads.push((name, arity));
        }
    }
    DropCase { src, protected, named }
}

fn property_paramdrop() -> Result<(), String> {
    // Deterministic part: the bundled libraries themselves.
    for (rels, with_prelude) in [
        (vec!["hardlib.lf"], true),
        (vec!["biglib.lf"], true),
        (vec!["totalte.lf"], false),
    ] {
        let label = rels.join("+");
        let d = if with_prelude {
            load_with_prelude(&rels)?
        } else {
            load_no_prelude(&rels)?
        };
        let chosen = choose_positions(&d).map_err(|e| format!("{label}: {e}"))?;
        if !is_unused(&d, &chosen).map_err(|e| format!("{label}: {e}"))? {
            return Err(format!("{label}: chosen positions are not unused"));
        }
    }

    run_property("drop-position selection is sound", 1000, |seed| {
        let mut r = Sm(seed);
        let case = gen_drop_case(&mut r);
        let d = parse_diagram("random.lf", &case.src)
            .map_err(|e| format!("generated source fails to parse: {e}\n{}", case.src))?;
        check_diagram(&d)
            .map_err(|e| format!("generated source fails to check: {e}\n{}", case.src))?;

        let chosen = choose_positions(&d).map_err(|e| e.to_string())?;
        if !is_unused(&d, &chosen).map_err(|e| e.to_string())? {
            return Err(format!("chosen positions are not unused\n{}", case.src));
        }
        for p in &case.protected {
            if chosen.contains(p) {
                return Err(format!(
                    "protected position {}^{} was chosen\n{}",
                    p.constant.name, p.index, case.src
                ));
            }
        }
        for p in &chosen {
            if !case.named.contains(&(p.constant.name.clone(), p.index)) {
                return Err(format!(
                    "anonymous position {}^{} was chosen\n{}",
                    p.constant.name, p.index, case.src
                ));
            }
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Criterion 6d: parsing is stable under printing
// ---------------------------------------------------------------------------

fn property_roundtrip() -> Result<(), String> {
    // Deterministic part: every bundled and frozen file, printed and
    // re-parsed, is alpha-equal to itself.
    let sets: [(&str, Vec<&str>, bool); 7] = [
        ("hardlib", vec!["hardlib.lf"], true),
        ("biglib", vec!["biglib.lf"], true),
        ("totalte", vec!["totalte.lf"], false),
        ("sprod", vec!["expected/sprod.lf"], true),
        ("funlib", vec!["expected/funlib_soft.lf"], true),
        ("pushout", vec!["totalte.lf", "expected/hprod_pushout.lf"], false),
        ("lr_raw", vec!["hardlib.lf", "expected/lr_raw_hprod.lf"], true),
    ];
    for (label, rels, with_prelude) in sets {
        let d1 = if with_prelude {
            load_with_prelude(&rels)?
        } else {
            load_no_prelude(&rels)?
        };
        let printed = softlf::printer::print_diagram(&d1);
        let d2 = parse_diagram("roundtrip.lf", &printed)
            .map_err(|e| format!("{label}: printed form fails to parse: {e}"))?;
        let report = diff_diagrams(&d1, &d2, DiffMode::Alpha);
        if !report.is_empty() {
            return Err(format!("{label}: roundtrip changed the diagram: {:?}", report.lines));
        }
    }

    // Random part: closed terms printed into a fresh declaration, re-parsed,
    // and compared structurally.
    let mut base = load_with_prelude(&["hardlib.lf"])?;
    parse_file_into(&mut base, "xprod", XPROD_SRC).map_err(|e| e.to_string())?;
    let tm = konst("HTyped", "tm");
    let tp = konst("HTyped", "tp");

    run_property("printed expressions re-parse unchanged", 1000, |seed| {
        let mut r = Sm(seed);
        let ty_depth = 1 + r.below(3);
        let ty = gen_closed_ty(&mut r, ty_depth);
        let term_depth = 1 + r.below(3);
        let term = gen_open_term(&mut r, &ty, term_depth, None);

        let classifier = Expr::app(tm.clone(), ty.clone());
        let (decl_ty, decl_def) = if r.below(3) == 0 {
            // Wrap in one binder for lambda/pi coverage.
            (
                Expr::Pi(
                    Binder { name: Some("c".to_string()) },
                    Box::new(tp.clone()),
                    Box::new(shift(&classifier, 1)),
                ),
                Expr::Lambda(
                    Binder { name: Some("c".to_string()) },
                    Box::new(tp.clone()),
                    Box::new(shift(&term, 1)),
                ),
            )
        } else {
            (classifier.clone(), term.clone())
        };

        let src = format!(
            "theory Z =\n  include XProd.\n  z : {} := {}.\n",
            print_expr(&base, &decl_ty),
            print_expr(&base, &decl_def)
        );
        let mut d = base.clone();
        parse_file_into(&mut d, "case.lf", &src)
            .map_err(|e| format!("printed declaration fails to parse: {e}\n{src}"))?;
        let z = d
            .theory("Z")
            .and_then(|t| {
                t.items.iter().find_map(|i| match i {
                    TheoryItem::Decl(decl) if decl.name == "z" => Some(decl.clone()),
                    _ => None,
                })
            })
            .ok_or("declaration z missing after parse")?;
        if !alpha_equal(&z.ty, &decl_ty) {
            return Err(format!(
                "type changed in roundtrip:\n  printed  {}\n  reparsed {}",
                print_expr(&base, &decl_ty),
                print_expr(&base, &z.ty)
            ));
        }
        let def = z.definiens.as_ref().ok_or("definiens missing after parse")?;
        if !alpha_equal(def, &decl_def) {
            return Err(format!(
                "definiens changed in roundtrip:\n  printed  {}\n  reparsed {}",
                print_expr(&base, &decl_def),
                print_expr(&base, def)
            ));
        }
        Ok(())
    })
}

fn criterion_6() -> Result<(), String> {
    property_morphism_typing()?;
    property_relation_substitution()?;
    property_paramdrop()?;
    property_roundtrip()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Criterion 7: structure preservation on a larger diagram
// ---------------------------------------------------------------------------

fn criterion_7() -> Result<(), String> {
    let d = load_with_prelude(&["biglib.lf"])?;
    let mut prelude_only = Diagram::new();
    load_prelude_into(&mut prelude_only).map_err(|e| e.to_string())?;
    let prelude_names: HashSet<String> =
        prelude_only.items.iter().map(|i| i.name().to_string()).collect();

    let roots = softenable_theories(&d, &prelude_names);
    if roots.len() < 7 {
        return Err(format!("diagram too small: {} softenable theories", roots.len()));
    }
    let out = soften_diagram(&d, &roots).map_err(|e| e.to_string())?;
    if out.morphism_map.len() < 5 {
        return Err(format!("diagram too small: {} morphisms softened", out.morphism_map.len()));
    }

    // Include edges, mapped through the theory renaming.
    let mut want_edges = Vec::new();
    for t in &roots {
        let soft = out.theory_map.get(t).ok_or_else(|| format!("{t} not softened"))?;
        let theory = d.theory(t).ok_or_else(|| format!("{t} missing"))?;
        for inc in theory.includes() {
            if let Some(soft_inc) = out.theory_map.get(inc) {
                want_edges.push((soft.clone(), soft_inc.clone()));
            }
        }
    }
    let mut got_edges = Vec::new();
    for t in &roots {
        let soft = &out.theory_map[t];
        let theory = out
            .work
            .theory(soft)
            .ok_or_else(|| format!("softened theory {soft} missing"))?;
        for inc in theory.includes() {
            got_edges.push((soft.clone(), inc.to_string()));
        }
    }
    want_edges.sort();
    got_edges.sort();
    if want_edges != got_edges {
        return Err(format!(
            "include graph changed:\n  want {want_edges:?}\n  got  {got_edges:?}"
        ));
    }

    // Morphism endpoints, mapped through the renaming.
    let mut want_arrows = Vec::new();
    let mut got_arrows = Vec::new();
    for (orig, soft) in &out.morphism_map {
        let om = d.morphism(orig).ok_or_else(|| format!("{orig} missing"))?;
        let dom = out.theory_map.get(&om.domain).ok_or_else(|| format!("domain of {orig}"))?;
        let cod = out.theory_map.get(&om.codomain).ok_or_else(|| format!("codomain of {orig}"))?;
        want_arrows.push((soft.clone(), dom.clone(), cod.clone()));
        let sm = out
            .work
            .morphism(soft)
            .ok_or_else(|| format!("softened morphism {soft} missing"))?;
        got_arrows.push((soft.clone(), sm.domain.clone(), sm.codomain.clone()));
    }
    want_arrows.sort();
    got_arrows.sort();
    if want_arrows != got_arrows {
        return Err(format!(
            "morphism graph changed:\n  want {want_arrows:?}\n  got  {got_arrows:?}"
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Criterion 8: determinism
// ---------------------------------------------------------------------------

fn criterion_8() -> Result<(), String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [(&str, Vec<String>); 3] = [
        (
            "soften hardlib with witnesses",
            vec![
                "soften".into(),
                corpus_str("hardlib.lf"),
                "--roots".into(),
                FUN_ROOTS.join(","),
                "--emit-witnesses".into(),
            ],
        ),
        ("soften biglib", vec!["soften".into(), corpus_str("biglib.lf")]),
        (
            "pushout totalte",
            vec![
                "pushout".into(),
                corpus_str("totalte.lf"),
                "--no-prelude".into(),
                "--morph".into(),
                "TE".into(),
                "--roots".into(),
                "HProd".into(),
            ],
        ),
    ];
    for (i, (label, args)) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let path = tmp.path().join(format!("run{i}_{run}.lf"));
            let mut full: Vec<String> = args.clone();
            full.push("-o".into());
            full.push(path.to_string_lossy().into_owned());
            let arg_refs: Vec<&str> = full.iter().map(|s| s.as_str()).collect();
            run_cli(&arg_refs)?;
            outputs.push(std::fs::read_to_string(&path).map_err(|e| e.to_string())?);
        }
        if outputs[0] != outputs[1] {
            return Err(format!("{label}: two runs differ"));
        }
        if outputs[0].is_empty() {
            return Err(format!("{label}: empty output"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

#[test]
fn acceptance() {
    let criteria: [(usize, &str, fn() -> Result<(), String>); 8] = [
        (1, "soft product theory matches frozen output", criterion_1),
        (2, "soft function-type library matches frozen output", criterion_2),
        (3, "intermediate stages match frozen outputs", criterion_3),
        (4, "translated morphism matches hand-written oracle", criterion_4),
        (5, "all outputs pass the checkers", criterion_5),
        (6, "property suites hold (1000 cases each)", criterion_6),
        (7, "softening preserves the include/morphism graph", criterion_7),
        (8, "softening is deterministic", criterion_8),
    ];
    let mut failures = Vec::new();
    for (number, title, run) in criteria {
        match run() {
            Ok(()) => println!("criterion {number}: PASS — {title}"),
            Err(message) => {
                println!("criterion {number}: FAIL — {title}: {message}");
                failures.push(number);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
