//! The judgment engine: normalization, definitional equality, type inference
//! and checking, and type-directed eta expansion of under-applied constant
//! occurrences.
//!
//! Definitional equality is beta conversion plus unfolding of defined
//! constants; there is no eta conversion. Normalization is fuel-bounded so
//! ill-behaved inputs fail with a diagnostic instead of hanging.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::printer::print_expr_debug;
use crate::syntax::{alpha_equal, shift, substitute, Binder, Context, Expr, QName};
use crate::theory::Env;

/// Maximum number of beta/unfold steps per normalization request.
pub const DEFAULT_FUEL: u64 = 1_000_000;

fn spend(fuel: &mut u64) -> Result<()> {
    if *fuel == 0 {
        return Err(Error::FuelExhausted(DEFAULT_FUEL));
    }
    *fuel -= 1;
    Ok(())
}

fn whnf_fueled(env: &Env, e: Expr, unfold: bool, fuel: &mut u64) -> Result<Expr> {
    let mut e = e;
    loop {
        match e {
            Expr::App(f, a) => {
                let fw = whnf_fueled(env, *f, unfold, fuel)?;
                match fw {
                    Expr::Lambda(_, _, body) => {
                        spend(fuel)?;
                        e = substitute(&body, &a);
                    }
                    other => return Ok(Expr::App(Box::new(other), a)),
                }
            }
            Expr::Const(q) => {
                if unfold {
                    if let Some(def) = env.lookup(&q).and_then(|d| d.definiens.clone()) {
                        spend(fuel)?;
                        e = def;
                        continue;
                    }
                }
                return Ok(Expr::Const(q));
            }
            other => return Ok(other),
        }
    }
}

fn normalize_fueled(env: &Env, e: Expr, unfold: bool, fuel: &mut u64) -> Result<Expr> {
    let w = whnf_fueled(env, e, unfold, fuel)?;
    Ok(match w {
        Expr::Pi(b, ty, body) => Expr::Pi(
            b,
            Box::new(normalize_fueled(env, *ty, unfold, fuel)?),
            Box::new(normalize_fueled(env, *body, unfold, fuel)?),
        ),
        Expr::Lambda(b, ty, body) => Expr::Lambda(
            b,
            Box::new(normalize_fueled(env, *ty, unfold, fuel)?),
            Box::new(normalize_fueled(env, *body, unfold, fuel)?),
        ),
        Expr::App(f, a) => {
            // The spine head is already weak-head normal (a variable or an
            // opaque constant), so normalizing the parts cannot create a new
            // redex at this position.
            Expr::App(
                Box::new(normalize_fueled(env, *f, unfold, fuel)?),
                Box::new(normalize_fueled(env, *a, unfold, fuel)?),
            )
        }
        atom => atom,
    })
}

/// Weak-head normal form. With `unfold`, defined constants in head position
/// are replaced by their definientia.
pub fn whnf(env: &Env, e: &Expr, unfold: bool) -> Result<Expr> {
    let mut fuel = DEFAULT_FUEL;
    whnf_fueled(env, e.clone(), unfold, &mut fuel)
}

fn beta_whnf_fueled(e: Expr, fuel: &mut u64) -> Result<Expr> {
    let mut e = e;
    loop {
        match e {
            Expr::App(f, a) => {
                let fw = beta_whnf_fueled(*f, fuel)?;
                match fw {
                    Expr::Lambda(_, _, body) => {
                        spend(fuel)?;
                        e = substitute(&body, &a);
                    }
                    other => return Ok(Expr::App(Box::new(other), a)),
                }
            }
            other => return Ok(other),
        }
    }
}

fn beta_normalize_fueled(e: Expr, fuel: &mut u64) -> Result<Expr> {
    let w = beta_whnf_fueled(e, fuel)?;
    Ok(match w {
        Expr::Pi(b, ty, body) => Expr::Pi(
            b,
            Box::new(beta_normalize_fueled(*ty, fuel)?),
            Box::new(beta_normalize_fueled(*body, fuel)?),
        ),
        Expr::Lambda(b, ty, body) => Expr::Lambda(
            b,
            Box::new(beta_normalize_fueled(*ty, fuel)?),
            Box::new(beta_normalize_fueled(*body, fuel)?),
        ),
        Expr::App(f, a) => Expr::App(
            Box::new(beta_normalize_fueled(*f, fuel)?),
            Box::new(beta_normalize_fueled(*a, fuel)?),
        ),
        atom => atom,
    })
}

/// Full beta normal form without definition unfolding. Environment-free, so
/// it can normalize expressions over theories still under construction.
pub fn beta_normalize(e: &Expr) -> Result<Expr> {
    let mut fuel = DEFAULT_FUEL;
    beta_normalize_fueled(e.clone(), &mut fuel)
}

/// Full beta normal form; with `unfold` also delta (definition unfolding).
pub fn normalize_expr(env: &Env, e: &Expr, unfold: bool) -> Result<Expr> {
    let mut fuel = DEFAULT_FUEL;
    normalize_fueled(env, e.clone(), unfold, &mut fuel)
}

/// Definitional equality: normalize both sides with unfolding, compare up to
/// alpha.
pub fn equal_in(env: &Env, a: &Expr, b: &Expr) -> Result<bool> {
    let mut fuel = DEFAULT_FUEL;
    let na = normalize_fueled(env, a.clone(), true, &mut fuel)?;
    let nb = normalize_fueled(env, b.clone(), true, &mut fuel)?;
    Ok(alpha_equal(&na, &nb))
}

fn binder_ctx_name(b: &Binder) -> String {
    b.name.clone().unwrap_or_else(|| "_".to_string())
}

fn infer_fueled(env: &Env, ctx: &Context, e: &Expr, fuel: &mut u64) -> Result<Expr> {
    match e {
        Expr::Const(q) => env
            .lookup(q)
            .map(|d| d.ty.clone())
            .ok_or_else(|| Error::UnknownConstant(q.clone())),
        Expr::Var(i) => ctx.lookup(*i).ok_or_else(|| Error::UnboundVariable {
            context: format!("in `{}`", print_expr_debug(e)),
            index: *i,
        }),
        Expr::TypeSort => Ok(Expr::KindSort),
        Expr::KindSort => Err(Error::KindMisuse {
            context: "the kind sort has no classifier".to_string(),
        }),
        Expr::Pi(b, ty, body) => {
            require_is_type(env, ctx, ty, fuel)?;
            let mut inner = ctx.clone();
            inner.push(binder_ctx_name(b), (**ty).clone());
            let sort = infer_fueled(env, &inner, body, fuel)?;
            let sort = normalize_fueled(env, sort, true, fuel)?;
            match sort {
                Expr::TypeSort | Expr::KindSort => Ok(sort),
                other => Err(Error::NotAClassifier {
                    context: format!("body of `{}`", print_expr_debug(e)),
                    found: print_expr_debug(&other),
                }),
            }
        }
        Expr::Lambda(b, ty, body) => {
            require_is_type(env, ctx, ty, fuel)?;
            let mut inner = ctx.clone();
            inner.push(binder_ctx_name(b), (**ty).clone());
            let body_ty = infer_fueled(env, &inner, body, fuel)?;
            if matches!(normalize_fueled(env, body_ty.clone(), true, fuel)?, Expr::KindSort) {
                return Err(Error::KindMisuse {
                    context: format!("lambda body of `{}` is a sort", print_expr_debug(e)),
                });
            }
            Ok(Expr::Pi(b.clone(), ty.clone(), Box::new(body_ty)))
        }
        Expr::App(f, a) => {
            let fty = infer_fueled(env, ctx, f, fuel)?;
            let fty = whnf_fueled(env, fty, true, fuel)?;
            let Expr::Pi(_, dom, cod) = fty else {
                return Err(Error::NotAFunction {
                    context: format!("applying `{}`", print_expr_debug(f)),
                    found: print_expr_debug(&fty),
                });
            };
            let aty = infer_fueled(env, ctx, a, fuel)?;
            let na = normalize_fueled(env, aty.clone(), true, fuel)?;
            let nd = normalize_fueled(env, (*dom).clone(), true, fuel)?;
            if !alpha_equal(&na, &nd) {
                return Err(Error::TypeMismatch {
                    context: format!("argument `{}`", print_expr_debug(a)),
                    expected: print_expr_debug(&nd),
                    found: print_expr_debug(&na),
                });
            }
            Ok(substitute(&cod, a))
        }
    }
}

fn require_is_type(env: &Env, ctx: &Context, ty: &Expr, fuel: &mut u64) -> Result<()> {
    let sort = infer_fueled(env, ctx, ty, fuel)?;
    let sort = normalize_fueled(env, sort, true, fuel)?;
    if sort != Expr::TypeSort {
        return Err(Error::BinderNotAType {
            context: format!("binder type `{}`", print_expr_debug(ty)),
            found: print_expr_debug(&sort),
        });
    }
    Ok(())
}

/// Infer the principal type of `e` in `ctx` over `env`.
pub fn infer_type(env: &Env, ctx: &Context, e: &Expr) -> Result<Expr> {
    let mut fuel = DEFAULT_FUEL;
    infer_fueled(env, ctx, e, &mut fuel)
}

/// Check `e` against `expected` (up to definitional equality).
pub fn check_type(env: &Env, ctx: &Context, e: &Expr, expected: &Expr) -> Result<()> {
    let mut fuel = DEFAULT_FUEL;
    let got = infer_fueled(env, ctx, e, &mut fuel)?;
    let ng = normalize_fueled(env, got, true, &mut fuel)?;
    let ne = normalize_fueled(env, expected.clone(), true, &mut fuel)?;
    if !alpha_equal(&ng, &ne) {
        return Err(Error::TypeMismatch {
            context: format!("checking `{}`", print_expr_debug(e)),
            expected: print_expr_debug(&ne),
            found: print_expr_debug(&ng),
        });
    }
    Ok(())
}

/// Beta-normalized arity (number of leading pis of the declared type) of a
/// constant.
pub fn arity_of(env: &Env, q: &QName) -> Result<usize> {
    let decl = env.lookup(q).ok_or_else(|| Error::UnknownConstant(q.clone()))?;
    Ok(normalize_expr(env, &decl.ty, false)?.count_pis())
}

/// Eta-expand every occurrence of the constants in `arities` that is applied
/// to fewer arguments than its arity: `c t1 .. tk` with arity n > k becomes
/// `[y(k+1): B(k+1)] .. [yn: Bn] c t1 .. tk y(k+1) .. yn`, with the binder
/// types taken from the constant's pi telescope instantiated with the
/// arguments already present.
pub fn eta_expand_applications(
    env: &Env,
    e: &Expr,
    arities: &HashMap<QName, usize>,
) -> Result<Expr> {
    eta_rec(env, e, arities)
}

fn eta_rec(env: &Env, e: &Expr, arities: &HashMap<QName, usize>) -> Result<Expr> {
    match e {
        Expr::App(_, _) => {
            let (head, args) = e.spine();
            let head = match head {
                Expr::Const(_) | Expr::Var(_) | Expr::TypeSort | Expr::KindSort => head.clone(),
                other => eta_rec(env, other, arities)?,
            };
            let args = args
                .into_iter()
                .map(|a| eta_rec(env, a, arities))
                .collect::<Result<Vec<_>>>()?;
            expand_spine(env, Expr::apps(head, args), arities)
        }
        Expr::Const(_) => expand_spine(env, e.clone(), arities),
        Expr::Pi(b, ty, body) => Ok(Expr::Pi(
            b.clone(),
            Box::new(eta_rec(env, ty, arities)?),
            Box::new(eta_rec(env, body, arities)?),
        )),
        Expr::Lambda(b, ty, body) => Ok(Expr::Lambda(
            b.clone(),
            Box::new(eta_rec(env, ty, arities)?),
            Box::new(eta_rec(env, body, arities)?),
        )),
        Expr::Var(_) | Expr::TypeSort | Expr::KindSort => Ok(e.clone()),
    }
}

fn expand_spine(env: &Env, e: Expr, arities: &HashMap<QName, usize>) -> Result<Expr> {
    let (head, args) = e.spine();
    let Expr::Const(q) = head else { return Ok(e) };
    let Some(&target) = arities.get(q) else { return Ok(e) };
    if args.len() >= target {
        return Ok(e);
    }

    let decl = env.lookup(q).ok_or_else(|| Error::UnknownConstant(q.clone()))?;
    let mut rem = normalize_expr(env, &decl.ty, false)?;
    for a in &args {
        match rem {
            Expr::Pi(_, _, body) => rem = substitute(&body, a),
            // Fewer pis than the arity map claims: leave the occurrence alone.
            _ => return Ok(e),
        }
    }

    let mut wrapper: Vec<(Binder, Expr)> = Vec::new();
    let mut cursor = &rem;
    while wrapper.len() < target - args.len() {
        let Expr::Pi(b, ty, body) = cursor else { break };
        wrapper.push((b.clone(), eta_rec(env, ty, arities)?));
        cursor = body;
    }
    let extra = wrapper.len();
    if extra == 0 {
        return Ok(e);
    }

    let mut out = Expr::apps(shift(&e, extra as isize), (0..extra).rev().map(Expr::Var));
    for (b, ty) in wrapper.into_iter().rev() {
        out = Expr::Lambda(b, Box::new(ty), Box::new(out));
    }
    Ok(out)
}
