//! Embedding terminating function bodies into the logic.

use std::collections::BTreeSet;

use crate::logic::{Pred, Sort};
use crate::smt::{selector_name, tester_name};
use crate::syntax::core::{Alt, Const, CoreExpr, ExprKind};

use super::env::strengthen_result;
use super::{avoid, prim_op, Globals, Type, TypeError};

fn not_embeddable(e: &CoreExpr) -> TypeError {
    TypeError::NonEmbeddableBody(e.to_string())
}

fn arity(g: &Globals, f: &str) -> Option<usize> {
    match g.table.get(f)? {
        Sort::Func(args, _) => Some(args.len()),
        _ => Some(0),
    }
}

/// Translate a first-order term into a logic predicate.
pub fn embed(e: &CoreExpr, g: &Globals) -> Result<Pred, TypeError> {
    match &e.kind {
        ExprKind::Const(Const::Int(n)) => Ok(Pred::Int(*n)),
        ExprKind::Const(Const::Bool(b)) => Ok(Pred::Bool(*b)),
        ExprKind::Var(x) if g.ctor_of.contains_key(x) && arity(g, x) == Some(0) => {
            Ok(Pred::uapp(x.clone(), vec![]))
        }
        ExprKind::Var(x) => Ok(Pred::var(x.clone())),
        ExprKind::Let(x, e1, e2) => Ok(embed(e2, g)?.subst(x, &embed(e1, g)?)?),
        ExprKind::If(x, a, b) => Ok(Pred::ite(Pred::var(x.clone()), embed(a, g)?, embed(b, g)?)),
        ExprKind::Switch(y, alts) => embed_alts(y, alts, g),
        ExprKind::TAbs(_, e) | ExprKind::Annot(e, _) | ExprKind::TApp(e, _) | ExprKind::RApp(e) => {
            embed(e, g)
        }
        ExprKind::App(..) => {
            let mut args = Vec::new();
            let mut head = e;
            while let ExprKind::App(f, x) = &head.kind {
                args.push(Pred::var(x.clone()));
                head = f.strip_inst();
            }
            args.reverse();
            let ExprKind::Var(f) = &head.kind else {
                return Err(not_embeddable(e));
            };
            let logical = g.reflected.contains(f) || g.measures.contains_key(f) || g.ctor_of.contains_key(f);
            if logical {
                if arity(g, f) != Some(args.len()) {
                    return Err(not_embeddable(e));
                }
                return Ok(Pred::uapp(f.clone(), args));
            }
            match prim_op(f) {
                Some(op) if op.arity() == args.len() => Ok(op.apply(&args)),
                _ => Err(not_embeddable(e)),
            }
        }
        ExprKind::Lam(..) | ExprKind::LetRec { .. } | ExprKind::Reflect { .. } => {
            Err(not_embeddable(e))
        }
    }
}

/// Nested tests over the scrutinee's constructor; fields become selectors.
pub fn embed_alts(y: &str, alts: &[Alt], g: &Globals) -> Result<Pred, TypeError> {
    let yv = Pred::var(y);
    let mut out: Option<Pred> = None;
    for alt in alts.iter().rev() {
        let mut body = embed(&alt.body, g)?;
        for (i, z) in alt.binds.iter().enumerate() {
            body = body.subst(z, &Pred::uapp(selector_name(&alt.ctor, i + 1), vec![yv.clone()]))?;
        }
        out = Some(match out {
            None => body,
            Some(rest) => Pred::ite(Pred::uapp(tester_name(&alt.ctor), vec![yv.clone()]), body, rest),
        });
    }
    out.ok_or_else(|| TypeError::NonEmbeddableBody(format!("switch ({y}) {{}}")))
}

fn rebind_result(t: &Type, used: &BTreeSet<String>) -> Type {
    match t {
        Type::Fun { x, input, output } => Type::fun(x.clone(), (**input).clone(), rebind_result(output, used)),
        Type::AllTy { tv, kind, body } => Type::all_ty(tv.clone(), *kind, rebind_result(body, used)),
        Type::AllRef { rv, sorts, body } => Type::all_ref(rv.clone(), sorts.clone(), rebind_result(body, used)),
        Type::Base { b, v, r } if used.contains(v) => {
            let nv = avoid(v, used);
            Type::Base {
                b: b.clone(),
                v: nv.clone(),
                r: match r {
                    super::Refine::Known(p) => super::Refine::Known(p.rename1(v, &nv)),
                    h => h.clone(),
                },
            }
        }
        t => t.clone(),
    }
}

/// Strengthen `f`'s result with `v = f(x̄) ∧ v = embed(body)`.
pub fn reflect(f: &str, e: &CoreExpr, t: &Type, g: &Globals) -> Result<Type, TypeError> {
    let (ps, body) = e.as_lambda().ok_or_else(|| not_embeddable(e))?;
    let params = t.params();
    if params.len() != ps.len() {
        return Err(TypeError::ArityMismatch {
            what: f.to_string(),
            expected: params.len(),
            found: ps.len(),
        });
    }
    if params.iter().any(|(_, pt)| !pt.is_base()) {
        return Err(not_embeddable(e));
    }
    let t = t.rename_params(ps);
    let used: BTreeSet<String> = ps.iter().cloned().collect();
    let t = rebind_result(&t, &used);
    let eb = embed(body, g)?;
    let args: Vec<Pred> = ps.iter().map(|p| Pred::var(p.clone())).collect();
    Ok(strengthen_result(&t, &|v| {
        Pred::and(
            Pred::eq(Pred::var(v), Pred::uapp(f.to_string(), args.clone())),
            Pred::eq(Pred::var(v), eb.clone()),
        )
    }))
}
