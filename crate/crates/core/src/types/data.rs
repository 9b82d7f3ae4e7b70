//! Datatype parameters: polarity inference and constructor instantiation.

use std::collections::BTreeMap;

use crate::logic::{Name, Pred};

use super::{meet, rinst, tv_subst, BaseTy, DataDecl, Env, Polarity, Type, TypeError};

type Estimates = BTreeMap<Name, (Vec<Polarity>, Vec<Polarity>)>;

fn mentions(p: &Pred, rho: &str) -> bool {
    let mut hit = false;
    p.visit(&mut |q| {
        if let Pred::UApp(f, _) = q {
            hit |= f == rho;
        }
    });
    hit
}

fn tyvar_occ(t: &Type, a: &str, ctx: Polarity, est: &Estimates) -> Polarity {
    match t {
        Type::Base { b, .. } => match b {
            BaseTy::TyVar(x) if x == a => ctx,
            BaseTy::TCon(c, ts, _) => ts.iter().enumerate().fold(Polarity::Neither, |acc, (i, arg)| {
                let pol = est
                    .get(c)
                    .and_then(|(ps, _)| ps.get(i).copied())
                    .unwrap_or(Polarity::Both);
                acc.join(tyvar_occ(arg, a, ctx.compose(pol), est))
            }),
            _ => Polarity::Neither,
        },
        Type::Fun { input, output, .. } => {
            tyvar_occ(input, a, ctx.flip(), est).join(tyvar_occ(output, a, ctx, est))
        }
        Type::AllTy { tv, .. } if tv == a => Polarity::Neither,
        Type::AllTy { body, .. } | Type::AllRef { body, .. } => tyvar_occ(body, a, ctx, est),
    }
}

fn rvar_occ(t: &Type, rho: &str, ctx: Polarity, est: &Estimates) -> Polarity {
    match t {
        Type::Base { b, r, .. } => {
            let mut acc = if mentions(&r.pred(), rho) {
                ctx
            } else {
                Polarity::Neither
            };
            if let BaseTy::TCon(c, ts, rs) = b {
                for arg in ts {
                    acc = acc.join(rvar_occ(arg, rho, ctx, est));
                }
                for (i, cr) in rs.iter().enumerate() {
                    if mentions(&cr.body.pred(), rho) {
                        let pol = est
                            .get(c)
                            .and_then(|(_, ps)| ps.get(i).copied())
                            .unwrap_or(Polarity::Both);
                        acc = acc.join(ctx.compose(pol));
                    }
                }
            }
            acc
        }
        Type::Fun { input, output, .. } => {
            rvar_occ(input, rho, ctx.flip(), est).join(rvar_occ(output, rho, ctx, est))
        }
        Type::AllRef { rv, .. } if rv == rho => Polarity::Neither,
        Type::AllTy { body, .. } | Type::AllRef { body, .. } => rvar_occ(body, rho, ctx, est),
    }
}

/// Infer the variance of every datatype parameter from constructor fields.
pub fn compute_polarities(datas: &mut [DataDecl]) {
    let mut est: Estimates = datas
        .iter()
        .map(|d| {
            (
                d.name.clone(),
                (
                    vec![Polarity::Neither; d.tyvars.len()],
                    vec![Polarity::Neither; d.rvars.len()],
                ),
            )
        })
        .collect();
    loop {
        let mut next = est.clone();
        for d in datas.iter() {
            let fields: Vec<Type> = d
                .ctors
                .iter()
                .flat_map(|(_, t)| t.params().into_iter().map(|(_, f)| f))
                .collect();
            let entry = next.get_mut(&d.name).expect("estimate per datatype");
            for (i, (a, _, _)) in d.tyvars.iter().enumerate() {
                entry.0[i] = fields.iter().fold(Polarity::Neither, |acc, f| {
                    acc.join(tyvar_occ(f, a, Polarity::Positive, &est))
                });
            }
            for (i, (rho, _, _)) in d.rvars.iter().enumerate() {
                entry.1[i] = fields.iter().fold(Polarity::Neither, |acc, f| {
                    acc.join(rvar_occ(f, rho, Polarity::Positive, &est))
                });
            }
        }
        if next == est {
            break;
        }
        est = next;
    }
    for d in datas.iter_mut() {
        let (tp, rp) = &est[&d.name];
        for (slot, p) in d.tyvars.iter_mut().zip(tp) {
            slot.2 = *p;
        }
        for (slot, p) in d.rvars.iter_mut().zip(rp) {
            slot.2 = *p;
        }
    }
}

/// Constructor `d`'s type instantiated at the parameters of `y`'s type.
pub fn dconty(env: &Env, d: &str, y: &str) -> Result<Type, TypeError> {
    let ty = env
        .lookup(y)
        .ok_or_else(|| TypeError::UnboundVariable(y.to_string()))?;
    let wrong = || TypeError::WrongConstructor {
        ctor: d.to_string(),
        ty: ty.to_string(),
    };
    let Type::Base {
        b: BaseTy::TCon(c, ts, rs),
        ..
    } = ty
    else {
        return Err(wrong());
    };
    let decl = env
        .globals()
        .datas
        .get(c)
        .ok_or_else(|| TypeError::UnknownTycon(c.clone()))?;
    let mut t = decl.ctor_type(d).ok_or_else(wrong)?.clone();
    // Rename declared parameters apart so instantiation is simultaneous.
    let tmp: Vec<Name> = (0..decl.tyvars.len()).map(|i| format!("$a{i}")).collect();
    for ((a, _, _), n) in decl.tyvars.iter().zip(&tmp) {
        t = t.rename_tyvar(a, n);
    }
    for (n, arg) in tmp.iter().zip(ts) {
        t = tv_subst(&t, n, arg)?;
    }
    for ((rv, _, _), cr) in decl.rvars.iter().zip(rs) {
        t = rinst(&t, rv, cr)?;
    }
    Ok(t)
}

/// Bind pattern variables `zs` to the fields of `ct` and strengthen `y`
/// with the constructor's result refinement.
pub fn unapply(env: &Env, y: &str, zs: &[Name], ct: &Type) -> Result<Env, TypeError> {
    let arity = ct.params().len();
    if arity != zs.len() {
        return Err(TypeError::ArityMismatch {
            what: ct.to_string(),
            expected: arity,
            found: zs.len(),
        });
    }
    let mut env2 = env.clone();
    let mut t = ct.clone();
    for z in zs {
        let Type::Fun { x, input, output } = t else {
            unreachable!("arity checked above")
        };
        env2 = env2.bind(z.clone(), (*input).clone());
        t = output.rename_var(&x, z);
    }
    let yt = env
        .lookup(y)
        .ok_or_else(|| TypeError::UnboundVariable(y.to_string()))?;
    Ok(env2.bind(y.to_string(), meet(yt, &t)?))
}
