//! Selfification, conjunction, instantiation, template generation and well-formedness.

use std::collections::{BTreeMap, BTreeSet};

use crate::logic::{check_bool, KVarDecl, Name, NameGen, Pred, Sort};

use super::{avoid, BaseTy, ConcRef, Env, Kind, Refine, Type, TypeError};

/// Strengthen a base type with the singleton conjunct `v = x`.
pub fn self_ty(x: &str, t: &Type) -> Type {
    match t {
        Type::Base { b, v, r } => Type::Base {
            b: b.clone(),
            v: v.clone(),
            r: Refine::Known(Pred::and(r.pred(), Pred::eq(Pred::var(v.clone()), Pred::var(x)))),
        },
        _ => t.clone(),
    }
}

fn shape_err(a: &Type, b: &Type) -> TypeError {
    TypeError::ShapeMismatch(a.to_string(), b.to_string())
}

/// Pointwise conjunction of two types of the same shape.
pub fn meet(t1: &Type, t2: &Type) -> Result<Type, TypeError> {
    match (t1, t2) {
        (Type::Base { b: b1, v: v1, r: r1 }, Type::Base { b: b2, v: v2, r: r2 }) => {
            if !t1.same_shape(t2) {
                return Err(shape_err(t1, t2));
            }
            let p2 = r2.pred();
            let (v1, p1) = {
                let mut fv = p2.free_vars();
                fv.remove(v2);
                if fv.contains(v1) {
                    fv.extend(r1.pred().free_vars());
                    let nv = avoid(v1, &fv);
                    (nv.clone(), r1.pred().rename1(v1, &nv))
                } else {
                    (v1.clone(), r1.pred())
                }
            };
            let b = match (b1, b2) {
                (BaseTy::TCon(c, ts1, rs1), BaseTy::TCon(_, ts2, rs2)) => BaseTy::TCon(
                    c.clone(),
                    ts1.iter()
                        .zip(ts2)
                        .map(|(a, b)| meet(a, b))
                        .collect::<Result<_, _>>()?,
                    rs1.iter().zip(rs2).map(|(a, b)| meet_cref(a, b)).collect(),
                ),
                _ => b1.clone(),
            };
            Ok(Type::Base {
                b,
                v: v1.clone(),
                r: Refine::Known(Pred::and(p1, p2.rename1(v2, &v1))),
            })
        }
        (
            Type::Fun {
                x: x1,
                input: i1,
                output: o1,
            },
            Type::Fun {
                x: x2,
                input: i2,
                output: o2,
            },
        ) => Ok(Type::fun(
            x1.clone(),
            meet(i1, i2)?,
            meet(o1, &o2.rename_var(x2, x1))?,
        )),
        (
            Type::AllTy {
                tv: a,
                kind,
                body: b1,
            },
            Type::AllTy { tv: b, body: b2, .. },
        ) => Ok(Type::all_ty(a.clone(), *kind, meet(b1, &b2.rename_tyvar(b, a))?)),
        (
            Type::AllRef {
                rv: p,
                sorts,
                body: b1,
            },
            Type::AllRef { rv: q, body: b2, .. },
        ) => Ok(Type::all_ref(
            p.clone(),
            sorts.clone(),
            meet(b1, &b2.rename_symbol(q, p))?,
        )),
        _ => Err(shape_err(t1, t2)),
    }
}

fn meet_cref(a: &ConcRef, b: &ConcRef) -> ConcRef {
    let mut body = b.body.pred();
    for ((p, _), (q, _)) in a.params.iter().zip(&b.params) {
        body = body.rename1(q, p);
    }
    ConcRef {
        params: a.params.clone(),
        body: Refine::Known(Pred::and(a.body.pred(), body)),
    }
}

fn tyvars_of(t: &Type, out: &mut BTreeSet<Name>) {
    match t {
        Type::Base { b, .. } => match b {
            BaseTy::TyVar(a) => {
                out.insert(a.clone());
            }
            BaseTy::TCon(_, ts, _) => ts.iter().for_each(|t| tyvars_of(t, out)),
            _ => {}
        },
        Type::Fun { input, output, .. } => {
            tyvars_of(input, out);
            tyvars_of(output, out);
        }
        Type::AllTy { body, .. } | Type::AllRef { body, .. } => tyvars_of(body, out),
    }
}

/// Strengthening substitution of `inst` for the type variable `a`.
pub fn tv_subst(t: &Type, a: &str, inst: &Type) -> Result<Type, TypeError> {
    let inst_sort = inst.sort();
    let sort_map = |s: &Sort| match &inst_sort {
        Some(is) => s.subst_vars(&BTreeMap::from([(a.to_string(), is.clone())])),
        None => s.clone(),
    };
    match t {
        Type::Base {
            b: BaseTy::TyVar(x),
            v,
            r,
        } if x == a => match inst {
            Type::Base {
                b: bi,
                v: vi,
                r: ri,
            } => {
                let pi = ri.pred();
                let mut fv = pi.free_vars();
                fv.remove(vi);
                let (v, p) = if fv.contains(v) {
                    fv.extend(r.pred().free_vars());
                    let nv = avoid(v, &fv);
                    (nv.clone(), r.pred().rename1(v, &nv))
                } else {
                    (v.clone(), r.pred())
                };
                Ok(Type::Base {
                    b: bi.clone(),
                    v: v.clone(),
                    r: Refine::Known(Pred::and(pi.rename1(vi, &v), p)),
                })
            }
            _ if r.is_true() => Ok(inst.clone()),
            _ => Err(TypeError::RefinedVarNonBaseInstance(a.to_string(), inst.to_string())),
        },
        Type::Base {
            b: BaseTy::TCon(c, ts, rs),
            v,
            r,
        } => Ok(Type::Base {
            b: BaseTy::TCon(
                c.clone(),
                ts.iter()
                    .map(|t| tv_subst(t, a, inst))
                    .collect::<Result<_, _>>()?,
                rs.iter()
                    .map(|cr| ConcRef {
                        params: cr.params.iter().map(|(p, s)| (p.clone(), sort_map(s))).collect(),
                        body: cr.body.clone(),
                    })
                    .collect(),
            ),
            v: v.clone(),
            r: r.clone(),
        }),
        Type::Base { .. } => Ok(t.clone()),
        Type::Fun { x, input, output } => Ok(Type::fun(
            x.clone(),
            tv_subst(input, a, inst)?,
            tv_subst(output, a, inst)?,
        )),
        Type::AllTy { tv, .. } if tv == a => Ok(t.clone()),
        Type::AllTy { tv, kind, body } => {
            let mut inst_vars = BTreeSet::new();
            tyvars_of(inst, &mut inst_vars);
            if inst_vars.contains(tv) {
                inst_vars.extend(std::iter::once(a.to_string()));
                let ntv = avoid(tv, &inst_vars);
                let body = body.rename_tyvar(tv, &ntv);
                Ok(Type::all_ty(ntv, *kind, tv_subst(&body, a, inst)?))
            } else {
                Ok(Type::all_ty(tv.clone(), *kind, tv_subst(body, a, inst)?))
            }
        }
        Type::AllRef { rv, sorts, body } => Ok(Type::all_ref(
            rv.clone(),
            sorts.iter().map(sort_map).collect(),
            tv_subst(body, a, inst)?,
        )),
    }
}

fn rinst_pred(p: &Pred, rho: &str, c: &ConcRef) -> Result<Pred, TypeError> {
    p.try_transform(&mut |q| match q {
        Pred::UApp(f, args) if f == rho => c.apply(&args),
        q => Ok(q),
    })
}

/// Instantiate the refinement variable `rho` with the abstraction `c`.
pub fn rinst(t: &Type, rho: &str, c: &ConcRef) -> Result<Type, TypeError> {
    let on = |r: &Refine| -> Result<Refine, TypeError> {
        match r {
            Refine::Known(p) => Ok(Refine::Known(rinst_pred(p, rho, c)?)),
            Refine::Hole => Ok(Refine::Hole),
        }
    };
    match t {
        Type::Base { b, v, r } => {
            let b = match b {
                BaseTy::TCon(n, ts, rs) => BaseTy::TCon(
                    n.clone(),
                    ts.iter()
                        .map(|t| rinst(t, rho, c))
                        .collect::<Result<_, _>>()?,
                    rs.iter()
                        .map(|cr| {
                            Ok(ConcRef {
                                params: cr.params.clone(),
                                body: on(&cr.body)?,
                            })
                        })
                        .collect::<Result<_, TypeError>>()?,
                ),
                b => b.clone(),
            };
            Ok(Type::Base {
                b,
                v: v.clone(),
                r: on(r)?,
            })
        }
        Type::Fun { x, input, output } => Ok(Type::fun(
            x.clone(),
            rinst(input, rho, c)?,
            rinst(output, rho, c)?,
        )),
        Type::AllTy { tv, kind, body } => Ok(Type::all_ty(tv.clone(), *kind, rinst(body, rho, c)?)),
        Type::AllRef { rv, .. } if rv == rho => Ok(t.clone()),
        Type::AllRef { rv, sorts, body } => Ok(Type::all_ref(
            rv.clone(),
            sorts.clone(),
            rinst(body, rho, c)?,
        )),
    }
}

fn mint(
    gen: &mut NameGen,
    out: &mut Vec<KVarDecl>,
    own: Vec<(Name, Sort)>,
    env: &Env,
) -> Pred {
    let k = gen.kvar();
    let mut params = own;
    for (x, s) in env.base_binders() {
        if !params.iter().any(|(p, _)| *p == x) {
            params.push((x, s));
        }
    }
    let args = params.iter().map(|(p, _)| p.clone()).collect();
    out.push(KVarDecl {
        name: k.clone(),
        params,
    });
    Pred::KApp(k, args)
}

fn fresh_base(env: &Env, b: &BaseTy, gen: &mut NameGen, out: &mut Vec<KVarDecl>) -> BaseTy {
    match b {
        BaseTy::TCon(c, ts, rs) => BaseTy::TCon(
            c.clone(),
            ts.iter().map(|t| fresh(env, t, gen, out)).collect(),
            rs.iter()
                .map(|cr| match &cr.body {
                    Refine::Hole => ConcRef {
                        params: cr.params.clone(),
                        body: Refine::Known(mint(gen, out, cr.params.clone(), env)),
                    },
                    _ => cr.clone(),
                })
                .collect(),
        ),
        b => b.clone(),
    }
}

/// A refinement abstraction whose body is a fresh Horn variable over its
/// parameters and the base-typed binders in scope.
pub fn fresh_cref(env: &Env, params: Vec<(Name, Sort)>, gen: &mut NameGen, out: &mut Vec<KVarDecl>) -> ConcRef {
    let body = mint(gen, out, params.clone(), env);
    ConcRef {
        params,
        body: Refine::Known(body),
    }
}

/// Replace every hole by a fresh Horn variable over the value and the
/// base-typed binders in scope.
pub fn fresh(env: &Env, t: &Type, gen: &mut NameGen, out: &mut Vec<KVarDecl>) -> Type {
    match t {
        Type::Base { b, v, r } => {
            let b = fresh_base(env, b, gen, out);
            let r = match r {
                Refine::Hole => Refine::Known(mint(gen, out, vec![(v.clone(), b.sort())], env)),
                r => r.clone(),
            };
            Type::Base { b, v: v.clone(), r }
        }
        Type::Fun { x, input, output } => {
            let input = fresh(env, input, gen, out);
            let output = fresh(&env.bind(x.clone(), input.clone()), output, gen, out);
            Type::fun(x.clone(), input, output)
        }
        Type::AllTy { tv, kind, body } => {
            Type::all_ty(tv.clone(), *kind, fresh(&env.bind_tyvar(tv.clone(), *kind), body, gen, out))
        }
        Type::AllRef { rv, sorts, body } => {
            let env = env.bind_pred(rv.clone(), Sort::func(sorts.clone(), Sort::Bool));
            Type::all_ref(rv.clone(), sorts.clone(), fresh(&env, body, gen, out))
        }
    }
}

fn check_refine(env: &Env, extra: &[(Name, Sort)], r: &Refine, t: &Type) -> Result<(), TypeError> {
    let Refine::Known(p) = r else {
        return Ok(());
    };
    let mut senv = env.sort_env();
    for (x, s) in extra {
        senv.insert(x.clone(), s.clone());
    }
    check_bool(&env.globals().table, &senv, p).map_err(|source| TypeError::IllSortedRefinement {
        ty: t.to_string(),
        source,
    })
}

/// Kind of a well-formed type.
pub fn wf(env: &Env, t: &Type) -> Result<Kind, TypeError> {
    match t {
        Type::Base { b, v, r } => {
            let kind = match b {
                BaseTy::Int | BaseTy::Bool => Kind::Base,
                BaseTy::TyVar(a) => {
                    let k = env
                        .tyvar_kind(a)
                        .ok_or_else(|| TypeError::UnboundTyVar(a.clone()))?;
                    if k == Kind::Star && !r.is_true() && !r.is_hole() {
                        return Err(TypeError::RefinedNonBaseVar(a.clone()));
                    }
                    k
                }
                BaseTy::TCon(c, ts, rs) => {
                    let d = env
                        .globals()
                        .datas
                        .get(c)
                        .ok_or_else(|| TypeError::UnknownTycon(c.clone()))?;
                    if d.tyvars.len() != ts.len() {
                        return Err(TypeError::ArityMismatch {
                            what: c.clone(),
                            expected: d.tyvars.len(),
                            found: ts.len(),
                        });
                    }
                    if d.rvars.len() != rs.len() {
                        return Err(TypeError::ArityMismatch {
                            what: format!("refinement arguments of {c}"),
                            expected: d.rvars.len(),
                            found: rs.len(),
                        });
                    }
                    for ((_, k, _), arg) in d.tyvars.iter().zip(ts) {
                        let ka = wf(env, arg)?;
                        if *k == Kind::Base && ka != Kind::Base {
                            return Err(TypeError::ShapeMismatch(
                                arg.to_string(),
                                "a base type".into(),
                            ));
                        }
                    }
                    for ((_, sorts, _), cr) in d.rvars.iter().zip(rs) {
                        if sorts.len() != cr.params.len() {
                            return Err(TypeError::ArityMismatch {
                                what: cr.to_string(),
                                expected: sorts.len(),
                                found: cr.params.len(),
                            });
                        }
                        check_refine(env, &cr.params, &cr.body, t)?;
                    }
                    Kind::Base
                }
            };
            check_refine(env, &[(v.clone(), b.sort())], r, t)?;
            Ok(kind)
        }
        Type::Fun { x, input, output } => {
            wf(env, input)?;
            wf(&env.bind(x.clone(), (**input).clone()), output)?;
            Ok(Kind::Star)
        }
        Type::AllTy { tv, kind, body } => {
            wf(&env.bind_tyvar(tv.clone(), *kind), body)?;
            Ok(Kind::Star)
        }
        Type::AllRef { rv, sorts, body } => {
            wf(&env.bind_pred(rv.clone(), Sort::func(sorts.clone(), Sort::Bool)), body)?;
            Ok(Kind::Star)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::NU;

    fn v(x: &str) -> Pred {
        Pred::var(x)
    }

    fn nat() -> Type {
        Type::int_ref(Pred::le(Pred::Int(0), v(NU)))
    }

    #[test]
    fn self_strengthens_base_types_only() {
        assert_eq!(
            self_ty("x", &nat()),
            Type::int_ref(Pred::and(Pred::le(Pred::Int(0), v("v")), Pred::eq(v("v"), v("x"))))
        );
        let f = Type::fun("x", Type::int(), Type::int());
        assert_eq!(self_ty("f", &f), f);
        let b = Type::base(BaseTy::Bool, NU, Pred::iff(v("v"), Pred::le(Pred::Int(0), v("x"))));
        assert_eq!(
            self_ty("b", &b).to_string(),
            "bool[v|(v <=> 0 <= x) && v = b]"
        );
    }

    #[test]
    fn fresh_mints_kvars_over_value_and_env() {
        let mut gen = NameGen::new();
        let mut ks = Vec::new();
        let t = Type::fun("x", Type::int(), Type::hole(BaseTy::Int));
        let ft = fresh(&Env::empty(), &t, &mut gen, &mut ks);
        assert_eq!(ft.to_string(), "x:int => int[v|$k0(v, x)]");
        assert_eq!(ks.len(), 1);
        assert_eq!(ks[0].params, vec![("v".into(), Sort::Int), ("x".into(), Sort::Int)]);

        assert_eq!(fresh(&Env::empty(), &nat(), &mut gen, &mut ks), nat());
        let env = Env::empty().bind("a", Type::int());
        let t1 = fresh(&env, &Type::hole(BaseTy::Int), &mut gen, &mut ks);
        assert_eq!(t1.to_string(), "int[v|$k1(v, a)]");
    }

    #[test]
    fn tv_subst_strengthens_and_rejects_refined_function_instances() {
        let alpha = |p: Pred| Type::base(BaseTy::TyVar("a".into()), NU, p);
        let t = alpha(Pred::le(v("y"), v("v")));
        let inst = Type::int_ref(Pred::KApp("k".into(), vec!["v".into()]));
        assert_eq!(
            tv_subst(&t, "a", &inst).unwrap().to_string(),
            "int[v|k(v) && y <= v]"
        );
        let f = Type::fun("x", alpha(Pred::tt()), alpha(Pred::tt()));
        assert_eq!(
            tv_subst(&f, "a", &nat()).unwrap(),
            Type::fun("x", nat(), nat())
        );
        let g = Type::fun("z", Type::int(), Type::int());
        assert!(matches!(
            tv_subst(&alpha(Pred::ne(v("v"), Pred::Int(0))), "a", &g),
            Err(TypeError::RefinedVarNonBaseInstance(..))
        ));
    }

    #[test]
    fn meet_conjoins_after_renaming() {
        let a = Type::int_ref(v("p"));
        let b = Type::base(BaseTy::Int, "w", Pred::lt(v("w"), Pred::Int(3)));
        assert_eq!(meet(&a, &b).unwrap().to_string(), "int[v|p && v < 3]");
        assert!(meet(&a, &Type::bool()).is_err());
    }

    #[test]
    fn rinst_replaces_applications() {
        let rho = |x: &str| Pred::uapp("r", vec![v(x)]);
        let t = Type::fun("x", Type::int_ref(rho("v")), Type::int_ref(rho("v")));
        let c = ConcRef {
            params: vec![("z".into(), Sort::Int)],
            body: Refine::Known(Pred::and(
                Pred::le(Pred::Int(0), v("z")),
                Pred::lt(v("z"), Pred::Int(256)),
            )),
        };
        assert_eq!(
            rinst(&t, "r", &c).unwrap().to_string(),
            "x:int[v|0 <= v && v < 256] => int[v|0 <= v && v < 256]"
        );
        assert_eq!(rinst(&Type::int(), "r", &c).unwrap(), Type::int());
    }

    #[test]
    fn wf_kinds_and_errors() {
        let t = Type::fun("x", nat(), Type::int_ref(Pred::lt(v("x"), v("v"))));
        assert_eq!(wf(&Env::empty(), &t), Ok(Kind::Star));
        let env = Env::empty().bind_tyvar("a", Kind::Star);
        let bad = Type::base(BaseTy::TyVar("a".into()), NU, Pred::ff());
        assert_eq!(wf(&env, &bad), Err(TypeError::RefinedNonBaseVar("a".into())));
        let ill = Type::int_ref(Pred::add(v("v"), Pred::Int(1)));
        assert!(matches!(
            wf(&Env::empty(), &ill),
            Err(TypeError::IllSortedRefinement { .. })
        ));
    }
}
