//! Subtyping constraints.

use crate::logic::{Cstr, Name, Pred, Sort, Span};

use super::{avoid, BaseTy, ConcRef, Env, Type, TypeError};

/// `∀x:b. r[v:=x] ⇒ c` for base `t`; `c` unchanged otherwise.
pub fn imp(env: &Env, x: &str, t: &Type, c: Cstr) -> Cstr {
    match t {
        Type::Base { b, .. } => Cstr::all(
            x,
            b.sort(),
            Pred::and(
                t.refinement_at(x),
                env.globals().invariants(&Pred::var(x), b),
            ),
            c,
        ),
        _ => c,
    }
}

/// A constraint whose validity implies `s <: t`.
pub fn sub(env: &Env, s: &Type, t: &Type, span: Span) -> Result<Cstr, TypeError> {
    match (s, t) {
        (Type::Base { b: b1, v: v1, r: r1 }, Type::Base { b: b2, v: v2, r: r2 }) => {
            if !s.same_shape(t) {
                return Err(TypeError::ShapeMismatch(s.to_string(), t.to_string()));
            }
            let p2 = r2.pred();
            let mut others = p2.free_vars();
            others.remove(v2);
            let (x, p1) = if others.contains(v1) {
                others.extend(r1.pred().free_vars());
                let nx = avoid(v1, &others);
                (nx.clone(), r1.pred().rename1(v1, &nx))
            } else {
                (v1.clone(), r1.pred())
            };
            let hyp = Pred::and(p1, env.globals().invariants(&Pred::var(x.clone()), b1));
            let head = Cstr::all(
                x.clone(),
                b1.sort(),
                hyp,
                Cstr::head(p2.rename1(v2, &x), span),
            );
            let mut parts = vec![head];
            if let (BaseTy::TCon(c, ts1, rs1), BaseTy::TCon(_, ts2, rs2)) = (b1, b2) {
                let d = env
                    .globals()
                    .datas
                    .get(c)
                    .ok_or_else(|| TypeError::UnknownTycon(c.clone()))?;
                for ((_, _, pol), (a1, a2)) in d.tyvars.iter().zip(ts1.iter().zip(ts2)) {
                    if pol.covariant() {
                        parts.push(sub(env, a1, a2, span)?);
                    }
                    if pol.contravariant() {
                        parts.push(sub(env, a2, a1, span)?);
                    }
                }
                for ((_, _, pol), (c1, c2)) in d.rvars.iter().zip(rs1.iter().zip(rs2)) {
                    if pol.covariant() {
                        parts.push(cref_imp(c1, c2, span));
                    }
                    if pol.contravariant() {
                        parts.push(cref_imp(c2, c1, span));
                    }
                }
            }
            Ok(Cstr::conj(parts))
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
        ) => {
            let c_in = sub(env, i2, i1, span)?;
            let o1 = o1.rename_var(x1, x2);
            let c_out = sub(&env.bind(x2.clone(), (**i2).clone()), &o1, o2, span)?;
            Ok(Cstr::and(c_in, imp(env, x2, i2, c_out)))
        }
        (Type::AllTy { tv: a, body: b1, .. }, Type::AllTy { tv: b, kind, body: b2 }) => sub(
            &env.bind_tyvar(a.clone(), *kind),
            b1,
            &b2.rename_tyvar(b, a),
            span,
        ),
        (
            Type::AllRef {
                rv: p,
                sorts,
                body: b1,
            },
            Type::AllRef { rv: q, body: b2, .. },
        ) => sub(
            &env.bind_pred(p.clone(), Sort::func(sorts.clone(), Sort::Bool)),
            b1,
            &b2.rename_symbol(q, p),
            span,
        ),
        _ => Err(TypeError::ShapeMismatch(s.to_string(), t.to_string())),
    }
}

/// `∀x̄. c1(x̄) ⇒ c2(x̄)`.
fn cref_imp(c1: &ConcRef, c2: &ConcRef, span: Span) -> Cstr {
    let mut body2 = c2.body.pred();
    for ((p, _), (q, _)) in c1.params.iter().zip(&c2.params) {
        if p != q {
            body2 = body2.rename1(q, p);
        }
    }
    let hyp = c1.body.pred();
    let mut params: Vec<(Name, Sort)> = c1.params.clone();
    let Some((last, last_sort)) = params.pop() else {
        return Cstr::all("$c", Sort::Bool, hyp, Cstr::head(body2, span));
    };
    let mut c = Cstr::all(last, last_sort, hyp, Cstr::head(body2, span));
    for (p, s) in params.into_iter().rev() {
        c = Cstr::all(p, s, Pred::tt(), c);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::NU;

    fn v(x: &str) -> Pred {
        Pred::var(x)
    }

    #[test]
    fn function_subtyping_is_contravariant_then_guarded() {
        let nat = Type::int_ref(Pred::le(Pred::Int(0), v(NU)));
        let s = Type::fun(
            "x",
            Type::int(),
            Type::base(
                BaseTy::Int,
                "y",
                Pred::eq(v("y"), Pred::add(v("x"), Pred::Int(1))),
            ),
        );
        let t = Type::fun("x", nat.clone(), nat);
        let c = sub(&Env::empty(), &s, &t, Span::default()).unwrap();
        assert_eq!(
            c.to_string().split_whitespace().collect::<Vec<_>>().join(" "),
            "forall x:int. 0 <= x ==> forall y:int. y = x + 1 ==> 0 <= y"
        );
    }

    #[test]
    fn reflexive_base_subtyping() {
        let t = Type::int_ref(Pred::lt(Pred::Int(0), v(NU)));
        let c = sub(&Env::empty(), &t, &t, Span::default()).unwrap();
        assert_eq!(
            c,
            Cstr::all(
                "v",
                Sort::Int,
                Pred::lt(Pred::Int(0), v("v")),
                Cstr::head(Pred::lt(Pred::Int(0), v("v")), Span::default())
            )
        );
    }

    #[test]
    fn shape_mismatch_is_reported() {
        assert!(matches!(
            sub(&Env::empty(), &Type::int(), &Type::bool(), Span::default()),
            Err(TypeError::ShapeMismatch(..))
        ));
    }
}
