//! Well-foundedness refinements and metric-limited types.

use std::collections::{BTreeMap, BTreeSet};

use crate::logic::{sort_of, Name, Pred, Sort};

use super::{avoid, Env, Metric, Refine, Type, TypeError};

/// `m′` is a well-founded decrease of `m*` (lexicographic for sequences).
pub fn wfp(m_star: &Metric, m_prime: &Metric) -> Result<Pred, TypeError> {
    if m_star.0.len() != m_prime.0.len() || m_star.0.is_empty() {
        return Err(TypeError::LengthMismatch(m_star.0.len(), m_prime.0.len()));
    }
    fn go(ms: &[Pred], mp: &[Pred]) -> Pred {
        let (m, m1) = (&ms[0], &mp[0]);
        let nonneg = Pred::le(Pred::Int(0), m1.clone());
        if ms.len() == 1 {
            Pred::and(nonneg, Pred::lt(m1.clone(), m.clone()))
        } else {
            Pred::and(
                nonneg,
                Pred::or(
                    Pred::lt(m1.clone(), m.clone()),
                    Pred::and(Pred::eq(m1.clone(), m.clone()), go(&ms[1..], &mp[1..])),
                ),
            )
        }
    }
    Ok(go(&m_star.0, &m_prime.0))
}

/// Peel type quantifiers, rejecting refinement quantifiers.
fn peel(t: &Type) -> Result<(Vec<(Name, super::Kind)>, &Type), TypeError> {
    let mut tvs = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Type::AllTy { tv, kind, body } => {
                tvs.push((tv.clone(), *kind));
                cur = body;
            }
            Type::AllRef { .. } => {
                return Err(TypeError::RefinementPolymorphicTermination(t.to_string()))
            }
            _ => return Ok((tvs, cur)),
        }
    }
}

fn strengthen_at(t: &Type, i: usize, extra: &dyn Fn(&str) -> Pred) -> Type {
    match t {
        Type::Fun { x, input, output } if i == 0 => {
            let input = match &**input {
                Type::Base { b, v, r } => Type::Base {
                    b: b.clone(),
                    v: v.clone(),
                    r: Refine::Known(Pred::and(r.pred(), extra(v))),
                },
                other => other.clone(),
            };
            Type::fun(x.clone(), input, (**output).clone())
        }
        Type::Fun { x, input, output } => Type::fun(
            x.clone(),
            (**input).clone(),
            strengthen_at(output, i - 1, extra),
        ),
        other => other.clone(),
    }
}

/// Rename `t`'s parameters to primed copies and guard the first parameter
/// at which the primed metric is well-formed with `wfp(m, m′)`.
pub fn limit(env: &Env, m: &Metric, t: &Type) -> Result<Type, TypeError> {
    let (tvs, body) = peel(t)?;
    let params = body.params();
    if params.is_empty() {
        return Err(TypeError::MetricOnNonFunction(t.to_string()));
    }

    let senv = env.sort_env();
    let mut sorts: BTreeMap<Name, Sort> = senv.clone();
    for (x, pt) in &params {
        if let Some(s) = pt.sort() {
            sorts.insert(x.clone(), s);
        }
    }
    for p in &m.0 {
        match sort_of(&env.globals().table, &sorts, p) {
            Ok(Sort::Int) => {}
            Ok(found) => {
                return Err(TypeError::IllSortedRefinement {
                    ty: m.to_string(),
                    source: crate::logic::LogicError::SortMismatch {
                        expected: Sort::Int,
                        found,
                        span: None,
                    },
                })
            }
            Err(_) => return Err(TypeError::MetricNeverWellFormed(m.to_string())),
        }
    }

    let mut used: BTreeSet<Name> = senv.keys().cloned().collect();
    used.extend(params.iter().map(|(x, _)| x.clone()));
    used.extend(body.free_vars());
    used.extend(m.free_vars());
    let mut primed = Vec::new();
    for (x, _) in &params {
        let y = avoid(x, &used);
        used.insert(y.clone());
        primed.push(y);
    }
    let su: BTreeMap<Name, Pred> = params
        .iter()
        .zip(&primed)
        .map(|((x, _), y)| (x.clone(), Pred::var(y.clone())))
        .collect();
    let m_prime = m.subst(&su)?;
    let renamed = body.rename_params(&primed);

    let outside: BTreeSet<Name> = m_prime
        .free_vars()
        .into_iter()
        .filter(|x| !senv.contains_key(x) && !env.globals().table.contains(x))
        .collect();
    let renamed_params = renamed.params();
    let mut pos = None;
    for i in 0..primed.len() {
        let scope: BTreeSet<&Name> = primed[..=i].iter().collect();
        if renamed_params[i].1.is_base() && outside.iter().all(|x| scope.contains(x)) {
            pos = Some(i);
            break;
        }
    }
    let i = pos.ok_or_else(|| TypeError::MetricNeverWellFormed(m.to_string()))?;
    let guard = wfp(m, &m_prime)?;
    let xi = primed[i].clone();
    let mut out = strengthen_at(&renamed, i, &|v| guard.rename1(&xi, v));
    for (tv, k) in tvs.into_iter().rev() {
        out = Type::all_ty(tv, k, out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{BaseTy, TypeError, NU};

    fn v(x: &str) -> Pred {
        Pred::var(x)
    }

    #[test]
    fn wfp_single_and_lexicographic() {
        let m = Metric(vec![Pred::sub(v("j"), v("i"))]);
        let mp = Metric(vec![Pred::sub(v("j'"), v("i'"))]);
        assert_eq!(wfp(&m, &mp).unwrap().to_string(), "0 <= j' - i' && j' - i' < j - i");
        let m2 = Metric(vec![v("m"), v("n")]);
        let mp2 = Metric(vec![v("m'"), v("n'")]);
        assert_eq!(
            wfp(&m2, &mp2).unwrap().to_string(),
            "0 <= m' && (m' < m || m' = m && 0 <= n' && n' < n)"
        );
        assert!(matches!(
            wfp(&m, &mp2),
            Err(TypeError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn limit_guards_first_wellformed_position() {
        let list = Type::base(
            BaseTy::TCon("list".into(), vec![Type::int()], vec![]),
            NU,
            Pred::tt(),
        );
        let t = Type::fun("i", Type::int(), Type::fun("j", Type::int(), list));
        let m = Metric(vec![Pred::sub(v("j"), v("i"))]);
        let lt = limit(&Env::empty(), &m, &t).unwrap();
        assert_eq!(
            lt.to_string(),
            "i':int => j':int[v|0 <= v - i' && v - i' < j - i] => list(int)"
        );

        let nat = Type::int_ref(Pred::le(Pred::Int(0), v(NU)));
        let t = Type::fun("n", nat.clone(), nat);
        let lt = limit(&Env::empty(), &Metric(vec![v("n")]), &t).unwrap();
        assert_eq!(lt.to_string(), "n':int[v|0 <= v && 0 <= v && v < n] => int[v|0 <= v]");

        assert!(matches!(
            limit(&Env::empty(), &Metric(vec![v("k")]), &t),
            Err(TypeError::MetricNeverWellFormed(_))
        ));
    }
}
