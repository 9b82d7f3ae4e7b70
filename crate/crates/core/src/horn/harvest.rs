//! Qualifier mining from type annotations.

use std::collections::{BTreeMap, BTreeSet};

use crate::logic::{BinOp, Name, Pred, Sort};
use crate::types::{BaseTy, Refine, Type};

use super::Qualifier;

const NU: &str = "v";

fn q(name: &str, params: Vec<(&str, Sort)>, body: Pred) -> Qualifier {
    Qualifier {
        name: name.into(),
        params: params.into_iter().map(|(p, s)| (p.to_string(), s)).collect(),
        body,
    }
}

/// `0≤ν, 0<ν, ν<z, ν≤z, ν=z, z≤ν`.
pub fn seed_qualifiers() -> Vec<Qualifier> {
    let a = || Sort::Var("a".into());
    let v = || Pred::var(NU);
    let z = || Pred::var("z");
    vec![
        q("seed0", vec![(NU, Sort::Int)], Pred::le(Pred::Int(0), v())),
        q("seed1", vec![(NU, Sort::Int)], Pred::lt(Pred::Int(0), v())),
        q("seed2", vec![(NU, a()), ("z", a())], Pred::lt(v(), z())),
        q("seed3", vec![(NU, a()), ("z", a())], Pred::le(v(), z())),
        q("seed4", vec![(NU, a()), ("z", a())], Pred::eq(v(), z())),
        q("seed5", vec![(NU, a()), ("z", a())], Pred::le(z(), v())),
    ]
}

fn atoms(p: &Pred, out: &mut Vec<Pred>) {
    match p {
        Pred::Bin(BinOp::And | BinOp::Or | BinOp::Imp | BinOp::Iff, a, b) => {
            atoms(a, out);
            atoms(b, out);
        }
        Pred::Not(a) => atoms(a, out),
        Pred::Bool(_) | Pred::KApp(..) => {}
        p => out.push(p.clone()),
    }
}

fn vars_in_order(p: &Pred) -> Vec<Name> {
    let fv = p.free_vars();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    p.visit(&mut |q| {
        if let Pred::Var(x) = q {
            if fv.contains(x) && seen.insert(x.clone()) {
                out.push(x.clone());
            }
        }
    });
    out
}

/// Abstract an atom: the value variable becomes `v`, other free variables
/// become placeholders `z1, z2, …` in order of appearance.
pub fn generalize(
    atom: &Pred,
    value: Option<(&str, &Sort)>,
    sorts: &BTreeMap<Name, Sort>,
) -> Option<Qualifier> {
    let vars = vars_in_order(atom);
    if vars.is_empty() {
        return None;
    }
    let mut su = BTreeMap::new();
    let mut params = Vec::new();
    match value {
        Some((x, s)) if vars.iter().any(|y| y == x) => {
            su.insert(x.to_string(), NU.to_string());
            params.push((NU.to_string(), s.clone()));
        }
        _ => params.push((NU.to_string(), Sort::Var(NU.into()))),
    }
    let mut i = 0;
    for x in vars {
        if su.contains_key(&x) {
            continue;
        }
        i += 1;
        let z = format!("z{i}");
        let s = sorts.get(&x).cloned().unwrap_or_else(|| Sort::Var(z.clone()));
        su.insert(x, z.clone());
        params.push((z, s));
    }
    Some(Qualifier {
        name: String::new(),
        params,
        body: atom.rename(&su),
    })
}

fn harvest_refine(
    r: &Refine,
    value: (&str, &Sort),
    sorts: &BTreeMap<Name, Sort>,
    out: &mut Vec<Qualifier>,
) {
    if let Refine::Known(p) = r {
        let mut xs = Vec::new();
        atoms(p, &mut xs);
        out.extend(xs.iter().filter_map(|a| generalize(a, Some(value), sorts)));
    }
}

fn walk(t: &Type, sorts: &mut BTreeMap<Name, Sort>, out: &mut Vec<Qualifier>) {
    match t {
        Type::Base { b, v, r } => {
            if let BaseTy::TCon(_, ts, rs) = b {
                for arg in ts {
                    walk(arg, sorts, out);
                }
                for c in rs {
                    let mut inner = sorts.clone();
                    for (p, s) in &c.params {
                        inner.insert(p.clone(), s.clone());
                    }
                    if let Some((last, s)) = c.params.last() {
                        harvest_refine(&c.body, (last, s), &inner, out);
                    }
                }
            }
            let s = b.sort();
            harvest_refine(r, (v, &s), sorts, out);
        }
        Type::Fun { x, input, output } => {
            walk(input, sorts, out);
            let saved = sorts.get(x).cloned();
            if let Some(s) = input.sort() {
                sorts.insert(x.clone(), s);
            }
            walk(output, sorts, out);
            match saved {
                Some(s) => sorts.insert(x.clone(), s),
                None => sorts.remove(x),
            };
        }
        Type::AllTy { body, .. } | Type::AllRef { body, .. } => walk(body, sorts, out),
    }
}

/// Seeds plus every atom of every refinement in `types`, deduplicated.
pub fn harvest_types<'a>(types: impl IntoIterator<Item = &'a Type>) -> Vec<Qualifier> {
    let mut found = Vec::new();
    for t in types {
        walk(t, &mut BTreeMap::new(), &mut found);
    }
    let mut out = seed_qualifiers();
    let mut seen: BTreeSet<String> = out.iter().map(key).collect();
    for mut q in found {
        if seen.insert(key(&q)) {
            q.name = format!("q{}", out.len());
            out.push(q);
        }
    }
    out
}

/// Canonical form: sort variables are numbered by first appearance.
fn key(q: &Qualifier) -> String {
    let mut vars: BTreeMap<Name, usize> = BTreeMap::new();
    let mut norm = |s: &Sort| -> String {
        match s {
            Sort::Var(a) => {
                let n = vars.len();
                format!("?{}", vars.entry(a.clone()).or_insert(n))
            }
            s => s.to_string(),
        }
    };
    let ps: Vec<String> = q.params.iter().map(|(p, s)| format!("{p}:{}", norm(s))).collect();
    format!("{} |- {}", ps.join(","), q.body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Type;

    fn v(x: &str) -> Pred {
        Pred::var(x)
    }

    #[test]
    fn harvest_splits_and_generalizes() {
        let t = Type::fun(
            "n",
            Type::int(),
            Type::int_ref(Pred::and(
                Pred::le(Pred::Int(0), v("v")),
                Pred::lt(v("v"), v("n")),
            )),
        );
        let qs = harvest_types([&t]);
        // 0 <= v duplicates a seed; v < n becomes v < z1 over Int.
        assert_eq!(qs.len(), seed_qualifiers().len() + 1);
        let extra = qs.last().unwrap();
        assert_eq!(extra.body, Pred::lt(v("v"), v("z1")));
        assert_eq!(extra.params[1].1, Sort::Int);
    }

    #[test]
    fn measure_atoms_generalize_other_variables() {
        let list = Sort::Data("list".into());
        let sorts = BTreeMap::from([("xs".to_string(), list.clone())]);
        let atom = Pred::eq(
            Pred::uapp("len", vec![v("w")]),
            Pred::add(Pred::Int(1), Pred::uapp("len", vec![v("xs")])),
        );
        let q = generalize(&atom, Some(("w", &list)), &sorts).unwrap();
        assert_eq!(q.body.to_string(), "len(v) = 1 + len(z1)");
        assert_eq!(q.params, vec![("v".into(), list.clone()), ("z1".into(), list)]);
    }

    #[test]
    fn no_annotations_gives_seeds() {
        assert_eq!(harvest_types(std::iter::empty()), seed_qualifiers());
    }
}
