//! Horn-constraint solving by predicate abstraction.
//!
//! Constraints are flattened into `∀x̄. p ⇒ head` clauses. Every Horn
//! variable starts as the conjunction of all sort-correct qualifier
//! instances; [`fixpoint`] drops instances until every κ-headed clause is
//! valid, and [`solve`] then checks the concrete clauses.

mod harvest;
mod text;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use log::{debug, trace};

use crate::logic::{sort_of, Cstr, KVarDecl, Name, Pred, Sort, Span, SymbolTable};
use crate::smt::{SolverSession, ValidityResult};

pub use harvest::{generalize, harvest_types, seed_qualifiers};
pub use text::{parse_horn, parse_qualifiers, print_horn, print_pred, print_qualifier, HornFile, TextError};

/// A candidate atom over placeholders; the first parameter is the value position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Qualifier {
    pub name: Name,
    pub params: Vec<(Name, Sort)>,
    pub body: Pred,
}

impl Qualifier {
    /// Does the body mention the value placeholder?
    pub fn uses_value(&self) -> bool {
        self.body.free_vars().contains(&self.params[0].0)
    }
}

impl fmt::Display for Qualifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.params.iter().map(|(p, s)| format!("{p}:{s}")).collect();
        write!(f, "{}({}) := {}", self.name, ps.join(", "), self.body)
    }
}

/// A flat clause `∀x̄. p̄ ⇒ head`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatCstr {
    pub id: usize,
    pub binders: Vec<(Name, Sort, Pred)>,
    pub head: Pred,
    pub span: Span,
}

impl FlatCstr {
    pub fn head_kvar(&self) -> Option<(&Name, &[Name])> {
        match &self.head {
            Pred::KApp(k, args) => Some((k, args)),
            _ => None,
        }
    }
}

impl fmt::Display for FlatCstr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x, s, p) in &self.binders {
            if p.is_true() {
                write!(f, "forall {x}:{s}. ")?;
            } else {
                write!(f, "forall {x}:{s}. {p} ==> ")?;
            }
        }
        write!(f, "{}", self.head)
    }
}

/// Map from Horn variables to conjunctions over their parameter names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    pub map: BTreeMap<Name, Vec<Pred>>,
}

impl Assignment {
    pub fn get(&self, k: &str) -> &[Pred] {
        self.map.get(k).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Replace every Horn application by its assigned conjunction.
    pub fn apply_pred(&self, p: &Pred, kvars: &BTreeMap<Name, KVarDecl>) -> Pred {
        p.transform(&mut |q| match q {
            Pred::KApp(k, args) => self.instance(&k, &args, kvars),
            q => q,
        })
    }

    fn instance(&self, k: &str, args: &[Name], kvars: &BTreeMap<Name, KVarDecl>) -> Pred {
        let Some(decl) = kvars.get(k) else {
            return Pred::tt();
        };
        let su: BTreeMap<Name, Name> = decl
            .params
            .iter()
            .map(|(p, _)| p.clone())
            .zip(args.iter().cloned())
            .collect();
        Pred::conj(self.get(k).iter().map(|q| q.rename(&su)))
    }

    pub fn apply(&self, c: &Cstr, kvars: &BTreeMap<Name, KVarDecl>) -> Cstr {
        c.map_preds(&mut |p| self.apply_pred(p, kvars))
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, qs) in &self.map {
            writeln!(f, "{k} := {}", Pred::conj(qs.iter().cloned()))?;
        }
        Ok(())
    }
}

/// Unique name for a shadowing binder.
fn unshadow(x: &str, used: &BTreeSet<Name>) -> Name {
    let mut n = 1;
    loop {
        let y = format!("{x}#{n}");
        if !used.contains(&y) {
            return y;
        }
        n += 1;
    }
}

/// Flatten a constraint into clauses; conjunctive heads are split so each
/// clause has a single Horn application or a concrete head.
pub fn flatten(c: &Cstr) -> Vec<FlatCstr> {
    let mut out = Vec::new();
    let mut used = BTreeSet::new();
    go(c, &mut Vec::new(), &mut used, &mut out);
    out
}

fn go(
    c: &Cstr,
    prefix: &mut Vec<(Name, Sort, Pred)>,
    used: &mut BTreeSet<Name>,
    out: &mut Vec<FlatCstr>,
) {
    match c {
        Cstr::Head(p, span) => {
            let (kapps, concrete): (Vec<Pred>, Vec<Pred>) =
                p.conjuncts().into_iter().partition(Pred::is_kapp);
            for k in kapps {
                push(prefix, k, *span, out);
            }
            let rest = Pred::conj(concrete);
            if !rest.is_true() {
                push(prefix, rest, *span, out);
            }
        }
        Cstr::And(cs) => {
            for c in cs {
                go(c, prefix, used, out);
            }
        }
        Cstr::All { x, sort, hyp, body } => {
            let in_scope = prefix.iter().any(|(y, _, _)| y == x);
            let (x, hyp, body) = if in_scope {
                let y = unshadow(x, used);
                (y.clone(), hyp.rename1(x, &y), rename_cstr(body, x, &y))
            } else {
                (x.clone(), hyp.clone(), (**body).clone())
            };
            used.insert(x.clone());
            prefix.push((x, sort.clone(), hyp));
            go(&body, prefix, used, out);
            prefix.pop();
        }
    }
}

fn push(prefix: &[(Name, Sort, Pred)], head: Pred, span: Span, out: &mut Vec<FlatCstr>) {
    out.push(FlatCstr {
        id: out.len(),
        binders: prefix.to_vec(),
        head,
        span,
    });
}

/// Rename free occurrences of `x` in a constraint.
fn rename_cstr(c: &Cstr, x: &str, y: &str) -> Cstr {
    match c {
        Cstr::Head(p, s) => Cstr::Head(p.rename1(x, y), *s),
        Cstr::And(cs) => Cstr::And(cs.iter().map(|c| rename_cstr(c, x, y)).collect()),
        Cstr::All { x: z, sort, hyp, body } => {
            if z == x {
                c.clone()
            } else {
                Cstr::All {
                    x: z.clone(),
                    sort: sort.clone(),
                    hyp: hyp.rename1(x, y),
                    body: Box::new(rename_cstr(body, x, y)),
                }
            }
        }
    }
}

fn sort_fits(q: &Sort, k: &Sort) -> bool {
    matches!(q, Sort::Var(_)) || q == k
}

/// All sort-correct instances of `quals` over the parameters of `kv`.
///
/// The value placeholder maps to the first parameter; the others map
/// injectively to the remaining parameters.
pub fn instantiate(
    quals: &[Qualifier],
    kv: &KVarDecl,
    table: &SymbolTable,
    max_params: usize,
) -> Vec<Pred> {
    let Some((nu, nu_sort)) = kv.params.first() else {
        return Vec::new();
    };
    let senv: BTreeMap<Name, Sort> = kv.params.iter().cloned().collect();
    let rest: Vec<&(Name, Sort)> = kv.params.iter().skip(1).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for q in quals {
        let others = &q.params[1..];
        if others.len() > max_params || others.len() > rest.len() {
            continue;
        }
        if q.uses_value() && !sort_fits(&q.params[0].1, nu_sort) {
            continue;
        }
        let mut chosen: Vec<usize> = Vec::new();
        let mut emit = |chosen: &[usize]| {
            let mut su = BTreeMap::from([(q.params[0].0.clone(), nu.clone())]);
            for ((z, _), &j) in others.iter().zip(chosen) {
                su.insert(z.clone(), rest[j].0.clone());
            }
            let inst = q.body.rename(&su);
            if matches!(sort_of(table, &senv, &inst), Ok(Sort::Bool)) && seen.insert(inst.clone()) {
                out.push(inst);
            }
        };
        choose(others, &rest, &mut chosen, &mut emit);
    }
    out
}

fn choose(
    others: &[(Name, Sort)],
    rest: &[&(Name, Sort)],
    chosen: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]),
) {
    let i = chosen.len();
    if i == others.len() {
        emit(chosen);
        return;
    }
    for (j, (_, s)) in rest.iter().enumerate() {
        if chosen.contains(&j) || !sort_fits(&others[i].1, s) {
            continue;
        }
        chosen.push(j);
        choose(others, rest, chosen, emit);
        chosen.pop();
    }
}

/// Inputs shared by [`solve`] and [`fixpoint`].
pub struct HornProblem<'a> {
    pub kvars: &'a BTreeMap<Name, KVarDecl>,
    pub table: &'a SymbolTable,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveResult {
    Sat(Assignment),
    Unsat {
        clause: FlatCstr,
        result: ValidityResult,
        assignment: Assignment,
    },
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }
}

fn applied_binders(
    sigma: &Assignment,
    c: &FlatCstr,
    kvars: &BTreeMap<Name, KVarDecl>,
) -> Vec<(Name, Sort, Pred)> {
    c.binders
        .iter()
        .map(|(x, s, p)| (x.clone(), s.clone(), sigma.apply_pred(p, kvars)))
        .collect()
}

/// The initial assignment: every instance of every qualifier.
pub fn initial_assignment(
    quals: &[Qualifier],
    prob: &HornProblem<'_>,
    max_params: usize,
) -> Assignment {
    Assignment {
        map: prob
            .kvars
            .values()
            .map(|k| (k.name.clone(), instantiate(quals, k, prob.table, max_params)))
            .collect(),
    }
}

/// Weaken `sigma` until every κ-headed clause is valid, visiting clauses
/// in ascending order.
pub fn fixpoint(
    cs_k: &[FlatCstr],
    sigma: Assignment,
    prob: &HornProblem<'_>,
    session: &mut SolverSession,
) -> Assignment {
    let mut sigma = sigma;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut changed = false;
        for c in cs_k {
            let Some((k, args)) = c.head_kvar() else {
                continue;
            };
            let current = sigma.get(k).to_vec();
            if current.is_empty() {
                continue;
            }
            let binders = applied_binders(&sigma, c, prob.kvars);
            let goal = sigma.apply_pred(&c.head, prob.kvars);
            if session.check_valid(prob.table, &binders, &goal).is_valid() {
                continue;
            }
            let decl = &prob.kvars[k];
            let su: BTreeMap<Name, Name> = decl
                .params
                .iter()
                .map(|(p, _)| p.clone())
                .zip(args.iter().cloned())
                .collect();
            let goals: Vec<Pred> = current.iter().map(|q| q.rename(&su)).collect();
            let results = session.check_valid_many(prob.table, &binders, &goals);
            let kept: Vec<Pred> = current
                .into_iter()
                .zip(&results)
                .filter(|(_, r)| r.is_valid())
                .map(|(q, _)| q)
                .collect();
            trace!("clause {}: {k} keeps {} qualifiers", c.id, kept.len());
            sigma.map.insert(k.clone(), kept);
            changed = true;
        }
        if !changed {
            debug!("fixpoint converged after {rounds} rounds");
            return sigma;
        }
    }
}

/// Solve a Horn constraint over the given qualifiers.
pub fn solve(
    quals: &[Qualifier],
    c: &Cstr,
    prob: &HornProblem<'_>,
    session: &mut SolverSession,
    max_params: usize,
) -> SolveResult {
    let flat = flatten(c);
    let (cs_k, cs_p): (Vec<FlatCstr>, Vec<FlatCstr>) =
        flat.into_iter().partition(|c| c.head.is_kapp());
    debug!("{} κ-clauses, {} concrete clauses", cs_k.len(), cs_p.len());
    let sigma0 = initial_assignment(quals, prob, max_params);
    let sigma = fixpoint(&cs_k, sigma0, prob, session);
    for c in cs_p {
        let binders = applied_binders(&sigma, &c, prob.kvars);
        let r = session.check_valid(prob.table, &binders, &c.head);
        if !r.is_valid() {
            return SolveResult::Unsat {
                clause: c,
                result: r,
                assignment: sigma,
            };
        }
    }
    SolveResult::Sat(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smt::SolverConfig;

    fn v(x: &str) -> Pred {
        Pred::var(x)
    }

    fn kapp(k: &str, xs: &[&str]) -> Pred {
        Pred::KApp(k.into(), xs.iter().map(|x| x.to_string()).collect())
    }

    #[test]
    fn flatten_splits_conjunctions_and_mixed_heads() {
        let s = Span::default();
        let c = Cstr::all(
            "x",
            Sort::Int,
            Pred::tt(),
            Cstr::conj(vec![
                Cstr::head(Pred::and(Pred::le(Pred::Int(0), v("x")), kapp("k", &["x"])), s),
                Cstr::head(Pred::lt(v("x"), Pred::Int(9)), s),
            ]),
        );
        let fl = flatten(&c);
        assert_eq!(fl.len(), 3);
        assert!(fl[0].head.is_kapp());
        assert_eq!(fl[1].head, Pred::le(Pred::Int(0), v("x")));
        assert!(fl.iter().all(|f| f.binders.len() == 1));
    }

    #[test]
    fn flatten_renames_shadowed_binders() {
        let s = Span::default();
        let c = Cstr::all(
            "v",
            Sort::Int,
            Pred::lt(Pred::Int(0), v("v")),
            Cstr::all("v", Sort::Int, Pred::eq(v("v"), Pred::Int(1)), Cstr::head(Pred::lt(Pred::Int(0), v("v")), s)),
        );
        let fl = flatten(&c);
        assert_eq!(fl[0].binders[1].0, "v#1");
        assert_eq!(fl[0].head, Pred::lt(Pred::Int(0), v("v#1")));
    }

    fn qual(body: Pred, others: &[&str]) -> Qualifier {
        let mut params = vec![("v".to_string(), Sort::Int)];
        params.extend(others.iter().map(|z| (z.to_string(), Sort::Int)));
        Qualifier {
            name: "q".into(),
            params,
            body,
        }
    }

    #[test]
    fn instantiate_is_sort_driven_and_injective() {
        let kv = KVarDecl {
            name: "k".into(),
            params: vec![("a0".into(), Sort::Int), ("a1".into(), Sort::Int)],
        };
        let t = SymbolTable::new();
        let q0 = qual(Pred::le(Pred::Int(0), v("v")), &[]);
        let q1 = qual(Pred::le(v("z"), v("v")), &["z"]);
        assert_eq!(instantiate(&[q0.clone()], &kv, &t, 1), vec![Pred::le(Pred::Int(0), v("a0"))]);
        assert_eq!(instantiate(&[q1.clone()], &kv, &t, 1), vec![Pred::le(v("a1"), v("a0"))]);
        let k1 = KVarDecl {
            name: "k".into(),
            params: vec![("a0".into(), Sort::Int)],
        };
        assert!(instantiate(&[q1], &k1, &t, 1).is_empty());
        let b = KVarDecl {
            name: "k".into(),
            params: vec![("a0".into(), Sort::Bool)],
        };
        assert!(instantiate(&[q0], &b, &t, 1).is_empty());
    }

    #[test]
    fn single_clause_fixpoint_keeps_implied_qualifiers() {
        let mut sess = SolverSession::new(SolverConfig::default()).unwrap();
        let kv = KVarDecl {
            name: "k".into(),
            params: vec![("v".into(), Sort::Int)],
        };
        let kvars = BTreeMap::from([("k".to_string(), kv)]);
        let table = SymbolTable::new();
        let prob = HornProblem {
            kvars: &kvars,
            table: &table,
        };
        let c = Cstr::all(
            "v",
            Sort::Int,
            Pred::eq(v("v"), Pred::Int(1)),
            Cstr::head(kapp("k", &["v"]), Span::default()),
        );
        let quals = [
            qual(Pred::le(Pred::Int(0), v("v")), &[]),
            qual(Pred::eq(v("v"), Pred::Int(0)), &[]),
        ];
        let SolveResult::Sat(s) = solve(&quals, &c, &prob, &mut sess, 1) else {
            panic!("expected sat")
        };
        assert_eq!(s.get("k"), &[Pred::le(Pred::Int(0), v("v"))]);
        let empty = solve(&[], &Cstr::tt(), &prob, &mut sess, 1);
        assert!(empty.is_sat());
    }
}
