//! Typing environments and the global datatype and measure declarations.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use crate::logic::{Name, Pred, Sort, SymbolTable};
use crate::smt::{selector_name, tester_name, AdtDecl};

use super::{compute_polarities, BaseTy, ConcRef, Kind, Polarity, Refine, Type, TypeError};

/// A datatype declaration; constructor types are stated over the declared
/// parameters without quantifiers.
#[derive(Clone, Debug, PartialEq)]
pub struct DataDecl {
    pub name: Name,
    pub tyvars: Vec<(Name, Kind, Polarity)>,
    pub rvars: Vec<(Name, Vec<Sort>, Polarity)>,
    pub ctors: Vec<(Name, Type)>,
}

impl DataDecl {
    pub fn ctor_type(&self, c: &str) -> Option<&Type> {
        self.ctors.iter().find(|(n, _)| n == c).map(|(_, t)| t)
    }

    /// A constructor's type quantified over the declared parameters.
    pub fn ctor_scheme(&self, c: &str) -> Option<Type> {
        let mut t = self.ctor_type(c)?.clone();
        for (rv, sorts, _) in self.rvars.iter().rev() {
            t = Type::all_ref(rv.clone(), sorts.clone(), t);
        }
        for (a, k, _) in self.tyvars.iter().rev() {
            t = Type::all_ty(a.clone(), *k, t);
        }
        Some(t)
    }

    /// The declared tycon applied to its own parameters.
    pub fn self_base(&self) -> BaseTy {
        BaseTy::TCon(
            self.name.clone(),
            self.tyvars
                .iter()
                .map(|(a, _, _)| Type::base(BaseTy::TyVar(a.clone()), super::NU, Pred::tt()))
                .collect(),
            self.rvars
                .iter()
                .map(|(rv, sorts, _)| {
                    let params: Vec<(Name, Sort)> = sorts
                        .iter()
                        .enumerate()
                        .map(|(i, s)| (format!("x{i}"), s.clone()))
                        .collect();
                    let args = params.iter().map(|(p, _)| Pred::var(p.clone())).collect();
                    ConcRef {
                        params,
                        body: Refine::Known(Pred::uapp(rv.clone(), args)),
                    }
                })
                .collect(),
        )
    }

    /// Field sorts of a constructor, or `None` if some field is not first order.
    pub fn field_sorts(&self, c: &str) -> Option<Vec<Sort>> {
        self.ctor_type(c)?
            .params()
            .iter()
            .map(|(_, t)| t.sort())
            .collect()
    }

    fn first_order(&self) -> bool {
        self.ctors.iter().all(|(c, _)| self.field_sorts(c).is_some())
    }
}

/// `measure m : T => t`: a logic function over a datatype.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureDecl {
    pub name: Name,
    pub input: Type,
    pub output: Type,
}

impl MeasureDecl {
    pub fn sort(&self) -> Option<Sort> {
        Some(Sort::func(vec![self.input.sort()?], self.output.sort()?))
    }

    fn tycon(&self) -> Option<&str> {
        match &self.input {
            Type::Base {
                b: BaseTy::TCon(c, _, _),
                ..
            } => Some(c),
            _ => None,
        }
    }
}

/// Declarations shared by every binding in a program.
#[derive(Clone, Debug, Default)]
pub struct Globals {
    pub datas: BTreeMap<Name, DataDecl>,
    pub ctor_of: BTreeMap<Name, Name>,
    pub measures: BTreeMap<Name, MeasureDecl>,
    pub table: SymbolTable,
    pub reflect: bool,
    pub reflected: BTreeSet<Name>,
}

impl Globals {
    pub fn new(
        datas: Vec<DataDecl>,
        measures: Vec<MeasureDecl>,
        reflect: bool,
    ) -> Result<Globals, TypeError> {
        let mut g = Globals {
            reflect,
            ..Globals::default()
        };
        let mut datas = datas;
        compute_polarities(&mut datas);
        for d in &datas {
            for (c, _) in &d.ctors {
                if g.ctor_of.insert(c.clone(), d.name.clone()).is_some() {
                    return Err(crate::logic::LogicError::DuplicateSymbol(c.clone()).into());
                }
            }
        }
        for m in &measures {
            let s = m.sort().ok_or_else(|| TypeError::ShapeMismatch(
                format!("measure {}", m.name),
                "a function between base types".into(),
            ))?;
            g.table.declare(m.name.clone(), s)?;
        }
        for mut d in datas {
            let data_sort = Sort::Data(d.name.clone());
            for (c, t) in d.ctors.iter_mut() {
                let params = t.params();
                let Some(sorts) = params.iter().map(|(_, p)| p.sort()).collect::<Option<Vec<_>>>()
                else {
                    continue;
                };
                g.table.declare(c.clone(), Sort::func(sorts.clone(), data_sort.clone()))?;
                g.table
                    .declare(tester_name(c), Sort::func(vec![data_sort.clone()], Sort::Bool))?;
                for (i, s) in sorts.iter().enumerate() {
                    g.table.declare(
                        selector_name(c, i + 1),
                        Sort::func(vec![data_sort.clone()], s.clone()),
                    )?;
                }
                if reflect {
                    let args: Vec<Pred> = params.iter().map(|(x, _)| Pred::var(x.clone())).collect();
                    *t = strengthen_result(t, &|v| Pred::eq(Pred::var(v), Pred::uapp(c.clone(), args.clone())));
                }
            }
            g.datas.insert(d.name.clone(), d);
        }
        g.measures = measures.into_iter().map(|m| (m.name.clone(), m)).collect();
        Ok(g)
    }

    /// Declare a reflected function symbol.
    pub fn declare_reflected(&mut self, f: &str, sort: Sort) -> Result<(), TypeError> {
        self.table.declare(f.to_string(), sort)?;
        self.reflected.insert(f.to_string());
        Ok(())
    }

    pub fn data_of_ctor(&self, c: &str) -> Option<&DataDecl> {
        self.datas.get(self.ctor_of.get(c)?)
    }

    /// Measure output invariants for a value `x` of base type `b`.
    pub fn invariants(&self, x: &Pred, b: &BaseTy) -> Pred {
        let BaseTy::TCon(c, _, _) = b else {
            return Pred::tt();
        };
        Pred::conj(self.measures.values().filter(|m| m.tycon() == Some(c.as_str())).map(
            |m| match &m.output {
                Type::Base { v, r, .. } => r
                    .pred()
                    .subst(v, &Pred::uapp(m.name.clone(), vec![x.clone()]))
                    .unwrap_or_else(|_| Pred::tt()),
                _ => Pred::tt(),
            },
        ))
    }

    /// Datatypes the solver should know as algebraic datatypes.
    pub fn adts(&self) -> Vec<AdtDecl> {
        if !self.reflect {
            return Vec::new();
        }
        self.datas
            .values()
            .filter(|d| d.first_order())
            .map(|d| AdtDecl {
                name: d.name.clone(),
                ctors: d
                    .ctors
                    .iter()
                    .map(|(c, _)| (c.clone(), d.field_sorts(c).unwrap_or_default()))
                    .collect(),
            })
            .collect()
    }
}

/// Conjoin `extra(v)` onto the result refinement of a curried function type.
pub(crate) fn strengthen_result(t: &Type, extra: &dyn Fn(&str) -> Pred) -> Type {
    match t {
        Type::Fun { x, input, output } => {
            Type::fun(x.clone(), (**input).clone(), strengthen_result(output, extra))
        }
        Type::AllTy { tv, kind, body } => Type::all_ty(tv.clone(), *kind, strengthen_result(body, extra)),
        Type::AllRef { rv, sorts, body } => {
            Type::all_ref(rv.clone(), sorts.clone(), strengthen_result(body, extra))
        }
        Type::Base { b, v, r } => Type::Base {
            b: b.clone(),
            v: v.clone(),
            r: Refine::Known(Pred::and(r.pred(), extra(v))),
        },
    }
}

/// A persistent typing environment; extension returns a new environment.
#[derive(Clone, Debug)]
pub struct Env {
    binds: Vec<(Name, Type)>,
    tyvars: Vec<(Name, Kind)>,
    preds: Vec<(Name, Sort)>,
    globals: Rc<Globals>,
}

impl Env {
    pub fn new(globals: Rc<Globals>) -> Env {
        Env {
            binds: Vec::new(),
            tyvars: Vec::new(),
            preds: Vec::new(),
            globals,
        }
    }

    pub fn empty() -> Env {
        Env::new(Rc::new(Globals::default()))
    }

    pub fn globals(&self) -> &Globals {
        &self.globals
    }

    pub fn globals_rc(&self) -> Rc<Globals> {
        self.globals.clone()
    }

    pub fn bind(&self, x: impl Into<Name>, t: Type) -> Env {
        let mut e = self.clone();
        e.binds.push((x.into(), t));
        e
    }

    pub fn bind_tyvar(&self, a: impl Into<Name>, k: Kind) -> Env {
        let mut e = self.clone();
        e.tyvars.push((a.into(), k));
        e
    }

    pub fn bind_pred(&self, p: impl Into<Name>, s: Sort) -> Env {
        let mut e = self.clone();
        e.preds.push((p.into(), s));
        e
    }

    pub fn lookup(&self, x: &str) -> Option<&Type> {
        self.binds.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }

    pub fn contains(&self, x: &str) -> bool {
        self.lookup(x).is_some() || self.preds.iter().any(|(p, _)| p == x)
    }

    pub fn tyvar_kind(&self, a: &str) -> Option<Kind> {
        self.tyvars.iter().rev().find(|(b, _)| b == a).map(|(_, k)| *k)
    }

    pub fn binds(&self) -> &[(Name, Type)] {
        &self.binds
    }

    pub fn len(&self) -> usize {
        self.binds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.binds.is_empty()
    }

    /// Base-typed binders in scope, in binding order, each name once.
    pub fn base_binders(&self) -> Vec<(Name, Sort)> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (x, t) in &self.binds {
            if let Some(s) = t.sort() {
                if seen.insert(x.clone()) {
                    out.push((x.clone(), s));
                }
            }
        }
        out
    }

    /// Sorts of all logic-visible names in scope.
    pub fn sort_env(&self) -> BTreeMap<Name, Sort> {
        let mut m = BTreeMap::new();
        for (x, t) in &self.binds {
            match t.sort() {
                Some(s) => {
                    m.insert(x.clone(), s);
                }
                None => {
                    m.remove(x);
                }
            }
        }
        for (p, s) in &self.preds {
            m.insert(p.clone(), s.clone());
        }
        m
    }
}
