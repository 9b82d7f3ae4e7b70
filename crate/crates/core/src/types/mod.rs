//! Refinement types and the type-level meta-functions of the checker.
//!
//! A [`Type`] is a refined base, a dependent function, or a type- or
//! refinement-quantified type. Refinements are [`Refine::Known`] predicates
//! or [`Refine::Hole`]s that [`fresh`] replaces by Horn variables.

mod data;
mod env;
mod ops;
mod prims;
mod reflect;
mod sub;
mod term;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::logic::{LogicError, Name, Pred, Sort};

pub use data::{compute_polarities, dconty, unapply};
pub use env::{DataDecl, Env, Globals, MeasureDecl};
pub use ops::{fresh, fresh_cref, meet, rinst, self_ty, tv_subst, wf};
pub use prims::{prim_op, prim_type, PrimOp};
pub use reflect::{embed, embed_alts, reflect};
pub use sub::{imp, sub};
pub use term::{limit, wfp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("shape mismatch: `{0}` vs `{1}`")]
    ShapeMismatch(String, String),
    #[error("ill-sorted refinement in `{ty}`: {source}")]
    IllSortedRefinement {
        ty: String,
        #[source]
        source: LogicError,
    },
    #[error("type variable `'{0}` of kind Star cannot be refined")]
    RefinedNonBaseVar(Name),
    #[error("refined type variable `'{0}` instantiated with non-base type `{1}`")]
    RefinedVarNonBaseInstance(Name, String),
    #[error("unknown type constructor `{0}`")]
    UnknownTycon(Name),
    #[error("unbound type variable `'{0}`")]
    UnboundTyVar(Name),
    #[error("`{what}` expects {expected} arguments, got {found}")]
    ArityMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("constructor `{ctor}` does not build values of type `{ty}`")]
    WrongConstructor { ctor: Name, ty: String },
    #[error("unbound variable `{0}`")]
    UnboundVariable(Name),
    #[error("metric `{0}` never becomes well-formed over the parameters")]
    MetricNeverWellFormed(String),
    #[error("termination metric given for non-function type `{0}`")]
    MetricOnNonFunction(String),
    #[error("metric lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("cannot embed `{0}` into the logic")]
    NonEmbeddableBody(String),
    #[error("termination metrics are not supported on refinement-polymorphic type `{0}`")]
    RefinementPolymorphicTermination(String),
    #[error("unexpected refinement hole in `{0}`")]
    UnexpectedHole(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Base,
    Star,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Base => "Base",
            Kind::Star => "Star",
        })
    }
}

/// Variance of a datatype parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
    Both,
    Neither,
}

impl Polarity {
    pub fn join(self, other: Polarity) -> Polarity {
        use Polarity::*;
        match (self, other) {
            (Neither, p) | (p, Neither) => p,
            (a, b) if a == b => a,
            _ => Both,
        }
    }

    pub fn flip(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
            p => p,
        }
    }

    /// Polarity of an occurrence at `inner` nested in a context of polarity `self`.
    pub fn compose(self, inner: Polarity) -> Polarity {
        use Polarity::*;
        match (self, inner) {
            (Neither, _) | (_, Neither) => Neither,
            (Positive, p) => p,
            (Negative, p) => p.flip(),
            (Both, _) => Both,
        }
    }

    pub fn covariant(self) -> bool {
        matches!(self, Polarity::Positive | Polarity::Both)
    }

    pub fn contravariant(self) -> bool {
        matches!(self, Polarity::Negative | Polarity::Both)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Refine {
    Known(Pred),
    Hole,
}

impl Refine {
    pub fn tt() -> Refine {
        Refine::Known(Pred::tt())
    }

    pub fn is_hole(&self) -> bool {
        matches!(self, Refine::Hole)
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Refine::Known(p) if p.is_true())
    }

    /// The predicate, reading a hole as `true`.
    pub fn pred(&self) -> Pred {
        match self {
            Refine::Known(p) => p.clone(),
            Refine::Hole => Pred::tt(),
        }
    }

    fn subst(&self, su: &BTreeMap<Name, Pred>) -> Result<Refine, LogicError> {
        match self {
            Refine::Known(p) => Ok(Refine::Known(p.subst_many(su)?)),
            Refine::Hole => Ok(Refine::Hole),
        }
    }

    fn map(&self, f: &mut dyn FnMut(&Pred) -> Pred) -> Refine {
        match self {
            Refine::Known(p) => Refine::Known(f(p)),
            Refine::Hole => Refine::Hole,
        }
    }
}

/// A refinement abstraction `λx̄. p` passed to a refinement parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcRef {
    pub params: Vec<(Name, Sort)>,
    pub body: Refine,
}

impl ConcRef {
    pub fn hole(params: Vec<(Name, Sort)>) -> ConcRef {
        ConcRef {
            params,
            body: Refine::Hole,
        }
    }

    fn subst(&self, su: &BTreeMap<Name, Pred>) -> Result<ConcRef, LogicError> {
        let mut su = su.clone();
        for (p, _) in &self.params {
            su.remove(p);
        }
        let fv = replacement_vars(&su);
        let mut params = self.params.clone();
        let mut body = self.body.clone();
        for (p, _) in params.iter_mut() {
            if fv.contains(p) {
                let np = avoid(p, &fv);
                body = body.map(&mut |q| q.rename1(p, &np));
                *p = np;
            }
        }
        Ok(ConcRef {
            params,
            body: body.subst(&su)?,
        })
    }

    /// Apply this abstraction to arguments.
    pub fn apply(&self, args: &[Pred]) -> Result<Pred, TypeError> {
        if args.len() != self.params.len() {
            return Err(TypeError::ArityMismatch {
                what: format!("{self}"),
                expected: self.params.len(),
                found: args.len(),
            });
        }
        let su: BTreeMap<Name, Pred> = self
            .params
            .iter()
            .map(|(p, _)| p.clone())
            .zip(args.iter().cloned())
            .collect();
        Ok(self.body.pred().subst_many(&su)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BaseTy {
    Int,
    Bool,
    TyVar(Name),
    TCon(Name, Vec<Type>, Vec<ConcRef>),
}

impl BaseTy {
    pub fn sort(&self) -> Sort {
        match self {
            BaseTy::Int => Sort::Int,
            BaseTy::Bool => Sort::Bool,
            BaseTy::TyVar(a) => Sort::Var(a.clone()),
            BaseTy::TCon(c, _, _) => Sort::Data(c.clone()),
        }
    }

    fn subst(&self, su: &BTreeMap<Name, Pred>) -> Result<BaseTy, LogicError> {
        match self {
            BaseTy::TCon(c, ts, rs) => Ok(BaseTy::TCon(
                c.clone(),
                ts.iter().map(|t| t.subst(su)).collect::<Result<_, _>>()?,
                rs.iter().map(|r| r.subst(su)).collect::<Result<_, _>>()?,
            )),
            b => Ok(b.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Type {
    Base {
        b: BaseTy,
        v: Name,
        r: Refine,
    },
    Fun {
        x: Name,
        input: Box<Type>,
        output: Box<Type>,
    },
    AllTy {
        tv: Name,
        kind: Kind,
        body: Box<Type>,
    },
    AllRef {
        rv: Name,
        sorts: Vec<Sort>,
        body: Box<Type>,
    },
}

/// Conventional name of the value variable.
pub const NU: &str = "v";

/// Prefix of wildcard base types awaiting inference.
pub const WILDCARD_PREFIX: &str = "$w";

fn replacement_vars(su: &BTreeMap<Name, Pred>) -> BTreeSet<Name> {
    su.values().flat_map(|p| p.free_vars()).collect()
}

/// Prime `x` until it avoids `used`.
pub(crate) fn avoid(x: &str, used: &BTreeSet<Name>) -> Name {
    let mut y = format!("{x}'");
    while used.contains(&y) {
        y.push('\'');
    }
    y
}

impl Type {
    pub fn base(b: BaseTy, v: impl Into<Name>, p: Pred) -> Type {
        Type::Base {
            b,
            v: v.into(),
            r: Refine::Known(p),
        }
    }

    pub fn int() -> Type {
        Type::base(BaseTy::Int, NU, Pred::tt())
    }

    pub fn bool() -> Type {
        Type::base(BaseTy::Bool, NU, Pred::tt())
    }

    pub fn int_ref(p: Pred) -> Type {
        Type::base(BaseTy::Int, NU, p)
    }

    pub fn hole(b: BaseTy) -> Type {
        Type::Base {
            b,
            v: NU.into(),
            r: Refine::Hole,
        }
    }

    pub fn fun(x: impl Into<Name>, input: Type, output: Type) -> Type {
        Type::Fun {
            x: x.into(),
            input: Box::new(input),
            output: Box::new(output),
        }
    }

    pub fn all_ty(tv: impl Into<Name>, kind: Kind, body: Type) -> Type {
        Type::AllTy {
            tv: tv.into(),
            kind,
            body: Box::new(body),
        }
    }

    pub fn all_ref(rv: impl Into<Name>, sorts: Vec<Sort>, body: Type) -> Type {
        Type::AllRef {
            rv: rv.into(),
            sorts,
            body: Box::new(body),
        }
    }

    pub fn is_base(&self) -> bool {
        matches!(self, Type::Base { .. })
    }

    /// Sort of a base type; `None` for function and quantified types.
    pub fn sort(&self) -> Option<Sort> {
        match self {
            Type::Base { b, .. } => Some(b.sort()),
            _ => None,
        }
    }

    /// Refinement of a base type instantiated at `x`.
    pub fn refinement_at(&self, x: &str) -> Pred {
        match self {
            Type::Base { v, r, .. } => r.pred().rename1(v, x),
            _ => Pred::tt(),
        }
    }

    pub fn has_holes(&self) -> bool {
        let mut found = false;
        self.visit_refines(&mut |r| found |= r.is_hole());
        found
    }

    /// Visit every refinement, including those inside type arguments and abstractions.
    pub fn visit_refines(&self, f: &mut dyn FnMut(&Refine)) {
        match self {
            Type::Base { b, r, .. } => {
                if let BaseTy::TCon(_, ts, rs) = b {
                    ts.iter().for_each(|t| t.visit_refines(f));
                    rs.iter().for_each(|c| f(&c.body));
                }
                f(r);
            }
            Type::Fun { input, output, .. } => {
                input.visit_refines(f);
                output.visit_refines(f);
            }
            Type::AllTy { body, .. } | Type::AllRef { body, .. } => body.visit_refines(f),
        }
    }

    /// Rewrite every known refinement with `f`; binders are not adjusted.
    pub fn map_preds(&self, f: &mut dyn FnMut(&Pred) -> Pred) -> Type {
        match self {
            Type::Base { b, v, r } => {
                let b = match b {
                    BaseTy::TCon(c, ts, rs) => BaseTy::TCon(
                        c.clone(),
                        ts.iter().map(|t| t.map_preds(f)).collect(),
                        rs.iter()
                            .map(|c| ConcRef {
                                params: c.params.clone(),
                                body: c.body.map(f),
                            })
                            .collect(),
                    ),
                    b => b.clone(),
                };
                Type::Base {
                    b,
                    v: v.clone(),
                    r: r.map(f),
                }
            }
            Type::Fun { x, input, output } => {
                Type::fun(x.clone(), input.map_preds(f), output.map_preds(f))
            }
            Type::AllTy { tv, kind, body } => Type::all_ty(tv.clone(), *kind, body.map_preds(f)),
            Type::AllRef { rv, sorts, body } => {
                Type::all_ref(rv.clone(), sorts.clone(), body.map_preds(f))
            }
        }
    }

    /// Replace every hole by `true`.
    pub fn holes_to_true(&self) -> Type {
        match self {
            Type::Base { b, v, r } => {
                let b = match b {
                    BaseTy::TCon(c, ts, rs) => BaseTy::TCon(
                        c.clone(),
                        ts.iter().map(Type::holes_to_true).collect(),
                        rs.iter()
                            .map(|c| ConcRef {
                                params: c.params.clone(),
                                body: Refine::Known(c.body.pred()),
                            })
                            .collect(),
                    ),
                    b => b.clone(),
                };
                Type::Base {
                    b,
                    v: v.clone(),
                    r: Refine::Known(r.pred()),
                }
            }
            Type::Fun { x, input, output } => {
                Type::fun(x.clone(), input.holes_to_true(), output.holes_to_true())
            }
            Type::AllTy { tv, kind, body } => Type::all_ty(tv.clone(), *kind, body.holes_to_true()),
            Type::AllRef { rv, sorts, body } => {
                Type::all_ref(rv.clone(), sorts.clone(), body.holes_to_true())
            }
        }
    }

    /// Capture-avoiding substitution of predicates for term variables.
    pub fn subst(&self, su: &BTreeMap<Name, Pred>) -> Result<Type, LogicError> {
        if su.is_empty() {
            return Ok(self.clone());
        }
        match self {
            Type::Base { b, v, r } => {
                let b = b.subst(su)?;
                let mut inner = su.clone();
                inner.remove(v);
                let fv = replacement_vars(&inner);
                let (v, r) = if fv.contains(v) {
                    let mut used = fv.clone();
                    used.extend(r.pred().free_vars());
                    let nv = avoid(v, &used);
                    let r = r.map(&mut |p| p.rename1(v, &nv));
                    (nv, r)
                } else {
                    (v.clone(), r.clone())
                };
                Ok(Type::Base {
                    b,
                    v,
                    r: r.subst(&inner)?,
                })
            }
            Type::Fun { x, input, output } => {
                let input = input.subst(su)?;
                let mut inner = su.clone();
                inner.remove(x);
                let fv = replacement_vars(&inner);
                let (x, output) = if fv.contains(x) {
                    let mut used = fv.clone();
                    used.extend(output.free_vars());
                    let nx = avoid(x, &used);
                    let out = output.rename_var(x, &nx);
                    (nx, out)
                } else {
                    (x.clone(), (**output).clone())
                };
                Ok(Type::fun(x, input, output.subst(&inner)?))
            }
            Type::AllTy { tv, kind, body } => Ok(Type::all_ty(tv.clone(), *kind, body.subst(su)?)),
            Type::AllRef { rv, sorts, body } => {
                Ok(Type::all_ref(rv.clone(), sorts.clone(), body.subst(su)?))
            }
        }
    }

    pub fn subst1(&self, x: &str, p: &Pred) -> Result<Type, LogicError> {
        self.subst(&BTreeMap::from([(x.to_string(), p.clone())]))
    }

    /// Rename the term variable `x` to `y`.
    pub fn rename_var(&self, x: &str, y: &str) -> Type {
        self.subst1(x, &Pred::var(y))
            .expect("variable-for-variable substitution cannot fail")
    }

    /// Free term variables of all refinements.
    pub fn free_vars(&self) -> BTreeSet<Name> {
        match self {
            Type::Base { b, v, r } => {
                let mut out = r.pred().free_vars();
                out.remove(v);
                if let BaseTy::TCon(_, ts, rs) = b {
                    for t in ts {
                        out.extend(t.free_vars());
                    }
                    for c in rs {
                        let mut fv = c.body.pred().free_vars();
                        for (p, _) in &c.params {
                            fv.remove(p);
                        }
                        out.extend(fv);
                    }
                }
                out
            }
            Type::Fun { x, input, output } => {
                let mut out = output.free_vars();
                out.remove(x);
                out.extend(input.free_vars());
                out
            }
            Type::AllTy { body, .. } | Type::AllRef { body, .. } => body.free_vars(),
        }
    }

    /// Rename the type variable `a` to `b`, including sort annotations.
    pub fn rename_tyvar(&self, a: &str, b: &str) -> Type {
        let sm = BTreeMap::from([(a.to_string(), Sort::Var(b.to_string()))]);
        match self {
            Type::Base { b: bt, v, r } => {
                let bt = match bt {
                    BaseTy::TyVar(x) if x == a => BaseTy::TyVar(b.to_string()),
                    BaseTy::TCon(c, ts, rs) => BaseTy::TCon(
                        c.clone(),
                        ts.iter().map(|t| t.rename_tyvar(a, b)).collect(),
                        rs.iter()
                            .map(|c| ConcRef {
                                params: c
                                    .params
                                    .iter()
                                    .map(|(p, s)| (p.clone(), s.subst_vars(&sm)))
                                    .collect(),
                                body: c.body.clone(),
                            })
                            .collect(),
                    ),
                    other => other.clone(),
                };
                Type::Base {
                    b: bt,
                    v: v.clone(),
                    r: r.clone(),
                }
            }
            Type::Fun { x, input, output } => {
                Type::fun(x.clone(), input.rename_tyvar(a, b), output.rename_tyvar(a, b))
            }
            Type::AllTy { tv, .. } if tv == a => self.clone(),
            Type::AllTy { tv, kind, body } => Type::all_ty(tv.clone(), *kind, body.rename_tyvar(a, b)),
            Type::AllRef { rv, sorts, body } => Type::all_ref(
                rv.clone(),
                sorts.iter().map(|s| s.subst_vars(&sm)).collect(),
                body.rename_tyvar(a, b),
            ),
        }
    }

    /// Rename the applied predicate symbol `f` to `g`.
    pub fn rename_symbol(&self, f: &str, g: &str) -> Type {
        match self {
            Type::AllRef { rv, .. } if rv == f => self.clone(),
            _ => self.map_preds(&mut |p| rename_uapp(p, f, g)),
        }
    }

    /// Same refinement-erased structure (binder names and refinements ignored).
    pub fn same_shape(&self, other: &Type) -> bool {
        match (self, other) {
            (Type::Base { b: b1, .. }, Type::Base { b: b2, .. }) => match (b1, b2) {
                (BaseTy::Int, BaseTy::Int) | (BaseTy::Bool, BaseTy::Bool) => true,
                (BaseTy::TyVar(a), BaseTy::TyVar(b)) => a == b,
                (BaseTy::TCon(c1, t1, r1), BaseTy::TCon(c2, t2, r2)) => {
                    c1 == c2
                        && t1.len() == t2.len()
                        && r1.len() == r2.len()
                        && t1.iter().zip(t2).all(|(a, b)| a.same_shape(b))
                }
                _ => false,
            },
            (
                Type::Fun {
                    input: i1,
                    output: o1,
                    ..
                },
                Type::Fun {
                    input: i2,
                    output: o2,
                    ..
                },
            ) => i1.same_shape(i2) && o1.same_shape(o2),
            (
                Type::AllTy {
                    tv: a, body: b1, ..
                },
                Type::AllTy {
                    tv: b, body: b2, ..
                },
            ) => b1.same_shape(&b2.rename_tyvar(b, a)),
            (Type::AllRef { body: b1, .. }, Type::AllRef { body: b2, .. }) => b1.same_shape(b2),
            _ => false,
        }
    }

    /// Parameters of a curried function type, skipping quantifiers.
    pub fn params(&self) -> Vec<(Name, Type)> {
        let mut out = Vec::new();
        let mut t = self;
        loop {
            match t {
                Type::Fun { x, input, output } => {
                    out.push((x.clone(), (**input).clone()));
                    t = output;
                }
                Type::AllTy { body, .. } | Type::AllRef { body, .. } => t = body,
                Type::Base { .. } => return out,
            }
        }
    }

    /// The final result of a curried function type.
    pub fn result(&self) -> &Type {
        match self {
            Type::Fun { output, .. } => output.result(),
            Type::AllTy { body, .. } | Type::AllRef { body, .. } => body.result(),
            t => t,
        }
    }

    /// Rename the binders of a curried function type to `names`, in order.
    pub fn rename_params(&self, names: &[Name]) -> Type {
        match (self, names.split_first()) {
            (Type::Fun { x, input, output }, Some((y, rest))) => {
                let out = if x == y {
                    (**output).clone()
                } else {
                    output.rename_var(x, y)
                };
                Type::fun(y.clone(), (**input).clone(), out.rename_params(rest))
            }
            (Type::AllTy { tv, kind, body }, _) => {
                Type::all_ty(tv.clone(), *kind, body.rename_params(names))
            }
            (Type::AllRef { rv, sorts, body }, _) => {
                Type::all_ref(rv.clone(), sorts.clone(), body.rename_params(names))
            }
            _ => self.clone(),
        }
    }
}

fn rename_uapp(p: &Pred, f: &str, g: &str) -> Pred {
    p.transform(&mut |q| match q {
        Pred::UApp(h, args) if h == f => Pred::UApp(g.to_string(), args),
        q => q,
    })
}

/// Termination metric: a nonempty lexicographic sequence of Int expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric(pub Vec<Pred>);

impl Metric {
    pub fn rename(&self, x: &str, y: &str) -> Metric {
        Metric(self.0.iter().map(|p| p.rename1(x, y)).collect())
    }

    pub fn subst(&self, su: &BTreeMap<Name, Pred>) -> Result<Metric, LogicError> {
        Ok(Metric(
            self.0
                .iter()
                .map(|p| p.subst_many(su))
                .collect::<Result<_, _>>()?,
        ))
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        self.0.iter().flat_map(|p| p.free_vars()).collect()
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        f.write_str(&parts.join(", "))
    }
}

fn fmt_tyvar(a: &str) -> String {
    if a.starts_with(WILDCARD_PREFIX) {
        "_".into()
    } else {
        format!("'{a}")
    }
}

impl fmt::Display for BaseTy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseTy::Int => f.write_str("int"),
            BaseTy::Bool => f.write_str("bool"),
            BaseTy::TyVar(a) => f.write_str(&fmt_tyvar(a)),
            BaseTy::TCon(c, ts, rs) => {
                f.write_str(c)?;
                if !ts.is_empty() {
                    let args: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
                    write!(f, "({})", args.join(", "))?;
                }
                if !rs.is_empty() {
                    let args: Vec<String> = rs.iter().map(|r| r.to_string()).collect();
                    write!(f, "({})", args.join(", "))?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for ConcRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<&str> = self.params.iter().map(|(p, _)| p.as_str()).collect();
        match &self.body {
            Refine::Known(p) => write!(f, "({}) => {p}", ps.join(", ")),
            Refine::Hole => write!(f, "({}) => ?", ps.join(", ")),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Base { b, v, r } => match r {
                Refine::Hole => write!(f, "{b}[?]"),
                Refine::Known(p) if p.is_true() => write!(f, "{b}"),
                Refine::Known(p) => write!(f, "{b}[{v}|{p}]"),
            },
            Type::Fun { x, input, output } => {
                if input.is_base() {
                    write!(f, "{x}:{input} => {output}")
                } else {
                    write!(f, "{x}:({input}) => {output}")
                }
            }
            Type::AllTy { tv, kind, body } => write!(f, "forall {}:{kind}. {body}", fmt_tyvar(tv)),
            Type::AllRef { rv, sorts, body } => {
                let ss: Vec<String> = sorts.iter().map(|s| s.to_string()).collect();
                write!(f, "forall {rv}:({}). {body}", ss.join(", "))
            }
        }
    }
}
