//! The ANF core language produced by lowering and consumed by the checker.

use std::fmt;

use crate::logic::{Name, Span};
use crate::types::{BaseTy, Kind, Metric, Type};

const UNANNOTATED: &str = "$rec";

/// Stand-in signature of an unannotated `let rec`; elaboration replaces it
/// with a holed type of the inferred shape.
pub fn unannotated() -> Type {
    Type::hole(BaseTy::TyVar(UNANNOTATED.into()))
}

pub fn is_unannotated(t: &Type) -> bool {
    matches!(t, Type::Base { b: BaseTy::TyVar(n), .. } if n == UNANNOTATED)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Const {
    Int(i64),
    Bool(bool),
}

/// One `switch` alternative: a constructor pattern with variable fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Alt {
    pub ctor: Name,
    pub binds: Vec<Name>,
    pub body: CoreExpr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Const(Const),
    Var(Name),
    Let(Name, Box<CoreExpr>, Box<CoreExpr>),
    Lam(Vec<Name>, Box<CoreExpr>),
    App(Box<CoreExpr>, Name),
    If(Name, Box<CoreExpr>, Box<CoreExpr>),
    LetRec {
        x: Name,
        e1: Box<CoreExpr>,
        annot: Type,
        metric: Option<Metric>,
        e2: Box<CoreExpr>,
    },
    Reflect {
        x: Name,
        e1: Box<CoreExpr>,
        annot: Type,
        metric: Metric,
        e2: Box<CoreExpr>,
    },
    Switch(Name, Vec<Alt>),
    TAbs(Vec<(Name, Kind)>, Box<CoreExpr>),
    TApp(Box<CoreExpr>, Type),
    RApp(Box<CoreExpr>),
    Annot(Box<CoreExpr>, Type),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoreExpr {
    pub kind: ExprKind,
    pub span: Span,
}

impl CoreExpr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        CoreExpr { kind, span }
    }

    pub fn var(x: impl Into<Name>, span: Span) -> Self {
        CoreExpr::new(ExprKind::Var(x.into()), span)
    }

    pub fn int(n: i64, span: Span) -> Self {
        CoreExpr::new(ExprKind::Const(Const::Int(n)), span)
    }

    pub fn app(f: CoreExpr, x: impl Into<Name>, span: Span) -> Self {
        CoreExpr::new(ExprKind::App(Box::new(f), x.into()), span)
    }

    pub fn let_(x: impl Into<Name>, e1: CoreExpr, e2: CoreExpr, span: Span) -> Self {
        CoreExpr::new(ExprKind::Let(x.into(), Box::new(e1), Box::new(e2)), span)
    }

    /// Does every application argument and branch scrutinee name a variable?
    /// Holds by construction; this walks the tree and checks binder shapes.
    pub fn is_anf(&self) -> bool {
        match &self.kind {
            ExprKind::Const(_) | ExprKind::Var(_) => true,
            ExprKind::Let(_, a, b) => a.is_anf() && b.is_anf(),
            ExprKind::Lam(ps, b) => !ps.is_empty() && b.is_anf(),
            ExprKind::App(f, x) => !x.is_empty() && f.is_anf(),
            ExprKind::If(x, a, b) => !x.is_empty() && a.is_anf() && b.is_anf(),
            ExprKind::LetRec { e1, e2, .. } | ExprKind::Reflect { e1, e2, .. } => {
                e1.is_anf() && e2.is_anf()
            }
            ExprKind::Switch(x, alts) => !x.is_empty() && alts.iter().all(|a| a.body.is_anf()),
            ExprKind::TAbs(_, e) | ExprKind::TApp(e, _) | ExprKind::RApp(e) | ExprKind::Annot(e, _) => {
                e.is_anf()
            }
        }
    }

    /// Peel type and refinement applications off the head of an expression.
    pub fn strip_inst(&self) -> &CoreExpr {
        match &self.kind {
            ExprKind::TApp(e, _) | ExprKind::RApp(e) => e.strip_inst(),
            _ => self,
        }
    }

    /// Peel type abstractions and annotations, returning the lambda inside, if any.
    pub fn as_lambda(&self) -> Option<(&[Name], &CoreExpr)> {
        match &self.kind {
            ExprKind::Lam(ps, b) => Some((ps, b)),
            ExprKind::TAbs(_, e) | ExprKind::Annot(e, _) => e.as_lambda(),
            _ => None,
        }
    }

    /// Rename free occurrences of `x` to `y`.
    pub fn rename(&self, x: &str, y: &str) -> CoreExpr {
        let r = |e: &CoreExpr| Box::new(e.rename(x, y));
        let nm = |n: &Name| if n == x { y.to_string() } else { n.clone() };
        let kind = match &self.kind {
            ExprKind::Const(_) => self.kind.clone(),
            ExprKind::Var(z) => ExprKind::Var(nm(z)),
            ExprKind::Let(z, a, b) => {
                let b = if z == x { b.clone() } else { r(b) };
                ExprKind::Let(z.clone(), r(a), b)
            }
            ExprKind::Lam(ps, b) => {
                let b = if ps.iter().any(|p| p == x) { b.clone() } else { r(b) };
                ExprKind::Lam(ps.clone(), b)
            }
            ExprKind::App(f, z) => ExprKind::App(r(f), nm(z)),
            ExprKind::If(z, a, b) => ExprKind::If(nm(z), r(a), r(b)),
            ExprKind::LetRec { x: f, e1, annot, metric, e2 } => {
                if f == x {
                    self.kind.clone()
                } else {
                    ExprKind::LetRec {
                        x: f.clone(),
                        e1: r(e1),
                        annot: annot.rename_var(x, y),
                        metric: metric.as_ref().map(|m| m.rename(x, y)),
                        e2: r(e2),
                    }
                }
            }
            ExprKind::Reflect { x: f, e1, annot, metric, e2 } => {
                if f == x {
                    self.kind.clone()
                } else {
                    ExprKind::Reflect {
                        x: f.clone(),
                        e1: r(e1),
                        annot: annot.rename_var(x, y),
                        metric: metric.rename(x, y),
                        e2: r(e2),
                    }
                }
            }
            ExprKind::Switch(z, alts) => ExprKind::Switch(
                nm(z),
                alts.iter()
                    .map(|a| Alt {
                        ctor: a.ctor.clone(),
                        binds: a.binds.clone(),
                        body: if a.binds.iter().any(|b| b == x) {
                            a.body.clone()
                        } else {
                            a.body.rename(x, y)
                        },
                        span: a.span,
                    })
                    .collect(),
            ),
            ExprKind::TAbs(tv, e) => ExprKind::TAbs(tv.clone(), r(e)),
            ExprKind::TApp(e, t) => ExprKind::TApp(r(e), t.rename_var(x, y)),
            ExprKind::RApp(e) => ExprKind::RApp(r(e)),
            ExprKind::Annot(e, t) => ExprKind::Annot(r(e), t.rename_var(x, y)),
        };
        CoreExpr::new(kind, self.span)
    }
}

/// How a top-level definition is bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeclKind {
    /// Signature without a body; trusted.
    Assume,
    Let,
    Rec,
    Def,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoreDecl {
    pub name: Name,
    pub kind: DeclKind,
    pub annot: Option<Type>,
    pub metric: Option<Metric>,
    pub body: Option<CoreExpr>,
    pub span: Span,
}

impl fmt::Display for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const::Int(n) => write!(f, "{n}"),
            Const::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Display for CoreExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Const(c) => write!(f, "{c}"),
            ExprKind::Var(x) => write!(f, "{x}"),
            ExprKind::Let(x, a, b) => write!(f, "let {x} = {a}; {b}"),
            ExprKind::Lam(ps, b) => write!(f, "({}) => {{ {b} }}", ps.join(", ")),
            ExprKind::App(e, x) => write!(f, "{e}({x})"),
            ExprKind::If(x, a, b) => write!(f, "if ({x}) {{ {a} }} else {{ {b} }}"),
            ExprKind::LetRec { x, e1, annot, e2, .. } => {
                write!(f, "let rec {x} : {annot} = {e1}; {e2}")
            }
            ExprKind::Reflect { x, e1, annot, e2, .. } => {
                write!(f, "def {x} : {annot} = {e1}; {e2}")
            }
            ExprKind::Switch(x, alts) => {
                write!(f, "switch ({x}) {{")?;
                for a in alts {
                    write!(f, " | {}({}) => {}", a.ctor, a.binds.join(", "), a.body)?;
                }
                write!(f, " }}")
            }
            ExprKind::TAbs(tvs, e) => {
                let names: Vec<&str> = tvs.iter().map(|(a, _)| a.as_str()).collect();
                write!(f, "Λ{}. {e}", names.join(" "))
            }
            ExprKind::TApp(e, t) => write!(f, "({e})[{t}]"),
            ExprKind::RApp(e) => write!(f, "({e})[*]"),
            ExprKind::Annot(e, t) => write!(f, "({e} : {t})"),
        }
    }
}
