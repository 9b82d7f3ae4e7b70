//! Surface syntax as written in source files.

use crate::logic::{Name, Pred, Span};
use crate::types::Kind;

#[derive(Clone, Debug, PartialEq)]
pub enum SRefine {
    /// No refinement written: trivially true.
    Plain,
    /// `b[?]`.
    Hole,
    /// `b[v|p]`, or `b[p]` with the binder left implicit.
    Known { v: Option<Name>, p: Pred },
}

/// A refinement argument to a type constructor.
#[derive(Clone, Debug, PartialEq)]
pub enum SConcRef {
    /// `(x, y) => p`.
    Lam(Vec<Name>, Pred),
    /// A bare refinement variable, eta-expanded during lowering.
    Name(Name),
}

#[derive(Clone, Debug, PartialEq)]
pub enum SBase {
    Named(Name, Vec<SType>, Vec<SConcRef>),
    TyVar(Name),
    /// `_`: filled in by elaboration.
    Wild,
    Unit,
}

#[derive(Clone, Debug, PartialEq)]
pub enum STypeKind {
    Base(SBase, SRefine),
    Fun(Option<Name>, Box<SType>, Box<SType>),
    Forall(Vec<(Name, Kind)>, Box<SType>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SType {
    pub kind: STypeKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Pattern {
    Ctor(Name, Vec<Name>),
    Int(i64),
    Var(Name),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SAlt {
    pub pat: Pattern,
    pub body: SExpr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SExprKind {
    Int(i64),
    Bool(bool),
    Unit,
    Var(Name),
    /// `f(a, b)`; no arguments means a unit argument.
    App(Box<SExpr>, Vec<SExpr>),
    /// No parameters means a single unit parameter.
    Lam(Vec<Name>, Box<SExpr>),
    Block(Vec<Stmt>, Box<SExpr>),
    If(Box<SExpr>, Box<SExpr>, Box<SExpr>),
    Switch(Box<SExpr>, Vec<SAlt>),
    Annot(Box<SExpr>, SType),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SExpr {
    pub kind: SExprKind,
    pub span: Span,
}

impl SExpr {
    pub fn new(kind: SExprKind, span: Span) -> Self {
        SExpr { kind, span }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LetKind {
    Plain,
    Rec,
    Def,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Val {
        name: Name,
        ty: SType,
        metric: Option<Vec<Pred>>,
        span: Span,
    },
    Let {
        name: Name,
        kind: LetKind,
        body: SExpr,
        span: Span,
    },
    Expr(SExpr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SField {
    pub name: Option<Name>,
    pub ty: SType,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SCtor {
    pub name: Name,
    pub fields: Vec<SField>,
    pub out: Option<(Option<Name>, Pred)>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decl {
    Alias {
        name: Name,
        tyvars: Vec<Name>,
        rparams: Vec<(Name, SType)>,
        body: SType,
        span: Span,
    },
    Data {
        name: Name,
        tyvars: Vec<Name>,
        rparams: Vec<(Name, SType)>,
        ctors: Vec<SCtor>,
        span: Span,
    },
    Measure {
        name: Name,
        ty: SType,
        span: Span,
    },
    Stmt(Stmt),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SurfaceProgram {
    pub decls: Vec<Decl>,
}
