//! Hindley–Milner elaboration of lowered programs.
//!
//! Inference runs over refinement-erased types. Every use of a quantified
//! binder is rewritten to an explicit instantiation: one `TApp` per type
//! quantifier carrying a fully holed instance, and one `RApp` per
//! refinement quantifier. Bodies checked against quantified signatures are
//! wrapped in `TAbs`, and expressions that cannot synthesize a type get a
//! holed annotation.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::logic::{Name, NameGen, Sort, Span};
use crate::types::{prim_op, prim_type, BaseTy, ConcRef, DataDecl, Kind, Type, WILDCARD_PREFIX};

use super::core::{is_unannotated, Alt, Const, CoreDecl, CoreExpr, DeclKind, ExprKind};
use super::Program;

/// Refinement-erased types used during inference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HTy {
    Int,
    Bool,
    /// A rigid (skolem) type variable.
    Var(Name),
    Con(Name, Vec<HTy>),
    Meta(usize),
    Fun(Box<HTy>, Box<HTy>),
}

impl HTy {
    fn fun(a: HTy, b: HTy) -> HTy {
        HTy::Fun(Box::new(a), Box::new(b))
    }
}

impl fmt::Display for HTy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HTy::Int => write!(f, "int"),
            HTy::Bool => write!(f, "bool"),
            HTy::Var(a) => write!(f, "{a}"),
            HTy::Con(c, args) if args.is_empty() => write!(f, "{c}"),
            HTy::Con(c, args) => {
                let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                write!(f, "{c}({})", args.join(", "))
            }
            HTy::Meta(i) => write!(f, "?{i}"),
            HTy::Fun(a, b) => match **a {
                HTy::Fun(..) => write!(f, "({a}) => {b}"),
                _ => write!(f, "{a} => {b}"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElabError {
    #[error("type mismatch: expected `{expected}`, found `{found}`")]
    UnificationFailure {
        span: Span,
        expected: String,
        found: String,
    },
    #[error("cannot construct an infinite type")]
    OccursCheck { span: Span },
    #[error("unbound variable `{name}`")]
    Unbound { span: Span, name: Name },
    #[error("{message}")]
    Unsupported { span: Span, message: String },
}

impl ElabError {
    pub fn span(&self) -> Span {
        match self {
            ElabError::UnificationFailure { span, .. }
            | ElabError::OccursCheck { span }
            | ElabError::Unbound { span, .. }
            | ElabError::Unsupported { span, .. } => *span,
        }
    }
}

/// Erase refinements; type variables become rigid.
pub fn erase(t: &Type) -> HTy {
    match t {
        Type::Base { b, .. } => match b {
            BaseTy::Int => HTy::Int,
            BaseTy::Bool => HTy::Bool,
            BaseTy::TyVar(a) => HTy::Var(a.clone()),
            BaseTy::TCon(c, ts, _) => HTy::Con(c.clone(), ts.iter().map(erase).collect()),
        },
        Type::Fun { input, output, .. } => HTy::fun(erase(input), erase(output)),
        Type::AllTy { body, .. } | Type::AllRef { body, .. } => erase(body),
    }
}

#[derive(Clone, Debug)]
enum Scheme {
    Poly(Type),
    Mono(HTy),
}

enum Inst {
    Ty(HTy),
    Ref,
}

/// A deferred instance type, resolved once inference is complete.
struct Hole {
    ty: HTy,
    names: Vec<Name>,
    trivial: bool,
}

const HOLE_PREFIX: &str = "$h";

struct Elab<'a> {
    metas: Vec<Option<HTy>>,
    wild: BTreeMap<Name, usize>,
    holes: Vec<Hole>,
    globals: BTreeMap<Name, Scheme>,
    ctors: BTreeMap<Name, Type>,
    datas: &'a [DataDecl],
    locals: Vec<(Name, Scheme)>,
    gen: NameGen,
}

/// Elaborate every declaration body of a lowered program.
pub fn elaborate(prog: Program) -> Result<Program, ElabError> {
    let mut ctors = BTreeMap::new();
    for d in &prog.datas {
        for (c, _) in &d.ctors {
            ctors.insert(c.clone(), d.ctor_scheme(c).expect("constructor of its own datatype"));
        }
    }
    let mut el = Elab {
        metas: Vec::new(),
        wild: BTreeMap::new(),
        holes: Vec::new(),
        globals: BTreeMap::new(),
        ctors,
        datas: &prog.datas,
        locals: Vec::new(),
        gen: NameGen::new(),
    };
    let mut decls = Vec::new();
    for d in &prog.decls {
        decls.push(el.decl(d)?);
    }
    let decls = decls
        .into_iter()
        .map(|d| CoreDecl {
            annot: d.annot.as_ref().map(|t| el.fill(t)),
            body: d.body.as_ref().map(|b| el.fill_expr(b)),
            ..d
        })
        .collect();
    Ok(Program {
        datas: prog.datas.clone(),
        measures: prog.measures,
        decls,
    })
}

fn has_prefix(t: &Type) -> bool {
    matches!(t, Type::AllTy { .. } | Type::AllRef { .. })
}

/// Expressions that can only be checked, never synthesized.
fn needs_annot(e: &CoreExpr) -> bool {
    matches!(
        e.kind,
        ExprKind::Lam(..)
            | ExprKind::If(..)
            | ExprKind::Switch(..)
            | ExprKind::Let(..)
            | ExprKind::LetRec { .. }
            | ExprKind::Reflect { .. }
            | ExprKind::TAbs(..)
    )
}

fn lam_names(e: &CoreExpr) -> Vec<Name> {
    e.as_lambda().map(|(ps, _)| ps.to_vec()).unwrap_or_default()
}

impl Elab<'_> {
    fn meta(&mut self) -> HTy {
        self.metas.push(None);
        HTy::Meta(self.metas.len() - 1)
    }

    fn zonk(&self, t: &HTy) -> HTy {
        match t {
            HTy::Meta(i) => match &self.metas[*i] {
                Some(u) => self.zonk(u),
                None => t.clone(),
            },
            HTy::Con(c, args) => HTy::Con(c.clone(), args.iter().map(|a| self.zonk(a)).collect()),
            HTy::Fun(a, b) => HTy::fun(self.zonk(a), self.zonk(b)),
            _ => t.clone(),
        }
    }

    fn occurs(&self, i: usize, t: &HTy) -> bool {
        match t {
            HTy::Meta(j) => match &self.metas[*j] {
                Some(u) => self.occurs(i, u),
                None => i == *j,
            },
            HTy::Con(_, args) => args.iter().any(|a| self.occurs(i, a)),
            HTy::Fun(a, b) => self.occurs(i, a) || self.occurs(i, b),
            _ => false,
        }
    }

    fn unify(&mut self, expected: &HTy, found: &HTy, span: Span) -> Result<(), ElabError> {
        let a = self.shallow(expected);
        let b = self.shallow(found);
        match (&a, &b) {
            (HTy::Meta(i), HTy::Meta(j)) if i == j => Ok(()),
            (HTy::Meta(i), t) | (t, HTy::Meta(i)) => {
                if self.occurs(*i, t) {
                    return Err(ElabError::OccursCheck { span });
                }
                self.metas[*i] = Some(t.clone());
                Ok(())
            }
            (HTy::Int, HTy::Int) | (HTy::Bool, HTy::Bool) => Ok(()),
            (HTy::Var(x), HTy::Var(y)) if x == y => Ok(()),
            (HTy::Con(c, xs), HTy::Con(d, ys)) if c == d && xs.len() == ys.len() => {
                for (x, y) in xs.iter().zip(ys) {
                    self.unify(x, y, span)?;
                }
                Ok(())
            }
            (HTy::Fun(a1, b1), HTy::Fun(a2, b2)) => {
                self.unify(a1, a2, span)?;
                self.unify(b1, b2, span)
            }
            _ => Err(ElabError::UnificationFailure {
                span,
                expected: self.zonk(expected).to_string(),
                found: self.zonk(found).to_string(),
            }),
        }
    }

    fn shallow(&self, t: &HTy) -> HTy {
        match t {
            HTy::Meta(i) => match &self.metas[*i] {
                Some(u) => self.shallow(u),
                None => t.clone(),
            },
            _ => t.clone(),
        }
    }

    /// Convert a quantifier-free type, mapping type variables through `su`.
    fn to_hty(&mut self, t: &Type, su: &BTreeMap<Name, HTy>, span: Span) -> Result<HTy, ElabError> {
        Ok(match t {
            Type::Base { b, .. } => match b {
                BaseTy::Int => HTy::Int,
                BaseTy::Bool => HTy::Bool,
                BaseTy::TyVar(a) => {
                    if let Some(h) = su.get(a) {
                        h.clone()
                    } else if a.starts_with(WILDCARD_PREFIX) {
                        match self.wild.get(a) {
                            Some(i) => HTy::Meta(*i),
                            None => {
                                let m = self.meta();
                                let HTy::Meta(i) = m else { unreachable!() };
                                self.wild.insert(a.clone(), i);
                                m
                            }
                        }
                    } else {
                        HTy::Var(a.clone())
                    }
                }
                BaseTy::TCon(c, ts, _) => HTy::Con(
                    c.clone(),
                    ts.iter().map(|t| self.to_hty(t, su, span)).collect::<Result<_, _>>()?,
                ),
            },
            Type::Fun { input, output, .. } => HTy::fun(self.to_hty(input, su, span)?, self.to_hty(output, su, span)?),
            Type::AllTy { .. } | Type::AllRef { .. } => {
                return Err(ElabError::Unsupported {
                    span,
                    message: format!("quantifier nested inside type `{t}`"),
                })
            }
        })
    }

    fn instantiate(&mut self, t: &Type, span: Span) -> Result<(HTy, Vec<Inst>), ElabError> {
        let mut su = BTreeMap::new();
        let mut insts = Vec::new();
        let mut t = t;
        loop {
            match t {
                Type::AllTy { tv, body, .. } => {
                    let m = self.meta();
                    su.insert(tv.clone(), m.clone());
                    insts.push(Inst::Ty(m));
                    t = body;
                }
                Type::AllRef { body, .. } => {
                    insts.push(Inst::Ref);
                    t = body;
                }
                _ => break,
            }
        }
        Ok((self.to_hty(t, &su, span)?, insts))
    }

    /// Strip a quantifier prefix, returning the type variables and the body.
    fn skolemize<'t>(&mut self, t: &'t Type, span: Span) -> Result<(Vec<(Name, Kind)>, HTy), ElabError> {
        let mut tvs = Vec::new();
        let mut t = t;
        loop {
            match t {
                Type::AllTy { tv, kind, body } => {
                    tvs.push((tv.clone(), *kind));
                    t = body;
                }
                Type::AllRef { body, .. } => t = body,
                _ => break,
            }
        }
        Ok((tvs, self.to_hty(t, &BTreeMap::new(), span)?))
    }

    fn lookup(&self, x: &str) -> Option<(Scheme, bool)> {
        if let Some((_, s)) = self.locals.iter().rev().find(|(y, _)| y == x) {
            return Some((s.clone(), false));
        }
        if let Some(s) = self.globals.get(x) {
            return Some((s.clone(), false));
        }
        if let Some(t) = self.ctors.get(x) {
            return Some((Scheme::Poly(t.clone()), false));
        }
        prim_op(x).map(|op| (Scheme::Poly(prim_type(op)), true))
    }

    fn placeholder(&mut self, ty: HTy, names: Vec<Name>, trivial: bool) -> Type {
        self.holes.push(Hole { ty, names, trivial });
        Type::hole(BaseTy::TyVar(format!("{HOLE_PREFIX}{}", self.holes.len() - 1)))
    }

    /// A variable occurrence with explicit instantiation of its scheme.
    fn var(&mut self, x: &str, span: Span) -> Result<(CoreExpr, HTy, bool), ElabError> {
        let Some((scheme, is_prim)) = self.lookup(x) else {
            return Err(ElabError::Unbound {
                span,
                name: x.to_string(),
            });
        };
        let mut e = CoreExpr::var(x, span);
        match scheme {
            Scheme::Mono(h) => Ok((e, h, false)),
            Scheme::Poly(t) => {
                let (h, insts) = self.instantiate(&t, span)?;
                let instantiated = !insts.is_empty();
                for i in insts {
                    e = match i {
                        Inst::Ty(m) => {
                            let p = self.placeholder(m, vec![], is_prim);
                            CoreExpr::new(ExprKind::TApp(Box::new(e), p), span)
                        }
                        Inst::Ref => CoreExpr::new(ExprKind::RApp(Box::new(e)), span),
                    };
                }
                Ok((e, h, instantiated))
            }
        }
    }

    /// Elaborate `e` against a signature, wrapping it in a type abstraction
    /// when the signature is quantified.
    fn check_sig(&mut self, e: &CoreExpr, t: &Type) -> Result<CoreExpr, ElabError> {
        let (tvs, h) = self.skolemize(t, e.span)?;
        let (e2, found) = self.infer(e)?;
        self.unify(&h, &found, e.span)?;
        Ok(if tvs.is_empty() {
            e2
        } else {
            CoreExpr::new(ExprKind::TAbs(tvs, Box::new(e2)), e.span)
        })
    }

    fn infer(&mut self, e: &CoreExpr) -> Result<(CoreExpr, HTy), ElabError> {
        let span = e.span;
        match &e.kind {
            ExprKind::Const(Const::Int(_)) => Ok((e.clone(), HTy::Int)),
            ExprKind::Const(Const::Bool(_)) => Ok((e.clone(), HTy::Bool)),
            ExprKind::Var(x) => {
                let (e2, h, _) = self.var(x, span)?;
                Ok((e2, h))
            }
            ExprKind::Let(x, e1, e2) => {
                let (mut e1b, scheme) = match &e1.kind {
                    ExprKind::Annot(inner, t) if has_prefix(t) => {
                        let inner = self.check_sig(inner, t)?;
                        (
                            CoreExpr::new(ExprKind::Annot(Box::new(inner), t.clone()), e1.span),
                            Scheme::Poly(t.clone()),
                        )
                    }
                    _ => {
                        let (e1b, h) = self.infer(e1)?;
                        (e1b, Scheme::Mono(h))
                    }
                };
                // Instantiation bindings hoisted out of an application move
                // above this binding so the right-hand side stays synthesizable.
                let mut prefix = Vec::new();
                if matches!(scheme, Scheme::Mono(_)) {
                    while let ExprKind::Let(a, a1, a2) = e1b.kind {
                        prefix.push((a, *a1));
                        e1b = *a2;
                    }
                }
                if needs_annot(&e1b) {
                    let Scheme::Mono(h) = &scheme else { unreachable!("annotated above") };
                    let p = self.placeholder(h.clone(), lam_names(&e1b), false);
                    e1b = CoreExpr::new(ExprKind::Annot(Box::new(e1b), p), e1.span);
                }
                self.locals.push((x.clone(), scheme));
                let r = self.infer(e2);
                self.locals.pop();
                let (e2b, h2) = r?;
                let mut out = CoreExpr::new(ExprKind::Let(x.clone(), Box::new(e1b), Box::new(e2b)), span);
                for (a, a1) in prefix.into_iter().rev() {
                    out = CoreExpr::let_(a, a1, out, span);
                }
                Ok((out, h2))
            }
            ExprKind::Lam(ps, body) => {
                let ms: Vec<HTy> = ps.iter().map(|_| self.meta()).collect();
                for (p, m) in ps.iter().zip(&ms) {
                    self.locals.push((p.clone(), Scheme::Mono(m.clone())));
                }
                let r = self.infer(body);
                self.locals.truncate(self.locals.len() - ps.len());
                let (b, hb) = r?;
                let h = ms.into_iter().rev().fold(hb, |acc, m| HTy::fun(m, acc));
                Ok((CoreExpr::new(ExprKind::Lam(ps.clone(), Box::new(b)), span), h))
            }
            ExprKind::App(..) => self.app(e),
            ExprKind::If(x, a, b) => {
                let (_, hx, _) = self.var(x, span)?;
                self.unify(&HTy::Bool, &hx, span)?;
                let (a2, ha) = self.infer(a)?;
                let (b2, hb) = self.infer(b)?;
                self.unify(&ha, &hb, b.span)?;
                Ok((CoreExpr::new(ExprKind::If(x.clone(), Box::new(a2), Box::new(b2)), span), ha))
            }
            ExprKind::Switch(y, alts) => {
                let (_, hy, _) = self.var(y, span)?;
                let res = self.meta();
                let mut out = Vec::new();
                for a in alts {
                    let Some(ct) = self.ctors.get(&a.ctor).cloned() else {
                        return Err(ElabError::Unbound {
                            span: a.span,
                            name: a.ctor.clone(),
                        });
                    };
                    let (mut h, _) = self.instantiate(&ct, a.span)?;
                    let mut fields = Vec::new();
                    while let HTy::Fun(f, rest) = h {
                        fields.push(*f);
                        h = *rest;
                    }
                    if fields.len() != a.binds.len() {
                        return Err(ElabError::Unsupported {
                            span: a.span,
                            message: format!(
                                "constructor `{}` has {} fields, pattern binds {}",
                                a.ctor,
                                fields.len(),
                                a.binds.len()
                            ),
                        });
                    }
                    self.unify(&hy, &h, a.span)?;
                    for (b, f) in a.binds.iter().zip(fields) {
                        self.locals.push((b.clone(), Scheme::Mono(f)));
                    }
                    let r = self.infer(&a.body);
                    self.locals.truncate(self.locals.len() - a.binds.len());
                    let (body, hb) = r?;
                    self.unify(&res, &hb, a.body.span)?;
                    out.push(Alt { body, ..a.clone() });
                }
                Ok((CoreExpr::new(ExprKind::Switch(y.clone(), out), span), res))
            }
            ExprKind::LetRec {
                x,
                e1,
                annot,
                metric,
                e2,
            } if is_unannotated(annot) => {
                let (e1b, h) = self.infer_rec(x, e1)?;
                let annot = self.placeholder(h.clone(), lam_names(&e1b), false);
                self.locals.push((x.clone(), Scheme::Mono(h)));
                let r = self.infer(e2);
                self.locals.pop();
                let (e2b, h2) = r?;
                Ok((
                    CoreExpr::new(
                        ExprKind::LetRec {
                            x: x.clone(),
                            e1: Box::new(e1b),
                            annot,
                            metric: metric.clone(),
                            e2: Box::new(e2b),
                        },
                        span,
                    ),
                    h2,
                ))
            }
            ExprKind::LetRec {
                x,
                e1,
                annot,
                metric,
                e2,
            } => {
                self.locals.push((x.clone(), Scheme::Poly(annot.clone())));
                let r = self.check_sig(e1, annot).and_then(|e1b| Ok((e1b, self.infer(e2)?)));
                self.locals.pop();
                let (e1b, (e2b, h)) = r?;
                Ok((
                    CoreExpr::new(
                        ExprKind::LetRec {
                            x: x.clone(),
                            e1: Box::new(e1b),
                            annot: annot.clone(),
                            metric: metric.clone(),
                            e2: Box::new(e2b),
                        },
                        span,
                    ),
                    h,
                ))
            }
            ExprKind::Reflect {
                x,
                e1,
                annot,
                metric,
                e2,
            } => {
                self.locals.push((x.clone(), Scheme::Poly(annot.clone())));
                let r = self.check_sig(e1, annot).and_then(|e1b| Ok((e1b, self.infer(e2)?)));
                self.locals.pop();
                let (e1b, (e2b, h)) = r?;
                Ok((
                    CoreExpr::new(
                        ExprKind::Reflect {
                            x: x.clone(),
                            e1: Box::new(e1b),
                            annot: annot.clone(),
                            metric: metric.clone(),
                            e2: Box::new(e2b),
                        },
                        span,
                    ),
                    h,
                ))
            }
            ExprKind::TAbs(tvs, body) => {
                let (b, h) = self.infer(body)?;
                Ok((CoreExpr::new(ExprKind::TAbs(tvs.clone(), Box::new(b)), span), h))
            }
            ExprKind::TApp(..) | ExprKind::RApp(..) => Err(ElabError::Unsupported {
                span,
                message: "explicit instantiation in source programs".into(),
            }),
            ExprKind::Annot(inner, t) => {
                let inner = self.check_sig(inner, t)?;
                let (_, h) = self.skolemize(t, span)?;
                Ok((CoreExpr::new(ExprKind::Annot(Box::new(inner), t.clone()), span), h))
            }
        }
    }

    /// Monomorphic inference for a recursive binding without a signature.
    fn infer_rec(&mut self, x: &Name, e1: &CoreExpr) -> Result<(CoreExpr, HTy), ElabError> {
        let m = self.meta();
        self.locals.push((x.clone(), Scheme::Mono(m.clone())));
        let r = self.infer(e1);
        self.locals.pop();
        let (e1b, h) = r?;
        self.unify(&m, &h, e1.span)?;
        Ok((e1b, h))
    }

    fn app(&mut self, e: &CoreExpr) -> Result<(CoreExpr, HTy), ElabError> {
        let span = e.span;
        let mut args = Vec::new();
        let mut head = e;
        while let ExprKind::App(f, y) = &head.kind {
            args.push((y.clone(), head.span));
            head = f;
        }
        args.reverse();
        let (mut out, mut hf) = self.infer(head)?;
        let mut lets = Vec::new();
        for (y, sp) in args {
            let (inst, hy, instantiated) = self.var(&y, sp)?;
            let arg = if instantiated {
                let t = self.gen.fresh("$i");
                lets.push((t.clone(), inst));
                t
            } else {
                y
            };
            let res = self.meta();
            self.unify(&HTy::fun(hy, res.clone()), &hf, sp)?;
            hf = res;
            out = CoreExpr::app(out, arg, sp);
        }
        for (t, inst) in lets.into_iter().rev() {
            out = CoreExpr::let_(t, inst, out, span);
        }
        Ok((out, hf))
    }

    fn decl(&mut self, d: &CoreDecl) -> Result<CoreDecl, ElabError> {
        let mut d = d.clone();
        match d.kind {
            DeclKind::Assume => {
                let t = d.annot.clone().expect("assumptions carry signatures");
                // Validate the signature's shape.
                self.skolemize(&t, d.span)?;
                self.globals.insert(d.name.clone(), Scheme::Poly(t));
            }
            DeclKind::Let => {
                let body = d.body.take().expect("bindings carry bodies");
                match d.annot.clone() {
                    Some(t) => {
                        d.body = Some(self.check_sig(&body, &t)?);
                        self.globals.insert(d.name.clone(), Scheme::Poly(t));
                    }
                    None => {
                        let (b, h) = self.infer(&body)?;
                        if needs_annot(&b) {
                            d.annot = Some(self.placeholder(h.clone(), lam_names(&b), false));
                        }
                        d.body = Some(b);
                        self.globals.insert(d.name.clone(), Scheme::Mono(h));
                    }
                }
            }
            DeclKind::Rec if d.annot.is_none() => {
                let body = d.body.take().expect("bindings carry bodies");
                let (b, h) = self.infer_rec(&d.name, &body)?;
                d.annot = Some(self.placeholder(h.clone(), lam_names(&b), false));
                d.body = Some(b);
                self.globals.insert(d.name.clone(), Scheme::Mono(h));
            }
            DeclKind::Rec | DeclKind::Def => {
                let t = d.annot.clone().expect("recursive bindings carry signatures");
                let body = d.body.take().expect("bindings carry bodies");
                self.globals.insert(d.name.clone(), Scheme::Poly(t.clone()));
                d.body = Some(self.check_sig(&body, &t)?);
            }
        }
        Ok(d)
    }

    // ------------------------------------------------------------ resolution

    fn sort_of(&self, h: &HTy) -> Sort {
        match self.zonk(h) {
            HTy::Bool => Sort::Bool,
            HTy::Var(a) => Sort::Var(a),
            HTy::Con(c, _) => Sort::Data(c),
            HTy::Int | HTy::Meta(_) => Sort::Int,
            HTy::Fun(..) => Sort::Int,
        }
    }

    /// A fully holed refined type with the given shape.
    fn bare(&mut self, h: &HTy, names: &[Name]) -> Type {
        match self.zonk(h) {
            HTy::Int | HTy::Meta(_) => Type::hole(BaseTy::Int),
            HTy::Bool => Type::hole(BaseTy::Bool),
            HTy::Var(a) => Type::hole(BaseTy::TyVar(a)),
            HTy::Con(c, args) => {
                let arg_sorts: Vec<Sort> = args.iter().map(|a| self.sort_of(a)).collect();
                let targs: Vec<Type> = args.iter().map(|a| self.bare(a, &[])).collect();
                let refs = match self.datas.iter().find(|d| d.name == c) {
                    Some(d) => {
                        let sm: BTreeMap<Name, Sort> =
                            d.tyvars.iter().map(|(a, _, _)| a.clone()).zip(arg_sorts).collect();
                        d.rvars
                            .iter()
                            .map(|(_, sorts, _)| {
                                ConcRef::hole(
                                    sorts
                                        .iter()
                                        .enumerate()
                                        .map(|(i, s)| (format!("x{i}"), s.subst_vars(&sm)))
                                        .collect(),
                                )
                            })
                            .collect()
                    }
                    None => Vec::new(),
                };
                Type::hole(BaseTy::TCon(c, targs, refs))
            }
            HTy::Fun(a, b) => {
                let (x, rest) = match names.split_first() {
                    Some((x, rest)) => (x.clone(), rest),
                    None => (self.gen.fresh("$y"), &[][..]),
                };
                let input = self.bare(&a, &[]);
                Type::fun(x, input, self.bare(&b, rest))
            }
        }
    }

    fn wild_sorts(&self) -> BTreeMap<Name, Sort> {
        self.wild
            .iter()
            .map(|(w, i)| (w.clone(), self.sort_of(&HTy::Meta(*i))))
            .collect()
    }

    /// Replace placeholders and wildcards with resolved types.
    fn fill(&mut self, t: &Type) -> Type {
        let ws = self.wild_sorts();
        self.fill_with(t, &ws)
    }

    fn fill_with(&mut self, t: &Type, ws: &BTreeMap<Name, Sort>) -> Type {
        match t {
            Type::Base {
                b: BaseTy::TyVar(n),
                v,
                r,
            } => {
                if let Some(idx) = n.strip_prefix(HOLE_PREFIX).and_then(|i| i.parse::<usize>().ok()) {
                    let (h, names, trivial) = {
                        let hole = &self.holes[idx];
                        (hole.ty.clone(), hole.names.clone(), hole.trivial)
                    };
                    let t = self.bare(&h, &names);
                    return if trivial { t.holes_to_true() } else { t };
                }
                if let Some(i) = self.wild.get(n).copied() {
                    let resolved = self.bare(&HTy::Meta(i), &[]).holes_to_true();
                    return match resolved {
                        Type::Base { b, .. } => Type::Base {
                            b,
                            v: v.clone(),
                            r: r.clone(),
                        },
                        other => other,
                    };
                }
                t.clone()
            }
            Type::Base {
                b: BaseTy::TCon(c, ts, rs),
                v,
                r,
            } => Type::Base {
                b: BaseTy::TCon(
                    c.clone(),
                    ts.iter().map(|t| self.fill_with(t, ws)).collect(),
                    rs.iter()
                        .map(|cr| ConcRef {
                            params: cr.params.iter().map(|(p, s)| (p.clone(), s.subst_vars(ws))).collect(),
                            body: cr.body.clone(),
                        })
                        .collect(),
                ),
                v: v.clone(),
                r: r.clone(),
            },
            Type::Base { .. } => t.clone(),
            Type::Fun { x, input, output } => {
                Type::fun(x.clone(), self.fill_with(input, ws), self.fill_with(output, ws))
            }
            Type::AllTy { tv, kind, body } => Type::all_ty(tv.clone(), *kind, self.fill_with(body, ws)),
            Type::AllRef { rv, sorts, body } => Type::all_ref(
                rv.clone(),
                sorts.iter().map(|s| s.subst_vars(ws)).collect(),
                self.fill_with(body, ws),
            ),
        }
    }

    fn fill_expr(&mut self, e: &CoreExpr) -> CoreExpr {
        let b = |s: &mut Self, e: &CoreExpr| Box::new(s.fill_expr(e));
        let kind = match &e.kind {
            ExprKind::Const(_) | ExprKind::Var(_) => e.kind.clone(),
            ExprKind::Let(x, a, c) => ExprKind::Let(x.clone(), b(self, a), b(self, c)),
            ExprKind::Lam(ps, body) => ExprKind::Lam(ps.clone(), b(self, body)),
            ExprKind::App(f, y) => ExprKind::App(b(self, f), y.clone()),
            ExprKind::If(x, a, c) => ExprKind::If(x.clone(), b(self, a), b(self, c)),
            ExprKind::LetRec {
                x,
                e1,
                annot,
                metric,
                e2,
            } => ExprKind::LetRec {
                x: x.clone(),
                e1: b(self, e1),
                annot: self.fill(annot),
                metric: metric.clone(),
                e2: b(self, e2),
            },
            ExprKind::Reflect {
                x,
                e1,
                annot,
                metric,
                e2,
            } => ExprKind::Reflect {
                x: x.clone(),
                e1: b(self, e1),
                annot: self.fill(annot),
                metric: metric.clone(),
                e2: b(self, e2),
            },
            ExprKind::Switch(y, alts) => ExprKind::Switch(
                y.clone(),
                alts.iter()
                    .map(|a| Alt {
                        body: self.fill_expr(&a.body),
                        ..a.clone()
                    })
                    .collect(),
            ),
            ExprKind::TAbs(tvs, body) => ExprKind::TAbs(tvs.clone(), b(self, body)),
            ExprKind::TApp(f, t) => ExprKind::TApp(b(self, f), self.fill(t)),
            ExprKind::RApp(f) => ExprKind::RApp(b(self, f)),
            ExprKind::Annot(inner, t) => ExprKind::Annot(b(self, inner), self.fill(t)),
        };
        CoreExpr::new(kind, e.span)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{frontend, PRELUDE};
    use super::*;

    fn body(src: &str, name: &str) -> String {
        let prog = frontend(PRELUDE, src).unwrap();
        let d = prog.decls.iter().find(|d| d.name == name).unwrap();
        d.body.as_ref().unwrap().to_string()
    }

    #[test]
    fn polymorphic_use_is_instantiated() {
        let src = "
            val max : 'a => 'a => 'a
            let client = (a:int) => max(a, 3)";
        let src = src.replace("(a:int)", "(a)");
        let b = body(&src, "client");
        assert!(b.contains("(max)[int[?]]"), "{b}");
    }

    #[test]
    fn comparisons_instantiate_with_true() {
        let b = body("let f = (x) => x < 1", "f");
        assert!(b.contains("(<)[int]"), "{b}");
    }

    #[test]
    fn quantified_signature_gets_type_abstraction() {
        let b = body("val id : 'a => 'a\nlet id = (x) => x", "id");
        assert!(b.starts_with("Λa."), "{b}");
    }

    #[test]
    fn unannotated_function_gets_holed_annotation() {
        let prog = frontend(PRELUDE, "let inc = (x) => x + 1").unwrap();
        let d = prog.decls.iter().find(|d| d.name == "inc").unwrap();
        assert_eq!(d.annot.as_ref().unwrap().to_string(), "x:int[?] => int[?]");
    }

    #[test]
    fn mismatches_are_reported_with_spans() {
        let err = frontend(PRELUDE, "let f = (x) => x + true").unwrap_err();
        assert!(err.to_string().contains("type mismatch"), "{err}");
        assert!(err.span().is_some());
    }

    #[test]
    fn polymorphic_arguments_are_let_bound() {
        let src = "
            type list('a) = | Nil | Cons(x:'a, xs:list('a))
            let one = (x) => Cons(x, Nil)";
        let b = body(src, "one");
        assert!(b.contains("let $i"), "{b}");
    }

    #[test]
    fn erase_drops_refinements() {
        let t = Type::fun("x", Type::int(), Type::bool());
        assert_eq!(erase(&t), HTy::fun(HTy::Int, HTy::Bool));
    }
}
