//! Name resolution, type lowering and conversion to A-normal form.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;

use crate::logic::{Name, NameGen, Pred, Sort, Span};
use crate::smt::{selector_name, tester_name};
use crate::types::{
    compute_polarities,
    BaseTy, ConcRef, DataDecl, Kind, MeasureDecl, Metric, Polarity, Refine, Type, NU, WILDCARD_PREFIX,
};

use super::ast::*;
use super::core::{unannotated, Alt, Const, CoreDecl, CoreExpr, DeclKind, ExprKind};
use super::LowerError;

/// A lowered program: global declarations plus ANF bindings in order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub datas: Vec<DataDecl>,
    pub measures: Vec<MeasureDecl>,
    pub decls: Vec<CoreDecl>,
}

impl Program {
    /// Every type written in a signature, annotation or declaration.
    pub fn annotations(&self) -> Vec<Type> {
        let mut out = Vec::new();
        for d in &self.datas {
            out.extend(d.ctors.iter().map(|(_, t)| t.clone()));
        }
        for m in &self.measures {
            out.push(Type::fun("$m", m.input.clone(), m.output.clone()));
        }
        for d in &self.decls {
            out.extend(d.annot.iter().cloned());
            if let Some(b) = &d.body {
                collect_annots(b, &mut out);
            }
        }
        out
    }
}

fn collect_annots(e: &CoreExpr, out: &mut Vec<Type>) {
    match &e.kind {
        ExprKind::Const(_) | ExprKind::Var(_) => {}
        ExprKind::Let(_, a, b) | ExprKind::If(_, a, b) => {
            collect_annots(a, out);
            collect_annots(b, out);
        }
        ExprKind::Lam(_, b) | ExprKind::App(b, _) | ExprKind::TAbs(_, b) | ExprKind::RApp(b) => {
            collect_annots(b, out)
        }
        ExprKind::TApp(b, _) => collect_annots(b, out),
        ExprKind::Annot(b, t) => {
            out.push(t.clone());
            collect_annots(b, out);
        }
        ExprKind::LetRec { e1, annot, e2, .. } | ExprKind::Reflect { e1, annot, e2, .. } => {
            out.push(annot.clone());
            collect_annots(e1, out);
            collect_annots(e2, out);
        }
        ExprKind::Switch(_, alts) => alts.iter().for_each(|a| collect_annots(&a.body, out)),
    }
}

struct DataSig {
    tyvars: Vec<Name>,
    rvars: Vec<(Name, Vec<Sort>)>,
    ctors: Vec<(Name, usize)>,
}

struct Lowerer {
    aliases: BTreeMap<Name, (Vec<Name>, SType)>,
    datas: BTreeMap<Name, DataSig>,
    ctor_data: BTreeMap<Name, Name>,
    /// Names with a fixed meaning in refinements.
    logic: BTreeSet<Name>,
    nullary: BTreeSet<Name>,
    gen: NameGen,
}

/// Lower a prelude and a user program into one core program. Prelude
/// bindings become trusted assumptions.
pub fn lower(prelude: &SurfaceProgram, user: &SurfaceProgram) -> Result<Program, LowerError> {
    let mut lw = Lowerer {
        aliases: BTreeMap::new(),
        datas: BTreeMap::new(),
        ctor_data: BTreeMap::new(),
        logic: BTreeSet::new(),
        nullary: BTreeSet::new(),
        gen: NameGen::new(),
    };
    let all: Vec<&Decl> = prelude.decls.iter().chain(&user.decls).collect();
    lw.collect_types(&all)?;
    let mut datas = lw.lower_datas(&all)?;
    compute_polarities(&mut datas);
    let measures = lw.lower_measures(&all)?;
    let mut decls = lw.lower_bindings(&prelude.decls, true)?;
    decls.extend(lw.lower_bindings(&user.decls, false)?);
    Ok(Program {
        datas,
        measures,
        decls,
    })
}

/// ANF-convert a standalone expression against an empty program.
pub fn anf_expr(e: &SExpr) -> Result<CoreExpr, LowerError> {
    let mut lw = Lowerer {
        aliases: BTreeMap::new(),
        datas: BTreeMap::new(),
        ctor_data: BTreeMap::new(),
        logic: BTreeSet::new(),
        nullary: BTreeSet::new(),
        gen: NameGen::new(),
    };
    lw.expr(e, &BTreeSet::new())
}

fn err<T>(span: Span, msg: impl Into<String>) -> Result<T, LowerError> {
    Err(LowerError::new(span, msg))
}

fn tyvars_in(t: &Type, bound: &mut Vec<Name>, out: &mut Vec<Name>) {
    match t {
        Type::Base { b, .. } => match b {
            BaseTy::TyVar(a) => {
                if !bound.contains(a) && !out.contains(a) {
                    out.push(a.clone());
                }
            }
            BaseTy::TCon(_, ts, _) => ts.iter().for_each(|t| tyvars_in(t, bound, out)),
            _ => {}
        },
        Type::Fun { input, output, .. } => {
            tyvars_in(input, bound, out);
            tyvars_in(output, bound, out);
        }
        Type::AllTy { tv, body, .. } => {
            bound.push(tv.clone());
            tyvars_in(body, bound, out);
            bound.pop();
        }
        Type::AllRef { body, .. } => tyvars_in(body, bound, out),
    }
}

fn binder_sorts(t: &Type, out: &mut BTreeMap<Name, Sort>) {
    match t {
        Type::Base { b, v, .. } => {
            out.entry(v.clone()).or_insert_with(|| b.sort());
            if let BaseTy::TCon(_, ts, rs) = b {
                ts.iter().for_each(|t| binder_sorts(t, out));
                for c in rs {
                    for (p, s) in &c.params {
                        out.entry(p.clone()).or_insert_with(|| s.clone());
                    }
                }
            }
        }
        Type::Fun { x, input, output } => {
            if let Some(s) = input.sort() {
                out.insert(x.clone(), s);
            }
            binder_sorts(input, out);
            binder_sorts(output, out);
        }
        Type::AllTy { body, .. } | Type::AllRef { body, .. } => binder_sorts(body, out),
    }
}

fn bound_rvars(t: &Type, out: &mut BTreeSet<Name>) {
    match t {
        Type::AllRef { rv, body, .. } => {
            out.insert(rv.clone());
            bound_rvars(body, out);
        }
        Type::AllTy { body, .. } => bound_rvars(body, out),
        Type::Fun { input, output, .. } => {
            bound_rvars(input, out);
            bound_rvars(output, out);
        }
        Type::Base { .. } => {}
    }
}

fn occurs(e: &CoreExpr, x: &str) -> bool {
    match &e.kind {
        ExprKind::Const(_) => false,
        ExprKind::Var(y) => y == x,
        ExprKind::Let(y, a, b) => y == x || occurs(a, x) || occurs(b, x),
        ExprKind::Lam(ps, b) => ps.iter().any(|p| p == x) || occurs(b, x),
        ExprKind::App(f, y) => y == x || occurs(f, x),
        ExprKind::If(y, a, b) => y == x || occurs(a, x) || occurs(b, x),
        ExprKind::LetRec { x: y, e1, annot, e2, .. } | ExprKind::Reflect { x: y, e1, annot, e2, .. } => {
            y == x || occurs(e1, x) || occurs(e2, x) || annot.free_vars().contains(x)
        }
        ExprKind::Switch(y, alts) => {
            y == x || alts.iter().any(|a| a.binds.iter().any(|b| b == x) || occurs(&a.body, x))
        }
        ExprKind::TAbs(_, b) | ExprKind::RApp(b) => occurs(b, x),
        ExprKind::TApp(b, t) | ExprKind::Annot(b, t) => occurs(b, x) || t.free_vars().contains(x),
    }
}

/// One statement of a block or program after pairing signatures with bindings.
enum Item<'a> {
    Bind {
        name: Name,
        kind: LetKind,
        sig: Option<(Type, Option<Metric>)>,
        body: &'a SExpr,
        span: Span,
    },
    Assume {
        name: Name,
        ty: Type,
        span: Span,
    },
    Expr(&'a SExpr),
}

impl Lowerer {
    fn temp(&mut self) -> Name {
        self.gen.temp()
    }

    // ------------------------------------------------------------ globals

    fn collect_types(&mut self, decls: &[&Decl]) -> Result<(), LowerError> {
        for d in decls {
            match d {
                Decl::Alias {
                    name,
                    tyvars,
                    rparams,
                    body,
                    span,
                } => {
                    if !rparams.is_empty() {
                        return err(*span, format!("type alias `{name}` cannot take refinement parameters"));
                    }
                    if self.aliases.contains_key(name) || self.datas.contains_key(name) {
                        return err(*span, format!("type `{name}` is defined twice"));
                    }
                    self.aliases.insert(name.clone(), (tyvars.clone(), body.clone()));
                }
                Decl::Data {
                    name,
                    tyvars,
                    ctors,
                    span,
                    ..
                } => {
                    if self.aliases.contains_key(name) || self.datas.contains_key(name) {
                        return err(*span, format!("type `{name}` is defined twice"));
                    }
                    for c in ctors {
                        if self.ctor_data.insert(c.name.clone(), name.clone()).is_some() {
                            return err(c.span, format!("constructor `{}` is defined twice", c.name));
                        }
                        self.logic.insert(c.name.clone());
                        self.logic.insert(tester_name(&c.name));
                        for i in 0..c.fields.len() {
                            self.logic.insert(selector_name(&c.name, i + 1));
                        }
                        if c.fields.is_empty() {
                            self.nullary.insert(c.name.clone());
                        }
                    }
                    self.datas.insert(
                        name.clone(),
                        DataSig {
                            tyvars: tyvars.clone(),
                            rvars: Vec::new(),
                            ctors: ctors.iter().map(|c| (c.name.clone(), c.fields.len())).collect(),
                        },
                    );
                }
                Decl::Measure { name, .. } => {
                    self.logic.insert(name.clone());
                }
                Decl::Stmt(Stmt::Let {
                    name,
                    kind: LetKind::Def,
                    ..
                }) => {
                    self.logic.insert(name.clone());
                }
                Decl::Stmt(_) => {}
            }
        }
        // Refinement parameter sorts may mention other datatypes.
        for d in decls {
            if let Decl::Data {
                name, rparams, span, ..
            } = d
            {
                let mut rvars = Vec::new();
                for (p, st) in rparams {
                    let t = self.ty(st, &BTreeMap::new())?;
                    let mut sorts = Vec::new();
                    for (_, pt) in t.params() {
                        match pt.sort() {
                            Some(s) => sorts.push(s),
                            None => return err(*span, format!("refinement parameter `{p}` must range over base types")),
                        }
                    }
                    if sorts.is_empty() {
                        return err(*span, format!("refinement parameter `{p}` needs at least one argument"));
                    }
                    rvars.push((p.clone(), sorts));
                }
                self.datas.get_mut(name).expect("registered above").rvars = rvars;
            }
        }
        Ok(())
    }

    fn lower_datas(&mut self, decls: &[&Decl]) -> Result<Vec<DataDecl>, LowerError> {
        let mut out = Vec::new();
        for d in decls {
            let Decl::Data { name, ctors, .. } = d else {
                continue;
            };
            let sig = &self.datas[name];
            let mut decl = DataDecl {
                name: name.clone(),
                tyvars: sig.tyvars.iter().map(|a| (a.clone(), Kind::Base, Polarity::Both)).collect(),
                rvars: sig
                    .rvars
                    .iter()
                    .map(|(p, s)| (p.clone(), s.clone(), Polarity::Both))
                    .collect(),
                ctors: Vec::new(),
            };
            let self_base = decl.self_base();
            for c in ctors {
                let (v, out_ref) = match &c.out {
                    Some((v, p)) => (v.clone().unwrap_or_else(|| NU.to_string()), self.resolve_pred(p)),
                    None => (NU.to_string(), Pred::tt()),
                };
                let mut t = Type::base(self_base.clone(), v, out_ref);
                let mut fields = Vec::new();
                for (i, f) in c.fields.iter().enumerate() {
                    let fname = f.name.clone().unwrap_or_else(|| format!("$f{}", i + 1));
                    fields.push((fname, self.ty(&f.ty, &BTreeMap::new())?));
                }
                for (x, ft) in fields.into_iter().rev() {
                    t = Type::fun(x, ft, t);
                }
                decl.ctors.push((c.name.clone(), t));
            }
            out.push(decl);
        }
        Ok(out)
    }

    fn lower_measures(&mut self, decls: &[&Decl]) -> Result<Vec<MeasureDecl>, LowerError> {
        let mut out = Vec::new();
        for d in decls {
            let Decl::Measure { name, ty, span } = d else {
                continue;
            };
            match self.ty(ty, &BTreeMap::new())? {
                Type::Fun { input, output, .. } if input.is_base() && output.is_base() => out.push(MeasureDecl {
                    name: name.clone(),
                    input: *input,
                    output: *output,
                }),
                _ => return err(*span, format!("measure `{name}` must have a type `T => b` over base types")),
            }
        }
        Ok(out)
    }

    // ------------------------------------------------------------ types

    fn resolve_pred(&self, p: &Pred) -> Pred {
        p.transform(&mut |q| match q {
            Pred::Var(x) if self.nullary.contains(&x) => Pred::uapp(x, vec![]),
            q => q,
        })
    }

    fn ty(&mut self, t: &SType, su: &BTreeMap<Name, Type>) -> Result<Type, LowerError> {
        match &t.kind {
            STypeKind::Forall(tvs, body) => {
                let mut su = su.clone();
                for (a, _) in tvs {
                    su.remove(a);
                }
                let mut out = self.ty(body, &su)?;
                for (a, k) in tvs.iter().rev() {
                    out = Type::all_ty(a.clone(), *k, out);
                }
                Ok(out)
            }
            STypeKind::Fun(x, a, b) => {
                let x = x.clone().unwrap_or_else(|| self.gen.fresh("$x"));
                Ok(Type::fun(x, self.ty(a, su)?, self.ty(b, su)?))
            }
            STypeKind::Base(b, r) => self.base_ty(b, r, t.span, su),
        }
    }

    fn base_ty(
        &mut self,
        b: &SBase,
        r: &SRefine,
        span: Span,
        su: &BTreeMap<Name, Type>,
    ) -> Result<Type, LowerError> {
        let (bt, inherited): (BaseTy, Option<(Name, Refine)>) = match b {
            SBase::Unit => (BaseTy::TCon("unit".into(), vec![], vec![]), None),
            SBase::Wild => (BaseTy::TyVar(self.gen.fresh(WILDCARD_PREFIX)), None),
            SBase::TyVar(a) => match su.get(a) {
                Some(t) => return self.refine_existing(t.clone(), r, span),
                None => (BaseTy::TyVar(a.clone()), None),
            },
            SBase::Named(n, args, refs) if (n == "int" || n == "bool") && args.is_empty() && refs.is_empty() => {
                (if n == "int" { BaseTy::Int } else { BaseTy::Bool }, None)
            }
            SBase::Named(n, args, refs) if self.datas.contains_key(n) => {
                let (ntv, rvars) = {
                    let d = &self.datas[n];
                    (d.tyvars.clone(), d.rvars.clone())
                };
                if args.len() != ntv.len() {
                    return err(
                        span,
                        format!("type `{n}` expects {} arguments, got {}", ntv.len(), args.len()),
                    );
                }
                let args: Vec<Type> = args.iter().map(|a| self.ty(a, su)).collect::<Result<_, _>>()?;
                let mut sorts = BTreeMap::new();
                for (a, t) in ntv.iter().zip(&args) {
                    match t.sort() {
                        Some(s) => {
                            sorts.insert(a.clone(), s);
                        }
                        None => return err(span, format!("type arguments of `{n}` must be base types")),
                    }
                }
                if !refs.is_empty() && refs.len() != rvars.len() {
                    return err(
                        span,
                        format!("type `{n}` expects {} refinement arguments, got {}", rvars.len(), refs.len()),
                    );
                }
                let mut crefs = Vec::new();
                for (i, (_, rsorts)) in rvars.iter().enumerate() {
                    let rsorts: Vec<Sort> = rsorts.iter().map(|s| s.subst_vars(&sorts)).collect();
                    let cref = match refs.get(i) {
                        None => ConcRef {
                            params: rsorts.iter().enumerate().map(|(j, s)| (format!("x{j}"), s.clone())).collect(),
                            body: Refine::tt(),
                        },
                        Some(SConcRef::Lam(ps, body)) => {
                            if ps.len() != rsorts.len() {
                                return err(
                                    span,
                                    format!("refinement argument expects {} parameters, got {}", rsorts.len(), ps.len()),
                                );
                            }
                            ConcRef {
                                params: ps.iter().cloned().zip(rsorts).collect(),
                                body: Refine::Known(self.resolve_pred(body)),
                            }
                        }
                        Some(SConcRef::Name(p)) => {
                            let params: Vec<(Name, Sort)> =
                                rsorts.into_iter().enumerate().map(|(j, s)| (format!("x{j}"), s)).collect();
                            let args = params.iter().map(|(x, _)| Pred::var(x.clone())).collect();
                            ConcRef {
                                params,
                                body: Refine::Known(Pred::uapp(p.clone(), args)),
                            }
                        }
                    };
                    crefs.push(cref);
                }
                (BaseTy::TCon(n.clone(), args, crefs), None)
            }
            SBase::Named(n, args, refs) if self.aliases.contains_key(n) => {
                if !refs.is_empty() {
                    return err(span, format!("alias `{n}` takes no refinement arguments"));
                }
                let (tvs, body) = self.aliases[n].clone();
                if tvs.len() != args.len() {
                    return err(
                        span,
                        format!("alias `{n}` expects {} arguments, got {}", tvs.len(), args.len()),
                    );
                }
                let mut inner = BTreeMap::new();
                for (a, arg) in tvs.iter().zip(args) {
                    inner.insert(a.clone(), self.ty(arg, su)?);
                }
                let expanded = self.ty(&body, &inner)?;
                return self.refine_existing(expanded, r, span);
            }
            SBase::Named(n, ..) => return err(span, format!("unknown type `{n}`")),
        };
        let _ = inherited;
        let r = match r {
            SRefine::Plain => Refine::tt(),
            SRefine::Hole => Refine::Hole,
            SRefine::Known { v, p } => {
                let v = v.clone().unwrap_or_else(|| NU.to_string());
                return Ok(Type::Base {
                    b: bt,
                    v,
                    r: Refine::Known(self.resolve_pred(p)),
                });
            }
        };
        Ok(Type::Base {
            b: bt,
            v: NU.to_string(),
            r,
        })
    }

    /// Conjoin a written refinement onto an already-lowered type.
    fn refine_existing(&mut self, t: Type, r: &SRefine, span: Span) -> Result<Type, LowerError> {
        match (t, r) {
            (t, SRefine::Plain) => Ok(t),
            (Type::Base { b, v, r: old }, SRefine::Hole) => {
                if old.is_true() || old.is_hole() {
                    Ok(Type::Base { b, v, r: Refine::Hole })
                } else {
                    err(span, "cannot add a hole to a type that is already refined")
                }
            }
            (Type::Base { b, v, r: old }, SRefine::Known { v: nv, p }) => {
                let nv = nv.clone().unwrap_or_else(|| NU.to_string());
                let p = self.resolve_pred(p);
                match old {
                    Refine::Hole => err(span, "cannot refine a hole"),
                    Refine::Known(q) => Ok(Type::Base {
                        b,
                        v: nv.clone(),
                        r: Refine::Known(Pred::and(q.rename1(&v, &nv), p)),
                    }),
                }
            }
            (t, _) => err(span, format!("cannot refine non-base type `{t}`")),
        }
    }

    /// Lower a signature, quantifying free type variables not in `outer` and
    /// unknown predicate symbols.
    fn sig(&mut self, st: &SType, outer: &BTreeSet<Name>) -> Result<Type, LowerError> {
        let t = self.ty(st, &BTreeMap::new())?;
        let mut tvs = Vec::new();
        tyvars_in(&t, &mut Vec::new(), &mut tvs);
        tvs.retain(|a| !outer.contains(a) && !a.starts_with(WILDCARD_PREFIX));

        let mut sorts = BTreeMap::new();
        binder_sorts(&t, &mut sorts);
        let mut bound = BTreeSet::new();
        bound_rvars(&t, &mut bound);
        let mut rvars: Vec<(Name, Vec<Sort>)> = Vec::new();
        t.visit_refines(&mut |r| {
            if let Refine::Known(p) = r {
                p.visit(&mut |q| {
                    if let Pred::UApp(f, args) = q {
                        if self.logic.contains(f) || bound.contains(f) || rvars.iter().any(|(g, _)| g == f) {
                            return;
                        }
                        let s = args
                            .iter()
                            .map(|a| match a {
                                Pred::Var(x) => sorts.get(x).cloned().unwrap_or(Sort::Int),
                                Pred::Bool(_) => Sort::Bool,
                                _ => Sort::Int,
                            })
                            .collect();
                        rvars.push((f.clone(), s));
                    }
                });
            }
        });

        // Explicit type quantifiers stay outermost; refinement quantifiers go under them.
        let mut prefix = Vec::new();
        let mut body = t;
        while let Type::AllTy { tv, kind, body: b } = body {
            prefix.push((tv, kind));
            body = *b;
        }
        for (p, s) in rvars.into_iter().rev() {
            body = Type::all_ref(p, s, body);
        }
        for (a, k) in prefix.into_iter().rev() {
            body = Type::all_ty(a, k, body);
        }
        for a in tvs.into_iter().rev() {
            body = Type::all_ty(a, Kind::Base, body);
        }
        Ok(body)
    }

    fn metric(&self, m: &Option<Vec<Pred>>) -> Option<Metric> {
        m.as_ref().map(|ps| Metric(ps.iter().map(|p| self.resolve_pred(p)).collect()))
    }

    // ------------------------------------------------------------ bindings

    fn pair_items<'a>(
        &mut self,
        stmts: &[&'a Stmt],
        outer: &BTreeSet<Name>,
    ) -> Result<Vec<Item<'a>>, LowerError> {
        let mut items = Vec::new();
        let mut i = 0;
        while i < stmts.len() {
            match stmts[i] {
                Stmt::Val {
                    name,
                    ty,
                    metric,
                    span,
                } => {
                    let t = self.sig(ty, outer)?;
                    match stmts.get(i + 1) {
                        Some(Stmt::Let {
                            name: n2,
                            kind,
                            body,
                            span: s2,
                        }) if n2 == name => {
                            let metric = self.metric(metric);
                            if metric.is_some() && *kind == LetKind::Plain {
                                debug!("ignoring metric on non-recursive `{name}`");
                            }
                            items.push(Item::Bind {
                                name: name.clone(),
                                kind: *kind,
                                sig: Some((t, metric)),
                                body,
                                span: span.join(*s2),
                            });
                            i += 2;
                            continue;
                        }
                        _ => items.push(Item::Assume {
                            name: name.clone(),
                            ty: t,
                            span: *span,
                        }),
                    }
                }
                Stmt::Let {
                    name,
                    kind,
                    body,
                    span,
                } => {
                    if *kind == LetKind::Def {
                        return err(*span, format!("`def {name}` needs a preceding `val {name} : ...` signature"));
                    }
                    items.push(Item::Bind {
                        name: name.clone(),
                        kind: *kind,
                        sig: None,
                        body,
                        span: *span,
                    });
                }
                Stmt::Expr(e) => items.push(Item::Expr(e)),
            }
            i += 1;
        }
        for it in &items {
            if let Item::Bind {
                name,
                kind: LetKind::Def,
                sig: Some((_, None)),
                span,
                ..
            } = it
            {
                return err(*span, format!("`def {name}` needs a termination metric (`val {name} : T / m`)"));
            }
        }
        Ok(items)
    }

    fn lower_bindings(&mut self, decls: &[Decl], prelude: bool) -> Result<Vec<CoreDecl>, LowerError> {
        let stmts: Vec<&Stmt> = decls
            .iter()
            .filter_map(|d| match d {
                Decl::Stmt(s) => Some(s),
                _ => None,
            })
            .collect();
        let items = self.pair_items(&stmts, &BTreeSet::new())?;
        let mut out = Vec::new();
        for it in items {
            let d = match it {
                Item::Assume { name, ty, span } => CoreDecl {
                    name,
                    kind: DeclKind::Assume,
                    annot: Some(ty),
                    metric: None,
                    body: None,
                    span,
                },
                Item::Bind {
                    name,
                    kind,
                    sig,
                    body,
                    span,
                } => {
                    let (annot, metric) = match sig {
                        Some((t, m)) => (Some(t), m),
                        None => (None, None),
                    };
                    let mut outer = BTreeSet::new();
                    if let Some(t) = &annot {
                        let mut t = t;
                        while let Type::AllTy { tv, body, .. } = t {
                            outer.insert(tv.clone());
                            t = body;
                        }
                    }
                    if prelude {
                        let Some(annot) = annot else {
                            return err(span, format!("prelude binding `{name}` needs a signature"));
                        };
                        CoreDecl {
                            name,
                            kind: DeclKind::Assume,
                            annot: Some(annot),
                            metric: None,
                            body: None,
                            span,
                        }
                    } else {
                        CoreDecl {
                            name,
                            kind: match kind {
                                LetKind::Plain => DeclKind::Let,
                                LetKind::Rec => DeclKind::Rec,
                                LetKind::Def => DeclKind::Def,
                            },
                            annot,
                            metric,
                            body: Some(self.expr(body, &outer)?),
                            span,
                        }
                    }
                }
                Item::Expr(e) => return err(e.span, "expected a declaration"),
            };
            out.push(d);
        }
        Ok(out)
    }

    // ------------------------------------------------------------ expressions

    fn atom(
        &mut self,
        e: &SExpr,
        outer: &BTreeSet<Name>,
        binds: &mut Vec<(Name, CoreExpr)>,
    ) -> Result<Name, LowerError> {
        match &e.kind {
            SExprKind::Var(x) => Ok(x.clone()),
            SExprKind::Unit => Ok("Unit".into()),
            _ => {
                let t = self.temp();
                let ce = self.expr(e, outer)?;
                binds.push((t.clone(), ce));
                Ok(t)
            }
        }
    }

    fn wrap(&mut self, binds: Vec<(Name, CoreExpr)>, body: CoreExpr) -> CoreExpr {
        binds
            .into_iter()
            .rev()
            .fold(body, |acc, (x, e)| self.mk_let(x, e, acc))
    }

    /// `let x = e1 in e2`, hoisting bindings out of `e1` so that bound
    /// expressions are never themselves binding forms.
    fn mk_let(&mut self, x: Name, e1: CoreExpr, e2: CoreExpr) -> CoreExpr {
        let span = e1.span.join(e2.span);
        match e1.kind {
            ExprKind::Let(a, a1, a2) => {
                let (a, a2) = self.avoid_capture(a, *a2, &x, &e2);
                let inner = self.mk_let(x, a2, e2);
                self.mk_let(a, *a1, inner)
            }
            ExprKind::LetRec {
                x: f,
                e1: f1,
                annot,
                metric,
                e2: f2,
            } => {
                let (f, f2) = self.avoid_capture(f, *f2, &x, &e2);
                let inner = self.mk_let(x, f2, e2);
                CoreExpr::new(
                    ExprKind::LetRec {
                        x: f,
                        e1: f1,
                        annot,
                        metric,
                        e2: Box::new(inner),
                    },
                    span,
                )
            }
            ExprKind::Reflect {
                x: f,
                e1: f1,
                annot,
                metric,
                e2: f2,
            } => {
                let (f, f2) = self.avoid_capture(f, *f2, &x, &e2);
                let inner = self.mk_let(x, f2, e2);
                CoreExpr::new(
                    ExprKind::Reflect {
                        x: f,
                        e1: f1,
                        annot,
                        metric,
                        e2: Box::new(inner),
                    },
                    span,
                )
            }
            kind => CoreExpr::new(
                ExprKind::Let(x, Box::new(CoreExpr::new(kind, e1.span)), Box::new(e2)),
                span,
            ),
        }
    }

    fn avoid_capture(&mut self, a: Name, body: CoreExpr, x: &str, e2: &CoreExpr) -> (Name, CoreExpr) {
        if a != x && occurs(e2, &a) {
            let b = self.temp();
            let body = body.rename(&a, &b);
            (b, body)
        } else {
            (a, body)
        }
    }

    fn param(&mut self, p: &str) -> Name {
        if p == "_" {
            self.temp()
        } else {
            p.to_string()
        }
    }

    fn expr(&mut self, e: &SExpr, outer: &BTreeSet<Name>) -> Result<CoreExpr, LowerError> {
        let span = e.span;
        Ok(match &e.kind {
            SExprKind::Int(n) => CoreExpr::new(ExprKind::Const(Const::Int(*n)), span),
            SExprKind::Bool(b) => CoreExpr::new(ExprKind::Const(Const::Bool(*b)), span),
            SExprKind::Unit => CoreExpr::var("Unit", span),
            SExprKind::Var(x) => CoreExpr::var(x.clone(), span),
            SExprKind::App(f, args) => {
                let mut binds = Vec::new();
                let head = match &f.kind {
                    SExprKind::Var(x) => CoreExpr::var(x.clone(), f.span),
                    _ => CoreExpr::var(self.atom(f, outer, &mut binds)?, f.span),
                };
                let mut names = Vec::new();
                for a in args {
                    names.push(self.atom(a, outer, &mut binds)?);
                }
                if names.is_empty() {
                    names.push("Unit".into());
                }
                let app = names.into_iter().fold(head, |acc, x| CoreExpr::app(acc, x, span));
                self.wrap(binds, app)
            }
            SExprKind::Lam(ps, body) => {
                let mut params: Vec<Name> = ps.iter().map(|p| self.param(p)).collect();
                if params.is_empty() {
                    params.push(self.temp());
                }
                CoreExpr::new(ExprKind::Lam(params, Box::new(self.expr(body, outer)?)), span)
            }
            SExprKind::Block(stmts, last) => {
                let refs: Vec<&Stmt> = stmts.iter().collect();
                let items = self.pair_items(&refs, outer)?;
                let mut body = self.expr(last, outer)?;
                for it in items.into_iter().rev() {
                    body = match it {
                        Item::Assume { name, span, .. } => {
                            return err(span, format!("local signature `{name}` has no definition"))
                        }
                        Item::Expr(e) => {
                            let t = self.temp();
                            let ce = self.expr(e, outer)?;
                            self.mk_let(t, ce, body)
                        }
                        Item::Bind {
                            name,
                            kind,
                            sig,
                            body: rhs,
                            span,
                        } => {
                            let name = self.param(&name);
                            let rhs = self.expr(rhs, outer)?;
                            match (kind, sig) {
                                (LetKind::Plain, None) => self.mk_let(name, rhs, body),
                                (LetKind::Plain, Some((t, _))) => {
                                    let sp = rhs.span;
                                    let ann = CoreExpr::new(ExprKind::Annot(Box::new(rhs), t), sp);
                                    self.mk_let(name, ann, body)
                                }
                                (LetKind::Rec, None) => CoreExpr::new(
                                    ExprKind::LetRec {
                                        x: name,
                                        e1: Box::new(rhs),
                                        annot: unannotated(),
                                        metric: None,
                                        e2: Box::new(body),
                                    },
                                    span,
                                ),
                                (LetKind::Rec, Some((annot, metric))) => CoreExpr::new(
                                    ExprKind::LetRec {
                                        x: name,
                                        e1: Box::new(rhs),
                                        annot,
                                        metric,
                                        e2: Box::new(body),
                                    },
                                    span,
                                ),
                                (LetKind::Def, Some((annot, Some(metric)))) => CoreExpr::new(
                                    ExprKind::Reflect {
                                        x: name,
                                        e1: Box::new(rhs),
                                        annot,
                                        metric,
                                        e2: Box::new(body),
                                    },
                                    span,
                                ),
                                _ => return err(span, format!("`{name}` needs a signature")),
                            }
                        }
                    };
                }
                body
            }
            SExprKind::If(c, a, b) => {
                let mut binds = Vec::new();
                let x = self.atom(c, outer, &mut binds)?;
                let a = self.expr(a, outer)?;
                let b = self.expr(b, outer)?;
                let e = CoreExpr::new(ExprKind::If(x, Box::new(a), Box::new(b)), span);
                self.wrap(binds, e)
            }
            SExprKind::Switch(s, alts) => {
                let mut binds = Vec::new();
                let y = self.atom(s, outer, &mut binds)?;
                let e = if alts.iter().any(|a| matches!(a.pat, Pattern::Ctor(..))) {
                    self.ctor_switch(&y, alts, span, outer)?
                } else {
                    self.int_switch(&y, alts, span, outer)?
                };
                self.wrap(binds, e)
            }
            SExprKind::Annot(inner, t) => {
                let t = self.sig(t, outer)?;
                CoreExpr::new(ExprKind::Annot(Box::new(self.expr(inner, outer)?), t), span)
            }
        })
    }

    fn ctor_switch(
        &mut self,
        y: &str,
        alts: &[SAlt],
        span: Span,
        outer: &BTreeSet<Name>,
    ) -> Result<CoreExpr, LowerError> {
        let Some(Pattern::Ctor(c0, _)) = alts.iter().map(|a| &a.pat).find(|p| matches!(p, Pattern::Ctor(..))) else {
            unreachable!("caller checked for a constructor pattern")
        };
        let Some(data) = self.ctor_data.get(c0).cloned() else {
            return err(span, format!("unknown constructor `{c0}`"));
        };
        let all_ctors = self.datas[&data].ctors.clone();
        let mut out: Vec<Alt> = Vec::new();
        for a in alts {
            match &a.pat {
                Pattern::Ctor(c, binds) => {
                    let Some(arity) = all_ctors.iter().find(|(d, _)| d == c).map(|(_, n)| *n) else {
                        return err(a.span, format!("constructor `{c}` does not belong to type `{data}`"));
                    };
                    if binds.len() != arity {
                        return err(a.span, format!("constructor `{c}` has {arity} fields, pattern binds {}", binds.len()));
                    }
                    if out.iter().any(|o| &o.ctor == c) {
                        continue;
                    }
                    let binds = binds.iter().map(|b| self.param(b)).collect();
                    out.push(Alt {
                        ctor: c.clone(),
                        binds,
                        body: self.expr(&a.body, outer)?,
                        span: a.span,
                    });
                }
                Pattern::Var(x) => {
                    for (c, arity) in &all_ctors {
                        if out.iter().any(|o| &o.ctor == c) {
                            continue;
                        }
                        let binds = (0..*arity).map(|_| self.temp()).collect();
                        let mut body = self.expr(&a.body, outer)?;
                        if x != "_" && x != y {
                            body = self.mk_let(x.clone(), CoreExpr::var(y, a.span), body);
                        }
                        out.push(Alt {
                            ctor: c.clone(),
                            binds,
                            body,
                            span: a.span,
                        });
                    }
                }
                Pattern::Int(_) => return err(a.span, "integer pattern in a constructor switch"),
            }
        }
        if let Some((c, _)) = all_ctors.iter().find(|(c, _)| !out.iter().any(|o| &o.ctor == c)) {
            return err(span, format!("switch is missing an alternative for `{c}`"));
        }
        out.sort_by_key(|a| all_ctors.iter().position(|(c, _)| c == &a.ctor));
        Ok(CoreExpr::new(ExprKind::Switch(y.to_string(), out), span))
    }

    /// Integer patterns become a chain of equality tests.
    fn int_switch(
        &mut self,
        y: &str,
        alts: &[SAlt],
        span: Span,
        outer: &BTreeSet<Name>,
    ) -> Result<CoreExpr, LowerError> {
        let (last, init) = alts.split_last().expect("parser rejects empty switches");
        let Pattern::Var(x) = &last.pat else {
            return err(span, "integer switch needs a final variable or `_` alternative");
        };
        let mut acc = self.expr(&last.body, outer)?;
        if x != "_" && x != y {
            acc = self.mk_let(x.clone(), CoreExpr::var(y, last.span), acc);
        }
        for a in init.iter().rev() {
            let Pattern::Int(k) = a.pat else {
                return err(a.span, "only the last alternative of an integer switch may bind a variable");
            };
            let kt = self.temp();
            let ct = self.temp();
            let test = CoreExpr::app(
                CoreExpr::app(CoreExpr::var("==", a.span), y, a.span),
                kt.clone(),
                a.span,
            );
            let body = self.expr(&a.body, outer)?;
            let branch = CoreExpr::new(ExprKind::If(ct.clone(), Box::new(body), Box::new(acc)), a.span);
            let inner = CoreExpr::let_(ct, test, branch, a.span);
            acc = CoreExpr::let_(kt, CoreExpr::int(k, a.span), inner, a.span);
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::{parse, parse_expr};
    use super::*;

    fn anf(src: &str) -> String {
        anf_expr(&parse_expr(src).unwrap()).unwrap().to_string()
    }

    #[test]
    fn literal_arguments_are_lifted() {
        assert_eq!(anf("add(x, 1)"), "let $t0 = 1; add(x)($t0)");
    }

    #[test]
    fn nested_calls_are_named() {
        assert_eq!(anf("inc(sub(y, one))"), "let $t0 = sub(y)(one); inc($t0)");
        assert_eq!(anf("x"), "x");
    }

    #[test]
    fn nested_lets_are_hoisted() {
        assert_eq!(
            anf("{ let a = { let b = 1; b }; a }"),
            "let b = 1; let a = b; a"
        );
    }

    #[test]
    fn signatures_quantify_type_and_refinement_variables() {
        let src = "
            val maxI : int[v|p v] => int[v|p v] => int[v|p v]
            let maxI = (x, y) => { if (x < y) { y } else { x } }";
        let prog = lower(&SurfaceProgram::default(), &parse(src).unwrap()).unwrap();
        let t = prog.decls[0].annot.as_ref().unwrap();
        assert!(matches!(t, Type::AllRef { rv, sorts, .. } if rv == "p" && sorts == &vec![Sort::Int]));
        let src = "val id : 'a => 'a";
        let prog = lower(&SurfaceProgram::default(), &parse(src).unwrap()).unwrap();
        assert_eq!(prog.decls[0].kind, DeclKind::Assume);
        assert!(matches!(prog.decls[0].annot, Some(Type::AllTy { .. })));
    }

    #[test]
    fn aliases_and_datatypes_resolve() {
        let src = "
            type nat = int[v|0 <= v]
            measure len : list('a) => nat
            type list('a) =
              | Nil => [v|len(v) = 0]
              | Cons(x:'a, xs:list('a)) => [v|len(v) = 1 + len(xs)]
            val head : list('a)[v|0 < len(v)] => 'a
            val n : nat[v|v < 10]";
        let prog = lower(&SurfaceProgram::default(), &parse(src).unwrap()).unwrap();
        assert_eq!(prog.datas[0].ctors.len(), 2);
        assert_eq!(prog.measures[0].output.to_string(), "int[v|0 <= v]");
        assert_eq!(prog.decls[1].annot.as_ref().unwrap().to_string(), "int[v|0 <= v && v < 10]");
    }

    #[test]
    fn def_without_signature_is_rejected() {
        let src = "def f = (x) => { f(x) }";
        assert!(lower(&SurfaceProgram::default(), &parse(src).unwrap()).is_err());
    }

    #[test]
    fn integer_switch_becomes_tests() {
        let e = anf("switch (n) { | 0 => 1 | m => m }");
        assert_eq!(
            e,
            "let $t0 = 0; let $t1 = ==(n)($t0); if ($t1) { 1 } else { let m = n; m }"
        );
    }
}
