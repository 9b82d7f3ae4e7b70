//! Verification-condition generation.
//!
//! A [`CheckJob`] walks an elaborated program bidirectionally: checking
//! pushes a goal type into an expression, synthesis reads one off. Both
//! return a Horn constraint whose satisfiability implies the judgment.

use std::collections::BTreeMap;
use std::rc::Rc;

use log::debug;
use thiserror::Error;

use crate::horn::{harvest_types, seed_qualifiers, Qualifier};
use crate::logic::{Cstr, KVarDecl, Name, NameGen, Pred, Sort, Span, SymbolTable};
use crate::smt::AdtDecl;
use crate::syntax::core::{Alt, Const, CoreDecl, CoreExpr, DeclKind, ExprKind};
use crate::syntax::Program;
use crate::types::{
    dconty, fresh, fresh_cref, imp, limit, prim_op, prim_type, reflect, rinst, self_ty, sub, tv_subst, wf, BaseTy,
    Env, Globals, Metric, Type, TypeError, NU,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckOptions {
    pub termination: bool,
    pub reflection: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            termination: true,
            reflection: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("{source}")]
    Type {
        span: Span,
        #[source]
        source: TypeError,
    },
    #[error("`{name}` needs a signature")]
    MissingAnnotation { span: Span, name: Name },
    #[error("recursive function `{name}` has no termination metric (use --no-termination to skip termination checking)")]
    MissingMetric { span: Span, name: Name },
    #[error("`{expr}` has type `{ty}`, which is not a function")]
    NotAFunction { span: Span, expr: String, ty: String },
    #[error("`{expr}` has type `{ty}`, which is not polymorphic")]
    NotPolymorphic { span: Span, expr: String, ty: String },
    #[error("unbound variable `{name}`")]
    UnboundVariable { span: Span, name: Name },
    #[error("cannot synthesize a type for `{expr}`; add an annotation")]
    CannotSynthesize { span: Span, expr: String },
}

impl CheckError {
    pub fn span(&self) -> Span {
        match self {
            CheckError::Type { span, .. }
            | CheckError::MissingAnnotation { span, .. }
            | CheckError::MissingMetric { span, .. }
            | CheckError::NotAFunction { span, .. }
            | CheckError::NotPolymorphic { span, .. }
            | CheckError::UnboundVariable { span, .. }
            | CheckError::CannotSynthesize { span, .. } => *span,
        }
    }
}

type Result<T> = std::result::Result<T, CheckError>;

fn at(span: Span) -> impl Fn(TypeError) -> CheckError {
    move |source| CheckError::Type { span, source }
}

/// Everything the solver needs to decide a program.
#[derive(Clone, Debug)]
pub struct Vc {
    pub cstr: Cstr,
    pub kvars: BTreeMap<Name, KVarDecl>,
    pub table: SymbolTable,
    pub quals: Vec<Qualifier>,
    pub adts: Vec<AdtDecl>,
}

/// Constraint generation state for one program.
pub struct CheckJob {
    opts: CheckOptions,
    gen: NameGen,
    kvars: Vec<KVarDecl>,
    /// Uninterpreted symbols minted for refinement quantifiers.
    symbols: SymbolTable,
    /// Signatures with minted symbols, harvested for qualifiers.
    opened: Vec<Type>,
}

fn reflected_names(e: &CoreExpr, out: &mut Vec<(Name, Type)>) {
    match &e.kind {
        ExprKind::Const(_) | ExprKind::Var(_) => {}
        ExprKind::Let(_, a, b) | ExprKind::If(_, a, b) => {
            reflected_names(a, out);
            reflected_names(b, out);
        }
        ExprKind::Lam(_, b)
        | ExprKind::App(b, _)
        | ExprKind::TAbs(_, b)
        | ExprKind::TApp(b, _)
        | ExprKind::RApp(b)
        | ExprKind::Annot(b, _) => reflected_names(b, out),
        ExprKind::LetRec { e1, e2, .. } => {
            reflected_names(e1, out);
            reflected_names(e2, out);
        }
        ExprKind::Reflect { x, e1, annot, e2, .. } => {
            out.push((x.clone(), annot.clone()));
            reflected_names(e1, out);
            reflected_names(e2, out);
        }
        ExprKind::Switch(_, alts) => alts.iter().for_each(|a| reflected_names(&a.body, out)),
    }
}

fn function_sort(t: &Type) -> Option<Sort> {
    let args = t
        .params()
        .iter()
        .map(|(_, p)| p.sort())
        .collect::<Option<Vec<_>>>()?;
    Some(Sort::func(args, t.result().sort()?))
}

/// Build the shared declarations for a program.
pub fn globals(prog: &Program, opts: &CheckOptions) -> Result<Globals> {
    let mut g = Globals::new(prog.datas.clone(), prog.measures.clone(), opts.reflection)
        .map_err(at(Span::default()))?;
    if opts.reflection {
        let mut defs = Vec::new();
        for d in &prog.decls {
            if d.kind == DeclKind::Def {
                defs.push((d.name.clone(), d.annot.clone().expect("definitions carry signatures"), d.span));
            }
            if let Some(b) = &d.body {
                let mut inner = Vec::new();
                reflected_names(b, &mut inner);
                defs.extend(inner.into_iter().map(|(x, t)| (x, t, d.span)));
            }
        }
        for (f, t, span) in defs {
            let s = function_sort(&t).ok_or_else(|| CheckError::Type {
                span,
                source: TypeError::NonEmbeddableBody(format!("{f} : {t}")),
            })?;
            g.declare_reflected(&f, s).map_err(at(span))?;
        }
    }
    Ok(g)
}

/// Generate the verification condition of an elaborated program.
pub fn generate(prog: &Program, opts: &CheckOptions) -> Result<Vc> {
    let g = globals(prog, opts)?;
    let adts = g.adts();
    let env = Env::new(Rc::new(g));
    let mut job = CheckJob::new(*opts);
    let cstr = job.decls(&env, &prog.decls)?;
    let mut table = env.globals().table.clone();
    table.extend(&job.symbols).map_err(|e| at(Span::default())(e.into()))?;
    let mut quals = seed_qualifiers();
    let annots = prog.annotations();
    for q in harvest_types(annots.iter().chain(&job.opened)) {
        // Refinement variables are only in scope under their quantifier.
        let scoped = q.body.symbols().iter().all(|f| table.contains(f));
        if scoped && !quals.iter().any(|p| p.body == q.body && p.params == q.params) {
            quals.push(q);
        }
    }
    debug!(
        "generated constraint of size {} with {} Horn variables and {} qualifiers",
        cstr.size(),
        job.kvars.len(),
        quals.len()
    );
    Ok(Vc {
        cstr,
        kvars: job.kvars.into_iter().map(|k| (k.name.clone(), k)).collect(),
        table,
        quals,
        adts,
    })
}

impl CheckJob {
    pub fn new(opts: CheckOptions) -> Self {
        CheckJob {
            opts,
            gen: NameGen::new(),
            kvars: Vec::new(),
            symbols: SymbolTable::new(),
            opened: Vec::new(),
        }
    }

    /// Horn variables minted so far.
    pub fn kvars(&self) -> &[KVarDecl] {
        &self.kvars
    }

    fn fresh(&mut self, env: &Env, t: &Type) -> Type {
        fresh(env, t, &mut self.gen, &mut self.kvars)
    }

    fn wf(&self, env: &Env, t: &Type, span: Span) -> Result<()> {
        wf(env, t).map(|_| ()).map_err(at(span))
    }

    /// Check top-level declarations in order; each binding scopes over the rest.
    pub fn decls(&mut self, env: &Env, ds: &[CoreDecl]) -> Result<Cstr> {
        let Some((d, rest)) = ds.split_first() else {
            return Ok(Cstr::tt());
        };
        debug!("checking `{}`", d.name);
        let (c, t) = match d.kind {
            DeclKind::Assume => {
                let t = d.annot.clone().expect("assumptions carry signatures");
                self.wf(env, &t, d.span)?;
                (Cstr::tt(), t)
            }
            DeclKind::Let => {
                let body = d.body.as_ref().expect("bindings carry bodies");
                match &d.annot {
                    Some(a) => {
                        self.wf(env, a, d.span)?;
                        let t = self.fresh(env, a);
                        (self.check(env, body, &t)?, t)
                    }
                    None => self.synth(env, body)?,
                }
            }
            DeclKind::Rec | DeclKind::Def => {
                let a = d.annot.as_ref().ok_or_else(|| CheckError::MissingAnnotation {
                    span: d.span,
                    name: d.name.clone(),
                })?;
                let body = d.body.as_ref().expect("bindings carry bodies");
                self.wf(env, a, d.span)?;
                self.rec_binding(env, &d.name, body, a, d.metric.as_ref(), d.kind == DeclKind::Def, d.span)?
            }
        };
        let env2 = env.bind(d.name.clone(), t.clone());
        let rest = self.decls(&env2, rest)?;
        Ok(Cstr::and(c, imp(env, &d.name, &t, rest)))
    }

    /// A recursive (or reflected) binding: returns its constraint and the
    /// type later code sees.
    #[allow(clippy::too_many_arguments)]
    fn rec_binding(
        &mut self,
        env: &Env,
        f: &str,
        e: &CoreExpr,
        annot: &Type,
        metric: Option<&Metric>,
        reflected: bool,
        span: Span,
    ) -> Result<(Cstr, Type)> {
        let t = self.fresh(env, annot);
        let (t, c) = match (self.opts.termination, metric) {
            (true, Some(m)) => self.chk_term(env, f, e, &t, m)?,
            (true, None) => {
                return Err(CheckError::MissingMetric {
                    span,
                    name: f.to_string(),
                })
            }
            (false, _) => {
                let c = self.check(&env.bind(f, t.clone()), e, &t)?;
                (t, c)
            }
        };
        if reflected && self.opts.reflection {
            let rt = reflect(f, e, &t, env.globals()).map_err(at(span))?;
            return Ok((c, rt));
        }
        Ok((c, t))
    }

    /// Check a recursive body with `f` bound at its metric-limited type.
    pub fn chk_term(&mut self, env: &Env, f: &str, e: &CoreExpr, t: &Type, m: &Metric) -> Result<(Type, Cstr)> {
        let t = match e.as_lambda() {
            Some((ps, _)) => t.rename_params(ps),
            None => t.clone(),
        };
        let lim = limit(env, m, &t).map_err(at(e.span))?;
        let c = self.check(&env.bind(f, lim), e, &t)?;
        Ok((t, c))
    }

    /// Rename a binder that would capture a free variable of `t`.
    fn unclash(&mut self, x: &Name, t: &Type, e: &CoreExpr) -> (Name, CoreExpr) {
        if t.free_vars().contains(x) {
            let y = self.gen.fresh(x);
            (y.clone(), e.rename(x, &y))
        } else {
            (x.clone(), e.clone())
        }
    }

    pub fn check(&mut self, env: &Env, e: &CoreExpr, t: &Type) -> Result<Cstr> {
        if let Type::AllRef { rv, sorts, body } = t {
            let sym = self.gen.fresh(&format!("{rv}$"));
            let sort = Sort::func(sorts.clone(), Sort::Bool);
            self.symbols
                .declare(sym.clone(), sort.clone())
                .map_err(|err| at(e.span)(err.into()))?;
            let body = body.rename_symbol(rv, &sym);
            self.opened.push(body.clone());
            return self.check(&env.bind_pred(sym, sort), e, &body);
        }
        match (&e.kind, t) {
            (ExprKind::TAbs(tvs, inner), Type::AllTy { tv, kind, body }) => {
                let ((a, _), rest) = tvs.split_first().expect("type abstractions bind variables");
                let body = if a == tv { (**body).clone() } else { body.rename_tyvar(tv, a) };
                let env2 = env.bind_tyvar(a.clone(), *kind);
                if rest.is_empty() {
                    self.check(&env2, inner, &body)
                } else {
                    let e2 = CoreExpr::new(ExprKind::TAbs(rest.to_vec(), inner.clone()), e.span);
                    self.check(&env2, &e2, &body)
                }
            }
            (ExprKind::Lam(ps, body), _) => self.check_lam(env, ps, body, t, e.span),
            (ExprKind::Let(x, e1, e2), _) => {
                let (x, e2) = self.unclash(x, t, e2);
                let (c1, t1) = self.synth(env, e1)?;
                let c2 = self.check(&env.bind(x.clone(), t1.clone()), &e2, t)?;
                Ok(Cstr::and(c1, imp(env, &x, &t1, c2)))
            }
            (ExprKind::If(x, a, b), _) => {
                let y = self.gen.fresh("$g");
                let tt = Type::base(BaseTy::Bool, NU, Pred::var(x.clone()));
                let ff = Type::base(BaseTy::Bool, NU, Pred::not(Pred::var(x.clone())));
                let c1 = self.check(&env.bind(y.clone(), tt.clone()), a, t)?;
                let c2 = self.check(&env.bind(y.clone(), ff.clone()), b, t)?;
                Ok(Cstr::and(imp(env, &y, &tt, c1), imp(env, &y, &ff, c2)))
            }
            (
                ExprKind::LetRec {
                    x,
                    e1,
                    annot,
                    metric,
                    e2,
                },
                _,
            ) => {
                let (x2, e2) = self.unclash(x, t, e2);
                let e1 = if x2 != *x { e1.rename(x, &x2) } else { (**e1).clone() };
                let x = x2;
                self.wf(env, annot, e.span)?;
                let (c1, t1) = self.rec_binding(env, &x, &e1, annot, metric.as_ref(), false, e.span)?;
                let c2 = self.check(&env.bind(x.clone(), t1.clone()), &e2, t)?;
                Ok(Cstr::and(c1, imp(env, &x, &t1, c2)))
            }
            (
                ExprKind::Reflect {
                    x,
                    e1,
                    annot,
                    metric,
                    e2,
                },
                _,
            ) => {
                self.wf(env, annot, e.span)?;
                let (c1, t1) = self.rec_binding(env, x, e1, annot, Some(metric), true, e.span)?;
                let c2 = self.check(&env.bind(x.clone(), t1.clone()), e2, t)?;
                Ok(Cstr::and(c1, imp(env, x, &t1, c2)))
            }
            (ExprKind::Switch(y, alts), _) => {
                let mut cs = Vec::new();
                for a in alts {
                    cs.push(self.check_alt(env, y, a, t)?);
                }
                Ok(Cstr::conj(cs))
            }
            _ => {
                let (c, s) = self.synth(env, e)?;
                let c2 = sub(env, &s, t, e.span).map_err(at(e.span))?;
                Ok(Cstr::and(c, c2))
            }
        }
    }

    fn check_lam(&mut self, env: &Env, ps: &[Name], body: &CoreExpr, t: &Type, span: Span) -> Result<Cstr> {
        let mut env2 = env.clone();
        let mut t = t.clone();
        let mut binds = Vec::new();
        for p in ps {
            let Type::Fun { x, input, output } = t else {
                return Err(CheckError::Type {
                    span,
                    source: TypeError::ShapeMismatch(format!("({}) => ...", ps.join(", ")), t.to_string()),
                });
            };
            binds.push((env2.clone(), p.clone(), (*input).clone()));
            env2 = env2.bind(p.clone(), *input);
            t = if x == *p { *output } else { output.rename_var(&x, p) };
        }
        let mut c = self.check(&env2, body, &t)?;
        for (env_i, p, input) in binds.into_iter().rev() {
            c = imp(&env_i, &p, &input, c);
        }
        Ok(c)
    }

    /// Check one switch alternative against `t`.
    pub fn check_alt(&mut self, env: &Env, y: &str, alt: &Alt, t: &Type) -> Result<Cstr> {
        let ct = dconty(env, &alt.ctor, y).map_err(at(alt.span))?;
        let mut body = alt.body.clone();
        let mut zs = Vec::new();
        for z in &alt.binds {
            let (z2, b2) = self.unclash(z, t, &body);
            body = b2;
            zs.push(z2);
        }
        let params = ct.params();
        if params.len() != zs.len() {
            return Err(CheckError::Type {
                span: alt.span,
                source: TypeError::ArityMismatch {
                    what: alt.ctor.clone(),
                    expected: params.len(),
                    found: zs.len(),
                },
            });
        }
        // Bind fields in order, renaming the constructor's binders.
        let mut env2 = env.clone();
        let mut cur = ct;
        let mut fields = Vec::new();
        for z in &zs {
            let Type::Fun { x, input, output } = cur else {
                unreachable!("arity checked above")
            };
            fields.push((env2.clone(), z.clone(), (*input).clone()));
            env2 = env2.bind(z.clone(), (*input).clone());
            cur = output.rename_var(&x, z);
        }
        let yt = env
            .lookup(y)
            .cloned()
            .ok_or_else(|| CheckError::UnboundVariable {
                span: alt.span,
                name: y.to_string(),
            })?;
        let ymeet = crate::types::meet(&yt, &cur).map_err(at(alt.span))?;
        let env3 = env2.bind(y.to_string(), ymeet);
        let c = self.check(&env3, &body, t)?;
        // The scrutinee keeps its name; the constructor's facts about it
        // are a hypothesis under an unused guard binder.
        let hyp = match &cur {
            Type::Base { b, .. } => Pred::and(
                cur.refinement_at(y),
                env.globals().invariants(&Pred::var(y.to_string()), b),
            ),
            _ => Pred::tt(),
        };
        let g = self.gen.fresh("$m");
        let mut c = Cstr::all(g, Sort::Bool, hyp, c);
        for (env_i, z, input) in fields.into_iter().rev() {
            c = imp(&env_i, &z, &input, c);
        }
        Ok(c)
    }

    fn var_type(&self, env: &Env, x: &str, span: Span) -> Result<Type> {
        if let Some(t) = env.lookup(x) {
            return Ok(self_ty(x, t));
        }
        if let Some(d) = env.globals().data_of_ctor(x) {
            return Ok(d.ctor_scheme(x).expect("constructor of its own datatype"));
        }
        if let Some(op) = prim_op(x) {
            return Ok(prim_type(op));
        }
        Err(CheckError::UnboundVariable {
            span,
            name: x.to_string(),
        })
    }

    pub fn synth(&mut self, env: &Env, e: &CoreExpr) -> Result<(Cstr, Type)> {
        let span = e.span;
        match &e.kind {
            ExprKind::Const(Const::Int(n)) => Ok((Cstr::tt(), Type::int_ref(Pred::eq(Pred::var(NU), Pred::Int(*n))))),
            ExprKind::Const(Const::Bool(b)) => Ok((
                Cstr::tt(),
                Type::base(BaseTy::Bool, NU, Pred::iff(Pred::var(NU), Pred::Bool(*b))),
            )),
            ExprKind::Var(x) => Ok((Cstr::tt(), self.var_type(env, x, span)?)),
            ExprKind::App(f, y) => {
                let (c, tf) = self.synth(env, f)?;
                let Type::Fun { x, input, output } = tf else {
                    return Err(CheckError::NotAFunction {
                        span,
                        expr: f.to_string(),
                        ty: tf.to_string(),
                    });
                };
                let c2 = self.check(env, &CoreExpr::var(y.clone(), span), &input)?;
                let out = if input.is_base() {
                    output.subst1(&x, &Pred::var(y.clone())).map_err(|err| at(span)(err.into()))?
                } else {
                    *output
                };
                Ok((Cstr::and(c, c2), out))
            }
            ExprKind::TApp(inner, tau) => {
                let (c, t) = self.synth(env, inner)?;
                let Type::AllTy { tv, body, .. } = &t else {
                    return Err(CheckError::NotPolymorphic {
                        span,
                        expr: inner.to_string(),
                        ty: t.to_string(),
                    });
                };
                let tau = self.fresh(env, tau);
                let out = tv_subst(body, tv, &tau).map_err(at(span))?;
                Ok((c, out))
            }
            ExprKind::RApp(inner) => {
                let (c, t) = self.synth(env, inner)?;
                let Type::AllRef { rv, sorts, body } = &t else {
                    return Err(CheckError::NotPolymorphic {
                        span,
                        expr: inner.to_string(),
                        ty: t.to_string(),
                    });
                };
                let params = sorts
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (format!("$r{i}"), s.clone()))
                    .collect();
                let cref = fresh_cref(env, params, &mut self.gen, &mut self.kvars);
                let out = rinst(body, rv, &cref).map_err(at(span))?;
                Ok((c, out))
            }
            ExprKind::Annot(inner, t) => {
                self.wf(env, t, span)?;
                let t = self.fresh(env, t);
                let c = self.check(env, inner, &t)?;
                Ok((c, t))
            }
            _ => Err(CheckError::CannotSynthesize {
                span,
                expr: e.to_string(),
            }),
        }
    }
}
