//! Refinement predicates, sorts and NNF Horn constraints.
//!
//! Predicates are quantifier-free formulas over linear integer arithmetic,
//! booleans and uninterpreted functions. Horn variables (`KApp`) are applied
//! to variables only. Constraints nest universally quantified binders over
//! predicate heads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Identifiers are plain strings; generated names start with `$`.
pub type Name = String;

/// Prefix for Horn variables.
pub const KVAR_PREFIX: &str = "$k";
/// Prefix for ANF temporaries.
pub const TEMP_PREFIX: &str = "$t";
/// Prefix for generated value variables and binders.
pub const VALUE_PREFIX: &str = "$v";

/// Byte range in a source file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(Name),
    #[error("sort mismatch: expected {expected}, found {found}")]
    SortMismatch {
        expected: Sort,
        found: Sort,
        span: Option<Span>,
    },
    #[error("cannot substitute non-variable `{term}` for `{var}` inside Horn application `{kvar}`")]
    NonVariableInKApp { kvar: Name, var: Name, term: String },
    #[error("`{symbol}` expects {expected} arguments, got {found}")]
    ArityMismatch {
        symbol: Name,
        expected: usize,
        found: usize,
    },
    #[error("symbol `{0}` declared twice with different sorts")]
    DuplicateSymbol(Name),
}

/// Sorts of the refinement logic.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Int,
    Bool,
    /// A declared type constructor with its arguments erased.
    Data(Name),
    /// A base-kinded type variable.
    Var(Name),
    /// Uninterpreted function symbols: measures, reflected functions, refinement variables.
    Func(Vec<Sort>, Box<Sort>),
}

impl Sort {
    pub fn func(args: Vec<Sort>, res: Sort) -> Sort {
        Sort::Func(args, Box::new(res))
    }

    pub fn is_func(&self) -> bool {
        matches!(self, Sort::Func(..))
    }

    /// Substitute sort variables.
    pub fn subst_vars(&self, m: &BTreeMap<Name, Sort>) -> Sort {
        match self {
            Sort::Var(a) => m.get(a).cloned().unwrap_or_else(|| self.clone()),
            Sort::Func(args, res) => Sort::Func(
                args.iter().map(|s| s.subst_vars(m)).collect(),
                Box::new(res.subst_vars(m)),
            ),
            _ => self.clone(),
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<Name>) {
        match self {
            Sort::Var(a) => {
                out.insert(a.clone());
            }
            Sort::Func(args, res) => {
                for a in args {
                    a.collect_vars(out);
                }
                res.collect_vars(out);
            }
            _ => {}
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Int => write!(f, "int"),
            Sort::Bool => write!(f, "bool"),
            Sort::Data(n) => write!(f, "{n}"),
            Sort::Var(a) => write!(f, "'{a}"),
            Sort::Func(args, res) => {
                write!(f, "(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ") -> {res}")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Imp,
    Iff,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Imp => "==>",
            BinOp::Iff => "<=>",
        }
    }

    fn prec(self) -> u8 {
        match self {
            BinOp::Imp | BinOp::Iff => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    pub fn is_arith(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul)
    }

    pub fn is_connective(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or | BinOp::Imp | BinOp::Iff)
    }
}

/// Quantifier-free refinement predicates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    Var(Name),
    Bool(bool),
    Int(i64),
    Bin(BinOp, Box<Pred>, Box<Pred>),
    Not(Box<Pred>),
    Ite(Box<Pred>, Box<Pred>, Box<Pred>),
    UApp(Name, Vec<Pred>),
    KApp(Name, Vec<Name>),
}

impl Pred {
    pub fn var(x: impl Into<Name>) -> Pred {
        Pred::Var(x.into())
    }

    pub fn tt() -> Pred {
        Pred::Bool(true)
    }

    pub fn ff() -> Pred {
        Pred::Bool(false)
    }

    pub fn bin(op: BinOp, a: Pred, b: Pred) -> Pred {
        Pred::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn add(a: Pred, b: Pred) -> Pred {
        Pred::bin(BinOp::Add, a, b)
    }

    pub fn sub(a: Pred, b: Pred) -> Pred {
        Pred::bin(BinOp::Sub, a, b)
    }

    pub fn mul(a: Pred, b: Pred) -> Pred {
        Pred::bin(BinOp::Mul, a, b)
    }

    pub fn eq(a: Pred, b: Pred) -> Pred {
        Pred::bin(BinOp::Eq, a, b)
    }

    pub fn ne(a: Pred, b: Pred) -> Pred {
        Pred::bin(BinOp::Ne, a, b)
    }

    pub fn lt(a: Pred, b: Pred) -> Pred {
        Pred::bin(BinOp::Lt, a, b)
    }

    pub fn le(a: Pred, b: Pred) -> Pred {
        Pred::bin(BinOp::Le, a, b)
    }

    pub fn iff(a: Pred, b: Pred) -> Pred {
        Pred::bin(BinOp::Iff, a, b)
    }

    pub fn imp(a: Pred, b: Pred) -> Pred {
        Pred::bin(BinOp::Imp, a, b)
    }

    pub fn or(a: Pred, b: Pred) -> Pred {
        Pred::bin(BinOp::Or, a, b)
    }

    pub fn not(p: Pred) -> Pred {
        Pred::Not(Box::new(p))
    }

    pub fn ite(c: Pred, t: Pred, e: Pred) -> Pred {
        Pred::Ite(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn uapp(f: impl Into<Name>, args: Vec<Pred>) -> Pred {
        Pred::UApp(f.into(), args)
    }

    /// Conjunction that drops `true` operands.
    pub fn and(a: Pred, b: Pred) -> Pred {
        match (a.is_true(), b.is_true()) {
            (true, _) => b,
            (_, true) => a,
            _ => Pred::bin(BinOp::And, a, b),
        }
    }

    /// Right-nested conjunction of all operands, dropping `true`.
    pub fn conj(ps: impl IntoIterator<Item = Pred>) -> Pred {
        let ps: Vec<Pred> = ps.into_iter().filter(|p| !p.is_true()).collect();
        let mut it = ps.into_iter().rev();
        match it.next() {
            None => Pred::tt(),
            Some(last) => it.fold(last, |acc, p| Pred::bin(BinOp::And, p, acc)),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Pred::Bool(true))
    }

    /// Split a predicate into its top-level conjuncts.
    pub fn conjuncts(&self) -> Vec<Pred> {
        let mut out = Vec::new();
        self.push_conjuncts(&mut out);
        out
    }

    fn push_conjuncts(&self, out: &mut Vec<Pred>) {
        match self {
            Pred::Bin(BinOp::And, a, b) => {
                a.push_conjuncts(out);
                b.push_conjuncts(out);
            }
            Pred::Bool(true) => {}
            p => out.push(p.clone()),
        }
    }

    pub fn is_kapp(&self) -> bool {
        matches!(self, Pred::KApp(..))
    }

    /// True when no Horn variable occurs.
    pub fn is_concrete(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |p| {
            if p.is_kapp() {
                ok = false;
            }
        });
        ok
    }

    /// Multiplication only with a literal operand.
    pub fn is_linear(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |p| {
            if let Pred::Bin(BinOp::Mul, a, b) = p {
                if !matches!(**a, Pred::Int(_)) && !matches!(**b, Pred::Int(_)) {
                    ok = false;
                }
            }
        });
        ok
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Pred)) {
        f(self);
        match self {
            Pred::Bin(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Pred::Not(a) => a.visit(f),
            Pred::Ite(c, a, b) => {
                c.visit(f);
                a.visit(f);
                b.visit(f);
            }
            Pred::UApp(_, args) => {
                for a in args {
                    a.visit(f);
                }
            }
            Pred::Var(_) | Pred::Bool(_) | Pred::Int(_) | Pred::KApp(..) => {}
        }
    }

    /// Bottom-up rewrite; `f` sees each node after its children were rewritten.
    pub fn try_transform<E>(&self, f: &mut impl FnMut(Pred) -> Result<Pred, E>) -> Result<Pred, E> {
        let p = match self {
            Pred::Bin(op, a, b) => Pred::Bin(
                *op,
                Box::new(a.try_transform(f)?),
                Box::new(b.try_transform(f)?),
            ),
            Pred::Not(a) => Pred::Not(Box::new(a.try_transform(f)?)),
            Pred::Ite(c, a, b) => Pred::Ite(
                Box::new(c.try_transform(f)?),
                Box::new(a.try_transform(f)?),
                Box::new(b.try_transform(f)?),
            ),
            Pred::UApp(g, args) => Pred::UApp(
                g.clone(),
                args.iter()
                    .map(|a| a.try_transform(f))
                    .collect::<Result<_, _>>()?,
            ),
            other => other.clone(),
        };
        f(p)
    }

    pub fn transform(&self, f: &mut impl FnMut(Pred) -> Pred) -> Pred {
        self.try_transform::<std::convert::Infallible>(&mut |p| Ok(f(p)))
            .unwrap_or_else(|e| match e {})
    }

    /// Free term variables, including Horn-application arguments.
    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit(&mut |p| match p {
            Pred::Var(x) => {
                out.insert(x.clone());
            }
            Pred::KApp(_, args) => out.extend(args.iter().cloned()),
            _ => {}
        });
        out
    }

    /// Horn variables occurring in the predicate.
    pub fn kvars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit(&mut |p| {
            if let Pred::KApp(k, _) = p {
                out.insert(k.clone());
            }
        });
        out
    }

    /// Uninterpreted symbols applied in the predicate.
    pub fn symbols(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit(&mut |p| {
            if let Pred::UApp(f, _) = p {
                out.insert(f.clone());
            }
        });
        out
    }

    /// Replace free `x` by `y`.
    pub fn subst(&self, x: &str, y: &Pred) -> Result<Pred, LogicError> {
        let mut m = BTreeMap::new();
        m.insert(x.to_string(), y.clone());
        self.subst_many(&m)
    }

    /// Simultaneous substitution.
    pub fn subst_many(&self, m: &BTreeMap<Name, Pred>) -> Result<Pred, LogicError> {
        if m.is_empty() {
            return Ok(self.clone());
        }
        self.try_transform(&mut |p| match p {
            Pred::Var(x) => Ok(m.get(&x).cloned().unwrap_or(Pred::Var(x))),
            Pred::KApp(k, args) => {
                let args = args
                    .into_iter()
                    .map(|a| match m.get(&a) {
                        None => Ok(a),
                        Some(Pred::Var(y)) => Ok(y.clone()),
                        Some(t) => Err(LogicError::NonVariableInKApp {
                            kvar: k.clone(),
                            var: a.clone(),
                            term: t.to_string(),
                        }),
                    })
                    .collect::<Result<_, _>>()?;
                Ok(Pred::KApp(k, args))
            }
            p => Ok(p),
        })
    }

    /// Variable-for-variable renaming, which never fails.
    pub fn rename(&self, m: &BTreeMap<Name, Name>) -> Pred {
        if m.is_empty() {
            return self.clone();
        }
        self.transform(&mut |p| match p {
            Pred::Var(x) => Pred::Var(m.get(&x).cloned().unwrap_or(x)),
            Pred::KApp(k, args) => Pred::KApp(
                k,
                args.into_iter()
                    .map(|a| m.get(&a).cloned().unwrap_or(a))
                    .collect(),
            ),
            p => p,
        })
    }

    pub fn rename1(&self, x: &str, y: &str) -> Pred {
        if x == y {
            return self.clone();
        }
        let mut m = BTreeMap::new();
        m.insert(x.to_string(), y.to_string());
        self.rename(&m)
    }
}

fn fmt_pred(p: &Pred, ctx: u8, left: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match p {
        Pred::Var(x) => write!(f, "{x}"),
        Pred::Bool(b) => write!(f, "{b}"),
        Pred::Int(n) => {
            if *n < 0 && ctx > 4 {
                write!(f, "({n})")
            } else {
                write!(f, "{n}")
            }
        }
        Pred::Bin(op, a, b) => {
            let prec = op.prec();
            let assoc = matches!(op, BinOp::And | BinOp::Or) || (left && op.is_arith());
            let paren = prec < ctx || (prec == ctx && !assoc);
            if paren {
                write!(f, "(")?;
            }
            fmt_pred(a, prec, true, f)?;
            write!(f, " {} ", op.symbol())?;
            fmt_pred(b, prec, false, f)?;
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
        Pred::Not(a) => {
            write!(f, "!")?;
            fmt_pred(a, 7, false, f)
        }
        Pred::Ite(c, a, b) => {
            write!(f, "ite(")?;
            fmt_pred(c, 0, false, f)?;
            write!(f, ", ")?;
            fmt_pred(a, 0, false, f)?;
            write!(f, ", ")?;
            fmt_pred(b, 0, false, f)?;
            write!(f, ")")
        }
        Pred::UApp(g, args) => {
            write!(f, "{g}")?;
            if !args.is_empty() {
                write!(f, "(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    fmt_pred(a, 0, false, f)?;
                }
                write!(f, ")")?;
            }
            Ok(())
        }
        Pred::KApp(k, args) => write!(f, "{k}({})", args.join(", ")),
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_pred(self, 0, false, f)
    }
}

/// NNF Horn constraints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cstr {
    Head(Pred, Span),
    And(Vec<Cstr>),
    All {
        x: Name,
        sort: Sort,
        hyp: Pred,
        body: Box<Cstr>,
    },
}

impl Cstr {
    pub fn tt() -> Cstr {
        Cstr::And(Vec::new())
    }

    pub fn head(p: Pred, span: Span) -> Cstr {
        if p.is_true() {
            Cstr::tt()
        } else {
            Cstr::Head(p, span)
        }
    }

    pub fn is_trivial(&self) -> bool {
        match self {
            Cstr::Head(p, _) => p.is_true(),
            Cstr::And(cs) => cs.iter().all(Cstr::is_trivial),
            Cstr::All { body, .. } => body.is_trivial(),
        }
    }

    /// Binary conjunction with trivial operands dropped and nested `And`s flattened.
    pub fn and(a: Cstr, b: Cstr) -> Cstr {
        Cstr::conj(vec![a, b])
    }

    pub fn conj(cs: Vec<Cstr>) -> Cstr {
        let mut out = Vec::new();
        for c in cs {
            if c.is_trivial() {
                continue;
            }
            match c {
                Cstr::And(inner) => out.extend(inner),
                c => out.push(c),
            }
        }
        if out.len() == 1 {
            out.pop().expect("one element")
        } else {
            Cstr::And(out)
        }
    }

    pub fn all(x: impl Into<Name>, sort: Sort, hyp: Pred, body: Cstr) -> Cstr {
        if body.is_trivial() {
            return Cstr::tt();
        }
        Cstr::All {
            x: x.into(),
            sort,
            hyp,
            body: Box::new(body),
        }
    }

    pub fn kvars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit_preds(&mut |p| out.extend(p.kvars()));
        out
    }

    pub fn is_concrete(&self) -> bool {
        self.kvars().is_empty()
    }

    pub fn visit_preds(&self, f: &mut impl FnMut(&Pred)) {
        match self {
            Cstr::Head(p, _) => f(p),
            Cstr::And(cs) => cs.iter().for_each(|c| c.visit_preds(f)),
            Cstr::All { hyp, body, .. } => {
                f(hyp);
                body.visit_preds(f);
            }
        }
    }

    /// Apply a predicate rewrite everywhere.
    pub fn map_preds(&self, f: &mut impl FnMut(&Pred) -> Pred) -> Cstr {
        match self {
            Cstr::Head(p, s) => Cstr::Head(f(p), *s),
            Cstr::And(cs) => Cstr::And(cs.iter().map(|c| c.map_preds(f)).collect()),
            Cstr::All { x, sort, hyp, body } => Cstr::All {
                x: x.clone(),
                sort: sort.clone(),
                hyp: f(hyp),
                body: Box::new(body.map_preds(f)),
            },
        }
    }

    /// Number of heads, a rough size measure.
    pub fn size(&self) -> usize {
        match self {
            Cstr::Head(..) => 1,
            Cstr::And(cs) => cs.iter().map(Cstr::size).sum(),
            Cstr::All { body, .. } => body.size(),
        }
    }

    fn fmt_indent(&self, f: &mut fmt::Formatter<'_>, ind: usize) -> fmt::Result {
        let pad = " ".repeat(ind);
        match self {
            Cstr::Head(p, _) => writeln!(f, "{pad}{p}"),
            Cstr::And(cs) if cs.is_empty() => writeln!(f, "{pad}true"),
            Cstr::And(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        writeln!(f, "{pad}&&")?;
                    }
                    c.fmt_indent(f, ind)?;
                }
                Ok(())
            }
            Cstr::All { x, sort, hyp, body } => {
                writeln!(f, "{pad}forall {x}:{sort}. {hyp} ==>")?;
                body.fmt_indent(f, ind + 2)
            }
        }
    }
}

impl fmt::Display for Cstr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_indent(f, 0)
    }
}

/// Uninterpreted symbols and their function sorts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolTable {
    syms: BTreeMap<Name, Sort>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declare a symbol; redeclaring with the same sort is a no-op.
    pub fn declare(&mut self, name: impl Into<Name>, sort: Sort) -> Result<(), LogicError> {
        let name = name.into();
        let sort = match sort {
            s @ Sort::Func(..) => s,
            s => Sort::func(Vec::new(), s),
        };
        match self.syms.get(&name) {
            Some(old) if *old != sort => Err(LogicError::DuplicateSymbol(name)),
            Some(_) => Ok(()),
            None => {
                self.syms.insert(name, sort);
                Ok(())
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&Sort> {
        self.syms.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.syms.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Sort)> {
        self.syms.iter()
    }

    pub fn len(&self) -> usize {
        self.syms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syms.is_empty()
    }

    pub fn extend(&mut self, other: &SymbolTable) -> Result<(), LogicError> {
        for (k, v) in other.iter() {
            self.declare(k.clone(), v.clone())?;
        }
        Ok(())
    }
}

/// Sort inference state: schematic variables from symbol signatures get fresh metas.
struct SortCx<'a> {
    table: &'a SymbolTable,
    env: &'a BTreeMap<Name, Sort>,
    metas: BTreeMap<Name, Sort>,
    next: usize,
}

const META: &str = "?";

impl SortCx<'_> {
    fn resolve(&self, s: &Sort) -> Sort {
        match s {
            Sort::Var(a) if a.starts_with(META) => match self.metas.get(a) {
                Some(t) => self.resolve(t),
                None => s.clone(),
            },
            Sort::Func(args, res) => Sort::Func(
                args.iter().map(|a| self.resolve(a)).collect(),
                Box::new(self.resolve(res)),
            ),
            _ => s.clone(),
        }
    }

    fn unify(&mut self, expected: &Sort, found: &Sort) -> Result<(), LogicError> {
        let (e, f) = (self.resolve(expected), self.resolve(found));
        match (&e, &f) {
            _ if e == f => Ok(()),
            (Sort::Var(a), _) if a.starts_with(META) => {
                self.metas.insert(a.clone(), f);
                Ok(())
            }
            (_, Sort::Var(b)) if b.starts_with(META) => {
                self.metas.insert(b.clone(), e);
                Ok(())
            }
            (Sort::Func(a1, r1), Sort::Func(a2, r2)) if a1.len() == a2.len() => {
                for (x, y) in a1.iter().zip(a2) {
                    self.unify(x, y)?;
                }
                self.unify(r1, r2)
            }
            _ => Err(LogicError::SortMismatch {
                expected: e,
                found: f,
                span: None,
            }),
        }
    }

    fn instantiate(&mut self, s: &Sort) -> Sort {
        let mut vars = BTreeSet::new();
        s.collect_vars(&mut vars);
        let mut m = BTreeMap::new();
        for v in vars {
            let n = self.next;
            self.next += 1;
            m.insert(v, Sort::Var(format!("{META}{n}")));
        }
        s.subst_vars(&m)
    }

    fn lookup_fn(&mut self, f: &str) -> Result<Sort, LogicError> {
        if let Some(s @ Sort::Func(..)) = self.env.get(f) {
            // Refinement variables in scope are monomorphic.
            return Ok(s.clone());
        }
        match self.table.get(f) {
            Some(s) => Ok(self.instantiate(s)),
            None => Err(LogicError::UnboundSymbol(f.to_string())),
        }
    }

    fn sort(&mut self, p: &Pred) -> Result<Sort, LogicError> {
        match p {
            Pred::Var(x) => {
                if let Some(s) = self.env.get(x) {
                    return Ok(s.clone());
                }
                match self.lookup_fn(x)? {
                    Sort::Func(args, res) if args.is_empty() => Ok(*res),
                    s => Ok(s),
                }
            }
            Pred::Bool(_) => Ok(Sort::Bool),
            Pred::Int(_) => Ok(Sort::Int),
            Pred::Not(a) => {
                let s = self.sort(a)?;
                self.unify(&Sort::Bool, &s)?;
                Ok(Sort::Bool)
            }
            Pred::Ite(c, a, b) => {
                let sc = self.sort(c)?;
                self.unify(&Sort::Bool, &sc)?;
                let sa = self.sort(a)?;
                let sb = self.sort(b)?;
                self.unify(&sa, &sb)?;
                Ok(self.resolve(&sa))
            }
            Pred::Bin(op, a, b) => {
                let sa = self.sort(a)?;
                let sb = self.sort(b)?;
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul => {
                        self.unify(&Sort::Int, &sa)?;
                        self.unify(&Sort::Int, &sb)?;
                        Ok(Sort::Int)
                    }
                    BinOp::Eq | BinOp::Ne => {
                        self.unify(&sa, &sb)?;
                        Ok(Sort::Bool)
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        self.unify(&sa, &sb)?;
                        match self.resolve(&sa) {
                            Sort::Int | Sort::Var(_) => Ok(Sort::Bool),
                            other => Err(LogicError::SortMismatch {
                                expected: Sort::Int,
                                found: other,
                                span: None,
                            }),
                        }
                    }
                    BinOp::And | BinOp::Or | BinOp::Imp | BinOp::Iff => {
                        self.unify(&Sort::Bool, &sa)?;
                        self.unify(&Sort::Bool, &sb)?;
                        Ok(Sort::Bool)
                    }
                }
            }
            Pred::UApp(f, args) => {
                let fs = self.lookup_fn(f)?;
                let Sort::Func(params, res) = fs else {
                    return Err(LogicError::SortMismatch {
                        expected: Sort::func(vec![], Sort::Bool),
                        found: fs,
                        span: None,
                    });
                };
                if params.len() != args.len() {
                    return Err(LogicError::ArityMismatch {
                        symbol: f.clone(),
                        expected: params.len(),
                        found: args.len(),
                    });
                }
                for (ps, a) in params.iter().zip(args) {
                    let sa = self.sort(a)?;
                    self.unify(ps, &sa)?;
                }
                Ok(self.resolve(&res))
            }
            Pred::KApp(_, args) => {
                for a in args {
                    if !self.env.contains_key(a) {
                        return Err(LogicError::UnboundSymbol(a.clone()));
                    }
                }
                Ok(Sort::Bool)
            }
        }
    }
}

/// Infer the sort of `p`; function symbols with sort variables are schematic.
pub fn sort_of(
    table: &SymbolTable,
    env: &BTreeMap<Name, Sort>,
    p: &Pred,
) -> Result<Sort, LogicError> {
    let mut cx = SortCx {
        table,
        env,
        metas: BTreeMap::new(),
        next: 0,
    };
    let s = cx.sort(p)?;
    Ok(cx.resolve(&s))
}

/// Check that `p` is a Bool-sorted refinement.
pub fn check_bool(
    table: &SymbolTable,
    env: &BTreeMap<Name, Sort>,
    p: &Pred,
) -> Result<(), LogicError> {
    match sort_of(table, env, p)? {
        Sort::Bool => Ok(()),
        found => Err(LogicError::SortMismatch {
            expected: Sort::Bool,
            found,
            span: None,
        }),
    }
}

/// A Horn variable with named, sorted parameters; the first is the value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KVarDecl {
    pub name: Name,
    pub params: Vec<(Name, Sort)>,
}

impl KVarDecl {
    pub fn sorts(&self) -> Vec<Sort> {
        self.params.iter().map(|(_, s)| s.clone()).collect()
    }
}

/// Monotone fresh-name supply with one counter per prefix.
#[derive(Clone, Debug, Default)]
pub struct NameGen {
    counters: BTreeMap<String, usize>,
}

impl NameGen {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self, prefix: &str) -> Name {
        let n = self.counters.entry(prefix.to_string()).or_insert(0);
        let name = format!("{prefix}{n}");
        *n += 1;
        name
    }

    pub fn kvar(&mut self) -> Name {
        self.fresh(KVAR_PREFIX)
    }

    pub fn temp(&mut self) -> Name {
        self.fresh(TEMP_PREFIX)
    }

    pub fn value(&mut self) -> Name {
        self.fresh(VALUE_PREFIX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &str) -> Pred {
        Pred::var(x)
    }

    #[test]
    fn subst_renames_free_variable() {
        let p = Pred::and(
            Pred::le(Pred::Int(0), v("v")),
            Pred::lt(v("v"), Pred::uapp("len", vec![v("x")])),
        );
        let q = p.subst("x", &v("a")).unwrap();
        assert_eq!(q.to_string(), "0 <= v && v < len(a)");
    }

    #[test]
    fn subst_into_kapp_accepts_variables_only() {
        let p = Pred::KApp("k".into(), vec!["x".into(), "v".into()]);
        assert_eq!(
            p.subst("x", &v("z")).unwrap(),
            Pred::KApp("k".into(), vec!["z".into(), "v".into()])
        );
        assert!(matches!(
            p.subst("x", &Pred::Int(1)),
            Err(LogicError::NonVariableInKApp { .. })
        ));
    }

    #[test]
    fn subst_of_absent_variable_is_identity() {
        let p = Pred::eq(v("v"), v("x"));
        assert_eq!(p.subst("y", &Pred::Int(7)).unwrap(), p);
    }

    #[test]
    fn sort_of_examples() {
        let table = {
            let mut t = SymbolTable::new();
            t.declare("len", Sort::func(vec![Sort::Data("list".into())], Sort::Int))
                .unwrap();
            t
        };
        let mut env = BTreeMap::new();
        env.insert("v".to_string(), Sort::Int);
        assert_eq!(
            sort_of(&table, &env, &Pred::le(Pred::Int(0), v("v"))).unwrap(),
            Sort::Bool
        );
        env.insert("x".to_string(), Sort::Data("list".into()));
        let p = Pred::lt(v("v"), Pred::uapp("len", vec![v("x")]));
        assert_eq!(sort_of(&table, &env, &p).unwrap(), Sort::Bool);
        let bad = Pred::add(v("v"), Pred::Bool(true));
        assert!(matches!(
            sort_of(&table, &env, &bad),
            Err(LogicError::SortMismatch { .. })
        ));
        assert!(matches!(
            sort_of(&table, &env, &v("nope")),
            Err(LogicError::UnboundSymbol(_))
        ));
    }

    #[test]
    fn schematic_symbols_instantiate_per_use() {
        let mut t = SymbolTable::new();
        let list = Sort::Data("list".into());
        t.declare(
            "Cons",
            Sort::func(vec![Sort::Var("a".into()), list.clone()], list.clone()),
        )
        .unwrap();
        t.declare("Nil", list.clone()).unwrap();
        let mut env = BTreeMap::new();
        env.insert("b".to_string(), Sort::Bool);
        env.insert("n".to_string(), Sort::Int);
        let p = Pred::ne(
            Pred::uapp("Cons", vec![v("b"), v("Nil")]),
            Pred::uapp("Cons", vec![v("n"), v("Nil")]),
        );
        assert_eq!(sort_of(&t, &env, &p).unwrap(), Sort::Bool);
    }

    #[test]
    fn free_vars_examples() {
        let p = Pred::eq(v("v"), Pred::add(v("x"), v("one")));
        let fv: Vec<_> = p.free_vars().into_iter().collect();
        assert_eq!(fv, vec!["one", "v", "x"]);
        let q = Pred::and(
            Pred::KApp("k".into(), vec!["x".into(), "v".into()]),
            Pred::le(Pred::Int(0), v("v")),
        );
        let fv: Vec<_> = q.free_vars().into_iter().collect();
        assert_eq!(fv, vec!["v", "x"]);
        assert!(Pred::tt().free_vars().is_empty());
    }

    #[test]
    fn conj_drops_true_and_display_is_readable() {
        let p = Pred::conj(vec![Pred::tt(), Pred::le(Pred::Int(0), v("v")), Pred::tt()]);
        assert_eq!(p.to_string(), "0 <= v");
        let q = Pred::sub(v("a"), Pred::sub(v("b"), v("c")));
        assert_eq!(q.to_string(), "a - (b - c)");
        let r = Pred::sub(Pred::sub(v("a"), v("b")), v("c"));
        assert_eq!(r.to_string(), "a - b - c");
    }

    #[test]
    fn name_gen_has_per_prefix_counters() {
        let mut g = NameGen::new();
        assert_eq!(g.temp(), "$t0");
        assert_eq!(g.kvar(), "$k0");
        assert_eq!(g.temp(), "$t1");
    }

    #[test]
    fn linearity_check() {
        assert!(Pred::mul(Pred::Int(2), v("x")).is_linear());
        assert!(!Pred::mul(v("y"), v("x")).is_linear());
    }
}
