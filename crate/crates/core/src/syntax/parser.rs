//! Recursive-descent parser for the surface language.

use std::collections::BTreeSet;

use crate::logic::{BinOp, Name, Pred, Span};
use crate::types::Kind;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::ParseError;

pub fn parse(src: &str) -> Result<SurfaceProgram, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        eof: src.len(),
        forall_vars: BTreeSet::new(),
    };
    let mut decls = Vec::new();
    while !p.at_end() {
        decls.push(p.decl()?);
    }
    Ok(SurfaceProgram { decls })
}

/// Parse a single expression; used by tests and tools.
pub fn parse_expr(src: &str) -> Result<SExpr, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        eof: src.len(),
        forall_vars: BTreeSet::new(),
    };
    let e = p.expr()?;
    if !p.at_end() {
        return Err(p.unexpected("end of input"));
    }
    Ok(e)
}

/// Parse a single type.
pub fn parse_type(src: &str) -> Result<SType, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        eof: src.len(),
        forall_vars: BTreeSet::new(),
    };
    let t = p.ty()?;
    if !p.at_end() {
        return Err(p.unexpected("end of input"));
    }
    Ok(t)
}

/// Parse a refinement predicate.
pub fn parse_pred(src: &str) -> Result<Pred, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        eof: src.len(),
        forall_vars: BTreeSet::new(),
    };
    let e = p.pred()?;
    if !p.at_end() {
        return Err(p.unexpected("end of input"));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: usize,
    /// Unquoted names bound by an enclosing `forall`.
    forall_vars: BTreeSet<Name>,
}

const OPERATOR_NAMES: &[&str] = &[
    "===", "?", "+", "-", "*", "<", "<=", ">", ">=", "==", "!=", "&&", "||", "!",
];

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn span(&self) -> Span {
        self.toks
            .get(self.pos)
            .map_or(Span::new(self.eof, self.eof), |t| t.span)
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].span.end
        }
    }

    fn from(&self, start: Span) -> Span {
        Span::new(start.start, self.prev_end().max(start.start))
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        match self.peek() {
            Some(t) => ParseError::new(self.span(), format!("expected {wanted}, found {t}")),
            None => ParseError::new(self.span(), format!("expected {wanted}, found end of input")),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Kw(x)) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    fn ident(&mut self) -> Result<Name, ParseError> {
        match self.peek() {
            Some(Tok::Ident(x)) => {
                let x = x.clone();
                self.pos += 1;
                Ok(x)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn upper(&mut self) -> Result<Name, ParseError> {
        match self.peek() {
            Some(Tok::Upper(x)) => {
                let x = x.clone();
                self.pos += 1;
                Ok(x)
            }
            _ => Err(self.unexpected("a constructor name")),
        }
    }

    fn tyvar(&mut self) -> Result<Name, ParseError> {
        match self.peek() {
            Some(Tok::TyVar(x)) => {
                let x = x.clone();
                self.pos += 1;
                Ok(x)
            }
            _ => Err(self.unexpected("a type variable")),
        }
    }

    /// A value name: identifier or parenthesised operator.
    fn binder_name(&mut self) -> Result<Name, ParseError> {
        if self.is_sym("(") {
            if let Some(Tok::Sym(op)) = self.peek_at(1) {
                if OPERATOR_NAMES.contains(op) && self.peek_at(2) == Some(&Tok::Sym(")")) {
                    let op = op.to_string();
                    self.pos += 3;
                    return Ok(op);
                }
            }
        }
        self.ident()
    }

    fn comma_list<T>(
        &mut self,
        close: &str,
        mut item: impl FnMut(&mut Self) -> Result<T, ParseError>,
    ) -> Result<Vec<T>, ParseError> {
        let mut out = Vec::new();
        if self.eat_sym(close) {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat_sym(close) {
                return Ok(out);
            }
            self.expect_sym(",")?;
        }
    }

    // ---------------------------------------------------------------- decls

    fn decl(&mut self) -> Result<Decl, ParseError> {
        let start = self.span();
        if self.eat_kw("type") {
            return self.type_decl(start);
        }
        if self.eat_kw("measure") {
            let name = self.ident()?;
            self.expect_sym(":")?;
            let ty = self.ty()?;
            self.eat_sym(";");
            return Ok(Decl::Measure {
                name,
                ty,
                span: self.from(start),
            });
        }
        match self.stmt()? {
            s @ (Stmt::Val { .. } | Stmt::Let { .. }) => {
                self.eat_sym(";");
                Ok(Decl::Stmt(s))
            }
            _ => Err(ParseError::new(
                self.from(start),
                "expected a declaration (`type`, `measure`, `val`, `let` or `def`)",
            )),
        }
    }

    fn type_decl(&mut self, start: Span) -> Result<Decl, ParseError> {
        let name = self.ident()?;
        let mut tyvars = Vec::new();
        let mut rparams = Vec::new();
        if self.eat_sym("(") {
            tyvars = self.comma_list(")", |p| p.tyvar())?;
        }
        if self.eat_sym("(") {
            rparams = self.comma_list(")", |p| {
                let r = p.ident()?;
                p.expect_sym(":")?;
                Ok((r, p.ty()?))
            })?;
        }
        if !self.eat_sym("=") {
            self.eat_sym(";");
            return Ok(Decl::Data {
                name,
                tyvars,
                rparams,
                ctors: Vec::new(),
                span: self.from(start),
            });
        }
        if !self.is_sym("|") {
            let body = self.ty()?;
            self.eat_sym(";");
            return Ok(Decl::Alias {
                name,
                tyvars,
                rparams,
                body,
                span: self.from(start),
            });
        }
        let mut ctors = Vec::new();
        while self.eat_sym("|") {
            let cstart = self.span();
            let cname = self.upper()?;
            let fields = if self.eat_sym("(") {
                self.comma_list(")", |p| {
                    let name = if matches!(p.peek(), Some(Tok::Ident(_)))
                        && p.peek_at(1) == Some(&Tok::Sym(":"))
                    {
                        let x = p.ident()?;
                        p.pos += 1;
                        Some(x)
                    } else {
                        None
                    };
                    Ok(SField { name, ty: p.ty()? })
                })?
            } else {
                Vec::new()
            };
            let out = if self.eat_sym("=>") {
                self.expect_sym("[")?;
                let v = self.refine_binder();
                let p = self.pred()?;
                self.expect_sym("]")?;
                Some((v, p))
            } else {
                None
            };
            ctors.push(SCtor {
                name: cname,
                fields,
                out,
                span: self.from(cstart),
            });
        }
        self.eat_sym(";");
        Ok(Decl::Data {
            name,
            tyvars,
            rparams,
            ctors,
            span: self.from(start),
        })
    }

    /// `val`, `let`, `let rec`, `def` or an expression statement.
    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let start = self.span();
        if self.eat_kw("val") {
            let name = self.binder_name()?;
            self.expect_sym(":")?;
            let ty = self.ty()?;
            let metric = if self.eat_sym("/") {
                let mut ms = vec![self.pred()?];
                while self.eat_sym(",") {
                    ms.push(self.pred()?);
                }
                Some(ms)
            } else {
                None
            };
            return Ok(Stmt::Val {
                name,
                ty,
                metric,
                span: self.from(start),
            });
        }
        let kind = if self.eat_kw("let") {
            if self.eat_kw("rec") {
                Some(LetKind::Rec)
            } else {
                Some(LetKind::Plain)
            }
        } else if self.eat_kw("def") {
            Some(LetKind::Def)
        } else {
            None
        };
        if let Some(kind) = kind {
            let name = if self.eat_sym("_") {
                "_".to_string()
            } else {
                self.binder_name()?
            };
            self.expect_sym("=")?;
            let body = self.expr()?;
            return Ok(Stmt::Let {
                name,
                kind,
                body,
                span: self.from(start),
            });
        }
        Ok(Stmt::Expr(self.expr()?))
    }

    // ---------------------------------------------------------------- types

    fn ty(&mut self) -> Result<SType, ParseError> {
        let start = self.span();
        if self.eat_kw("forall") {
            let mut tvs = Vec::new();
            loop {
                let a = match self.peek() {
                    Some(Tok::TyVar(_)) => self.tyvar()?,
                    Some(Tok::Ident(_)) => {
                        let a = self.ident()?;
                        self.forall_vars.insert(a.clone());
                        a
                    }
                    _ => return Err(self.unexpected("a type variable")),
                };
                let kind = if self.eat_sym(":") {
                    let k = match self.peek() {
                        Some(Tok::Upper(k)) if k == "Base" => Kind::Base,
                        Some(Tok::Upper(k)) if k == "Star" => Kind::Star,
                        _ => return Err(self.unexpected("`Base` or `Star`")),
                    };
                    self.pos += 1;
                    k
                } else {
                    Kind::Base
                };
                tvs.push((a, kind));
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(".")?;
            let body = self.ty()?;
            return Ok(SType {
                kind: STypeKind::Forall(tvs, Box::new(body)),
                span: self.from(start),
            });
        }
        let binder = if matches!(self.peek(), Some(Tok::Ident(_))) && self.peek_at(1) == Some(&Tok::Sym(":")) {
            let x = self.ident()?;
            self.pos += 1;
            Some(x)
        } else {
            None
        };
        let mut input = self.btype()?;
        if let (Some(x), STypeKind::Base(_, SRefine::Known { v, .. })) = (&binder, &mut input.kind) {
            if v.is_none() {
                *v = Some(x.clone());
            }
        }
        if self.eat_sym("=>") || self.eat_sym("->") {
            let output = self.ty()?;
            return Ok(SType {
                kind: STypeKind::Fun(binder, Box::new(input), Box::new(output)),
                span: self.from(start),
            });
        }
        if binder.is_some() {
            return Err(self.unexpected("`=>` after a named argument"));
        }
        Ok(input)
    }

    fn btype(&mut self) -> Result<SType, ParseError> {
        let start = self.span();
        let base = match self.peek().cloned() {
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                if self.eat_sym(")") {
                    SBase::Unit
                } else {
                    let t = self.ty()?;
                    self.expect_sym(")")?;
                    if self.is_sym("[") {
                        if let STypeKind::Base(b, SRefine::Plain) = t.kind {
                            b
                        } else {
                            return Err(self.unexpected("a base type before a refinement"));
                        }
                    } else {
                        return Ok(SType {
                            kind: t.kind,
                            span: self.from(start),
                        });
                    }
                }
            }
            Some(Tok::Sym("[")) => {
                self.pos += 1;
                let p = self.pred()?;
                self.expect_sym("]")?;
                return Ok(SType {
                    kind: STypeKind::Base(SBase::Unit, SRefine::Known { v: None, p }),
                    span: self.from(start),
                });
            }
            Some(Tok::Sym("_")) => {
                self.pos += 1;
                SBase::Wild
            }
            Some(Tok::TyVar(a)) => {
                self.pos += 1;
                SBase::TyVar(a)
            }
            Some(Tok::Ident(n)) if self.forall_vars.contains(&n) => {
                self.pos += 1;
                SBase::TyVar(n)
            }
            Some(Tok::Ident(n)) => {
                self.pos += 1;
                let mut args = Vec::new();
                let mut refs = Vec::new();
                if self.eat_sym("(") {
                    args = self.comma_list(")", |p| p.ty())?;
                    if self.eat_sym("(") {
                        refs = self.comma_list(")", |p| p.concref())?;
                    }
                }
                SBase::Named(n, args, refs)
            }
            _ => return Err(self.unexpected("a type")),
        };
        let r = if self.eat_sym("[") {
            let r = if self.eat_sym("?") {
                SRefine::Hole
            } else {
                let v = self.refine_binder();
                SRefine::Known { v, p: self.pred()? }
            };
            self.expect_sym("]")?;
            r
        } else {
            SRefine::Plain
        };
        Ok(SType {
            kind: STypeKind::Base(base, r),
            span: self.from(start),
        })
    }

    /// Consume `v |` if present.
    fn refine_binder(&mut self) -> Option<Name> {
        if let (Some(Tok::Ident(v)), Some(Tok::Sym("|"))) = (self.peek(), self.peek_at(1)) {
            let v = v.clone();
            self.pos += 2;
            Some(v)
        } else {
            None
        }
    }

    fn concref(&mut self) -> Result<SConcRef, ParseError> {
        if self.eat_sym("(") {
            let ps = self.comma_list(")", |p| p.ident())?;
            self.expect_sym("=>")?;
            return Ok(SConcRef::Lam(ps, self.pred()?));
        }
        Ok(SConcRef::Name(self.ident()?))
    }

    // ---------------------------------------------------------------- preds

    pub(super) fn pred(&mut self) -> Result<Pred, ParseError> {
        let a = self.pred_imp()?;
        if self.eat_sym("<=>") {
            return Ok(Pred::iff(a, self.pred()?));
        }
        Ok(a)
    }

    fn pred_imp(&mut self) -> Result<Pred, ParseError> {
        let a = self.pred_or()?;
        if self.eat_sym("=>") || self.eat_sym("==>") {
            return Ok(Pred::imp(a, self.pred_imp()?));
        }
        Ok(a)
    }

    fn pred_or(&mut self) -> Result<Pred, ParseError> {
        let mut a = self.pred_and()?;
        while self.eat_sym("||") {
            a = Pred::or(a, self.pred_and()?);
        }
        Ok(a)
    }

    fn pred_and(&mut self) -> Result<Pred, ParseError> {
        let mut a = self.pred_not()?;
        while self.eat_sym("&&") {
            a = Pred::bin(BinOp::And, a, self.pred_not()?);
        }
        Ok(a)
    }

    fn pred_not(&mut self) -> Result<Pred, ParseError> {
        if self.eat_sym("!") {
            return Ok(Pred::not(self.pred_not()?));
        }
        self.pred_cmp()
    }

    fn pred_cmp(&mut self) -> Result<Pred, ParseError> {
        let a = self.pred_sum()?;
        let op = match self.peek() {
            Some(Tok::Sym("=" | "==")) => BinOp::Eq,
            Some(Tok::Sym("!=")) => BinOp::Ne,
            Some(Tok::Sym("<")) => BinOp::Lt,
            Some(Tok::Sym("<=")) => BinOp::Le,
            Some(Tok::Sym(">")) => BinOp::Gt,
            Some(Tok::Sym(">=")) => BinOp::Ge,
            _ => return Ok(a),
        };
        self.pos += 1;
        Ok(Pred::bin(op, a, self.pred_sum()?))
    }

    fn pred_sum(&mut self) -> Result<Pred, ParseError> {
        let mut a = self.pred_prod()?;
        loop {
            if self.eat_sym("+") {
                a = Pred::add(a, self.pred_prod()?);
            } else if self.eat_sym("-") {
                a = Pred::sub(a, self.pred_prod()?);
            } else {
                return Ok(a);
            }
        }
    }

    fn pred_prod(&mut self) -> Result<Pred, ParseError> {
        let mut a = self.pred_unary()?;
        while self.eat_sym("*") {
            a = Pred::mul(a, self.pred_unary()?);
        }
        Ok(a)
    }

    fn pred_unary(&mut self) -> Result<Pred, ParseError> {
        if self.eat_sym("-") {
            return Ok(match self.pred_unary()? {
                Pred::Int(n) => Pred::Int(-n),
                p => Pred::sub(Pred::Int(0), p),
            });
        }
        self.pred_app()
    }

    fn starts_pred_atom(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Ident(_) | Tok::Upper(_) | Tok::Int(_) | Tok::Kw("true" | "false") | Tok::Sym("("))
        )
    }

    fn pred_app(&mut self) -> Result<Pred, ParseError> {
        let head = match self.peek() {
            Some(Tok::Ident(x) | Tok::Upper(x)) => {
                let x = x.clone();
                self.pos += 1;
                x
            }
            _ => return self.pred_atom(),
        };
        let mut args = Vec::new();
        if self.eat_sym("(") {
            args = self.comma_list(")", |p| p.pred())?;
        }
        while self.starts_pred_atom() {
            args.push(self.pred_atom()?);
        }
        if args.is_empty() {
            Ok(Pred::var(head))
        } else {
            Ok(Pred::uapp(head, args))
        }
    }

    fn pred_atom(&mut self) -> Result<Pred, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(Pred::Int(n))
            }
            Some(Tok::Kw("true")) => {
                self.pos += 1;
                Ok(Pred::tt())
            }
            Some(Tok::Kw("false")) => {
                self.pos += 1;
                Ok(Pred::ff())
            }
            Some(Tok::Ident(x) | Tok::Upper(x)) => {
                self.pos += 1;
                if self.eat_sym("(") {
                    let args = self.comma_list(")", |p| p.pred())?;
                    return Ok(Pred::uapp(x, args));
                }
                Ok(Pred::var(x))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let p = self.pred()?;
                self.expect_sym(")")?;
                Ok(p)
            }
            _ => Err(self.unexpected("a predicate")),
        }
    }

    // ---------------------------------------------------------------- exprs

    fn expr(&mut self) -> Result<SExpr, ParseError> {
        self.binary_level(0)
    }

    fn binary_level(&mut self, level: usize) -> Result<SExpr, ParseError> {
        const LEVELS: &[&[&str]] = &[
            &["==="],
            &["?"],
            &["||"],
            &["&&"],
            &["==", "!=", "<", "<=", ">", ">="],
            &["+", "-"],
            &["*"],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let start = self.span();
        let mut a = self.binary_level(level + 1)?;
        loop {
            let Some(Tok::Sym(op)) = self.peek() else {
                return Ok(a);
            };
            if !LEVELS[level].contains(op) {
                return Ok(a);
            }
            let op_span = self.span();
            let op = op.to_string();
            self.pos += 1;
            let b = self.binary_level(level + 1)?;
            let span = self.from(start);
            a = SExpr::new(
                SExprKind::App(Box::new(SExpr::new(SExprKind::Var(op), op_span)), vec![a, b]),
                span,
            );
            if level == 4 {
                return Ok(a);
            }
        }
    }

    fn unary(&mut self) -> Result<SExpr, ParseError> {
        let start = self.span();
        if self.eat_sym("!") {
            let e = self.unary()?;
            let span = self.from(start);
            return Ok(SExpr::new(
                SExprKind::App(Box::new(SExpr::new(SExprKind::Var("!".into()), start)), vec![e]),
                span,
            ));
        }
        if self.eat_sym("-") {
            let e = self.unary()?;
            let span = self.from(start);
            if let SExprKind::Int(n) = e.kind {
                return Ok(SExpr::new(SExprKind::Int(-n), span));
            }
            let zero = SExpr::new(SExprKind::Int(0), start);
            return Ok(SExpr::new(
                SExprKind::App(Box::new(SExpr::new(SExprKind::Var("-".into()), start)), vec![zero, e]),
                span,
            ));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<SExpr, ParseError> {
        let start = self.span();
        let mut e = self.primary()?;
        while self.is_sym("(") {
            self.pos += 1;
            let args = self.comma_list(")", |p| p.expr())?;
            e = SExpr::new(SExprKind::App(Box::new(e), args), self.from(start));
        }
        Ok(e)
    }

    /// Is the `(` at the cursor the start of a lambda?
    fn lambda_ahead(&self) -> bool {
        let mut depth = 0usize;
        let mut k = self.pos;
        while k < self.toks.len() {
            match &self.toks[k].tok {
                Tok::Sym("(") => depth += 1,
                Tok::Sym(")") => {
                    depth -= 1;
                    if depth == 0 {
                        return matches!(self.toks.get(k + 1).map(|t| &t.tok), Some(Tok::Sym("=>")));
                    }
                }
                _ => {}
            }
            k += 1;
        }
        false
    }

    fn primary(&mut self) -> Result<SExpr, ParseError> {
        let start = self.span();
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(SExpr::new(SExprKind::Int(n), start))
            }
            Some(Tok::Kw("true")) => {
                self.pos += 1;
                Ok(SExpr::new(SExprKind::Bool(true), start))
            }
            Some(Tok::Kw("false")) => {
                self.pos += 1;
                Ok(SExpr::new(SExprKind::Bool(false), start))
            }
            Some(Tok::Ident(x) | Tok::Upper(x)) => {
                self.pos += 1;
                Ok(SExpr::new(SExprKind::Var(x), start))
            }
            Some(Tok::Kw("if")) => self.if_expr(),
            Some(Tok::Kw("switch")) => self.switch_expr(),
            Some(Tok::Sym("{")) => {
                self.pos += 1;
                self.block("}")
            }
            Some(Tok::Sym("(")) if self.lambda_ahead() => {
                self.pos += 1;
                let params = self.comma_list(")", |p| {
                    if p.eat_sym("_") {
                        Ok("_".to_string())
                    } else {
                        p.ident()
                    }
                })?;
                self.expect_sym("=>")?;
                let body = if self.is_sym("{") {
                    self.pos += 1;
                    self.block("}")?
                } else {
                    self.expr()?
                };
                Ok(SExpr::new(SExprKind::Lam(params, Box::new(body)), self.from(start)))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                if self.eat_sym(")") {
                    return Ok(SExpr::new(SExprKind::Unit, self.from(start)));
                }
                if let (Some(Tok::Sym(op)), Some(Tok::Sym(")"))) = (self.peek(), self.peek_at(1)) {
                    if OPERATOR_NAMES.contains(op) {
                        let op = op.to_string();
                        self.pos += 2;
                        return Ok(SExpr::new(SExprKind::Var(op), self.from(start)));
                    }
                }
                let e = self.expr()?;
                if self.eat_sym(":") {
                    let t = self.ty()?;
                    self.expect_sym(")")?;
                    return Ok(SExpr::new(SExprKind::Annot(Box::new(e), t), self.from(start)));
                }
                self.expect_sym(")")?;
                Ok(e)
            }
            _ => Err(self.unexpected("an expression")),
        }
    }

    fn branch(&mut self) -> Result<SExpr, ParseError> {
        if self.eat_sym("{") {
            self.block("}")
        } else {
            self.expr()
        }
    }

    fn if_expr(&mut self) -> Result<SExpr, ParseError> {
        let start = self.span();
        self.pos += 1;
        self.expect_sym("(")?;
        let c = self.expr()?;
        self.expect_sym(")")?;
        let a = self.branch()?;
        if !self.eat_kw("else") {
            return Err(self.unexpected("`else`"));
        }
        let b = if self.is_kw("if") { self.if_expr()? } else { self.branch()? };
        Ok(SExpr::new(
            SExprKind::If(Box::new(c), Box::new(a), Box::new(b)),
            self.from(start),
        ))
    }

    fn switch_expr(&mut self) -> Result<SExpr, ParseError> {
        let start = self.span();
        self.pos += 1;
        self.expect_sym("(")?;
        let scrut = self.expr()?;
        self.expect_sym(")")?;
        self.expect_sym("{")?;
        let mut alts = Vec::new();
        let mut first = !self.is_sym("|") && !self.is_sym("}");
        while first || self.eat_sym("|") {
            first = false;
            let astart = self.span();
            let pat = self.pattern()?;
            self.expect_sym("=>")?;
            let body = self.alt_body()?;
            alts.push(SAlt {
                pat,
                body,
                span: self.from(astart),
            });
        }
        self.expect_sym("}")?;
        if alts.is_empty() {
            return Err(ParseError::new(self.from(start), "switch without alternatives"));
        }
        Ok(SExpr::new(
            SExprKind::Switch(Box::new(scrut), alts),
            self.from(start),
        ))
    }

    fn pattern(&mut self) -> Result<Pattern, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Upper(c)) => {
                self.pos += 1;
                let binds = if self.eat_sym("(") {
                    self.comma_list(")", |p| {
                        if p.eat_sym("_") {
                            return Ok("_".to_string());
                        }
                        match p.peek() {
                            Some(Tok::Ident(_)) => p.ident(),
                            _ => Err(ParseError::new(
                                p.span(),
                                "nested patterns are not supported; bind a variable instead",
                            )),
                        }
                    })?
                } else {
                    Vec::new()
                };
                Ok(Pattern::Ctor(c, binds))
            }
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(Pattern::Int(n))
            }
            Some(Tok::Sym("-")) if matches!(self.peek_at(1), Some(Tok::Int(_))) => {
                let Some(Tok::Int(n)) = self.peek_at(1).cloned() else { unreachable!() };
                self.pos += 2;
                Ok(Pattern::Int(-n))
            }
            Some(Tok::Ident(x)) => {
                self.pos += 1;
                Ok(Pattern::Var(x))
            }
            Some(Tok::Sym("_")) => {
                self.pos += 1;
                Ok(Pattern::Var("_".into()))
            }
            _ => Err(self.unexpected("a pattern")),
        }
    }

    /// An alternative's body runs until the next `|` or the closing `}`.
    fn alt_body(&mut self) -> Result<SExpr, ParseError> {
        if self.is_sym("{") {
            let save = self.pos;
            self.pos += 1;
            let b = self.block("}")?;
            if self.is_sym("|") || self.is_sym("}") {
                return Ok(b);
            }
            self.pos = save;
        }
        self.block_until(&["|", "}"])
    }

    /// Statements then a final expression, closed by `close`.
    fn block(&mut self, close: &'static str) -> Result<SExpr, ParseError> {
        let e = self.block_until(&[close])?;
        self.expect_sym(close)?;
        Ok(e)
    }

    fn block_until(&mut self, stops: &[&str]) -> Result<SExpr, ParseError> {
        let start = self.span();
        let mut stmts = Vec::new();
        loop {
            let at_stop = |p: &Self| stops.iter().any(|s| p.is_sym(s)) || p.at_end();
            if at_stop(self) {
                return Err(ParseError::new(self.span(), "block must end with an expression"));
            }
            let s = self.stmt()?;
            let had_semi = self.eat_sym(";");
            match s {
                Stmt::Expr(e) if !had_semi || at_stop(self) => {
                    if stmts.is_empty() {
                        return Ok(e);
                    }
                    return Ok(SExpr::new(SExprKind::Block(stmts, Box::new(e)), self.from(start)));
                }
                s @ (Stmt::Val { .. } | Stmt::Let { .. }) => {
                    stmts.push(s);
                    if !had_semi && !at_stop(self) && !self.is_kw("let") && !self.is_kw("val") && !self.is_kw("def") {
                        return Err(self.unexpected("`;`"));
                    }
                }
                s => stmts.push(s),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn val_with_dependent_function_type() {
        let p = parse("val abs : x:int => int[v|0 <= v]").unwrap();
        let Decl::Stmt(Stmt::Val { name, ty, .. }) = &p.decls[0] else {
            panic!("expected a val")
        };
        assert_eq!(name, "abs");
        let STypeKind::Fun(Some(x), _, out) = &ty.kind else {
            panic!("expected a function type")
        };
        assert_eq!(x, "x");
        assert!(matches!(
            &out.kind,
            STypeKind::Base(SBase::Named(n, _, _), SRefine::Known { v: Some(v), .. }) if n == "int" && v == "v"
        ));
    }

    #[test]
    fn alias_and_malformed_input() {
        let p = parse("type nat = int[v|0 <= v]").unwrap();
        assert!(matches!(&p.decls[0], Decl::Alias { name, .. } if name == "nat"));
        assert!(parse("let x = (").is_err());
    }

    #[test]
    fn datatype_with_measures_and_rvars() {
        let src = "
            type list('a)(p : 'a => 'a => bool) =
              | Nil => [v|len(v) = 0]
              | Cons(x:'a, xs:list('a[v|p x v])((y, z) => p y z)) => [v|len(v) = 1 + len(xs)]";
        let p = parse(src).unwrap();
        let Decl::Data { ctors, rparams, .. } = &p.decls[0] else {
            panic!("expected a datatype")
        };
        assert_eq!(rparams.len(), 1);
        assert_eq!(ctors.len(), 2);
        assert_eq!(ctors[1].fields.len(), 2);
    }

    #[test]
    fn named_binder_shorthand_refines_the_binder() {
        let t = parse_type("j:nat[i = j] => [sum(i) = sum(j)]").unwrap();
        let STypeKind::Fun(_, input, _) = &t.kind else { panic!() };
        assert!(matches!(&input.kind, STypeKind::Base(_, SRefine::Known { v: Some(j), .. }) if j == "j"));
    }

    #[test]
    fn blocks_lambdas_and_switches() {
        let src = "
            let rec insert = (x, ys) => {
              switch (ys) {
                | ONil => let tl = ONil; OCons(x, tl)
                | OCons(y, ys') =>
                    if (x <= y) { let tl = OCons(y, ys'); OCons(x, tl) }
                    else { let tl = insert(x, ys'); OCons(y, tl) }
              }
            }";
        let p = parse(src).unwrap();
        assert_eq!(p.decls.len(), 1);
    }

    #[test]
    fn proof_chains_are_left_nested() {
        let e = parse_expr("a === b ? c === d").unwrap();
        let SExprKind::App(f, args) = &e.kind else { panic!() };
        assert_eq!(f.kind, SExprKind::Var("===".into()));
        assert!(matches!(&args[0].kind, SExprKind::App(g, _) if g.kind == SExprKind::Var("===".into())));
    }

    #[test]
    fn nested_patterns_are_rejected() {
        assert!(parse("let f = (x) => { switch (x) { | Cons(Cons(a, b), c) => 0 } }").is_err());
    }

    #[test]
    fn juxtaposed_predicate_application() {
        assert_eq!(
            parse_pred("p x v && sum 3 = 6").unwrap().to_string(),
            "p(x, v) && sum(3) = 6"
        );
    }
}
