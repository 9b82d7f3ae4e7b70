//! S-expression format for Horn constraints and qualifiers.
//!
//! ```text
//! (kvar k ((v Int) (x Int)))
//! (fun len ((Data list)) Int)
//! (qualif q ((v Int) (z Int)) (<= z v))
//! (forall ((x Int) (<= 0 x)) (and (head (kapp k x x)) (head (< 0 x))))
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::logic::{BinOp, Cstr, KVarDecl, Name, Pred, Sort, Span, SymbolTable};

use super::Qualifier;
use crate::smt::AdtDecl;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct TextError {
    pub line: usize,
    pub message: String,
}

/// A parsed Horn file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HornFile {
    pub datas: Vec<AdtDecl>,
    pub kvars: Vec<KVarDecl>,
    pub funs: SymbolTable,
    pub quals: Vec<Qualifier>,
    pub cstr: Cstr,
}

impl Default for Cstr {
    fn default() -> Self {
        Cstr::tt()
    }
}

#[derive(Clone, Debug)]
enum Sexp {
    Atom { text: String, quoted: bool, line: usize },
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn line(&self) -> usize {
        match self {
            Sexp::Atom { line, .. } | Sexp::List(_, line) => *line,
        }
    }

    fn sym(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            _ => None,
        }
    }

    fn keyword(&self) -> Option<&str> {
        match self {
            Sexp::Atom {
                text,
                quoted: false,
                ..
            } => Some(text),
            _ => None,
        }
    }
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, TextError> {
    Err(TextError {
        line,
        message: message.into(),
    })
}

fn read_all(src: &str) -> Result<Vec<Sexp>, TextError> {
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut stack: Vec<(Vec<Sexp>, usize)> = vec![(Vec::new(), 1)];
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            ';' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                stack.push((Vec::new(), line));
                i += 1;
            }
            ')' => {
                let (items, l) = stack.pop().expect("stack holds the top level");
                let Some(parent) = stack.last_mut() else {
                    return err(line, "unbalanced `)`");
                };
                parent.0.push(Sexp::List(items, l));
                i += 1;
            }
            '|' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '|' {
                    j += 1;
                }
                if j == chars.len() {
                    return err(line, "unterminated `|` symbol");
                }
                let text: String = chars[start..j].iter().collect();
                stack.last_mut().expect("nonempty").0.push(Sexp::Atom {
                    text,
                    quoted: true,
                    line,
                });
                i = j + 1;
            }
            _ => {
                let start = i;
                while i < chars.len()
                    && !chars[i].is_whitespace()
                    && !matches!(chars[i], '(' | ')' | '|' | ';')
                {
                    i += 1;
                }
                stack.last_mut().expect("nonempty").0.push(Sexp::Atom {
                    text: chars[start..i].iter().collect(),
                    quoted: false,
                    line,
                });
            }
        }
        if stack.is_empty() {
            return err(line, "unbalanced `)`");
        }
    }
    if stack.len() != 1 {
        return err(line, "unclosed `(`");
    }
    Ok(stack.pop().expect("top level").0)
}

fn parse_sort(s: &Sexp) -> Result<Sort, TextError> {
    match s {
        Sexp::Atom { text, .. } => match text.as_str() {
            "Int" => Ok(Sort::Int),
            "Bool" => Ok(Sort::Bool),
            other => err(s.line(), format!("unknown sort `{other}`")),
        },
        Sexp::List(items, line) => match items.as_slice() {
            [k, n] if k.keyword() == Some("Data") => Ok(Sort::Data(name(n)?)),
            [k, n] if k.keyword() == Some("Var") => Ok(Sort::Var(name(n)?)),
            [k, Sexp::List(args, _), r] if k.keyword() == Some("Func") => Ok(Sort::func(
                args.iter().map(parse_sort).collect::<Result<_, _>>()?,
                parse_sort(r)?,
            )),
            _ => err(*line, "malformed sort"),
        },
    }
}

fn name(s: &Sexp) -> Result<Name, TextError> {
    s.sym()
        .map(str::to_string)
        .ok_or_else(|| TextError {
            line: s.line(),
            message: "expected a symbol".into(),
        })
}

fn params(s: &Sexp) -> Result<Vec<(Name, Sort)>, TextError> {
    let Sexp::List(items, _) = s else {
        return err(s.line(), "expected a parameter list");
    };
    items
        .iter()
        .map(|p| match p {
            Sexp::List(xs, _) if xs.len() == 2 => Ok((name(&xs[0])?, parse_sort(&xs[1])?)),
            _ => err(p.line(), "expected `(name sort)`"),
        })
        .collect()
}

fn fold_bin(op: BinOp, args: Vec<Pred>, line: usize) -> Result<Pred, TextError> {
    let mut it = args.into_iter().rev();
    let Some(last) = it.next() else {
        return err(line, "operator needs arguments");
    };
    Ok(it.fold(last, |acc, p| Pred::bin(op, p, acc)))
}

fn fold_left(op: BinOp, args: Vec<Pred>, line: usize) -> Result<Pred, TextError> {
    let mut it = args.into_iter();
    let Some(first) = it.next() else {
        return err(line, "operator needs arguments");
    };
    Ok(it.fold(first, |acc, p| Pred::bin(op, acc, p)))
}

fn parse_pred(s: &Sexp) -> Result<Pred, TextError> {
    match s {
        Sexp::Atom { text, quoted, line } => {
            if !quoted {
                if text == "true" {
                    return Ok(Pred::tt());
                }
                if text == "false" {
                    return Ok(Pred::ff());
                }
                if let Ok(n) = text.parse::<i64>() {
                    return Ok(Pred::Int(n));
                }
            }
            if text.is_empty() {
                return err(*line, "empty symbol");
            }
            Ok(Pred::var(text.clone()))
        }
        Sexp::List(items, line) => {
            let line = *line;
            let Some((head, rest)) = items.split_first() else {
                return err(line, "empty predicate");
            };
            if let Some(k) = head.keyword() {
                if k == "kapp" {
                    let (kv, args) = rest.split_first().ok_or_else(|| TextError {
                        line,
                        message: "kapp needs a variable".into(),
                    })?;
                    return Ok(Pred::KApp(
                        name(kv)?,
                        args.iter().map(name).collect::<Result<_, _>>()?,
                    ));
                }
                let args = || rest.iter().map(parse_pred).collect::<Result<Vec<_>, _>>();
                let binop = match k {
                    "+" => Some(BinOp::Add),
                    "*" => Some(BinOp::Mul),
                    "=" => Some(BinOp::Eq),
                    "distinct" => Some(BinOp::Ne),
                    "<" => Some(BinOp::Lt),
                    "<=" => Some(BinOp::Le),
                    ">" => Some(BinOp::Gt),
                    ">=" => Some(BinOp::Ge),
                    "=>" => Some(BinOp::Imp),
                    "iff" => Some(BinOp::Iff),
                    _ => None,
                };
                if let Some(op) = binop {
                    let a = args()?;
                    if a.len() != 2 {
                        return err(line, format!("`{k}` takes two arguments"));
                    }
                    return fold_left(op, a, line);
                }
                match k {
                    "-" => {
                        let a = args()?;
                        return match a.as_slice() {
                            [Pred::Int(n)] => Ok(Pred::Int(-n)),
                            [p] => Ok(Pred::sub(Pred::Int(0), p.clone())),
                            _ => fold_left(BinOp::Sub, a, line),
                        };
                    }
                    "and" => {
                        let a = args()?;
                        return if a.is_empty() { Ok(Pred::tt()) } else { fold_bin(BinOp::And, a, line) };
                    }
                    "or" => {
                        let a = args()?;
                        return if a.is_empty() { Ok(Pred::ff()) } else { fold_bin(BinOp::Or, a, line) };
                    }
                    "not" => {
                        let a = args()?;
                        return match a.as_slice() {
                            [p] => Ok(Pred::not(p.clone())),
                            _ => err(line, "`not` takes one argument"),
                        };
                    }
                    "ite" => {
                        let a = args()?;
                        return match a.as_slice() {
                            [c, t, e] => Ok(Pred::ite(c.clone(), t.clone(), e.clone())),
                            _ => err(line, "`ite` takes three arguments"),
                        };
                    }
                    _ => {}
                }
            }
            let f = name(head)?;
            Ok(Pred::uapp(
                f,
                rest.iter().map(parse_pred).collect::<Result<_, _>>()?,
            ))
        }
    }
}

fn parse_cstr(s: &Sexp) -> Result<Cstr, TextError> {
    let Sexp::List(items, line) = s else {
        return err(s.line(), "expected a constraint");
    };
    let line = *line;
    match items.split_first() {
        Some((k, rest)) if k.keyword() == Some("and") => Ok(Cstr::And(
            rest.iter().map(parse_cstr).collect::<Result<_, _>>()?,
        )),
        Some((k, [p])) if k.keyword() == Some("head") => {
            Ok(Cstr::Head(parse_pred(p)?, Span::default()))
        }
        Some((k, [Sexp::List(b, bl), body])) if k.keyword() == Some("forall") => {
            let [Sexp::List(xs, _), hyp] = b.as_slice() else {
                return err(*bl, "expected `((x sort) pred)`");
            };
            let [x, sort] = xs.as_slice() else {
                return err(*bl, "expected `(x sort)`");
            };
            Ok(Cstr::All {
                x: name(x)?,
                sort: parse_sort(sort)?,
                hyp: parse_pred(hyp)?,
                body: Box::new(parse_cstr(body)?),
            })
        }
        _ => err(line, "expected `forall`, `and` or `head`"),
    }
}

fn parse_qualif(items: &[Sexp], line: usize) -> Result<Qualifier, TextError> {
    match items {
        [_, n, ps, body] => {
            let params = params(ps)?;
            if params.is_empty() {
                return err(line, "qualifier needs a value parameter");
            }
            Ok(Qualifier {
                name: name(n)?,
                params,
                body: parse_pred(body)?,
            })
        }
        _ => err(line, "expected `(qualif name ((v sort) ...) pred)`"),
    }
}

/// Parse a qualifier file.
pub fn parse_qualifiers(src: &str) -> Result<Vec<Qualifier>, TextError> {
    read_all(src)?
        .iter()
        .map(|s| match s {
            Sexp::List(items, line) if items.first().and_then(Sexp::keyword) == Some("qualif") => {
                parse_qualif(items, *line)
            }
            _ => err(s.line(), "expected a `qualif` form"),
        })
        .collect()
}

/// Parse a Horn file; several constraint forms are conjoined.
pub fn parse_horn(src: &str) -> Result<HornFile, TextError> {
    let mut file = HornFile::default();
    let mut cs = Vec::new();
    let mut declared: BTreeMap<Name, ()> = BTreeMap::new();
    for s in read_all(src)? {
        let Sexp::List(items, line) = &s else {
            return err(s.line(), "expected a form");
        };
        match items.first().and_then(Sexp::keyword) {
            Some("kvar") => match items.as_slice() {
                [_, k, ps] => {
                    let k = name(k)?;
                    declared.insert(k.clone(), ());
                    file.kvars.push(KVarDecl {
                        name: k,
                        params: params(ps)?,
                    });
                }
                _ => return err(*line, "expected `(kvar k ((x sort) ...))`"),
            },
            Some("data") => match items.as_slice() {
                [_, d, Sexp::List(ctors, _)] => {
                    let mut out = Vec::new();
                    for c in ctors {
                        let Sexp::List(parts, l) = c else {
                            return err(c.line(), "expected `(Ctor sort ...)`");
                        };
                        let Some((c, fields)) = parts.split_first() else {
                            return err(*l, "empty constructor");
                        };
                        out.push((name(c)?, fields.iter().map(parse_sort).collect::<Result<_, _>>()?));
                    }
                    file.datas.push(AdtDecl {
                        name: name(d)?,
                        ctors: out,
                    });
                }
                _ => return err(*line, "expected `(data name ((Ctor sort ...) ...))`"),
            },
            Some("fun") => match items.as_slice() {
                [_, f, Sexp::List(args, _), res] => {
                    let sort = Sort::func(
                        args.iter().map(parse_sort).collect::<Result<_, _>>()?,
                        parse_sort(res)?,
                    );
                    file.funs.declare(name(f)?, sort).map_err(|e| TextError {
                        line: *line,
                        message: e.to_string(),
                    })?;
                }
                _ => return err(*line, "expected `(fun f (sorts) sort)`"),
            },
            Some("qualif") => file.quals.push(parse_qualif(items, *line)?),
            Some("constraint") => match items.as_slice() {
                [_, c] => cs.push(parse_cstr(c)?),
                _ => return err(*line, "expected `(constraint c)`"),
            },
            _ => cs.push(parse_cstr(&s)?),
        }
    }
    file.cstr = match cs.len() {
        1 => cs.pop().expect("one constraint"),
        _ => Cstr::And(cs),
    };
    infer_kvars(&file.cstr, &mut file.kvars);
    Ok(file)
}

/// Declare undeclared Horn variables from their first application.
fn infer_kvars(c: &Cstr, kvars: &mut Vec<KVarDecl>) {
    fn go(c: &Cstr, scope: &mut Vec<(Name, Sort)>, kvars: &mut Vec<KVarDecl>) {
        let see = |p: &Pred, scope: &[(Name, Sort)], kvars: &mut Vec<KVarDecl>| {
            p.visit(&mut |q| {
                if let Pred::KApp(k, args) = q {
                    if kvars.iter().any(|d| &d.name == k) {
                        return;
                    }
                    let mut params: Vec<(Name, Sort)> = Vec::new();
                    for (i, a) in args.iter().enumerate() {
                        let s = scope
                            .iter()
                            .rev()
                            .find(|(x, _)| x == a)
                            .map(|(_, s)| s.clone())
                            .unwrap_or(Sort::Int);
                        let mut p = a.clone();
                        if params.iter().any(|(x, _)| *x == p) {
                            p = format!("{a}#{i}");
                        }
                        params.push((p, s));
                    }
                    kvars.push(KVarDecl {
                        name: k.clone(),
                        params,
                    });
                }
            })
        };
        match c {
            Cstr::Head(p, _) => see(p, scope, kvars),
            Cstr::And(cs) => cs.iter().for_each(|c| go(c, scope, kvars)),
            Cstr::All { x, sort, hyp, body } => {
                scope.push((x.clone(), sort.clone()));
                see(hyp, scope, kvars);
                go(body, scope, kvars);
                scope.pop();
            }
        }
    }
    go(c, &mut Vec::new(), kvars);
}

const KEYWORDS: &[&str] = &[
    "and", "or", "not", "ite", "kapp", "iff", "distinct", "head", "forall", "true", "false", "+", "-", "*",
    "=", "<", "<=", ">", ">=", "=>",
];

fn sym(s: &str) -> String {
    let plain = !s.is_empty()
        && s.parse::<i64>().is_err()
        && !KEYWORDS.contains(&s)
        && s.chars()
            .all(|c| !c.is_whitespace() && !matches!(c, '(' | ')' | '|' | ';'));
    if plain {
        s.to_string()
    } else {
        format!("|{s}|")
    }
}

fn print_sort(s: &Sort) -> String {
    match s {
        Sort::Int => "Int".into(),
        Sort::Bool => "Bool".into(),
        Sort::Data(n) => format!("(Data {})", sym(n)),
        Sort::Var(a) => format!("(Var {})", sym(a)),
        Sort::Func(args, r) => {
            let a: Vec<String> = args.iter().map(print_sort).collect();
            format!("(Func ({}) {})", a.join(" "), print_sort(r))
        }
    }
}

/// Print a predicate in the s-expression syntax.
pub fn print_pred(p: &Pred) -> String {
    match p {
        Pred::Var(x) => sym(x),
        Pred::Bool(b) => b.to_string(),
        Pred::Int(n) if *n < 0 => format!("(- {})", n.unsigned_abs()),
        Pred::Int(n) => n.to_string(),
        Pred::Bin(op, a, b) => {
            let k = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Eq => "=",
                BinOp::Ne => "distinct",
                BinOp::Lt => "<",
                BinOp::Le => "<=",
                BinOp::Gt => ">",
                BinOp::Ge => ">=",
                BinOp::And => "and",
                BinOp::Or => "or",
                BinOp::Imp => "=>",
                BinOp::Iff => "iff",
            };
            format!("({k} {} {})", print_pred(a), print_pred(b))
        }
        Pred::Not(a) => format!("(not {})", print_pred(a)),
        Pred::Ite(c, a, b) => format!("(ite {} {} {})", print_pred(c), print_pred(a), print_pred(b)),
        Pred::UApp(f, args) => {
            let mut s = format!("(|{f}|");
            for a in args {
                s.push(' ');
                s.push_str(&print_pred(a));
            }
            s.push(')');
            s
        }
        Pred::KApp(k, args) => {
            let mut s = format!("(kapp {}", sym(k));
            for a in args {
                s.push(' ');
                s.push_str(&sym(a));
            }
            s.push(')');
            s
        }
    }
}

fn print_cstr(c: &Cstr, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    match c {
        Cstr::Head(p, _) => {
            let _ = writeln!(out, "{pad}(head {})", print_pred(p));
        }
        Cstr::And(cs) => {
            let _ = writeln!(out, "{pad}(and");
            for c in cs {
                print_cstr(c, indent + 2, out);
            }
            let _ = writeln!(out, "{pad})");
        }
        Cstr::All { x, sort, hyp, body } => {
            let _ = writeln!(
                out,
                "{pad}(forall (({} {}) {})",
                sym(x),
                print_sort(sort),
                print_pred(hyp)
            );
            print_cstr(body, indent + 2, out);
            let _ = writeln!(out, "{pad})");
        }
    }
}

fn print_params(ps: &[(Name, Sort)]) -> String {
    let items: Vec<String> = ps
        .iter()
        .map(|(x, s)| format!("({} {})", sym(x), print_sort(s)))
        .collect();
    format!("({})", items.join(" "))
}

pub fn print_qualifier(q: &Qualifier) -> String {
    format!(
        "(qualif {} {} {})",
        sym(&q.name),
        print_params(&q.params),
        print_pred(&q.body)
    )
}

/// Print a Horn file that [`parse_horn`] reads back.
pub fn print_horn(file: &HornFile) -> String {
    let mut out = String::new();
    for d in &file.datas {
        let cs: Vec<String> = d
            .ctors
            .iter()
            .map(|(c, fs)| {
                let mut parts = vec![sym(c)];
                parts.extend(fs.iter().map(print_sort));
                format!("({})", parts.join(" "))
            })
            .collect();
        let _ = writeln!(out, "(data {} ({}))", sym(&d.name), cs.join(" "));
    }
    for (f, s) in file.funs.iter() {
        if let Sort::Func(args, r) = s {
            let a: Vec<String> = args.iter().map(print_sort).collect();
            let _ = writeln!(out, "(fun {} ({}) {})", sym(f), a.join(" "), print_sort(r));
        }
    }
    for k in &file.kvars {
        let _ = writeln!(out, "(kvar {} {})", sym(&k.name), print_params(&k.params));
    }
    for q in &file.quals {
        let _ = writeln!(out, "{}", print_qualifier(q));
    }
    out.push_str("(constraint\n");
    print_cstr(&file.cstr, 2, &mut out);
    out.push_str(")\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_small_file() {
        let src = "
            (kvar k ((v Int) (x Int)))
            (qualif q ((v Int) (z Int)) (<= z v))
            (forall ((x Int) true)
              (and (forall ((v Int) (= v (- 3))) (head (kapp k v x)))
                   (forall ((y Int) (kapp k y x)) (head (<= x y)))))";
        let f = parse_horn(src).unwrap();
        assert_eq!(f.kvars.len(), 1);
        assert_eq!(f.quals.len(), 1);
        let again = parse_horn(&print_horn(&f)).unwrap();
        assert_eq!(again, f);
    }

    #[test]
    fn data_declarations_round_trip() {
        let src = "(data list ((Nil) (Cons Int (Data list))))\n(head true)";
        let f = parse_horn(src).unwrap();
        assert_eq!(f.datas[0].ctors[1], ("Cons".into(), vec![Sort::Int, Sort::Data("list".into())]));
        assert_eq!(parse_horn(&print_horn(&f)).unwrap(), f);
    }

    #[test]
    fn undeclared_kvars_take_names_from_first_use() {
        let f = parse_horn("(forall ((a Int) true) (head (kapp k a a)))").unwrap();
        assert_eq!(
            f.kvars[0].params,
            vec![("a".into(), Sort::Int), ("a#1".into(), Sort::Int)]
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_horn("\n\n(head (kapp))").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(parse_horn("(head").is_err());
        assert!(parse_horn("").unwrap().cstr.is_trivial());
    }
}
