//! Tokens for `.re` source files.

use std::fmt;

use crate::logic::Span;

use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    /// Lowercase identifier; may carry trailing primes (`xs'`).
    Ident(String),
    /// Constructor or other capitalised name.
    Upper(String),
    /// Type variable such as `'a`.
    TyVar(String),
    Int(i64),
    Kw(&'static str),
    Sym(&'static str),
}

const KEYWORDS: &[&str] = &[
    "type", "measure", "val", "let", "rec", "def", "if", "else", "switch", "forall", "true", "false",
];

/// Longest first, so that prefixes lose.
const SYMBOLS: &[&str] = &[
    "===", "<=>", "==>", "=>", "->", "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", "[", "]",
    ",", ";", ":", "|", "=", "<", ">", "+", "-", "*", "!", "?", "/", "_", ".",
];

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Upper(s) | Tok::TyVar(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Kw(s) | Tok::Sym(s) => write!(f, "`{s}`"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if src[i..].starts_with("//") {
            i = src[i..].find('\n').map_or(bytes.len(), |n| i + n);
            continue;
        }
        if src[i..].starts_with("/*") {
            let Some(n) = src[i + 2..].find("*/") else {
                return Err(ParseError::new(Span::new(i, bytes.len()), "unterminated comment"));
            };
            i += n + 4;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = src[start..i]
                .parse()
                .map_err(|_| ParseError::new(Span::new(start, i), "integer literal out of range"))?;
            out.push(Token {
                tok: Tok::Int(n),
                span: Span::new(start, i),
            });
            continue;
        }
        if c == '\'' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_alphabetic()) {
            i += 1;
            while i < bytes.len() && ident_char(bytes[i] as char) {
                i += 1;
            }
            out.push(Token {
                tok: Tok::TyVar(src[start + 1..i].to_string()),
                span: Span::new(start, i),
            });
            continue;
        }
        if c.is_ascii_alphabetic() || (c == '_' && bytes.get(i + 1).is_some_and(|b| ident_char(*b as char))) {
            while i < bytes.len() && ident_char(bytes[i] as char) {
                i += 1;
            }
            let word = &src[start..i];
            let tok = if let Some(k) = KEYWORDS.iter().find(|k| **k == word) {
                Tok::Kw(k)
            } else if c.is_ascii_uppercase() {
                Tok::Upper(word.to_string())
            } else {
                Tok::Ident(word.to_string())
            };
            out.push(Token {
                tok,
                span: Span::new(start, i),
            });
            continue;
        }
        let Some(sym) = SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) else {
            let ch = src[i..].chars().next().expect("in bounds");
            return Err(ParseError::new(
                Span::new(i, i + ch.len_utf8()),
                format!("unexpected character `{ch}`"),
            ));
        };
        i += sym.len();
        out.push(Token {
            tok: Tok::Sym(sym),
            span: Span::new(start, i),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn primes_tyvars_and_operators() {
        assert_eq!(
            toks("xs' 'a <=> === Cons _ _x // c\n/* b */ 12"),
            vec![
                Tok::Ident("xs'".into()),
                Tok::TyVar("a".into()),
                Tok::Sym("<=>"),
                Tok::Sym("==="),
                Tok::Upper("Cons".into()),
                Tok::Sym("_"),
                Tok::Ident("_x".into()),
                Tok::Int(12),
            ]
        );
    }

    #[test]
    fn bad_character_is_reported() {
        assert!(lex("let x = #").is_err());
    }
}
