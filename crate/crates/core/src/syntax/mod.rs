//! Surface language: parsing, ANF lowering and elaboration.
//!
//! [`parse`] reads source text into a [`SurfaceProgram`]; [`lower`]
//! resolves names and types and produces A-normal-form [`CoreDecl`]s;
//! [`elaborate`] inserts type applications, refinement applications and
//! holed annotations using Hindley–Milner inference over erased types.

pub mod ast;
pub mod core;
mod elab;
mod lexer;
mod lower;
mod parser;

use thiserror::Error;

use crate::logic::Span;

pub use ast::SurfaceProgram;
pub use elab::{elaborate, erase, ElabError, HTy};
pub use lower::{anf_expr, lower, Program};
pub use parser::{parse, parse_expr, parse_pred, parse_type};

/// Embedded prelude loaded before user code.
pub const PRELUDE: &str = include_str!("prelude.re");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

impl ParseError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        ParseError {
            span,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct LowerError {
    pub span: Span,
    pub message: String,
}

impl LowerError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        LowerError {
            span,
            message: message.into(),
        }
    }
}

/// Any failure before constraint generation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Lower(#[from] LowerError),
    #[error("{0}")]
    Elab(#[from] ElabError),
    #[error("in prelude: {0}")]
    Prelude(Box<FrontError>),
}

impl FrontError {
    pub fn span(&self) -> Option<Span> {
        match self {
            FrontError::Parse(e) => Some(e.span),
            FrontError::Lower(e) => Some(e.span),
            FrontError::Elab(e) => Some(e.span()),
            FrontError::Prelude(_) => None,
        }
    }
}

/// Parse, lower and elaborate `src` after `prelude`.
pub fn frontend(prelude: &str, src: &str) -> Result<Program, FrontError> {
    let pre = parse(prelude).map_err(|e| FrontError::Prelude(Box::new(e.into())))?;
    let user = parse(src)?;
    let prog = lower(&pre, &user)?;
    Ok(elaborate(prog)?)
}
