//! Built-in operators and their refinement types.

use crate::logic::{BinOp, Pred};

use super::{BaseTy, Kind, Type, NU};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrimOp {
    Add,
    Sub,
    Mul,
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
    Ne,
    And,
    Or,
    Not,
}

impl PrimOp {
    pub fn arity(self) -> usize {
        match self {
            PrimOp::Not => 1,
            _ => 2,
        }
    }

    fn binop(self) -> Option<BinOp> {
        Some(match self {
            PrimOp::Add => BinOp::Add,
            PrimOp::Sub => BinOp::Sub,
            PrimOp::Mul => BinOp::Mul,
            PrimOp::Le => BinOp::Le,
            PrimOp::Ge => BinOp::Ge,
            PrimOp::Lt => BinOp::Lt,
            PrimOp::Gt => BinOp::Gt,
            PrimOp::Eq => BinOp::Eq,
            PrimOp::Ne => BinOp::Ne,
            PrimOp::And => BinOp::And,
            PrimOp::Or => BinOp::Or,
            PrimOp::Not => return None,
        })
    }

    /// The operator's meaning applied to logic arguments.
    pub fn apply(self, args: &[Pred]) -> Pred {
        match self.binop() {
            Some(op) => Pred::bin(op, args[0].clone(), args[1].clone()),
            None => Pred::not(args[0].clone()),
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            PrimOp::Le | PrimOp::Ge | PrimOp::Lt | PrimOp::Gt | PrimOp::Eq | PrimOp::Ne
        )
    }
}

/// Resolve an operator or its word alias.
pub fn prim_op(name: &str) -> Option<PrimOp> {
    Some(match name {
        "+" | "add" => PrimOp::Add,
        "-" | "sub" => PrimOp::Sub,
        "*" | "mul" => PrimOp::Mul,
        "<=" | "leq" => PrimOp::Le,
        ">=" | "geq" => PrimOp::Ge,
        "<" | "lt" => PrimOp::Lt,
        ">" | "gt" => PrimOp::Gt,
        "==" | "eq" => PrimOp::Eq,
        "!=" | "neq" => PrimOp::Ne,
        "&&" => PrimOp::And,
        "||" => PrimOp::Or,
        "!" => PrimOp::Not,
        _ => return None,
    })
}

/// Singleton-style type of a primitive; comparisons are polymorphic over a base type.
pub fn prim_type(op: PrimOp) -> Type {
    let x = Pred::var("x");
    let y = Pred::var("y");
    let vv = Pred::var(NU);
    match op {
        PrimOp::Add | PrimOp::Sub | PrimOp::Mul => Type::fun(
            "x",
            Type::int(),
            Type::fun("y", Type::int(), Type::int_ref(Pred::eq(vv, op.apply(&[x, y])))),
        ),
        PrimOp::And | PrimOp::Or => Type::fun(
            "x",
            Type::bool(),
            Type::fun(
                "y",
                Type::bool(),
                Type::base(BaseTy::Bool, NU, Pred::iff(vv, op.apply(&[x, y]))),
            ),
        ),
        PrimOp::Not => Type::fun(
            "x",
            Type::bool(),
            Type::base(BaseTy::Bool, NU, Pred::iff(vv, op.apply(&[x]))),
        ),
        _ => {
            let a = || Type::base(BaseTy::TyVar("a".into()), NU, Pred::tt());
            Type::all_ty(
                "a",
                Kind::Base,
                Type::fun(
                    "x",
                    a(),
                    Type::fun(
                        "y",
                        a(),
                        Type::base(BaseTy::Bool, NU, Pred::iff(vv, op.apply(&[x, y]))),
                    ),
                ),
            )
        }
    }
}
