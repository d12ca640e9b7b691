//! Expression language: a small DSL over the variables `x` and `y`.
//!
//! Expressions are parsed once and evaluated generically over any
//! [`Scalar`], so the same tree runs on plain reals and on hyper-dual
//! numbers.

mod ast;
mod eval;
mod parse;
mod print;

pub use ast::{BinOp, CmpOp, Condition, Expr, UnaryFn, Var};
pub use eval::{eval, eval_tracked, eval_x, eval_xy, EvalEnv, EvalError, KinkTracker, Scalar};
pub use parse::{parse, parse_x, parse_xy, ParseError};
