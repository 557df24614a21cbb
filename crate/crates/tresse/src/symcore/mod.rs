//! Exact symbolic kernel: expression trees over arbitrary-precision rationals,
//! canonical rational-function normal form, differentiation, parsing, complex
//! numeric evaluation and randomized zero testing.
//!
//! Expressions are immutable and cheaply cloneable. `exp` and `log` subtrees are
//! opaque atoms for normalization: no exp/log laws are applied. Non-integer
//! rational powers of a non-monomial base are likewise kept as atoms, with
//! exponents tracked exactly, which keeps all rewrites sound for the principal
//! complex branch.

mod symbol;
mod expr;
mod poly;
mod ratfunc;
mod normalize;
mod diff;
mod parse;
mod numeric;
mod zero;

pub use symbol::{Symbol, symbol_name};
pub(crate) use symbol::jet_name;
pub use expr::{Expr, Node};
pub use poly::{Atom, Monomial, Poly};
pub use ratfunc::RatFunc;
pub use normalize::{normalize, normalize_full, NormalizeReport, to_ratfunc};
pub use diff::diff;
pub use parse::{parse_expr, parse_expr_list};
pub use numeric::{eval_num, EvalOutcome, VarAssignment, C64};
pub use zero::{is_zero, is_zero_with, ZeroConfig, ZeroVerdict};

#[allow(unused_imports)]
pub(crate) use ratfunc::poly_gcd;
pub(crate) use numeric::eval_rf;
pub(crate) use zero::is_zero_rf;
pub(crate) use diff::diff_rf;

use num::BigRational;

/// Shorthand for an exact integer constant.
pub fn int(n: i64) -> Expr {
    Expr::from_int(n)
}

/// Shorthand for an exact rational constant n/d.
pub fn rat(n: i64, d: i64) -> Expr {
    Expr::from_rat(BigRational::new(n.into(), d.into()))
}

/// Shorthand for a variable by name.
pub fn var(name: &str) -> Expr {
    Expr::var(Symbol::intern(name))
}
