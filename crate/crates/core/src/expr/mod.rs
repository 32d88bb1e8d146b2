//! Symbolic expression kernel over the two coordinates `x` and `u`.
//!
//! Expressions are immutable trees with shared children. Everything the
//! pipeline manipulates (the right-hand side `phi`, integrating factors,
//! curvature, first integrals) is an [`Expr`].
//!
//! The kernel provides parsing, printing, structural differentiation, a
//! rewrite-based simplifier, compiled numeric evaluation and a sampling
//! based zero test.

mod diff;
mod eval;
mod parse;
mod print;
mod region;
mod simplify;
mod zero;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use diff::{diff, diff_raw};
pub use eval::{eval, CompiledExpr, EvalError};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use region::{Rect, Region, RegionError};
pub use simplify::simplify;
pub use zero::{
    constancy_test, zero_test, zero_test_with, SampleConfig, ZeroTestError, ZeroVerdict,
    DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_ZERO_TOL,
};

/// Exact rational used for numeric literals.
pub type Rational = BigRational;

/// One of the two coordinates of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    U,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::U => "u",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NamedConst {
    Pi,
    E,
}

impl NamedConst {
    pub fn name(self) -> &'static str {
        match self {
            NamedConst::Pi => "pi",
            NamedConst::E => "e",
        }
    }

    pub fn value(self) -> f64 {
        match self {
            NamedConst::Pi => std::f64::consts::PI,
            NamedConst::E => std::f64::consts::E,
        }
    }
}

/// Elementary functions understood by the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Sinh,
    Cosh,
    Arcsin,
    Arctan,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Arcsin,
        Func::Arctan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Arcsin => "arcsin",
            Func::Arctan => "arctan",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// An immutable expression tree in `x` and `u`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Num(Rational),
    Var(Var),
    Const(NamedConst),
    Neg(Arc<Expr>),
    Binary(BinOp, Arc<Expr>, Arc<Expr>),
    Call(Func, Arc<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Num(Rational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        Expr::Num(Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn x() -> Expr {
        Expr::Var(Var::X)
    }

    pub fn u() -> Expr {
        Expr::Var(Var::U)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn e() -> Expr {
        Expr::Const(NamedConst::E)
    }

    pub fn pi() -> Expr {
        Expr::Const(NamedConst::Pi)
    }

    /// Closest exact rational to a double. Non-finite input maps to zero.
    pub fn from_f64(value: f64) -> Expr {
        Expr::Num(Rational::from_float(value).unwrap_or_else(Rational::zero))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Arc::new(a))
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Arc::new(a), Arc::new(b))
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Pow, a, b)
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Arc::new(a))
    }

    pub fn as_num(&self) -> Option<&Rational> {
        match self {
            Expr::Num(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(q) if q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Num(q) if q.is_one())
    }

    pub fn contains(&self, v: Var) -> bool {
        match self {
            Expr::Var(w) => *w == v,
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.contains(v),
            Expr::Binary(_, a, b) => a.contains(v) || b.contains(v),
        }
    }

    pub fn free_of(&self, v: Var) -> bool {
        !self.contains(v)
    }

    /// Replace every occurrence of `v` by `value`. The result is not simplified.
    pub fn subs(&self, v: Var, value: &Expr) -> Expr {
        match self {
            Expr::Var(w) if *w == v => value.clone(),
            Expr::Num(_) | Expr::Var(_) | Expr::Const(_) => self.clone(),
            Expr::Neg(a) => Expr::neg(a.subs(v, value)),
            Expr::Call(f, a) => Expr::call(*f, a.subs(v, value)),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.subs(v, value), b.subs(v, value)),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Const(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Numeric value of a literal, if this node is one.
    pub fn num_value(&self) -> Option<f64> {
        self.as_num().and_then(|q| q.to_f64())
    }

    pub fn is_negative_literal(&self) -> bool {
        matches!(self, Expr::Num(q) if q.is_negative())
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Expr {
        Expr::Var(v)
    }
}

/// Serialized as its printed form, which parses back to the same tree.
impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Expr, ParseError> {
        parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(f, self)
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self, rhs)
            }
        }

        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, self.clone(), rhs.clone())
            }
        }
    };
}

impl_binop!(Add, add, BinOp::Add);
impl_binop!(Sub, sub, BinOp::Sub);
impl_binop!(Mul, mul, BinOp::Mul);
impl_binop!(Div, div, BinOp::Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subs_replaces_only_the_named_variable() {
        let e = parse("x*u + sin(u)").unwrap();
        let s = e.subs(Var::U, &Expr::int(2));
        assert!(s.free_of(Var::U));
        assert!(s.contains(Var::X));
        assert!((eval(&s, 3.0, 100.0).unwrap() - (6.0 + 2f64.sin())).abs() < 1e-14);
    }

    #[test]
    fn operator_overloads_build_binary_nodes() {
        let e = Expr::x() * Expr::u() + Expr::int(1);
        assert_eq!(e, parse("x*u + 1").unwrap());
    }
}
