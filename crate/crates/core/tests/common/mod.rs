//! Shared expression corpus for the integration tests.
#![allow(dead_code)]

use jacobi_ode::expr::{parse, BinOp, Expr, Func};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

/// Region on which every corpus entry is smooth and finite.
pub const CORPUS_REGION: &str = "x=0.2:1.2,u=0.3:1.3";

/// Right-hand sides and test functions, all smooth on [`CORPUS_REGION`].
pub const CORPUS: &[&str] = &[
    "0",
    "1",
    "x",
    "u",
    "x*u",
    "u^2",
    "x^2 + u^2",
    "1/u",
    "x/u",
    "u/x",
    "x*(u^2 - x + 1)/u",
    "e^x",
    "e^(-2*x)*u",
    "u*e^(x*u)",
    "sin(x)",
    "cos(u)*x",
    "sin(x*u) + cos(x - u)",
    "tan(x/2)",
    "ln(u)",
    "ln(x + u^2)",
    "sqrt(x + u)",
    "sqrt(1 + x^2*u^2)",
    "u^3 - 2*x*u + 0.5",
    "(x + u)^3",
    "1/(1 + u^2)",
    "u/(1 + x^2)",
    "sinh(u) - cosh(x)",
    "arctan(x*u)",
    "arcsin(u/2)",
    "exp(sin(u))",
    "x^u",
    "u^(3/2)*x",
    "e^x + sqrt(2*u*e^x - e^(2*x) - u^2 + 10)",
    "(u - x)/(u + x)",
    "x*ln(u) - u*ln(x)",
];

pub fn corpus() -> Vec<Expr> {
    CORPUS.iter().map(|s| parse(s).unwrap()).collect()
}

fn literal() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-50i64..50).prop_map(Expr::int),
        // terminating decimals k / 10^d
        (-999i64..999, 1u32..4).prop_map(|(k, d)| {
            Expr::Num(BigRational::new(BigInt::from(k), BigInt::from(10i64.pow(d))))
        }),
    ]
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        literal(),
        Just(Expr::x()),
        Just(Expr::u()),
        Just(Expr::e()),
        Just(Expr::pi()),
    ]
}

const FUNCS: [Func; 10] = [
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

/// Random syntax trees over integer and terminating-decimal literals.
pub fn ast() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::neg),
            (0usize..FUNCS.len(), inner.clone()).prop_map(|(i, a)| Expr::call(FUNCS[i], a)),
            (0usize..5, inner.clone(), inner).prop_map(|(op, a, b)| {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow][op];
                Expr::binary(op, a, b)
            }),
        ]
    })
}
