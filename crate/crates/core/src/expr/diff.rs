//! Structural differentiation.

use num_traits::One;

use super::{BinOp, Expr, Func, NamedConst, Rational, Var};

fn add(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        b
    } else if b.is_zero() {
        a
    } else {
        a + b
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if b.is_zero() {
        a
    } else if a.is_zero() {
        Expr::neg(b)
    } else {
        a - b
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        Expr::zero()
    } else if a.is_one() {
        b
    } else if b.is_one() {
        a
    } else {
        a * b
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        Expr::zero()
    } else if b.is_one() {
        a
    } else {
        a / b
    }
}

/// `d e / d v` by the textbook rules, without simplification.
///
/// Only trivial zero and one operands are pruned; the result is a faithful
/// tree that numeric checks can evaluate independently of the simplifier.
pub fn diff_raw(e: &Expr, v: Var) -> Expr {
    if e.free_of(v) {
        return Expr::zero();
    }
    match e {
        Expr::Var(_) => Expr::one(),
        Expr::Num(_) | Expr::Const(_) => Expr::zero(),
        Expr::Neg(a) => {
            let da = diff_raw(a, v);
            if da.is_zero() {
                da
            } else {
                Expr::neg(da)
            }
        }
        Expr::Binary(op, a, b) => {
            let (a, b) = (&**a, &**b);
            match op {
                BinOp::Add => add(diff_raw(a, v), diff_raw(b, v)),
                BinOp::Sub => sub(diff_raw(a, v), diff_raw(b, v)),
                BinOp::Mul => add(
                    mul(diff_raw(a, v), b.clone()),
                    mul(a.clone(), diff_raw(b, v)),
                ),
                BinOp::Div => {
                    let num = sub(
                        mul(diff_raw(a, v), b.clone()),
                        mul(a.clone(), diff_raw(b, v)),
                    );
                    div(num, Expr::pow(b.clone(), Expr::int(2)))
                }
                BinOp::Pow => diff_pow(a, b, v),
            }
        }
        Expr::Call(f, a) => {
            let da = diff_raw(a, v);
            let a = (**a).clone();
            let outer = match f {
                Func::Sin => Expr::call(Func::Cos, a),
                Func::Cos => Expr::neg(Expr::call(Func::Sin, a)),
                Func::Tan => Expr::int(1) + Expr::pow(Expr::call(Func::Tan, a), Expr::int(2)),
                Func::Exp => Expr::call(Func::Exp, a),
                Func::Ln => div(Expr::one(), a),
                Func::Sqrt => div(Expr::one(), Expr::int(2) * Expr::call(Func::Sqrt, a)),
                Func::Sinh => Expr::call(Func::Cosh, a),
                Func::Cosh => Expr::call(Func::Sinh, a),
                Func::Arcsin => div(
                    Expr::one(),
                    Expr::call(Func::Sqrt, Expr::int(1) - Expr::pow(a, Expr::int(2))),
                ),
                Func::Arctan => div(Expr::one(), Expr::int(1) + Expr::pow(a, Expr::int(2))),
            };
            mul(outer, da)
        }
    }
}

fn diff_pow(base: &Expr, exponent: &Expr, v: Var) -> Expr {
    let db = diff_raw(base, v);
    if exponent.free_of(v) {
        // c * a^(c-1) * a'
        let lowered = match exponent.as_num() {
            Some(q) => Expr::Num(q - Rational::one()),
            None => exponent.clone() - Expr::int(1),
        };
        let power = if lowered.is_one() {
            base.clone()
        } else if lowered.is_zero() {
            Expr::one()
        } else {
            Expr::pow(base.clone(), lowered)
        };
        return mul(mul(exponent.clone(), power), db);
    }
    let de = diff_raw(exponent, v);
    let log_base = match base {
        Expr::Const(NamedConst::E) => Expr::one(),
        _ => Expr::call(Func::Ln, base.clone()),
    };
    let whole = Expr::pow(base.clone(), exponent.clone());
    if base.free_of(v) {
        return mul(whole, mul(de, log_base));
    }
    // a^b * (b' ln a + b a'/a)
    mul(
        whole,
        add(
            mul(de, log_base),
            div(mul(exponent.clone(), db), base.clone()),
        ),
    )
}

/// Partial derivative with respect to `v`, simplified.
pub fn diff(e: &Expr, v: Var) -> Expr {
    super::simplify::derivative(e, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{eval, parse, simplify};

    #[test]
    fn power_rule_for_reciprocal() {
        let d = diff(&parse("1/u").unwrap(), Var::U);
        assert_eq!(d, simplify(&parse("-1/u^2").unwrap()));
        assert_eq!(d.to_string(), "-1/u^2");
    }

    #[test]
    fn product_with_constant_factor() {
        assert_eq!(diff(&parse("x*u").unwrap(), Var::X), Expr::u());
    }

    #[test]
    fn free_expression_has_zero_derivative() {
        assert!(diff_raw(&parse("sin(x)*e^x").unwrap(), Var::U).is_zero());
    }

    #[test]
    fn variable_exponent() {
        let e = parse("u^x").unwrap();
        let d = diff_raw(&e, Var::X);
        let (x, u) = (0.7f64, 1.9f64);
        let want = u.powf(x) * u.ln();
        assert!((eval(&d, x, u).unwrap() - want).abs() < 1e-13);
        let d = diff_raw(&e, Var::U);
        assert!((eval(&d, x, u).unwrap() - x * u.powf(x - 1.0)).abs() < 1e-13);
    }
}
