//! Double-precision evaluation on the principal real branch.

use num_traits::ToPrimitive;
use thiserror::Error;

use super::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {what} at (x={x}, u={u})")]
    Domain { what: &'static str, x: f64, u: f64 },
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Lit(f64),
    X,
    U,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    PowInt(i32),
    Call(Func),
}

/// An expression flattened into postfix form for repeated evaluation.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    ops: Vec<Op>,
    depth: usize,
}

impl CompiledExpr {
    pub fn new(e: &Expr) -> CompiledExpr {
        let mut ops = Vec::with_capacity(e.node_count());
        emit(e, &mut ops);
        let mut depth = 0usize;
        let mut max = 0usize;
        for op in &ops {
            match op {
                Op::Lit(_) | Op::X | Op::U => depth += 1,
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow => depth -= 1,
                Op::Neg | Op::PowInt(_) | Op::Call(_) => {}
            }
            max = max.max(depth);
        }
        CompiledExpr { ops, depth: max }
    }

    pub fn eval(&self, x: f64, u: f64) -> Result<f64, EvalError> {
        let domain = |what| EvalError::Domain { what, x, u };
        let mut stack: Vec<f64> = Vec::with_capacity(self.depth);
        for op in &self.ops {
            match *op {
                Op::Lit(v) => stack.push(v),
                Op::X => stack.push(x),
                Op::U => stack.push(u),
                Op::Neg => {
                    let a = stack.pop().unwrap_or(f64::NAN);
                    stack.push(-a);
                }
                Op::PowInt(n) => {
                    let a = stack.pop().unwrap_or(f64::NAN);
                    if a == 0.0 && n < 0 {
                        return Err(domain("zero raised to a negative power"));
                    }
                    stack.push(a.powi(n));
                }
                Op::Call(f) => {
                    let a = stack.pop().unwrap_or(f64::NAN);
                    stack.push(apply(f, a).map_err(domain)?);
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow => {
                    let b = stack.pop().unwrap_or(f64::NAN);
                    let a = stack.pop().unwrap_or(f64::NAN);
                    let v = match *op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        Op::Div => {
                            if b.abs() < f64::MIN_POSITIVE {
                                return Err(domain("division by zero"));
                            }
                            a / b
                        }
                        _ => real_pow(a, b).map_err(domain)?,
                    };
                    stack.push(v);
                }
            }
        }
        let v = stack.pop().unwrap_or(f64::NAN);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(domain("non-finite value"))
        }
    }
}

fn emit(e: &Expr, ops: &mut Vec<Op>) {
    match e {
        Expr::Num(q) => ops.push(Op::Lit(q.to_f64().unwrap_or(f64::NAN))),
        Expr::Var(super::Var::X) => ops.push(Op::X),
        Expr::Var(super::Var::U) => ops.push(Op::U),
        Expr::Const(c) => ops.push(Op::Lit(c.value())),
        Expr::Neg(a) => {
            emit(a, ops);
            ops.push(Op::Neg);
        }
        Expr::Call(f, a) => {
            emit(a, ops);
            ops.push(Op::Call(*f));
        }
        Expr::Binary(BinOp::Pow, a, b) => {
            emit(a, ops);
            match b.as_num() {
                Some(q) if q.is_integer() && q.numer().to_i32().is_some() => {
                    ops.push(Op::PowInt(q.numer().to_i32().unwrap_or(0)))
                }
                _ => {
                    emit(b, ops);
                    ops.push(Op::Pow);
                }
            }
        }
        Expr::Binary(op, a, b) => {
            emit(a, ops);
            emit(b, ops);
            ops.push(match op {
                BinOp::Add => Op::Add,
                BinOp::Sub => Op::Sub,
                BinOp::Mul => Op::Mul,
                BinOp::Div => Op::Div,
                BinOp::Pow => Op::Pow,
            });
        }
    }
}

fn real_pow(a: f64, b: f64) -> Result<f64, &'static str> {
    if b.fract() == 0.0 && b.abs() < i32::MAX as f64 {
        if a == 0.0 && b < 0.0 {
            return Err("zero raised to a negative power");
        }
        return Ok(a.powi(b as i32));
    }
    if a < 0.0 {
        return Err("negative base with non-integer exponent");
    }
    if a == 0.0 && b < 0.0 {
        return Err("zero raised to a negative power");
    }
    Ok(a.powf(b))
}

fn apply(f: Func, a: f64) -> Result<f64, &'static str> {
    Ok(match f {
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Tan => a.tan(),
        Func::Exp => a.exp(),
        Func::Ln => {
            if a <= 0.0 {
                return Err("logarithm of a non-positive number");
            }
            a.ln()
        }
        Func::Sqrt => {
            if a < 0.0 {
                return Err("square root of a negative number");
            }
            a.sqrt()
        }
        Func::Sinh => a.sinh(),
        Func::Cosh => a.cosh(),
        Func::Arcsin => {
            if !(-1.0..=1.0).contains(&a) {
                return Err("arcsin outside [-1, 1]");
            }
            a.asin()
        }
        Func::Arctan => a.atan(),
    })
}

/// Evaluate `e` at the point `(x, u)`.
pub fn eval(e: &Expr, x: f64, u: f64) -> Result<f64, EvalError> {
    CompiledExpr::new(e).eval(x, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn curvature_of_example_one_at_unit_u() {
        let k = parse("-3/u^4").unwrap();
        assert_eq!(eval(&k, 0.0, 1.0).unwrap(), -3.0);
    }

    #[test]
    fn sum_of_coordinates() {
        assert_eq!(eval(&parse("x+u").unwrap(), 2.0, 3.0).unwrap(), 5.0);
    }

    #[test]
    fn domain_errors() {
        for s in ["1/u", "sqrt(u-1)", "ln(u)", "arcsin(u+2)", "u^0.5 - 1 + (u-1)^(1/2)"] {
            let e = parse(s).unwrap();
            assert!(
                matches!(eval(&e, 0.0, 0.0), Err(EvalError::Domain { .. })),
                "{s} should fail at the origin"
            );
        }
        assert!(eval(&parse("u^-1").unwrap(), 0.0, 0.0).is_err());
    }

    #[test]
    fn integer_powers_of_negative_bases_are_real() {
        assert_eq!(eval(&parse("u^3").unwrap(), 0.0, -2.0).unwrap(), -8.0);
        assert!(eval(&parse("u^(1/3)").unwrap(), 0.0, -8.0).is_err());
    }
}
