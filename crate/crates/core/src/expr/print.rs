//! Minimal-parenthesis printer whose output parses back to the same tree.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{BinOp, Expr, Rational};

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => SUM,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => PRODUCT,
        Expr::Neg(_) => UNARY,
        Expr::Num(q) if q.is_negative() => UNARY,
        Expr::Binary(BinOp::Pow, ..) => POWER,
        _ => ATOM,
    }
}

pub(super) fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    write_at(f, e, 0)
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        f.write_str("(")?;
        write_bare(f, e)?;
        f.write_str(")")
    } else {
        write_bare(f, e)
    }
}

fn write_bare(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Num(q) => write_number(f, q),
        Expr::Var(v) => f.write_str(v.name()),
        Expr::Const(c) => f.write_str(c.name()),
        Expr::Neg(a) => {
            f.write_str("-")?;
            if matches!(&**a, Expr::Num(q) if !q.is_negative()) {
                // "-2" would read back as a negative literal
                f.write_str("(")?;
                write_bare(f, a)?;
                f.write_str(")")
            } else {
                write_at(f, a, UNARY)
            }
        }
        Expr::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_at(f, a, 0)?;
            f.write_str(")")
        }
        Expr::Binary(op, a, b) => {
            let (sym, lmin, rmin) = match op {
                BinOp::Add => (" + ", SUM, PRODUCT),
                BinOp::Sub => (" - ", SUM, PRODUCT),
                BinOp::Mul => ("*", PRODUCT, UNARY),
                BinOp::Div => ("/", PRODUCT, UNARY),
                BinOp::Pow => ("^", ATOM, UNARY),
            };
            write_at(f, a, lmin)?;
            f.write_str(sym)?;
            write_at(f, b, rmin)
        }
    }
}

/// Integers and terminating decimals print as literals; other rationals as
/// a parenthesised quotient.
fn write_number(f: &mut fmt::Formatter<'_>, q: &Rational) -> fmt::Result {
    if q.is_integer() {
        return write!(f, "{}", q.numer());
    }
    match terminating_decimal(q) {
        Some(s) => f.write_str(&s),
        None => write!(f, "({}/{})", q.numer(), q.denom()),
    }
}

fn terminating_decimal(q: &Rational) -> Option<String> {
    let mut den = q.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    let digits = twos.max(fives);
    let scaled = q.numer().abs() * num_traits::pow(BigInt::from(10), digits) / q.denom();
    let mut s = scaled.to_string();
    while s.len() <= digits {
        s.insert(0, '0');
    }
    s.insert(s.len() - digits, '.');
    if q.is_negative() {
        s.insert(0, '-');
    }
    Some(s)
}
