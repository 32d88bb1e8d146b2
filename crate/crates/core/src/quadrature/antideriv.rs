//! Antiderivatives over a deliberately small grammar.
//!
//! The integrand is simplified and split into terms. Each term is a factor
//! free of the integration variable times at most two dependent factors
//! drawn from: powers of the variable or of a linear expression, `e^linear`,
//! `sin`, `cos`, `sinh`, `cosh` and `ln` of a linear expression, and
//! `quadratic^(-1/2)`. Supported shapes:
//!
//! * `v^n`, `(a v + b)^n` (with `ln` for `n = -1`),
//! * `v^m f(a v + b)` for `f` in exp, sin, cos, sinh, cosh, by parts,
//! * `e^(a v + b) sin(c v + d)` and the cosine analogue,
//! * `ln(a v + b)`,
//! * `(alpha v + beta) / sqrt(A v^2 + B v + C)` with numeric `A`, giving
//!   `arcsin` for `A < 0` and `ln` for `A > 0`.
//!
//! Anything else is [`NotIntegrable`].

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::expr::{diff, simplify, BinOp, Expr, Func, NamedConst, Rational, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{term} is outside the integrable grammar")]
pub struct NotIntegrable {
    pub term: String,
}

/// Antiderivative of `f` in `var`. The other coordinate, if present, is
/// treated as a constant parameter.
pub fn antiderivative_1d(f: &Expr, var: Var) -> Result<Expr, NotIntegrable> {
    let f = simplify(f);
    let mut parts = Vec::new();
    for (sign, term) in signed_terms(&f) {
        let mut t = Term::default();
        t.push(&term, 1);
        let value = integrate_term(&t, var).ok_or_else(|| NotIntegrable {
            term: term.to_string(),
        })?;
        parts.push(if sign < 0 { -value } else { value });
    }
    let sum = parts.into_iter().reduce(|a, b| a + b).unwrap_or_else(Expr::zero);
    Ok(simplify(&sum))
}

fn signed_terms(e: &Expr) -> Vec<(i8, Expr)> {
    match e {
        Expr::Binary(BinOp::Add, a, b) => {
            let mut out = signed_terms(a);
            out.extend(signed_terms(b));
            out
        }
        Expr::Binary(BinOp::Sub, a, b) => {
            let mut out = signed_terms(a);
            out.extend(signed_terms(b).into_iter().map(|(s, t)| (-s, t)));
            out
        }
        Expr::Neg(a) => signed_terms(a).into_iter().map(|(s, t)| (-s, t)).collect(),
        other => vec![(1, other.clone())],
    }
}

/// A product `coeff * prod base^exp` with exponents stored as expressions.
#[derive(Default)]
struct Term {
    coeff: Vec<Expr>,
    factors: Vec<(Expr, Expr)>,
}

impl Term {
    fn push(&mut self, e: &Expr, sign: i8) {
        match e {
            Expr::Binary(BinOp::Mul, a, b) => {
                self.push(a, sign);
                self.push(b, sign);
            }
            Expr::Binary(BinOp::Div, a, b) => {
                self.push(a, sign);
                self.push(b, -sign);
            }
            Expr::Neg(a) => {
                self.coeff.push(Expr::int(-1));
                self.push(a, sign);
            }
            Expr::Binary(BinOp::Pow, b, x) => self.factor((**b).clone(), (**x).clone(), sign),
            Expr::Call(Func::Sqrt, a) => self.factor((**a).clone(), Expr::ratio(1, 2), sign),
            Expr::Call(Func::Exp, a) => self.factor(Expr::e(), (**a).clone(), sign),
            other => self.factor(other.clone(), Expr::one(), sign),
        }
    }

    fn factor(&mut self, base: Expr, exp: Expr, sign: i8) {
        let exp = match (sign < 0, literal(&exp)) {
            (false, _) => exp,
            (true, Some(q)) => Expr::Num(-q),
            (true, None) => simplify(&-exp),
        };
        self.factors.push((base, exp));
    }
}

/// `(a, b)` with `e = a v + b` and `a != 0`, both free of `v`.
fn linear(e: &Expr, v: Var) -> Option<(Expr, Expr)> {
    if e.free_of(v) {
        return None;
    }
    let a = diff(e, v);
    if a.contains(v) || a.is_zero() {
        return None;
    }
    let b = simplify(&(e - &(&a * &Expr::var(v))));
    b.free_of(v).then_some((a, b))
}

/// `(A, B, C)` with `e = A v^2 + B v + C`, `A` a nonzero literal.
fn quadratic(e: &Expr, v: Var) -> Option<(Rational, Expr, Expr)> {
    let d1 = diff(e, v);
    let d2 = diff(&d1, v);
    let Expr::Num(two_a) = &d2 else { return None };
    if two_a.is_zero() {
        return None;
    }
    let zero = Expr::zero();
    let b = simplify(&d1.subs(v, &zero));
    let c = simplify(&e.subs(v, &zero));
    Some((two_a / Rational::from_integer(2.into()), b, c))
}

enum Shape {
    /// `v^n`
    Power(Rational),
    /// `(a v + b)^n`
    LinearPower(Expr, Expr, Rational),
    /// `f(a v + b)` for an exponential-like or trigonometric `f`.
    Special(Special, Expr, Expr),
    /// `ln(a v + b)`
    Log(Expr, Expr),
    /// `(A v^2 + B v + C)^(-1/2)`
    InvSqrt(Expr, Rational, Expr, Expr),
}

#[derive(Clone, Copy, PartialEq)]
enum Special {
    Exp,
    Sin,
    Cos,
    Sinh,
    Cosh,
}

impl Special {
    fn apply(self, arg: Expr) -> Expr {
        match self {
            Special::Exp => Expr::pow(Expr::e(), arg),
            Special::Sin => Expr::call(Func::Sin, arg),
            Special::Cos => Expr::call(Func::Cos, arg),
            Special::Sinh => Expr::call(Func::Sinh, arg),
            Special::Cosh => Expr::call(Func::Cosh, arg),
        }
    }

    /// Antiderivative in the argument, as a sign and a special function.
    fn primitive(self) -> (i64, Special) {
        match self {
            Special::Exp => (1, Special::Exp),
            Special::Sin => (-1, Special::Cos),
            Special::Cos => (1, Special::Sin),
            Special::Sinh => (1, Special::Cosh),
            Special::Cosh => (1, Special::Sinh),
        }
    }
}

/// Value of a rational literal, including the rendered forms `-a` and `p/q`.
fn literal(e: &Expr) -> Option<Rational> {
    match e {
        Expr::Num(q) => Some(q.clone()),
        Expr::Neg(a) => literal(a).map(|q| -q),
        Expr::Binary(BinOp::Div, a, b) => {
            let b = literal(b)?;
            (!b.is_zero()).then(|| literal(a).map(|a| a / b))?
        }
        _ => None,
    }
}

fn shape(base: &Expr, exp: &Expr, v: Var) -> Option<Shape> {
    let Some(n) = literal(exp) else {
        // e^(a v + b)
        if matches!(base, Expr::Const(NamedConst::E)) && exp.contains(v) {
            let (a, _) = linear(exp, v)?;
            return Some(Shape::Special(Special::Exp, exp.clone(), a));
        }
        return None;
    };
    if exp.contains(v) {
        return None;
    }
    if *base == Expr::var(v) {
        return Some(Shape::Power(n));
    }
    if n == Rational::from_integer(1.into()) {
        if let Expr::Call(f, arg) = base {
            let special = match f {
                Func::Sin => Some(Special::Sin),
                Func::Cos => Some(Special::Cos),
                Func::Sinh => Some(Special::Sinh),
                Func::Cosh => Some(Special::Cosh),
                Func::Exp => Some(Special::Exp),
                _ => None,
            };
            if let Some((a, _)) = linear(arg, v) {
                if let Some(s) = special {
                    return Some(Shape::Special(s, (**arg).clone(), a));
                }
                if *f == Func::Ln {
                    return Some(Shape::Log((**arg).clone(), a));
                }
            }
            return None;
        }
        if matches!(base, Expr::Const(NamedConst::E)) {
            return None;
        }
    }
    if let Some((a, _)) = linear(base, v) {
        return Some(Shape::LinearPower(base.clone(), a, n));
    }
    if n == -Rational::new(1.into(), 2.into()) {
        let (qa, qb, qc) = quadratic(base, v)?;
        return Some(Shape::InvSqrt(base.clone(), qa, qb, qc));
    }
    None
}

fn integrate_term(t: &Term, v: Var) -> Option<Expr> {
    let mut coeff: Vec<Expr> = t.coeff.clone();
    let mut dependent = Vec::new();
    for (base, exp) in &t.factors {
        if base.free_of(v) && exp.free_of(v) {
            coeff.push(Expr::pow(base.clone(), exp.clone()));
        } else {
            dependent.push(shape(base, exp, v)?);
        }
    }
    let c = coeff.into_iter().reduce(|a, b| a * b).unwrap_or_else(Expr::one);
    let x = Expr::var(v);
    let one = Rational::from_integer(1.into());
    let body = match dependent.as_slice() {
        [] => x,
        [Shape::Power(n)] => power(&x, &Expr::one(), n),
        [Shape::LinearPower(base, a, n)] => power(base, a, n),
        [Shape::Special(s, arg, a)] => by_parts(0, *s, arg, a, &x)?,
        [Shape::Power(m), Shape::Special(s, arg, a)] | [Shape::Special(s, arg, a), Shape::Power(m)] => {
            if !m.is_integer() || m.is_negative() || *m > Rational::from_integer(12.into()) {
                return None;
            }
            by_parts(m.to_integer().try_into().ok()?, *s, arg, a, &x)?
        }
        [Shape::Special(s1, arg1, a1), Shape::Special(s2, arg2, a2)] => {
            exp_trig(*s1, arg1, a1, *s2, arg2, a2).or_else(|| exp_trig(*s2, arg2, a2, *s1, arg1, a1))?
        }
        [Shape::Log(arg, a)] => {
            // ((a v + b) ln(a v + b) - (a v + b)) / a
            (arg.clone() * Expr::call(Func::Ln, arg.clone()) - arg.clone()) / a.clone()
        }
        [Shape::InvSqrt(q, qa, qb, qc)] => inv_sqrt(q, qa, qb, qc, &x),
        [Shape::Power(m), Shape::InvSqrt(q, qa, qb, qc)] | [Shape::InvSqrt(q, qa, qb, qc), Shape::Power(m)]
            if *m == one =>
        {
            // v / sqrt(Q) = (Q' / (2A) - B / (2A)) / sqrt(Q)
            let two_a = Expr::Num(qa * Rational::from_integer(2.into()));
            let root = Expr::call(Func::Sqrt, q.clone());
            root / Expr::Num(qa.clone()) - qb.clone() / two_a * inv_sqrt(q, qa, qb, qc, &x)
        }
        _ => return None,
    };
    Some(c * body)
}

/// `int base^n`, where `base` has constant derivative `a`.
fn power(base: &Expr, a: &Expr, n: &Rational) -> Expr {
    if *n == -Rational::from_integer(1.into()) {
        return Expr::call(Func::Ln, base.clone()) / a.clone();
    }
    let m = n + Rational::from_integer(1.into());
    Expr::pow(base.clone(), Expr::Num(m.clone())) / (Expr::Num(m) * a.clone())
}

/// `int v^m f(arg)` with `arg' = a`, by repeated integration by parts.
fn by_parts(m: u32, s: Special, arg: &Expr, a: &Expr, x: &Expr) -> Option<Expr> {
    let (sign, g) = s.primitive();
    // int v^m f = v^m G / a - (m / a) int v^(m-1) G
    let g_term = Expr::int(sign) * g.apply(arg.clone()) / a.clone();
    if m == 0 {
        return Some(g_term);
    }
    let head = Expr::pow(x.clone(), Expr::int(m as i64)) * g_term;
    let rest = by_parts(m - 1, g, arg, a, x)?;
    Some(head - Expr::int(sign * m as i64) / a.clone() * rest)
}

/// `int e^(alpha v + ..) sin(beta v + ..)` and the cosine analogue.
fn exp_trig(s1: Special, arg1: &Expr, alpha: &Expr, s2: Special, arg2: &Expr, beta: &Expr) -> Option<Expr> {
    if s1 != Special::Exp || !matches!(s2, Special::Sin | Special::Cos) {
        return None;
    }
    let ex = Special::Exp.apply(arg1.clone());
    let sin = Expr::call(Func::Sin, arg2.clone());
    let cos = Expr::call(Func::Cos, arg2.clone());
    let norm = Expr::pow(alpha.clone(), Expr::int(2)) + Expr::pow(beta.clone(), Expr::int(2));
    let inner = if s2 == Special::Sin {
        alpha.clone() * sin - beta.clone() * cos
    } else {
        alpha.clone() * cos + beta.clone() * sin
    };
    Some(ex * inner / norm)
}

/// `int (A v^2 + B v + C)^(-1/2) dv`.
fn inv_sqrt(q: &Expr, qa: &Rational, qb: &Expr, qc: &Expr, x: &Expr) -> Expr {
    let half = Expr::ratio(1, 2);
    let two_a = Expr::Num(qa * Rational::from_integer(2.into()));
    let lin = two_a * x.clone() + qb.clone();
    if qa.is_negative() {
        // arcsin((2 a v - B) / sqrt(B^2 + 4 a C)) / sqrt(a), a = -A
        let a = Expr::Num(-qa.clone());
        let disc = Expr::pow(qb.clone(), Expr::int(2)) + Expr::int(4) * a.clone() * qc.clone();
        let arg = -lin / Expr::pow(disc, half.clone());
        Expr::call(Func::Arcsin, arg) / Expr::pow(a, half)
    } else {
        // ln(2 sqrt(A) sqrt(Q) + 2 A v + B) / sqrt(A)
        let ra = Expr::pow(Expr::Num(qa.clone()), half);
        let root = Expr::call(Func::Sqrt, q.clone());
        Expr::call(Func::Ln, Expr::int(2) * ra.clone() * root + lin) / ra
    }
}
