//! Rewrite-based simplification to a canonical expanded form.
//!
//! Expressions are normalized bottom-up into an n-ary form: sums of terms,
//! each term an exact rational coefficient times a sorted list of factors
//! `base^exponent` with pairwise distinct bases. Normalization applies
//!
//! * constant folding over exact rationals,
//! * distribution of products over sums and expansion of small positive
//!   integer powers of sums,
//! * collection of like terms and of equal bases (`a^p * a^q = a^(p+q)`,
//!   which covers `e^a * e^b = e^(a+b)`),
//! * `exp(a) = e^a`, `sqrt(a) = a^(1/2)`, `ln(e^a) = a`, `e^(c*ln a) = a^c`,
//! * `c*k*sin(a)^2 + c*k*cos(a)^2 = c*k`,
//! * parity of the odd and even elementary functions.
//!
//! The normal form is then rendered back into an ordinary [`Expr`] using
//! subtraction, division and `sqrt`. Rendering is invertible by
//! normalization, so `simplify` is idempotent.
//!
//! Powers `(a^p)^q` are only merged when `q` is an integer, the base is `e`,
//! or `p` is a non-integer rational, which keeps `(u^2)^(1/2)` intact.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Expr, Func, NamedConst, Rational, Var};

type Q = Rational;

/// Largest integer exponent folded for numeric bases.
const MAX_NUMERIC_POWER: i64 = 256;
/// Largest integer power of a sum that is expanded.
const MAX_EXPANDED_POWER: i64 = 8;
/// Expansion of `sum^n` is skipped when it would create more terms.
const MAX_EXPANDED_TERMS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Cx {
    Num(Q),
    Var(Var),
    Const(NamedConst),
    Call(Func, Box<Cx>),
    Pow(Box<Cx>, Box<Cx>),
    /// Coefficient and sorted factors with distinct bases.
    Mul(Q, Vec<Cx>),
    /// At least two terms with distinct monomials, sorted by monomial.
    Add(Vec<Cx>),
}

fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

fn half() -> Q {
    Q::new(BigInt::from(1), BigInt::from(2))
}

impl Cx {
    fn is_num(&self, n: i64) -> bool {
        matches!(self, Cx::Num(q) if *q == int(n))
    }

    fn is_integer(&self) -> bool {
        matches!(self, Cx::Num(q) if q.is_integer())
    }
}

fn normalize(e: &Expr) -> Cx {
    match e {
        Expr::Num(q) => Cx::Num(q.clone()),
        Expr::Var(v) => Cx::Var(*v),
        Expr::Const(c) => Cx::Const(*c),
        Expr::Neg(a) => negate(normalize(a)),
        Expr::Call(f, a) => call(*f, normalize(a)),
        Expr::Binary(super::BinOp::Div, a, b) => mul(vec![normalize(a), int_power(b, Cx::Num(int(-1)))]),
        Expr::Binary(super::BinOp::Pow, a, b) => match normalize(b) {
            n if n.is_integer() => int_power(a, n),
            n => pow(normalize(a), n),
        },
        Expr::Binary(op, a, b) => {
            let (a, b) = (normalize(a), normalize(b));
            match op {
                super::BinOp::Add => add(vec![a, b]),
                super::BinOp::Sub => add(vec![a, negate(b)]),
                super::BinOp::Mul => mul(vec![a, b]),
                super::BinOp::Div => unreachable!(),
                super::BinOp::Pow => pow(a, b),
            }
        }
    }
}

/// `e^n` for an integer `n`, pushed through products, quotients, roots and
/// powers so that no power of a sum is expanded on the way.
fn int_power(e: &Expr, n: Cx) -> Cx {
    match e {
        Expr::Binary(super::BinOp::Pow, a, b) => {
            let exp = mul(vec![normalize(b), n]);
            if exp.is_integer() {
                int_power(a, exp)
            } else {
                pow(normalize(a), exp)
            }
        }
        Expr::Binary(super::BinOp::Mul, a, b) => mul(vec![int_power(a, n.clone()), int_power(b, n)]),
        Expr::Binary(super::BinOp::Div, a, b) => mul(vec![int_power(a, n.clone()), int_power(b, negate(n))]),
        Expr::Neg(a) => mul(vec![pow(Cx::Num(int(-1)), n.clone()), int_power(a, n)]),
        Expr::Call(Func::Sqrt, a) => pow(normalize(a), mul(vec![Cx::Num(half()), n])),
        other => pow(normalize(other), n),
    }
}

fn negate(c: Cx) -> Cx {
    mul(vec![Cx::Num(int(-1)), c])
}

fn split_term(c: Cx) -> (Q, Vec<Cx>) {
    match c {
        Cx::Num(q) => (q, Vec::new()),
        Cx::Mul(q, fs) => (q, fs),
        other => (Q::one(), vec![other]),
    }
}

fn make_term(coeff: Q, mut factors: Vec<Cx>) -> Cx {
    if coeff.is_zero() {
        return Cx::Num(coeff);
    }
    if factors.is_empty() {
        return Cx::Num(coeff);
    }
    if coeff.is_one() && factors.len() == 1 {
        return factors.pop().unwrap_or(Cx::Num(coeff));
    }
    Cx::Mul(coeff, factors)
}

fn terms_of(c: Cx) -> Vec<Cx> {
    match c {
        Cx::Add(ts) => ts,
        other => vec![other],
    }
}

fn add(terms: Vec<Cx>) -> Cx {
    let mut acc: BTreeMap<Vec<Cx>, Q> = BTreeMap::new();
    let mut pending = terms;
    while let Some(t) = pending.pop() {
        match t {
            Cx::Add(ts) => pending.extend(ts),
            other => {
                let (c, key) = split_term(other);
                *acc.entry(key).or_insert_with(Q::zero) += c;
            }
        }
    }
    acc.retain(|_, c| !c.is_zero());
    pythagorean(&mut acc);
    let mut out: Vec<Cx> = acc.into_iter().map(|(k, c)| make_term(c, k)).collect();
    match out.len() {
        0 => Cx::Num(Q::zero()),
        1 => out.pop().unwrap_or(Cx::Num(Q::zero())),
        _ => Cx::Add(out),
    }
}

/// Replace `c*k*sin(a)^2 + c*k*cos(a)^2` by `c*k` until no pair remains.
fn pythagorean(acc: &mut BTreeMap<Vec<Cx>, Q>) {
    let square = |f: Func, a: &Cx| {
        Cx::Pow(
            Box::new(Cx::Call(f, Box::new(a.clone()))),
            Box::new(Cx::Num(int(2))),
        )
    };
    loop {
        let mut hit = None;
        'search: for (key, c) in acc.iter() {
            for (i, factor) in key.iter().enumerate() {
                let Cx::Pow(base, exp) = factor else { continue };
                let Cx::Call(Func::Sin, arg) = &**base else { continue };
                if !exp.is_num(2) {
                    continue;
                }
                let mut partner = key.clone();
                partner[i] = square(Func::Cos, arg);
                partner.sort();
                if acc.get(&partner) == Some(c) {
                    let mut rest = key.clone();
                    rest.remove(i);
                    hit = Some((key.clone(), partner, rest, c.clone()));
                    break 'search;
                }
            }
        }
        let Some((key, partner, rest, c)) = hit else { return };
        acc.remove(&key);
        acc.remove(&partner);
        let slot = acc.entry(rest.clone()).or_insert_with(Q::zero);
        *slot += c;
        if slot.is_zero() {
            acc.remove(&rest);
        }
    }
}

fn mul(factors: Vec<Cx>) -> Cx {
    let mut coeff = Q::one();
    let mut groups: BTreeMap<Cx, Vec<Cx>> = BTreeMap::new();
    let mut pending = factors;
    while let Some(f) = pending.pop() {
        match f {
            Cx::Num(q) => coeff *= q,
            Cx::Mul(c, fs) => {
                coeff *= c;
                pending.extend(fs);
            }
            Cx::Pow(b, e) => groups.entry(*b).or_default().push(*e),
            other => groups.entry(other).or_default().push(Cx::Num(Q::one())),
        }
    }
    if coeff.is_zero() {
        return Cx::Num(coeff);
    }

    let mut plain = Vec::new();
    let mut sums = Vec::new();
    let mut unflattened = Vec::new();
    for (base, mut exps) in groups {
        let e = if exps.len() == 1 {
            exps.pop().unwrap_or(Cx::Num(Q::one()))
        } else {
            add(exps)
        };
        match pow(base, e) {
            Cx::Num(q) => coeff *= q,
            p @ Cx::Mul(..) => unflattened.push(p),
            Cx::Add(ts) => sums.push(ts),
            other => plain.push(other),
        }
    }
    if coeff.is_zero() {
        return Cx::Num(coeff);
    }
    if !unflattened.is_empty() {
        // a power produced a product (e.g. e^(ln a + b) = a * e^b); merge again
        let mut all = plain;
        all.extend(unflattened);
        all.extend(sums.into_iter().map(Cx::Add));
        all.push(Cx::Num(coeff));
        return mul(all);
    }
    plain.sort();
    let product = make_term(coeff, plain);
    if sums.is_empty() {
        return product;
    }
    let mut acc = vec![product];
    for sum in sums {
        let mut next = Vec::with_capacity(acc.len() * sum.len());
        for a in &acc {
            for t in &sum {
                next.push(mul(vec![a.clone(), t.clone()]));
            }
        }
        acc = next;
    }
    add(acc)
}

fn pow(base: Cx, exp: Cx) -> Cx {
    if exp.is_num(0) {
        return Cx::Num(Q::one());
    }
    if exp.is_num(1) {
        return base;
    }
    match (base, exp) {
        (Cx::Num(b), _) if b.is_one() => Cx::Num(b),
        (Cx::Num(b), Cx::Num(n)) => pow_num(b, n),
        (Cx::Pow(b, e1), exp)
            if exp.is_integer()
                || *b == Cx::Const(NamedConst::E)
                || matches!(&*e1, Cx::Num(q) if !q.is_integer()) =>
        {
            pow(*b, mul(vec![*e1, exp]))
        }
        (Cx::Mul(c, fs), Cx::Num(n)) if n.is_integer() => {
            let mut parts: Vec<Cx> = fs
                .into_iter()
                .map(|f| pow(f, Cx::Num(n.clone())))
                .collect();
            parts.push(pow(Cx::Num(c), Cx::Num(n)));
            mul(parts)
        }
        (Cx::Add(ts), Cx::Num(n))
            if n.is_integer()
                && n > int(1)
                && n <= int(MAX_EXPANDED_POWER)
                && expansion_fits(ts.len(), &n) =>
        {
            let times = n.numer().to_usize().unwrap_or(1);
            expand_power(ts, times)
        }
        (Cx::Add(ts), Cx::Num(n)) if n.is_integer() => {
            // (c*s)^n = c^n * s^n with the first term of s having coefficient 1
            let c = split_term(ts[0].clone()).0;
            if c.is_one() {
                return Cx::Pow(Box::new(Cx::Add(ts)), Box::new(Cx::Num(n)));
            }
            let inv = c.recip();
            let monic = ts
                .into_iter()
                .map(|t| {
                    let (k, fs) = split_term(t);
                    make_term(k * &inv, fs)
                })
                .collect();
            let scaled = Cx::Pow(Box::new(Cx::Add(monic)), Box::new(Cx::Num(n.clone())));
            mul(vec![pow_num(c, n), scaled])
        }
        (Cx::Const(NamedConst::E), exp) => exp_with_logs(exp),
        (base, exp) => Cx::Pow(Box::new(base), Box::new(exp)),
    }
}

fn expansion_fits(terms: usize, n: &Q) -> bool {
    let n = n.numer().to_u32().unwrap_or(u32::MAX);
    (terms as u128)
        .checked_pow(n)
        .is_some_and(|t| t <= MAX_EXPANDED_TERMS as u128)
}

fn expand_power(terms: Vec<Cx>, times: usize) -> Cx {
    let mut acc = Cx::Add(terms.clone());
    for _ in 1..times {
        let mut next = Vec::new();
        for a in terms_of(acc) {
            for t in &terms {
                next.push(mul(vec![a.clone(), t.clone()]));
            }
        }
        acc = add(next);
    }
    acc
}

fn pow_num(b: Q, n: Q) -> Cx {
    let keep = |b: Q, n: Q| Cx::Pow(Box::new(Cx::Num(b)), Box::new(Cx::Num(n)));
    if n.is_integer() {
        let Some(k) = n.numer().to_i64() else {
            return keep(b, n);
        };
        if k.abs() > MAX_NUMERIC_POWER || (b.is_zero() && k < 0) {
            return keep(b, n);
        }
        let magnitude = num_traits::pow(b.clone(), k.unsigned_abs() as usize);
        return Cx::Num(if k < 0 { magnitude.recip() } else { magnitude });
    }
    if b.is_zero() && n.is_positive() {
        return Cx::Num(Q::zero());
    }
    if !b.is_positive() {
        return keep(b, n);
    }
    // exact rational roots: (p/q)^(a/d) with p, q perfect d-th powers
    let Some(d) = n.denom().to_u32() else {
        return keep(b, n);
    };
    let root_of = |v: &BigInt| {
        let r = v.nth_root(d);
        (num_traits::pow(r.clone(), d as usize) == *v).then_some(r)
    };
    match (root_of(b.numer()), root_of(b.denom())) {
        (Some(rn), Some(rd)) => pow_num(Q::new(rn, rd), Q::from_integer(n.numer().clone())),
        _ => keep(b, n),
    }
}

/// `e^(c1*ln(a1) + ... + rest) = a1^c1 * ... * e^rest` for numeric `ci`.
fn exp_with_logs(exp: Cx) -> Cx {
    let mut logs = Vec::new();
    let mut rest = Vec::new();
    for t in terms_of(exp.clone()) {
        let (c, key) = split_term(t.clone());
        match key.as_slice() {
            [Cx::Call(Func::Ln, a)] => logs.push(pow((**a).clone(), Cx::Num(c))),
            _ => rest.push(t),
        }
    }
    if logs.is_empty() {
        return Cx::Pow(Box::new(Cx::Const(NamedConst::E)), Box::new(exp));
    }
    logs.push(pow(Cx::Const(NamedConst::E), add(rest)));
    mul(logs)
}

fn leading_negative(c: &Cx) -> bool {
    match c {
        Cx::Num(q) | Cx::Mul(q, _) => q.is_negative(),
        Cx::Add(ts) => ts.first().is_some_and(leading_negative),
        _ => false,
    }
}

fn call(f: Func, a: Cx) -> Cx {
    match f {
        Func::Exp => return pow(Cx::Const(NamedConst::E), a),
        Func::Sqrt => return pow(a, Cx::Num(half())),
        Func::Ln => {
            return match a {
                Cx::Num(q) if q.is_one() => Cx::Num(Q::zero()),
                Cx::Const(NamedConst::E) => Cx::Num(Q::one()),
                Cx::Pow(b, e) if *b == Cx::Const(NamedConst::E) => *e,
                other => Cx::Call(Func::Ln, Box::new(other)),
            }
        }
        _ => {}
    }
    let odd = matches!(
        f,
        Func::Sin | Func::Tan | Func::Sinh | Func::Arcsin | Func::Arctan
    );
    if a.is_num(0) {
        return Cx::Num(if odd { Q::zero() } else { Q::one() });
    }
    if leading_negative(&a) {
        let flipped = Cx::Call(f, Box::new(negate(a)));
        return if odd { negate(flipped) } else { flipped };
    }
    Cx::Call(f, Box::new(a))
}

fn render(c: &Cx) -> Expr {
    match c {
        Cx::Num(q) => render_num(q),
        Cx::Var(v) => Expr::Var(*v),
        Cx::Const(k) => Expr::Const(*k),
        Cx::Call(f, a) => Expr::call(*f, render(a)),
        Cx::Pow(..) => render_term(&Q::one(), std::slice::from_ref(c), true),
        Cx::Mul(q, fs) => render_term(q, fs, true),
        Cx::Add(ts) => render_sum(ts),
    }
}

fn render_num(q: &Q) -> Expr {
    if q.is_integer() {
        Expr::Num(q.clone())
    } else {
        Expr::Num(Q::from_integer(q.numer().clone())) / Expr::Num(Q::from_integer(q.denom().clone()))
    }
}

fn render_power(base: &Cx, exp: &Cx) -> Expr {
    match exp {
        Cx::Num(q) if q.is_one() => render(base),
        Cx::Num(q) if *q == half() => Expr::call(Func::Sqrt, render(base)),
        _ => Expr::pow(render(base), render(exp)),
    }
}

fn product(items: Vec<Expr>) -> Option<Expr> {
    items.into_iter().reduce(|a, b| a * b)
}

/// Render `coeff * factors`, moving negative numeric powers into a
/// denominator. With `signed == false` the magnitude is rendered.
fn render_term(coeff: &Q, factors: &[Cx], signed: bool) -> Expr {
    let mut numer = Vec::new();
    let mut denom = Vec::new();
    let magnitude = coeff.abs();
    let top = Q::from_integer(magnitude.numer().clone());
    let bottom = Q::from_integer(magnitude.denom().clone());
    if !bottom.is_one() {
        denom.push(Expr::Num(bottom));
    }
    for f in factors {
        match f {
            Cx::Pow(b, e) => match &**e {
                Cx::Num(q) if q.is_negative() => denom.push(render_power(b, &Cx::Num(-q))),
                _ => numer.push(render_power(b, e)),
            },
            other => numer.push(render(other)),
        }
    }
    if !top.is_one() || numer.is_empty() {
        numer.insert(0, Expr::Num(top));
    }
    if signed && coeff.is_negative() {
        let first = numer.remove(0);
        let first = match first {
            Expr::Num(q) => Expr::Num(-q),
            other => Expr::neg(other),
        };
        numer.insert(0, first);
    }
    let numer = product(numer).unwrap_or_else(Expr::one);
    match product(denom) {
        Some(d) => numer / d,
        None => numer,
    }
}

fn render_sum(ts: &[Cx]) -> Expr {
    let lead = ts.iter().position(|t| !leading_negative(t)).unwrap_or(0);
    let mut acc = render(&ts[lead]);
    for (i, t) in ts.iter().enumerate() {
        if i == lead {
            continue;
        }
        let (c, key) = split_term(t.clone());
        if c.is_negative() {
            acc = acc - render_term(&c, &key, false);
        } else {
            acc = acc + render_term(&c, &key, false);
        }
    }
    acc
}

fn depends_on(c: &Cx, v: Var) -> bool {
    match c {
        Cx::Num(_) | Cx::Const(_) => false,
        Cx::Var(w) => *w == v,
        Cx::Call(_, a) => depends_on(a, v),
        Cx::Pow(b, e) => depends_on(b, v) || depends_on(e, v),
        Cx::Mul(_, fs) | Cx::Add(fs) => fs.iter().any(|f| depends_on(f, v)),
    }
}

/// Derivative computed on the normal form, so that `s^k` for a sum `s`
/// becomes `k s^(k-1) s'` without expanding `s`.
fn derive(c: &Cx, v: Var) -> Cx {
    if !depends_on(c, v) {
        return Cx::Num(Q::zero());
    }
    let num = |n: i64| Cx::Num(int(n));
    match c {
        Cx::Num(_) | Cx::Const(_) => num(0),
        Cx::Var(_) => num(1),
        Cx::Add(ts) => add(ts.iter().map(|t| derive(t, v)).collect()),
        Cx::Mul(q, fs) => {
            let mut terms = Vec::with_capacity(fs.len());
            for i in 0..fs.len() {
                let d = derive(&fs[i], v);
                if d.is_num(0) {
                    continue;
                }
                let mut parts: Vec<Cx> = fs.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, f)| f.clone()).collect();
                parts.push(Cx::Num(q.clone()));
                parts.push(d);
                terms.push(mul(parts));
            }
            add(terms)
        }
        Cx::Pow(b, e) => {
            let (b, e) = (&**b, &**e);
            if !depends_on(e, v) {
                let lowered = add(vec![e.clone(), num(-1)]);
                return mul(vec![e.clone(), pow(b.clone(), lowered), derive(b, v)]);
            }
            // b^e (e' ln b + e b'/b)
            let log = mul(vec![derive(e, v), call(Func::Ln, b.clone())]);
            let ratio = mul(vec![e.clone(), derive(b, v), pow(b.clone(), num(-1))]);
            mul(vec![c.clone(), add(vec![log, ratio])])
        }
        Cx::Call(f, a) => {
            let inner = derive(a, v);
            let a = (**a).clone();
            let square = |a: Cx| pow(a, num(2));
            let outer = match f {
                Func::Sin => call(Func::Cos, a),
                Func::Cos => negate(call(Func::Sin, a)),
                Func::Tan => add(vec![num(1), square(call(Func::Tan, a))]),
                Func::Exp => call(Func::Exp, a),
                Func::Ln => pow(a, num(-1)),
                Func::Sqrt => mul(vec![Cx::Num(half()), pow(a, Cx::Num(-half()))]),
                Func::Sinh => call(Func::Cosh, a),
                Func::Cosh => call(Func::Sinh, a),
                Func::Arcsin => pow(add(vec![num(1), negate(square(a))]), Cx::Num(-half())),
                Func::Arctan => pow(add(vec![num(1), square(a)]), num(-1)),
            };
            mul(vec![outer, inner])
        }
    }
}

/// Simplified partial derivative of `e` with respect to `v`.
pub(super) fn derivative(e: &Expr, v: Var) -> Expr {
    render(&derive(&normalize(e), v))
}

/// Canonical simplified form of `e`.
pub fn simplify(e: &Expr) -> Expr {
    render(&normalize(e))
}
