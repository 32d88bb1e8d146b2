//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := base ('^' unary)?
//! base  := number | 'x' | 'u' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-u^2`
//! is `-(u^2)` while `u^-2` is `u^(-2)`. A minus sign directly in front of a
//! bare numeric literal folds into a negative literal.

use num_bigint::BigInt;
use thiserror::Error;

use super::{Expr, Func, NamedConst, Rational, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unexpected token {0}")]
    UnexpectedToken(String),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unknown identifier {0:?}")]
    UnknownIdentifier(String),
    #[error("function {func} takes exactly one argument")]
    ArityMismatch { func: &'static str },
    #[error("malformed number {0:?}")]
    InvalidNumber(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(q) => format!("number {q}"),
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push((Tok::Plus, start)),
            b'-' => out.push((Tok::Minus, start)),
            b'*' => out.push((Tok::Star, start)),
            b'/' => out.push((Tok::Slash, start)),
            b'^' => out.push((Tok::Caret, start)),
            b'(' => out.push((Tok::LParen, start)),
            b')' => out.push((Tok::RParen, start)),
            b',' => out.push((Tok::Comma, start)),
            b'0'..=b'9' | b'.' => {
                let (q, end) = lex_number(text, start)?;
                out.push((Tok::Num(q), start));
                i = end;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    kind: ParseErrorKind::UnexpectedChar(ch),
                    offset: start,
                });
            }
        }
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

/// Decimal literal with optional fraction and exponent, converted exactly.
fn lex_number(text: &str, start: usize) -> Result<(Rational, usize), ParseError> {
    let bytes = text.as_bytes();
    let mut i = start;
    let mut digits = String::new();
    let mut frac_len: i64 = 0;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        digits.push(bytes[i] as char);
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            digits.push(bytes[i] as char);
            frac_len += 1;
            i += 1;
        }
    }
    let bad = |end: usize| ParseError {
        kind: ParseErrorKind::InvalidNumber(text[start..end].to_string()),
        offset: start,
    };
    if digits.is_empty() {
        return Err(bad(i));
    }
    let mut exp10: i64 = 0;
    // exponent only when 'e'/'E' is followed by a digit or a signed digit
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        let mut sign = 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            if bytes[j] == b'-' {
                sign = -1;
            }
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            let exp_start = j;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            exp10 = text[exp_start..j].parse::<i64>().map_err(|_| bad(j))? * sign;
            if exp10.abs() > 400 {
                return Err(bad(j));
            }
            i = j;
        }
    }
    let mantissa: BigInt = digits.parse().map_err(|_| bad(i))?;
    let scale = exp10 - frac_len;
    let ten = BigInt::from(10);
    let q = if scale >= 0 {
        Rational::from_integer(mantissa * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(mantissa, num_traits::pow(ten, (-scale) as usize))
    };
    Ok((q, i))
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self) -> ParseError {
        let kind = match self.peek() {
            Tok::End => ParseErrorKind::UnexpectedEnd,
            t => ParseErrorKind::UnexpectedToken(t.describe()),
        };
        ParseError {
            kind,
            offset: self.offset(),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = lhs + self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = lhs * self.unary()?;
                }
                Tok::Slash => {
                    self.bump();
                    lhs = lhs / self.unary()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() != Tok::Minus {
            return self.power();
        }
        self.bump();
        let literal_follows = matches!(self.peek(), Tok::Num(_));
        let before = self.pos;
        let operand = self.unary()?;
        match operand {
            Expr::Num(q) if literal_follows && self.pos == before + 1 => Ok(Expr::Num(-q)),
            other => Ok(Expr::neg(other)),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            Ok(Expr::pow(base, exponent))
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(q) => {
                self.bump();
                Ok(Expr::Num(q))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "x" => Ok(Expr::Var(Var::X)),
                    "u" => Ok(Expr::Var(Var::U)),
                    "pi" => Ok(Expr::Const(NamedConst::Pi)),
                    "e" => Ok(Expr::Const(NamedConst::E)),
                    _ => match Func::from_name(&name) {
                        Some(f) => self.call(f, offset),
                        None => Err(ParseError {
                            kind: ParseErrorKind::UnknownIdentifier(name),
                            offset,
                        }),
                    },
                }
            }
            _ => Err(self.unexpected()),
        }
    }

    fn call(&mut self, f: Func, offset: usize) -> Result<Expr, ParseError> {
        let arity = || ParseError {
            kind: ParseErrorKind::ArityMismatch { func: f.name() },
            offset,
        };
        if *self.peek() != Tok::LParen {
            return Err(arity());
        }
        self.bump();
        if *self.peek() == Tok::RParen {
            return Err(arity());
        }
        let arg = self.expr()?;
        match self.peek() {
            Tok::RParen => {
                self.bump();
                Ok(Expr::call(f, arg))
            }
            Tok::Comma => Err(arity()),
            _ => Err(self.unexpected()),
        }
    }
}

/// Parse an expression in `x` and `u`.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected());
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::BinOp;

    #[test]
    fn reciprocal_of_u() {
        assert_eq!(parse("1/u").unwrap(), Expr::int(1) / Expr::u());
    }

    #[test]
    fn power_is_right_associative() {
        let e = parse("x^u^2").unwrap();
        assert_eq!(e, Expr::pow(Expr::x(), Expr::pow(Expr::u(), Expr::int(2))));
    }

    #[test]
    fn e_caret_x_is_the_constant_raised_to_x() {
        assert_eq!(parse("e^x").unwrap(), Expr::pow(Expr::e(), Expr::x()));
    }

    #[test]
    fn example_two_right_hand_side() {
        let e = parse("e^x + sqrt(2*u*e^x - e^(2*x) - u^2 + 1)").unwrap();
        let radicand = Expr::int(2) * Expr::u() * Expr::pow(Expr::e(), Expr::x())
            - Expr::pow(Expr::e(), Expr::int(2) * Expr::x())
            - Expr::pow(Expr::u(), Expr::int(2))
            + Expr::int(1);
        let want = Expr::pow(Expr::e(), Expr::x()) + Expr::call(Func::Sqrt, radicand);
        assert_eq!(e, want);
    }

    #[test]
    fn example_one_jacobi_component() {
        let e = parse("x*(u^2-x+1)/u").unwrap();
        let inner = Expr::pow(Expr::u(), Expr::int(2)) - Expr::x() + Expr::int(1);
        assert_eq!(e, Expr::x() * inner / Expr::u());
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        assert_eq!(
            parse("-u^2").unwrap(),
            Expr::neg(Expr::pow(Expr::u(), Expr::int(2)))
        );
        assert_eq!(parse("u^-2").unwrap(), Expr::pow(Expr::u(), Expr::int(-2)));
        assert_eq!(parse("-2").unwrap(), Expr::int(-2));
        assert_eq!(parse("-(2)").unwrap(), Expr::neg(Expr::int(2)));
        assert_eq!(
            parse("-2^x").unwrap(),
            Expr::neg(Expr::pow(Expr::int(2), Expr::x()))
        );
    }

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(parse("0.5").unwrap(), Expr::ratio(1, 2));
        assert_eq!(parse("1.25e-2").unwrap(), Expr::ratio(1, 80));
        assert_eq!(parse("3E2").unwrap(), Expr::int(300));
    }

    #[test]
    fn errors_carry_byte_offsets() {
        let err = parse("x + * u").unwrap_err();
        assert_eq!(err.offset, 4);
        let err = parse("x + foo(u)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("foo".into()));
        assert_eq!(err.offset, 4);
        let err = parse("sin(x, u)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::ArityMismatch { func: "sin" });
        let err = parse("cos").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::ArityMismatch { func: "cos" });
        let err = parse("(x + u").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(err.offset, 6);
        let err = parse("x $ u").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedChar('$'));
        assert_eq!(err.offset, 2);
    }

    #[test]
    fn no_implicit_multiplication() {
        assert!(parse("2x").is_err());
        assert!(parse("x(u)").is_err());
    }

    #[test]
    fn subtraction_chain_is_left_associative() {
        let e = parse("x - u - 1").unwrap();
        match e {
            Expr::Binary(BinOp::Sub, lhs, _) => {
                assert!(matches!(*lhs, Expr::Binary(BinOp::Sub, _, _)))
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
