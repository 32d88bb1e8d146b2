//! Parser, printer, simplifier and differentiation properties.

mod common;

use common::{ast, corpus, CORPUS, CORPUS_REGION};
use jacobi_ode::expr::{diff, diff_raw, eval, parse, simplify, zero_test, Expr, Func, Region, Var};
use proptest::prelude::*;

/// Small polynomial-and-elementary trees that stay finite on the corpus region.
fn smooth() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-5i64..6).prop_map(Expr::int),
        Just(Expr::x()),
        Just(Expr::u()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            inner.clone().prop_map(|a| Expr::call(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Exp, a / Expr::int(4))),
            (inner, 2i64..4).prop_map(|(a, n)| Expr::pow(a, Expr::int(n))),
        ]
    })
}

fn region() -> Region {
    CORPUS_REGION.parse().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn parse_print_round_trip(e in ast()) {
        let printed = e.to_string();
        let back = parse(&printed).unwrap_or_else(|err| panic!("{printed}: {err}"));
        prop_assert_eq!(back, e, "{}", printed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simplify_is_idempotent(e in smooth()) {
        let once = simplify(&e);
        prop_assert_eq!(simplify(&once), once.clone(), "{}", e);
    }

    #[test]
    fn simplify_preserves_values(e in smooth()) {
        let s = simplify(&e);
        let r = region();
        prop_assert!(zero_test(&(e.clone() - s.clone()), &r, 1e-9, 32).unwrap().is_zero(), "{} vs {}", e, s);
    }

    #[test]
    fn diff_is_linear(a in smooth(), b in smooth(), c in -4i64..5) {
        let c = Expr::int(c);
        let lhs = diff(&(a.clone() + c.clone() * b.clone()), Var::X);
        let rhs = diff(&a, Var::X) + c * diff(&b, Var::X);
        prop_assert!(zero_test(&(lhs - rhs), &region(), 1e-8, 32).unwrap().is_zero());
    }
}

#[test]
fn corpus_is_large_enough() {
    assert!(CORPUS.len() >= 30);
}

#[test]
fn simplify_is_idempotent_on_corpus() {
    for e in corpus() {
        let once = simplify(&e);
        assert_eq!(simplify(&once), once, "{e}");
    }
}

/// Central differences with step `h` against both derivative paths.
#[test]
fn derivatives_match_finite_differences() {
    let r = region();
    let pts = r.sample_points(32, 7).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for e in corpus() {
        for v in [Var::X, Var::U] {
            let (d, raw) = (diff(&e, v), diff_raw(&e, v));
            for &(x, u) in &pts {
                let at = |dx: f64, du: f64| eval(&e, x + dx, u + du).unwrap();
                let fd = match v {
                    Var::X => (at(h, 0.0) - at(-h, 0.0)) / (2.0 * h),
                    Var::U => (at(0.0, h) - at(0.0, -h)) / (2.0 * h),
                };
                for exact in [eval(&d, x, u).unwrap(), eval(&raw, x, u).unwrap()] {
                    let rel = (exact - fd).abs() / exact.abs().max(1.0);
                    assert!(rel < 1e-5, "d/d{v:?} {e} at ({x}, {u}): {exact} vs {fd}");
                    worst = worst.max(rel);
                }
            }
        }
    }
    assert!(worst < 1e-5);
}
