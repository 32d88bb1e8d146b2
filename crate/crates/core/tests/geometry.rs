//! Geometric invariants of the associated surface.

mod common;

use common::{corpus, CORPUS_REGION};
use jacobi_ode::expr::{diff, simplify, zero_test, Expr, Var};
use jacobi_ode::geometry::{
    apply_a, covariant_derivative, curvature, field_a, jacobi_residual, metric_components, op_s,
    op_t, to_coordinate, OdeProblem, VectorField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problems() -> Vec<OdeProblem> {
    corpus()
        .into_iter()
        .map(|phi| OdeProblem::new(phi, CORPUS_REGION.parse().unwrap()).unwrap())
        .collect()
}

fn vanishes(e: &Expr, p: &OdeProblem, tol: f64) -> bool {
    zero_test(e, p.region(), tol, 64).unwrap().is_zero()
}

/// `nabla_X Y` in coordinates from Christoffel symbols of
/// `g = [[1 + phi^2, -phi], [-phi, 1]]`, independent of the frame formulas.
fn christoffel_derivative(p: &OdeProblem, x: &VectorField, y: &VectorField) -> [Expr; 2] {
    let phi = p.phi().clone();
    let g = [
        [Expr::one() + Expr::pow(phi.clone(), Expr::int(2)), -phi.clone()],
        [-phi.clone(), Expr::one()],
    ];
    // det g = 1
    let ginv = [
        [Expr::one(), phi.clone()],
        [phi.clone(), Expr::one() + Expr::pow(phi, Expr::int(2))],
    ];
    let vars = [Var::X, Var::U];
    let dg = |l: usize, j: usize, i: usize| diff(&g[l][j], vars[i]);
    let gamma = |k: usize, i: usize, j: usize| {
        let mut s = Expr::zero();
        for l in 0..2 {
            s = s + &ginv[k][l] * &(dg(l, j, i) + dg(l, i, j) - diff(&g[i][j], vars[l]));
        }
        s / Expr::int(2)
    };
    let (xc, yc) = (to_coordinate(p, x), to_coordinate(p, y));
    let xs = [&xc.c1, &xc.c2];
    let ys = [&yc.c1, &yc.c2];
    [0, 1].map(|k| {
        let mut s = xc.derive(ys[k]);
        for i in 0..2 {
            for j in 0..2 {
                s = s + &gamma(k, i, j) * &(xs[i] * ys[j]);
            }
        }
        simplify(&s)
    })
}

#[test]
fn a_is_geodesic_and_du_is_parallel() {
    for p in problems() {
        let a = field_a(&p);
        for y in [a.clone(), VectorField::d_du()] {
            let frame = to_coordinate(&p, &covariant_derivative(&p, &a, &y));
            assert!(vanishes(&frame.c1, &p, 1e-9) && vanishes(&frame.c2, &p, 1e-9), "phi = {}", p.phi());
            let [c1, c2] = christoffel_derivative(&p, &a, &y);
            assert!(vanishes(&c1, &p, 1e-8) && vanishes(&c2, &p, 1e-8), "phi = {}: {c1}, {c2}", p.phi());
        }
    }
}

#[test]
fn frame_connection_matches_christoffel_symbols() {
    let fields = corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in problems().into_iter().take(12) {
        let pick = |rng: &mut ChaCha8Rng| fields[rng.gen_range(0..fields.len())].clone();
        let x = VectorField::coordinate(pick(&mut rng), pick(&mut rng));
        let y = VectorField::coordinate(pick(&mut rng), pick(&mut rng));
        let got = to_coordinate(&p, &covariant_derivative(&p, &x, &y));
        let [w1, w2] = christoffel_derivative(&p, &x, &y);
        assert!(vanishes(&(got.c1 - w1), &p, 1e-7), "phi = {}", p.phi());
        assert!(vanishes(&(got.c2 - w2), &p, 1e-7), "phi = {}", p.phi());
    }
}

#[test]
fn metric_has_unit_determinant() {
    for p in problems() {
        assert_eq!(metric_components(&p).determinant(), Expr::one(), "phi = {}", p.phi());
    }
}

#[test]
fn trivial_fields_are_structurally_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in problems() {
        let (a, b) = (rng.gen_range(-20i64..20), rng.gen_range(-20i64..20));
        let sigma = Expr::int(a) * Expr::x() + Expr::int(b);
        let (ra, ru) = jacobi_residual(&p, &sigma, &Expr::zero());
        assert!(ra.is_zero() && ru.is_zero(), "phi = {}: {ra}, {ru}", p.phi());
    }
}

/// `T(S(h)) = A^2(h) + K h` for random pairs from the corpus.
#[test]
fn composition_of_s_and_t() {
    let exprs = corpus();
    let problems = problems();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let p = &problems[rng.gen_range(0..problems.len())];
        let h = &exprs[rng.gen_range(0..exprs.len())];
        let lhs = op_t(p, &op_s(p, h));
        let rhs = apply_a(p, &apply_a(p, h)) + curvature(p) * h.clone();
        assert!(vanishes(&(lhs - rhs), p, 1e-8), "phi = {}, h = {h}", p.phi());
    }
}
