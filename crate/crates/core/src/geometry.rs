//! The surface associated with `u' = phi(x, u)`.
//!
//! The plane region carries the metric `[[1 + phi^2, -phi], [-phi, 1]]`, in
//! which `A = d/dx + phi d/du` and `d/du` form an orthonormal frame. All
//! operations here are symbolic and return simplified expressions.

use serde::Serialize;
use thiserror::Error;

use crate::expr::{
    diff, parse, simplify, zero_test_with, CompiledExpr, Expr, ParseError, Region, RegionError,
    SampleConfig, Var, ZeroTestError, ZeroVerdict,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("cannot parse phi: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error("phi cannot be evaluated at the base point ({x}, {u}) of the region")]
    SingularBasePoint { x: f64, u: f64 },
    #[error("phi or phi_u is finite on only {finite} of {total} sample points")]
    MostlySingular { finite: usize, total: usize },
}

/// `u'(x) = phi(x, u)` on a region avoiding the singularities of `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeProblem {
    phi: Expr,
    phi_u: Expr,
    region: Region,
}

impl OdeProblem {
    pub fn new(phi: Expr, region: Region) -> Result<OdeProblem, ProblemError> {
        let phi = simplify(&phi);
        let phi_u = diff(&phi, Var::U);
        let f = CompiledExpr::new(&phi);
        let fu = CompiledExpr::new(&phi_u);
        let (bx, bu) = region.base_point();
        if f.eval(bx, bu).is_err() {
            return Err(ProblemError::SingularBasePoint { x: bx, u: bu });
        }
        let pts = region.sample_points(64, 0)?;
        let finite = pts
            .iter()
            .filter(|&&(x, u)| f.eval(x, u).is_ok() && fu.eval(x, u).is_ok())
            .count();
        if finite * 100 < 95 * pts.len() {
            return Err(ProblemError::MostlySingular {
                finite,
                total: pts.len(),
            });
        }
        Ok(OdeProblem { phi, phi_u, region })
    }

    pub fn parse(phi: &str, region: &str) -> Result<OdeProblem, ProblemError> {
        OdeProblem::new(parse(phi)?, region.parse()?)
    }

    pub fn phi(&self) -> &Expr {
        &self.phi
    }

    /// `d phi / d u`, simplified.
    pub fn phi_u(&self) -> &Expr {
        &self.phi_u
    }

    pub fn region(&self) -> &Region {
        &self.region
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// `c1 d/dx + c2 d/du`
    Coordinate,
    /// `c1 A + c2 d/du`
    Geodesic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub frame: Frame,
    pub c1: Expr,
    pub c2: Expr,
}

impl VectorField {
    pub fn coordinate(c1: Expr, c2: Expr) -> VectorField {
        VectorField {
            frame: Frame::Coordinate,
            c1,
            c2,
        }
    }

    pub fn geodesic(c1: Expr, c2: Expr) -> VectorField {
        VectorField {
            frame: Frame::Geodesic,
            c1,
            c2,
        }
    }

    pub fn d_dx() -> VectorField {
        VectorField::coordinate(Expr::one(), Expr::zero())
    }

    pub fn d_du() -> VectorField {
        VectorField::coordinate(Expr::zero(), Expr::one())
    }

    /// Apply a coordinate-frame field to `h` as a derivation.
    ///
    /// # Panics
    /// Panics on a geodesic-frame field; convert with [`to_coordinate`] first.
    pub fn derive(&self, h: &Expr) -> Expr {
        assert_eq!(self.frame, Frame::Coordinate, "derive needs coordinate components");
        simplify(&(&self.c1 * &diff(h, Var::X) + &self.c2 * &diff(h, Var::U)))
    }

    pub fn simplified(&self) -> VectorField {
        VectorField {
            frame: self.frame,
            c1: simplify(&self.c1),
            c2: simplify(&self.c2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricComponents {
    pub g11: Expr,
    pub g12: Expr,
    pub g22: Expr,
}

impl MetricComponents {
    pub fn determinant(&self) -> Expr {
        simplify(&(&self.g11 * &self.g22 - Expr::pow(self.g12.clone(), Expr::int(2))))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("expected a vector field in the {0:?} frame")]
    FrameMismatch(Frame),
}

/// `A = d/dx + phi d/du`.
pub fn field_a(p: &OdeProblem) -> VectorField {
    VectorField::coordinate(Expr::one(), p.phi.clone())
}

pub fn metric_components(p: &OdeProblem) -> MetricComponents {
    let phi = &p.phi;
    MetricComponents {
        g11: simplify(&(Expr::one() + Expr::pow(phi.clone(), Expr::int(2)))),
        g12: simplify(&-phi),
        g22: Expr::one(),
    }
}

/// `g(X, Y)` for two fields, converted to coordinates first.
pub fn metric_inner(p: &OdeProblem, x: &VectorField, y: &VectorField) -> Expr {
    let g = metric_components(p);
    let x = to_coordinate(p, x);
    let y = to_coordinate(p, y);
    simplify(
        &(&(&g.g11 * &x.c1) * &y.c1
            + &(&g.g12 * &x.c1) * &y.c2
            + &(&g.g12 * &x.c2) * &y.c1
            + &(&g.g22 * &x.c2) * &y.c2),
    )
}

/// `A(h) = h_x + phi h_u`.
pub fn apply_a(p: &OdeProblem, h: &Expr) -> Expr {
    simplify(&(diff(h, Var::X) + &p.phi * &diff(h, Var::U)))
}

/// Gaussian curvature `K = -d/du (A(phi))`.
pub fn curvature(p: &OdeProblem) -> Expr {
    simplify(&-diff(&apply_a(p, &p.phi), Var::U))
}

/// `S(h) = A(h) - phi_u h`.
pub fn op_s(p: &OdeProblem, h: &Expr) -> Expr {
    simplify(&(apply_a(p, h) - &p.phi_u * h))
}

/// `T(h) = A(h) + phi_u h`.
pub fn op_t(p: &OdeProblem, h: &Expr) -> Expr {
    simplify(&(apply_a(p, h) + &p.phi_u * h))
}

/// Components `(sigma, delta)` of `X = sigma A + delta d/du`.
///
/// From `A = d/dx + phi d/du`, `a d/dx + b d/du = a A + (b - a phi) d/du`.
pub fn to_frame(p: &OdeProblem, x: &VectorField) -> (Expr, Expr) {
    match x.frame {
        Frame::Geodesic => (simplify(&x.c1), simplify(&x.c2)),
        Frame::Coordinate => (simplify(&x.c1), simplify(&(&x.c2 - &(&x.c1 * &p.phi)))),
    }
}

/// Coordinate field of `sigma A + delta d/du`.
pub fn from_frame(p: &OdeProblem, sigma: &Expr, delta: &Expr) -> VectorField {
    VectorField::coordinate(simplify(sigma), simplify(&(delta + &(sigma * &p.phi))))
}

pub fn to_coordinate(p: &OdeProblem, x: &VectorField) -> VectorField {
    match x.frame {
        Frame::Coordinate => x.clone(),
        Frame::Geodesic => from_frame(p, &x.c1, &x.c2),
    }
}

pub fn to_geodesic(p: &OdeProblem, x: &VectorField) -> VectorField {
    let (s, d) = to_frame(p, x);
    VectorField::geodesic(s, d)
}

/// Levi-Civita connection in the `(A, d/du)` frame:
/// `nabla_X Y = (X(y1) - phi_u x2 y2) A + (X(y2) + phi_u x2 y1) d/du`.
pub fn covariant_derivative(p: &OdeProblem, x: &VectorField, y: &VectorField) -> VectorField {
    let (_, x2) = to_frame(p, x);
    let (y1, y2) = to_frame(p, y);
    let xc = to_coordinate(p, x);
    let phi_u = &p.phi_u;
    VectorField::geodesic(
        simplify(&(xc.derive(&y1) - &(phi_u * &x2) * &y2)),
        simplify(&(xc.derive(&y2) + &(phi_u * &x2) * &y1)),
    )
}

/// `[X, Y]` of two coordinate-frame fields.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField, GeometryError> {
    if x.frame != Frame::Coordinate || y.frame != Frame::Coordinate {
        return Err(GeometryError::FrameMismatch(Frame::Coordinate));
    }
    Ok(VectorField::coordinate(
        simplify(&(x.derive(&y.c1) - y.derive(&x.c1))),
        simplify(&(x.derive(&y.c2) - y.derive(&x.c2))),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryVerdict {
    pub is_symmetry: bool,
    /// `rho` in `[X, A] = rho A` when `X` is a symmetry.
    pub rho: Option<Expr>,
    pub bracket: VectorField,
    /// Zero test of `B2 - B1 phi` for `B = [X, A]`.
    pub evidence: ZeroVerdict,
}

/// Lie point symmetry test `[X, A] = rho A`.
pub fn is_lie_point_symmetry(
    p: &OdeProblem,
    x: &VectorField,
    cfg: &SampleConfig,
) -> Result<SymmetryVerdict, ZeroTestError> {
    let xc = to_coordinate(p, x);
    let bracket = lie_bracket(&xc, &field_a(p)).unwrap_or_else(|_| unreachable!());
    let off_a = simplify(&(&bracket.c2 - &(&bracket.c1 * &p.phi)));
    let evidence = zero_test_with(&off_a, &p.region, cfg)?;
    let is_symmetry = evidence.is_zero();
    Ok(SymmetryVerdict {
        is_symmetry,
        rho: is_symmetry.then(|| bracket.c1.clone()),
        bracket,
        evidence,
    })
}

/// Residuals `(A^2(sigma), A^2(delta) + K delta)` of the relative Jacobi
/// equation for `J = sigma A + delta d/du`.
pub fn jacobi_residual(p: &OdeProblem, sigma: &Expr, delta: &Expr) -> (Expr, Expr) {
    let k = curvature(p);
    let r_a = apply_a(p, &apply_a(p, sigma));
    let r_u = simplify(&(apply_a(p, &apply_a(p, delta)) + &k * delta));
    (r_a, r_u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{eval, zero_test};

    fn ex1() -> OdeProblem {
        OdeProblem::parse("1/u", "x=0:1,u=0.5:2").unwrap()
    }

    fn ex2() -> OdeProblem {
        OdeProblem::parse(
            "e^x + sqrt(2*u*e^x - e^(2*x) - u^2 + 1)",
            "x=0:0.8,u=1.3:1.9",
        )
        .unwrap()
    }

    fn linear() -> OdeProblem {
        OdeProblem::parse("sin(x)*u + x^2", "x=0:1,u=-1:1").unwrap()
    }

    fn e(s: &str) -> Expr {
        simplify(&parse(s).unwrap())
    }

    #[test]
    fn associated_fields() {
        assert_eq!(field_a(&ex1()).c2, e("1/u"));
        let flat = OdeProblem::parse("0", "x=0:1,u=0:1").unwrap();
        assert_eq!(field_a(&flat), VectorField::d_dx());
        assert_eq!(field_a(&linear()).c2, e("sin(x)*u + x^2"));
    }

    #[test]
    fn metric_has_unit_determinant() {
        for p in [ex1(), ex2(), linear()] {
            assert!(metric_components(&p).determinant().is_one());
        }
        let m = metric_components(&ex1());
        assert_eq!(m.g11, e("1 + 1/u^2"));
        assert_eq!(m.g12, e("-1/u"));
        assert!(m.g22.is_one());
    }

    #[test]
    fn a_acting_on_functions() {
        let p = ex1();
        assert!(apply_a(&p, &Expr::x()).is_one());
        assert_eq!(apply_a(&p, &Expr::u()), e("1/u"));
        assert_eq!(apply_a(&p, &e("x*u - x^2/u")), e("u - x/u + x^2/u^3"));
    }

    #[test]
    fn curvatures_of_the_three_examples() {
        assert_eq!(curvature(&ex1()), e("-3/u^4"));
        assert!(curvature(&ex2()).is_one());
        // -q' - q^2 for q = sin x
        assert_eq!(curvature(&linear()), e("-cos(x) - sin(x)^2"));
    }

    #[test]
    fn operators_s_and_t() {
        let p = ex1();
        assert_eq!(op_s(&p, &e("x*(u^2 - x)/u")), Expr::u());
        assert!(op_t(&p, &Expr::u()).is_zero());
        let flat = OdeProblem::parse("0", "x=0:1,u=0:1").unwrap();
        assert!(op_s(&flat, &Expr::one()).is_zero());
        assert!(op_t(&flat, &Expr::one()).is_zero());

        let p = ex2();
        let mu = op_s(&p, &e("cos(x)"));
        let printed = parse("-sin(x) + cos(x)*(u - e^x)/sqrt(2*u*e^x - e^(2*x) - u^2 + 1)").unwrap();
        let v = zero_test(&(mu - printed), p.region(), 1e-9, 64).unwrap();
        assert!(v.is_zero(), "{v:?}");
    }

    #[test]
    fn frame_conversion() {
        let p = ex1();
        let j = VectorField::coordinate(e("x"), e("x*(u^2 - x + 1)/u"));
        let (s, d) = to_frame(&p, &j);
        assert_eq!(s, Expr::x());
        assert_eq!(d, e("x*(u^2 - x)/u"));
        assert_eq!(from_frame(&p, &s, &d), j.simplified());
        let (s, d) = to_frame(&p, &field_a(&p));
        assert!(s.is_one() && d.is_zero());
        let cx = VectorField::coordinate(Expr::zero(), e("cos(x)"));
        assert_eq!(to_frame(&ex2(), &cx), (Expr::zero(), e("cos(x)")));
    }

    #[test]
    fn connection_identities() {
        for p in [ex1(), ex2(), linear()] {
            let a = field_a(&p);
            let naa = covariant_derivative(&p, &a, &a);
            assert!(naa.c1.is_zero() && naa.c2.is_zero());
            let nau = covariant_derivative(&p, &a, &VectorField::d_du());
            assert!(nau.c1.is_zero() && nau.c2.is_zero());
        }
        let p = ex1();
        let nuu = covariant_derivative(&p, &VectorField::d_du(), &VectorField::d_du());
        assert_eq!(nuu, VectorField::geodesic(e("1/u^2"), Expr::zero()));
    }

    #[test]
    fn orthonormal_frame() {
        for p in [ex1(), ex2(), linear()] {
            let a = field_a(&p);
            let du = VectorField::d_du();
            assert!(metric_inner(&p, &a, &a).is_one());
            assert!(metric_inner(&p, &du, &du).is_one());
            assert!(metric_inner(&p, &a, &du).is_zero());
        }
    }

    #[test]
    fn brackets() {
        let p = ex1();
        let j = VectorField::coordinate(e("x"), e("x*(u^2 - x + 1)/u"));
        let b = lie_bracket(&j, &field_a(&p)).unwrap();
        assert_eq!(b, VectorField::coordinate(e("-1"), e("-(u^2 + 1)/u")));
        let a = field_a(&p);
        let aa = lie_bracket(&a, &a).unwrap();
        assert!(aa.c1.is_zero() && aa.c2.is_zero());
        let c = lie_bracket(&VectorField::d_dx(), &VectorField::d_du()).unwrap();
        assert!(c.c1.is_zero() && c.c2.is_zero());
        assert!(lie_bracket(&VectorField::geodesic(Expr::one(), Expr::zero()), &a).is_err());
    }

    #[test]
    fn symmetry_verdicts() {
        let cfg = SampleConfig::default();
        let p = ex1();
        let j = VectorField::coordinate(e("x"), e("x*(u^2 - x + 1)/u"));
        let v = is_lie_point_symmetry(&p, &j, &cfg).unwrap();
        assert!(!v.is_symmetry);
        assert!(v.rho.is_none());

        let v = is_lie_point_symmetry(&p, &field_a(&p), &cfg).unwrap();
        assert!(v.is_symmetry);
        assert!(v.rho.unwrap().is_zero());

        let cos_du = VectorField::coordinate(Expr::zero(), e("cos(x)"));
        assert!(!is_lie_point_symmetry(&ex2(), &cos_du, &cfg).unwrap().is_symmetry);
    }

    #[test]
    fn jacobi_residuals() {
        let p = ex1();
        let (ra, ru) = jacobi_residual(&p, &Expr::x(), &e("x*(u^2 - x)/u"));
        assert!(ra.is_zero());
        assert!(ru.is_zero(), "{ru}");
        let (ra, ru) = jacobi_residual(&p, &e("3*x + 2"), &Expr::zero());
        assert!(ra.is_zero() && ru.is_zero());
        let flat = OdeProblem::parse("0", "x=0:1,u=0:1").unwrap();
        let (ra, ru) = jacobi_residual(&flat, &Expr::zero(), &Expr::u());
        assert!(ra.is_zero() && ru.is_zero());
        let (ra, _) = jacobi_residual(&flat, &e("x^2"), &Expr::zero());
        assert_eq!(eval(&ra, 0.3, 0.3).unwrap(), 2.0);
    }

    #[test]
    fn problem_validation() {
        assert!(matches!(
            OdeProblem::parse("1/u", "x=0:1,u=-1:1"),
            Err(ProblemError::SingularBasePoint { .. })
        ));
        assert!(matches!(
            OdeProblem::parse("sqrt(u)", "x=0:1,u=-1:3"),
            Err(ProblemError::MostlySingular { .. })
        ));
        assert!(matches!(OdeProblem::parse("1/", "x=0:1,u=0:1"), Err(ProblemError::Parse(_))));
    }
}
