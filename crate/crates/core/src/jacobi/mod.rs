//! Automatic construction of Jacobi fields `J = delta(x) d/du` relative to
//! `A`, for curvature that is constant or depends on `x` only.
//!
//! With `sigma = 0` and `delta` free of `u`, `A^2(delta) + K delta = 0`
//! reduces to `delta'' + k(x) delta = 0`.

mod dopri;

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::expr::{
    diff, simplify, zero_test_with, CompiledExpr, Expr, Func, Rational, Region, SampleConfig,
    Var, ZeroVerdict,
};
use crate::geometry::{curvature, OdeProblem};
use crate::quadrature::antiderivative_1d;

/// Nodes of a numeric delta table.
pub const TABLE_NODES: usize = 401;
/// Local error bound of the adaptive solver.
pub const SOLVER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum CurvatureClass {
    Constant { k: f64 },
    XOnly { k: Expr },
    General,
}

impl CurvatureClass {
    pub fn name(&self) -> &'static str {
        match self {
            CurvatureClass::Constant { .. } => "constant",
            CurvatureClass::XOnly { .. } => "x_only",
            CurvatureClass::General => "general",
        }
    }
}

/// Curvature with its class and the zero tests that decided it.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureInfo {
    pub curvature: Expr,
    pub class: CurvatureClass,
    /// Exact value when the curvature simplified to a literal.
    pub exact_k: Option<Rational>,
    pub du_evidence: Option<ZeroVerdict>,
    pub dx_evidence: Option<ZeroVerdict>,
}

pub fn classify_curvature(p: &OdeProblem, cfg: &SampleConfig) -> CurvatureInfo {
    let k = curvature(p);
    let region = p.region();
    let general = |du| CurvatureInfo {
        curvature: k.clone(),
        class: CurvatureClass::General,
        exact_k: None,
        du_evidence: du,
        dx_evidence: None,
    };
    if let Expr::Num(q) = &k {
        return CurvatureInfo {
            class: CurvatureClass::Constant {
                k: k.num_value().unwrap_or(f64::NAN),
            },
            exact_k: Some(q.clone()),
            du_evidence: Some(ZeroVerdict::StructurallyZero),
            dx_evidence: Some(ZeroVerdict::StructurallyZero),
            curvature: k,
        };
    }
    let du = match zero_test_with(&diff(&k, Var::U), region, cfg) {
        Ok(v) if v.is_zero() => v,
        Ok(v) => return general(Some(v)),
        Err(_) => return general(None),
    };
    // a u-dependence that only cancels numerically is frozen at the base point
    let kx = if k.free_of(Var::U) {
        k.clone()
    } else {
        simplify(&k.subs(Var::U, &Expr::from_f64(region.base_point().1)))
    };
    let dx = match zero_test_with(&diff(&kx, Var::X), region, cfg) {
        Ok(v) => v,
        Err(_) => return general(Some(du)),
    };
    let class = if dx.is_zero() {
        let (bx, bu) = region.base_point();
        match CompiledExpr::new(&k).eval(bx, bu) {
            Ok(v) => CurvatureClass::Constant { k: v },
            Err(_) => return general(Some(du)),
        }
    } else {
        CurvatureClass::XOnly { k: kx }
    };
    CurvatureInfo {
        curvature: k,
        class,
        exact_k: None,
        du_evidence: Some(du),
        dx_evidence: Some(dx),
    }
}

/// Particular solution of `delta'' + k delta = 0` with `delta(0) = 1`,
/// `delta'(0) = 0`: `cos(sqrt(k) x)`, `1` or `cosh(sqrt(-k) x)`.
pub fn constant_curvature_delta(k: f64) -> Expr {
    if k.fract() == 0.0 && k.abs() < 1e15 {
        return constant_curvature_delta_exact(&Rational::from_integer(BigInt::from(k as i64)));
    }
    if k == 0.0 {
        return Expr::one();
    }
    let (f, root) = if k > 0.0 {
        (Func::Cos, k.sqrt())
    } else {
        (Func::Cosh, (-k).sqrt())
    };
    simplify(&Expr::call(f, Expr::from_f64(root) * Expr::x()))
}

pub fn constant_curvature_delta_exact(k: &Rational) -> Expr {
    if k.is_zero() {
        return Expr::one();
    }
    let f = if k.is_positive() { Func::Cos } else { Func::Cosh };
    let root = Expr::pow(Expr::Num(k.abs()), Expr::ratio(1, 2));
    simplify(&Expr::call(f, root * Expr::x()))
}

/// `delta` on a uniform grid with values of `delta'` and `delta'' = -k delta`.
///
/// Values between nodes use cubic Hermite interpolation of
/// `(delta, delta')`; derivatives use Hermite interpolation of
/// `(delta', delta'')`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaTable {
    xs: Vec<f64>,
    delta: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    /// Initial data `(delta, delta')` at the left end.
    pub initial: (f64, f64),
    pub sign_changes: usize,
    /// Intervals around zeros of `delta`, each two grid steps wide.
    pub exclusion_hints: Vec<(f64, f64)>,
}

fn hermite(t: f64, h: f64, y0: f64, y1: f64, m0: f64, m1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * m0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * m1
}

impl DeltaTable {
    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    fn locate(&self, x: f64) -> Option<(usize, f64, f64)> {
        let (lo, hi) = self.x_range();
        let slack = 1e-9 * (hi - lo);
        if !(x >= lo - slack && x <= hi + slack) {
            return None;
        }
        let h = (hi - lo) / (self.xs.len() - 1) as f64;
        let i = (((x - lo) / h).floor().max(0.0) as usize).min(self.xs.len() - 2);
        Some((i, (x - self.xs[i]) / h, h))
    }

    pub fn value(&self, x: f64) -> Option<f64> {
        let (i, t, h) = self.locate(x)?;
        Some(hermite(t, h, self.delta[i], self.delta[i + 1], self.d1[i], self.d1[i + 1]))
    }

    pub fn derivative(&self, x: f64) -> Option<f64> {
        let (i, t, h) = self.locate(x)?;
        Some(hermite(t, h, self.d1[i], self.d1[i + 1], self.d2[i], self.d2[i + 1]))
    }

    /// `x,delta,delta_prime` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,delta,delta_prime\n");
        for i in 0..self.xs.len() {
            let _ = writeln!(out, "{:.17e},{:.17e},{:.17e}", self.xs[i], self.delta[i], self.d1[i]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum DeltaSolution {
    Symbolic(Expr),
    Table(DeltaTable),
}

impl DeltaSolution {
    pub fn value(&self, x: f64) -> Option<f64> {
        match self {
            DeltaSolution::Symbolic(e) => CompiledExpr::new(e).eval(x, 0.0).ok(),
            DeltaSolution::Table(t) => t.value(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JacobiError {
    #[error("k(x) must not depend on u")]
    NotXOnly,
    #[error("k(x) cannot be evaluated at x = {0}")]
    KNotEvaluable(f64),
    #[error("step control cannot meet the local tolerance {tol} near x = {x}")]
    SolverFailure { x: f64, tol: f64 },
}

/// Numeric solution of `delta'' + k(x) delta = 0` across the region's
/// x-interval. When `q` is given the linear closed form is tried first.
pub fn solve_schrodinger(
    kx: &Expr,
    region: &Region,
    q: Option<&Expr>,
) -> Result<DeltaSolution, JacobiError> {
    if let Some(q) = q {
        if let Ok(lin) = linear_ode_delta(q, region) {
            return Ok(DeltaSolution::Symbolic(lin.delta));
        }
    }
    if kx.contains(Var::U) {
        return Err(JacobiError::NotXOnly);
    }
    let k = CompiledExpr::new(kx);
    let (lo, hi) = region.x_interval();
    let first = solve_table(&k, lo, hi, (1.0, 0.0))?;
    let second = solve_table(&k, lo, hi, (0.0, 1.0))?;
    let best = if second.sign_changes < first.sign_changes {
        second
    } else {
        first
    };
    Ok(DeltaSolution::Table(best))
}

fn solve_table(k: &CompiledExpr, lo: f64, hi: f64, init: (f64, f64)) -> Result<DeltaTable, JacobiError> {
    let n = TABLE_NODES;
    let step = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| if i == n - 1 { hi } else { lo + step * i as f64 }).collect();
    let rhs = |x: f64, y: [f64; 2]| k.eval(x, 0.0).ok().map(|kv| [y[1], -kv * y[0]]);
    let k_at = |x: f64| k.eval(x, 0.0).map_err(|_| JacobiError::KNotEvaluable(x));

    let mut delta = Vec::with_capacity(n);
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    let mut y = [init.0, init.1];
    let mut h = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            y = dopri::integrate(&rhs, xs[i - 1], x, y, SOLVER_TOL, &mut h).map_err(|e| match e {
                dopri::StepFailure::Rhs(x) => JacobiError::KNotEvaluable(x),
                dopri::StepFailure::Underflow(x) => JacobiError::SolverFailure { x, tol: SOLVER_TOL },
                dopri::StepFailure::TooManySteps => JacobiError::SolverFailure {
                    x: xs[i - 1],
                    tol: SOLVER_TOL,
                },
            })?;
        }
        delta.push(y[0]);
        d1.push(y[1]);
        d2.push(-k_at(x)? * y[0]);
    }

    let mut sign_changes = 0;
    let mut hints = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (&x, &d) in xs.iter().zip(&delta) {
        if d == 0.0 {
            hints.push(((x - step).max(lo), (x + step).min(hi)));
            continue;
        }
        if let Some((px, pd)) = last {
            if pd.signum() != d.signum() {
                sign_changes += 1;
                let root = px + (x - px) * pd / (pd - d);
                hints.push(((root - step).max(lo), (root + step).min(hi)));
            }
        }
        last = Some((x, d));
    }
    Ok(DeltaTable {
        xs,
        delta,
        d1,
        d2,
        initial: init,
        sign_changes,
        exclusion_hints: hints,
    })
}

/// `delta = H e^Q` with `Q' = q` and `H' = e^(-2Q)`, for which
/// `S(delta) = e^(-Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDelta {
    pub delta: Expr,
    pub q_int: Expr,
    pub h: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("closed form not available: {0}")]
pub struct NotApplicable(pub String);

pub fn linear_ode_delta(q: &Expr, region: &Region) -> Result<LinearDelta, NotApplicable> {
    if q.contains(Var::U) {
        return Err(NotApplicable("q depends on u".into()));
    }
    let q_int = antiderivative_1d(q, Var::X)
        .map_err(|_| NotApplicable(format!("no antiderivative for q = {q}")))?;
    let weight = simplify(&Expr::pow(Expr::e(), Expr::int(-2) * q_int.clone()));
    let h = antiderivative_1d(&weight, Var::X)
        .map_err(|_| NotApplicable(format!("no antiderivative for {weight}")))?;
    let delta = simplify(&(h.clone() * Expr::pow(Expr::e(), q_int.clone())));
    let (bx, bu) = region.base_point();
    if CompiledExpr::new(&delta).eval(bx, bu).is_err() {
        return Err(NotApplicable(format!("delta = {delta} is singular at the base point")));
    }
    Ok(LinearDelta { delta, q_int, h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{eval, parse};
    use crate::geometry::{jacobi_residual, op_s};

    fn e(s: &str) -> Expr {
        simplify(&parse(s).unwrap())
    }

    fn unit() -> Region {
        Region::new(0.0, 1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn classification_of_the_examples() {
        let cfg = SampleConfig::default();
        let ex1 = OdeProblem::parse("1/u", "x=0:1,u=0.5:2").unwrap();
        assert_eq!(classify_curvature(&ex1, &cfg).class, CurvatureClass::General);
        let ex2 = OdeProblem::parse(
            "e^x + sqrt(2*u*e^x - e^(2*x) - u^2 + 1)",
            "x=0:0.8,u=1.3:1.9",
        )
        .unwrap();
        let info = classify_curvature(&ex2, &cfg);
        assert_eq!(info.class, CurvatureClass::Constant { k: 1.0 });
        let lin = OdeProblem::parse("sin(x)*u + x^2", "x=0:1,u=-1:1").unwrap();
        assert_eq!(
            classify_curvature(&lin, &cfg).class,
            CurvatureClass::XOnly {
                k: e("-cos(x) - sin(x)^2")
            }
        );
    }

    #[test]
    fn constant_curvature_branches() {
        assert_eq!(constant_curvature_delta(1.0), e("cos(x)"));
        assert_eq!(constant_curvature_delta(0.0), Expr::one());
        assert_eq!(constant_curvature_delta(-1.0), e("cosh(x)"));
        assert_eq!(constant_curvature_delta(4.0), e("cos(2*x)"));
        let d = constant_curvature_delta(2.0);
        assert!((eval(&d, 0.3, 0.0).unwrap() - (0.3 * 2f64.sqrt()).cos()).abs() < 1e-15);
        let d = constant_curvature_delta(-0.25);
        assert!((eval(&d, 0.3, 0.0).unwrap() - 0.15f64.cosh()).abs() < 1e-15);
    }

    #[test]
    fn constant_curvature_delta_is_a_jacobi_field() {
        let ex2 = OdeProblem::parse(
            "e^x + sqrt(2*u*e^x - e^(2*x) - u^2 + 1)",
            "x=0:0.8,u=1.3:1.9",
        )
        .unwrap();
        let (ra, ru) = jacobi_residual(&ex2, &Expr::zero(), &constant_curvature_delta(1.0));
        assert!(ra.is_zero());
        let v = crate::expr::zero_test(&ru, ex2.region(), 1e-9, 64).unwrap();
        assert!(v.is_zero(), "{v:?}");
    }

    fn table(k: &str, region: &Region) -> DeltaTable {
        match solve_schrodinger(&parse(k).unwrap(), region, None).unwrap() {
            DeltaSolution::Table(t) => t,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn numeric_solutions_match_closed_forms() {
        let t = table("0", &unit());
        assert_eq!(t.initial, (1.0, 0.0));
        let t = table("1", &unit());
        assert_eq!(t.nodes().len(), TABLE_NODES);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((t.value(x).unwrap() - x.cos()).abs() < 1e-8);
            assert!((t.derivative(x).unwrap() + x.sin()).abs() < 1e-8);
        }
        let t = table("-1", &unit());
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((t.value(x).unwrap() - x.cosh()).abs() < 1e-8);
        }
    }

    #[test]
    fn fewest_sign_changes_wins() {
        // k = 100: cos(10x) changes sign 3 times on [0, 0.9], sin(10x)/10
        // twice (its zero at the left end is not a change)
        let t = table("100", &Region::new(0.0, 0.9, 0.0, 1.0).unwrap());
        assert_eq!(t.initial, (0.0, 1.0));
        assert_eq!(t.sign_changes, 2);
        assert_eq!(t.exclusion_hints.len(), 3);
        let (a, b) = t.exclusion_hints[1];
        assert!(a < std::f64::consts::PI / 10.0 && std::f64::consts::PI / 10.0 < b);
    }

    #[test]
    fn airy_residual() {
        let t = table("x", &unit());
        let h = 1e-4;
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let d2 = (t.derivative(x + h).unwrap() - t.derivative(x - h).unwrap()) / (2.0 * h);
            assert!((d2 + x * t.value(x).unwrap()).abs() < 1e-7);
        }
        assert!(t.to_csv().lines().count() == TABLE_NODES + 1);
    }

    #[test]
    fn solver_failure_is_reported() {
        let r = Region::new(0.5, 2.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            solve_schrodinger(&parse("1/(x-1)").unwrap(), &r, None),
            Err(JacobiError::KNotEvaluable(_)) | Err(JacobiError::SolverFailure { .. })
        ));
        assert_eq!(
            solve_schrodinger(&Expr::u(), &r, None),
            Err(JacobiError::NotXOnly)
        );
    }

    #[test]
    fn linear_closed_forms() {
        let lin = linear_ode_delta(&Expr::one(), &unit()).unwrap();
        assert_eq!(lin.q_int, Expr::x());
        assert_eq!(lin.h, e("-e^(-2*x)/2"));
        assert_eq!(lin.delta, e("-e^(-x)/2"));

        let lin = linear_ode_delta(&Expr::zero(), &unit()).unwrap();
        assert!(lin.q_int.is_zero());
        assert_eq!(lin.h, Expr::x());
        assert_eq!(lin.delta, Expr::x());

        let r = Region::new(1.0, 2.0, 0.0, 1.0).unwrap();
        let lin = linear_ode_delta(&e("1/x"), &r).unwrap();
        assert_eq!(lin.q_int, e("ln(x)"));
        assert_eq!(lin.h, e("-1/x"));
        assert_eq!(lin.delta, Expr::int(-1));

        assert!(linear_ode_delta(&e("1/(1 + x^2)"), &unit()).is_err());
    }

    #[test]
    fn linear_delta_satisfies_the_jacobi_equation() {
        for (q, region) in [("1", "x=0:1,u=0:1"), ("0", "x=0:1,u=0:1"), ("1/x", "x=1:2,u=0:1")] {
            let r: Region = region.parse().unwrap();
            let lin = linear_ode_delta(&e(q), &r).unwrap();
            let p = OdeProblem::new(e(&format!("({q})*u + 1")), r).unwrap();
            let (_, ru) = jacobi_residual(&p, &Expr::zero(), &lin.delta);
            assert!(crate::expr::zero_test(&ru, p.region(), 1e-9, 64).unwrap().is_zero());
            let s = op_s(&p, &lin.delta);
            let want = simplify(&Expr::pow(Expr::e(), -lin.q_int.clone()));
            assert_eq!(s, want, "q = {q}");
        }
    }
}
