//! Primitives of closed forms `mu (-phi dx + du)`.
//!
//! The symbolic path integrates `mu` in `u` with the restricted grammar of
//! [`antiderivative_1d`], recovers the `x`-only remainder and integrates it
//! in `x`. When any step leaves the grammar the primitive is tabulated as a
//! line integral on a grid.

mod antideriv;
mod grid;

use serde::Serialize;
use thiserror::Error;

pub use antideriv::{antiderivative_1d, NotIntegrable};
pub use grid::{GriddedIntegral, GRID_NODES, PATH_TOL};

use crate::expr::{
    diff, simplify, zero_test_with, CompiledExpr, Expr, SampleConfig, Var, ZeroTestError,
    ZeroVerdict,
};
use crate::geometry::{apply_a, OdeProblem};
use crate::jacobi::DeltaTable;

/// Central-difference closedness tolerance for tabulated factors.
pub const CLOSED_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorForm {
    /// `1 / delta`
    ReciprocalDelta,
    /// `delta' - phi_u delta`
    SDelta,
}

/// An integrating factor built from a tabulated `delta(x)`.
#[derive(Debug, Clone)]
pub struct TabulatedFactor {
    pub delta: DeltaTable,
    pub form: FactorForm,
    phi_u: CompiledExpr,
}

impl TabulatedFactor {
    pub fn new(p: &OdeProblem, delta: DeltaTable, form: FactorForm) -> TabulatedFactor {
        TabulatedFactor {
            delta,
            form,
            phi_u: CompiledExpr::new(p.phi_u()),
        }
    }

    pub fn eval(&self, x: f64, u: f64) -> Option<f64> {
        let d = self.delta.value(x)?;
        let v = match self.form {
            FactorForm::ReciprocalDelta => 1.0 / d,
            FactorForm::SDelta => self.delta.derivative(x)? - self.phi_u.eval(x, u).ok()? * d,
        };
        v.is_finite().then_some(v)
    }
}

#[derive(Debug, Clone)]
pub enum IntegratingFactor {
    Symbolic(Expr),
    Tabulated(TabulatedFactor),
}

impl IntegratingFactor {
    pub fn evaluator(&self) -> FactorEval<'_> {
        match self {
            IntegratingFactor::Symbolic(e) => FactorEval::Compiled(CompiledExpr::new(e)),
            IntegratingFactor::Tabulated(t) => FactorEval::Table(t),
        }
    }

    pub fn as_expr(&self) -> Option<&Expr> {
        match self {
            IntegratingFactor::Symbolic(e) => Some(e),
            IntegratingFactor::Tabulated(_) => None,
        }
    }

    /// Printed form, or a description of the tabulated construction.
    pub fn describe(&self) -> String {
        match self {
            IntegratingFactor::Symbolic(e) => e.to_string(),
            IntegratingFactor::Tabulated(t) => match t.form {
                FactorForm::ReciprocalDelta => "1/delta(x) (tabulated)".into(),
                FactorForm::SDelta => "delta'(x) - phi_u*delta(x) (tabulated)".into(),
            },
        }
    }
}

/// Fast pointwise evaluation of an [`IntegratingFactor`].
pub enum FactorEval<'a> {
    Compiled(CompiledExpr),
    Table(&'a TabulatedFactor),
}

impl FactorEval<'_> {
    pub fn eval(&self, x: f64, u: f64) -> Option<f64> {
        match self {
            FactorEval::Compiled(c) => c.eval(x, u).ok(),
            FactorEval::Table(t) => t.eval(x, u),
        }
    }
}

#[derive(Debug, Clone)]
pub enum FirstIntegralValue {
    Symbolic(Expr),
    Gridded(Box<GriddedIntegral>),
}

impl FirstIntegralValue {
    pub fn kind(&self) -> &'static str {
        match self {
            FirstIntegralValue::Symbolic(_) => "symbolic",
            FirstIntegralValue::Gridded(_) => "gridded",
        }
    }

    pub fn as_expr(&self) -> Option<&Expr> {
        match self {
            FirstIntegralValue::Symbolic(e) => Some(e),
            FirstIntegralValue::Gridded(_) => None,
        }
    }

    pub fn evaluator(&self) -> IntegralEval<'_> {
        match self {
            FirstIntegralValue::Symbolic(e) => IntegralEval::Compiled(CompiledExpr::new(e)),
            FirstIntegralValue::Gridded(g) => IntegralEval::Grid(g),
        }
    }
}

pub enum IntegralEval<'a> {
    Compiled(CompiledExpr),
    Grid(&'a GriddedIntegral),
}

impl IntegralEval<'_> {
    pub fn eval(&self, x: f64, u: f64) -> Option<f64> {
        match self {
            IntegralEval::Compiled(c) => c.eval(x, u).ok(),
            IntegralEval::Grid(g) => g.eval(x, u),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("the form mu (-phi dx + du) is not closed (defect {defect:e} at ({x}, {u}))")]
    NotClosed { defect: f64, x: f64, u: f64 },
    #[error("the integrand cannot be evaluated at ({x}, {u}) inside the region")]
    GridSingular { x: f64, u: f64 },
    #[error("line integrals disagree by {0:e} between path orders")]
    PathDependent(f64),
    #[error(transparent)]
    Sampling(#[from] ZeroTestError),
}

/// How the primitive was obtained, for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimitiveInfo {
    pub closedness: Option<ZeroVerdict>,
    /// Why the symbolic path was abandoned, if it was.
    pub fallback_reason: Option<String>,
}

/// `I` with `dI = mu (-phi dx + du)`.
pub fn primitive(
    p: &OdeProblem,
    mu: &IntegratingFactor,
    cfg: &SampleConfig,
) -> Result<(FirstIntegralValue, PrimitiveInfo), QuadratureError> {
    let IntegratingFactor::Symbolic(m) = mu else {
        let g = grid::tabulate(p, mu, cfg)?;
        let info = PrimitiveInfo {
            closedness: None,
            fallback_reason: Some("integrating factor is tabulated".into()),
        };
        return Ok((FirstIntegralValue::Gridded(Box::new(g)), info));
    };
    let pf = simplify(&-(m * p.phi()));
    let defect = simplify(&(diff(&pf, Var::U) - diff(m, Var::X)));
    let closed = zero_test_with(&defect, p.region(), cfg)?;
    if let ZeroVerdict::NonZero { x, u, value } = closed {
        return Err(QuadratureError::NotClosed {
            defect: value.abs(),
            x,
            u,
        });
    }
    match symbolic(p, m, &pf, cfg) {
        Ok(i) => Ok((
            FirstIntegralValue::Symbolic(i),
            PrimitiveInfo {
                closedness: Some(closed),
                fallback_reason: None,
            },
        )),
        Err(reason) => {
            let g = grid::tabulate(p, mu, cfg)?;
            Ok((
                FirstIntegralValue::Gridded(Box::new(g)),
                PrimitiveInfo {
                    closedness: Some(closed),
                    fallback_reason: Some(reason),
                },
            ))
        }
    }
}

fn symbolic(p: &OdeProblem, mu: &Expr, pf: &Expr, cfg: &SampleConfig) -> Result<Expr, String> {
    let in_u = antiderivative_1d(mu, Var::U).map_err(|e| e.to_string())?;
    let mut rest = simplify(&(pf - &diff(&in_u, Var::X)));
    if rest.contains(Var::U) {
        let v = zero_test_with(&diff(&rest, Var::U), p.region(), cfg).map_err(|e| e.to_string())?;
        if !v.is_zero() {
            return Err(format!("remainder {rest} depends on u"));
        }
        // u cancels only numerically; freeze it at the base point
        let u0 = Expr::from_f64(p.region().base_point().1);
        rest = simplify(&rest.subs(Var::U, &u0));
    }
    let in_x = antiderivative_1d(&rest, Var::X).map_err(|e| e.to_string())?;
    let i = simplify(&(in_u + in_x));
    let v = zero_test_with(&apply_a(p, &i), p.region(), cfg).map_err(|e| e.to_string())?;
    if !v.is_zero() {
        return Err(format!("A({i}) does not vanish"));
    }
    Ok(i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn e(s: &str) -> Expr {
        simplify(&parse(s).unwrap())
    }

    fn symbolic_primitive(phi: &str, region: &str, mu: &str) -> Expr {
        let p = OdeProblem::parse(phi, region).unwrap();
        let (i, info) = primitive(&p, &IntegratingFactor::Symbolic(e(mu)), &SampleConfig::default())
            .unwrap();
        assert!(info.fallback_reason.is_none(), "{info:?}");
        i.as_expr().unwrap().clone()
    }

    #[test]
    fn reciprocal_field() {
        assert_eq!(symbolic_primitive("1/u", "x=0:1,u=0.5:2", "u"), e("u^2/2 - x"));
    }

    #[test]
    fn flat_field() {
        assert_eq!(symbolic_primitive("0", "x=0:1,u=0:1", "1"), Expr::u());
    }

    #[test]
    fn linear_field() {
        // phi = u + x, mu = e^-x: I = u e^-x + (x + 1) e^-x
        let i = symbolic_primitive("u + x", "x=0:1,u=0:1", "e^(-x)");
        assert_eq!(i, e("u*e^(-x) + (x + 1)*e^(-x)"));
    }

    #[test]
    fn radical_field() {
        let p = "e^x + sqrt(2*u*e^x - e^(2*x) - u^2 + 1)";
        let mu = "-sin(x) + cos(x)*(u - e^x)/sqrt(2*u*e^x - e^(2*x) - u^2 + 1)";
        let i = symbolic_primitive(p, "x=0:0.8,u=1.3:1.9", mu);
        assert_eq!(
            i,
            e("-u*sin(x) - cos(x)*sqrt(2*u*e^x - e^(2*x) - u^2 + 1) + e^x*sin(x)")
        );
    }

    #[test]
    fn not_closed() {
        let p = OdeProblem::parse("1/u", "x=0:1,u=0.5:2").unwrap();
        let err = primitive(&p, &IntegratingFactor::Symbolic(Expr::one()), &SampleConfig::default());
        assert!(matches!(err, Err(QuadratureError::NotClosed { .. })));
    }

    #[test]
    fn falls_back_to_grid() {
        // mu = 1/(1 + u^2) for phi = 0: arctan is outside the grammar
        let p = OdeProblem::parse("0", "x=0:1,u=0:1").unwrap();
        let mu = IntegratingFactor::Symbolic(e("1/(1 + u^2)"));
        let (i, info) = primitive(&p, &mu, &SampleConfig::default()).unwrap();
        assert!(info.fallback_reason.is_some());
        let FirstIntegralValue::Gridded(g) = &i else { panic!() };
        assert!(g.path_discrepancy() < PATH_TOL);
        let ev = i.evaluator();
        let (bx, bu) = g.base();
        for (x, u) in [(0.1f64, 0.2f64), (0.77, 0.93), (0.5, 0.01)] {
            let want = u.atan() - bu.atan();
            assert!((ev.eval(x, u).unwrap() - want).abs() < 1e-12, "{x} {u} {bx}");
        }
    }
}
