//! Integrating factors and first integrals from a Jacobi field relative to `A`.
//!
//! Given `J = sigma A + delta d/du`:
//!
//! 1. `F = A(sigma)`. If `F` is not constant it is a first integral.
//! 2. Otherwise `F = a` and `G = sigma - a x`. If `G` is not constant it
//!    is a first integral.
//! 3. Otherwise `delta` must not vanish. If `S(delta) = 0` then `1/delta`
//!    is an integrating factor, else `S(delta)` is.
//! 4. The primitive of `mu (-phi dx + du)` is the first integral.

use serde::Serialize;
use thiserror::Error;

use crate::expr::{
    constancy_test, simplify, zero_test_with, CompiledExpr, Expr, Rect, Region, SampleConfig,
    Var, ZeroTestError, ZeroVerdict,
};
use crate::geometry::{
    apply_a, is_lie_point_symmetry, jacobi_residual, op_s, to_coordinate, to_frame, OdeProblem,
    VectorField,
};
use crate::jacobi::{
    classify_curvature, constant_curvature_delta, constant_curvature_delta_exact,
    linear_ode_delta, solve_schrodinger, CurvatureClass, CurvatureInfo, DeltaSolution,
    DeltaTable, JacobiError,
};
use crate::quadrature::{
    primitive, FactorForm, FirstIntegralValue, IntegratingFactor, PrimitiveInfo, QuadratureError,
    TabulatedFactor, PATH_TOL,
};
use crate::verify::{
    check_closed, check_delta, check_factor, check_first_integral, check_jacobi, CheckRecord,
    Certification, VerificationReport,
};

/// Default verification tolerance.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Zero-test tolerance for decisions about tabulated `delta`.
pub const TABLE_ZERO_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    StepF,
    StepG,
    DeltaInverse,
    SDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum JacobiSource {
    UserSupplied,
    ConstantCurvature,
    SchrodingerNumeric,
    LinearClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Options {
    pub zero: SampleConfig,
    /// Tolerance of the verification checks.
    pub tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            zero: SampleConfig::default(),
            tol: DEFAULT_TOL,
        }
    }
}

impl Options {
    pub fn with_seed(seed: u64) -> Options {
        let mut o = Options::default();
        o.zero.seed = seed;
        o
    }
}

/// A branch condition and the verdict that settled it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub condition: String,
    pub verdict: ZeroVerdict,
}

#[derive(Debug, Clone)]
pub struct IntegrationResult {
    pub branch: Branch,
    pub jacobi_source: JacobiSource,
    pub sigma: Expr,
    pub delta: DeltaSolution,
    pub integrating_factor: Option<IntegratingFactor>,
    pub first_integral: FirstIntegralValue,
    pub verification: VerificationReport,
    pub decisions: Vec<Decision>,
    /// Set when some decision rests on sampling rather than cancellation.
    pub numerically_certified: bool,
    pub primitive_info: Option<PrimitiveInfo>,
    /// The region actually used; zeros of a tabulated `delta` may be excluded.
    pub region: Region,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("not a Jacobi field relative to A: residual {value:e} at ({x}, {u})")]
    NotAJacobiField { x: f64, u: f64, value: f64 },
    #[error("trivial Jacobi field (a x + b) A carries no information")]
    TrivialJacobiField,
    #[error("quadrature failed: {0}")]
    QuadratureFailure(#[from] QuadratureError),
    #[error("curvature {curvature} depends on u; a Jacobi field must be supplied")]
    RequiresJacobiField { curvature: Expr },
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
    #[error(transparent)]
    Sampling(#[from] ZeroTestError),
    #[error("not a Lie point symmetry: [X, A] is not proportional to A")]
    NotASymmetry,
    #[error("eta - xi phi vanishes identically")]
    DegenerateSymmetry,
}

struct Run<'a> {
    p: &'a OdeProblem,
    opts: &'a Options,
    decisions: Vec<Decision>,
    notes: Vec<String>,
}

impl Run<'_> {
    fn zero(&mut self, condition: String, e: &Expr) -> Result<bool, ZeroTestError> {
        let verdict = zero_test_with(e, self.p.region(), &self.opts.zero)?;
        let z = verdict.is_zero();
        self.decisions.push(Decision { condition, verdict });
        Ok(z)
    }

    fn numerical(&self) -> bool {
        self.decisions
            .iter()
            .any(|d| matches!(d.verdict, ZeroVerdict::NumericallyZero { .. }))
    }
}

/// Steps 1 to 4 for a user-supplied field.
pub fn run_procedure(
    p: &OdeProblem,
    j: &VectorField,
    opts: &Options,
) -> Result<IntegrationResult, IntegrateError> {
    let (sigma, delta) = to_frame(p, j);
    run_symbolic(p, sigma, delta, JacobiSource::UserSupplied, opts)
}

fn run_symbolic(
    p: &OdeProblem,
    sigma: Expr,
    delta: Expr,
    source: JacobiSource,
    opts: &Options,
) -> Result<IntegrationResult, IntegrateError> {
    let mut run = Run {
        p,
        opts,
        decisions: Vec::new(),
        notes: Vec::new(),
    };
    let (ra, ru) = jacobi_residual(p, &sigma, &delta);
    for (name, r) in [("A^2(sigma) = 0", &ra), ("A^2(delta) + K delta = 0", &ru)] {
        if !run.zero(name.into(), r)? {
            let Some(Decision {
                verdict: ZeroVerdict::NonZero { x, u, value },
                ..
            }) = run.decisions.last().cloned()
            else {
                unreachable!()
            };
            return Err(IntegrateError::NotAJacobiField { x, u, value });
        }
    }

    let f = apply_a(p, &sigma);
    let tol = opts.zero.tol;
    let a = match constancy_test(&f, p.region(), tol)? {
        None => return finish_direct(run, Branch::StepF, f, sigma, delta, source),
        Some(a) => a,
    };
    let a_expr = match &f {
        Expr::Num(_) => f.clone(),
        _ => Expr::from_f64(a),
    };
    let g = simplify(&(&sigma - &(&a_expr * &Expr::x())));
    if constancy_test(&g, p.region(), tol)?.is_none() {
        return finish_direct(run, Branch::StepG, g, sigma, delta, source);
    }

    if run.zero("delta = 0".into(), &delta)? {
        return Err(IntegrateError::TrivialJacobiField);
    }
    let s = op_s(p, &delta);
    let (branch, mu) = if run.zero("S(delta) = 0".into(), &s)? {
        (Branch::DeltaInverse, simplify(&(Expr::one() / delta.clone())))
    } else {
        (Branch::SDelta, s)
    };
    let factor = IntegratingFactor::Symbolic(mu.clone());
    let (first_integral, info) = primitive(p, &factor, &opts.zero)?;
    if let Some(reason) = &info.fallback_reason {
        run.notes.push(format!("first integral tabulated: {reason}"));
    }

    let mut report = report_for(&run);
    report.push(check_jacobi(p, &VectorField::geodesic(sigma.clone(), delta.clone()), opts.tol, opts.zero.seed));
    report.push(check_factor(p, &mu, opts.tol, opts.zero.seed));
    verify_integral(&mut report, p, &first_integral, opts);
    Ok(IntegrationResult {
        branch,
        jacobi_source: source,
        sigma,
        delta: DeltaSolution::Symbolic(delta),
        integrating_factor: Some(factor),
        first_integral,
        verification: report,
        numerically_certified: run.numerical(),
        decisions: run.decisions,
        primitive_info: Some(info),
        region: p.region().clone(),
        notes: run.notes,
    })
}

fn report_for(run: &Run<'_>) -> VerificationReport {
    let level = if run.numerical() {
        Certification::Numerical
    } else {
        Certification::Structural
    };
    VerificationReport::new(level, run.opts.zero.seed)
}

fn verify_integral(report: &mut VerificationReport, p: &OdeProblem, i: &FirstIntegralValue, opts: &Options) {
    if let FirstIntegralValue::Gridded(g) = i {
        report.push(CheckRecord {
            name: "path_independence".into(),
            max_defect: g.path_discrepancy(),
            tolerance: PATH_TOL,
            samples: g.shape().0 * g.shape().1,
            passed: g.path_discrepancy() < PATH_TOL,
            witness: None,
            note: None,
        });
    }
    report.extend(check_first_integral(p, i, opts.tol, opts.zero.seed));
}

/// Steps 2 and 3 return a first integral without quadrature.
fn finish_direct(
    run: Run<'_>,
    branch: Branch,
    i: Expr,
    sigma: Expr,
    delta: Expr,
    source: JacobiSource,
) -> Result<IntegrationResult, IntegrateError> {
    let (p, opts) = (run.p, run.opts);
    let first_integral = FirstIntegralValue::Symbolic(i);
    let mut report = report_for(&run);
    report.push(check_jacobi(p, &VectorField::geodesic(sigma.clone(), delta.clone()), opts.tol, opts.zero.seed));
    verify_integral(&mut report, p, &first_integral, opts);
    Ok(IntegrationResult {
        branch,
        jacobi_source: source,
        sigma,
        delta: DeltaSolution::Symbolic(delta),
        integrating_factor: None,
        first_integral,
        verification: report,
        numerically_certified: run.numerical(),
        decisions: run.decisions,
        primitive_info: None,
        region: p.region().clone(),
        notes: run.notes,
    })
}

/// Step 4 for `J = delta(x) d/du` with a tabulated `delta`.
fn run_table(p: &OdeProblem, table: DeltaTable, opts: &Options) -> Result<IntegrationResult, IntegrateError> {
    let mut notes = Vec::new();
    let phi_u = CompiledExpr::new(p.phi_u());
    let pts = p.region().sample_points(opts.zero.samples, opts.zero.seed).map_err(|_| ZeroTestError::RegionEmpty)?;
    let mut worst: Option<(f64, f64, f64)> = None;
    let mut used = 0;
    for &(x, u) in &pts {
        let (Some(d), Some(d1), Ok(fu)) = (table.value(x), table.derivative(x), phi_u.eval(x, u)) else {
            continue;
        };
        used += 1;
        let s = d1 - fu * d;
        if worst.is_none_or(|w| s.abs() > w.2.abs()) {
            worst = Some((x, u, s));
        }
    }
    let verdict = match worst {
        Some((x, u, value)) if value.abs() > TABLE_ZERO_TOL => ZeroVerdict::NonZero { x, u, value },
        Some((_, _, value)) => ZeroVerdict::NumericallyZero {
            max_abs: value.abs(),
            samples: used,
        },
        None => return Err(ZeroTestError::NoValidSamples.into()),
    };
    let inverse = verdict.is_zero();
    let decisions = vec![Decision {
        condition: "S(delta) = 0".into(),
        verdict,
    }];

    // poles of 1/delta are cut out of the region
    let mut problem = p.clone();
    if inverse && !table.exclusion_hints.is_empty() {
        let (u_lo, u_hi) = p.region().u_interval();
        let mut region = p.region().clone();
        for &(a, b) in &table.exclusion_hints {
            let zone = Rect {
                x_lo: a,
                x_hi: b,
                u_lo,
                u_hi,
            };
            region = region.exclude(zone).map_err(|_| ZeroTestError::RegionEmpty)?;
            notes.push(format!("excluded x in [{a}, {b}] around a zero of delta"));
        }
        problem = OdeProblem::new(p.phi().clone(), region).map_err(|_| ZeroTestError::RegionEmpty)?;
    }
    let p = &problem;
    let (branch, form) = if inverse {
        (Branch::DeltaInverse, FactorForm::ReciprocalDelta)
    } else {
        (Branch::SDelta, FactorForm::SDelta)
    };
    let factor = IntegratingFactor::Tabulated(TabulatedFactor::new(p, table.clone(), form));
    let (first_integral, info) = primitive(p, &factor, &opts.zero)?;

    let mut report = VerificationReport::new(Certification::Numerical, opts.zero.seed);
    let delta = DeltaSolution::Table(table);
    report.push(check_delta(p, &delta, opts.tol, opts.zero.seed));
    let ev = factor.evaluator();
    let phi = CompiledExpr::new(p.phi());
    let mut closed = check_closed(
        |x, u| Some(-ev.eval(x, u)? * phi.eval(x, u).ok()?),
        |x, u| ev.eval(x, u),
        p.region(),
        opts.tol,
        opts.zero.seed,
    );
    closed.name = "integrating_factor".into();
    report.push(closed);
    verify_integral(&mut report, p, &first_integral, opts);
    Ok(IntegrationResult {
        branch,
        jacobi_source: JacobiSource::SchrodingerNumeric,
        sigma: Expr::zero(),
        delta,
        integrating_factor: Some(factor),
        first_integral,
        verification: report,
        decisions,
        numerically_certified: true,
        primitive_info: Some(info),
        region: p.region().clone(),
        notes,
    })
}

/// Linear coefficient `q` when `phi = q(x) u + p(x)`.
fn linear_coefficient(p: &OdeProblem, cfg: &SampleConfig) -> Result<Option<Expr>, ZeroTestError> {
    let q = p.phi_u();
    if q.contains(Var::U) {
        let quu = crate::expr::diff(q, Var::U);
        if !zero_test_with(&quu, p.region(), cfg)?.is_zero() {
            return Ok(None);
        }
        let u0 = Expr::from_f64(p.region().base_point().1);
        return Ok(Some(simplify(&q.subs(Var::U, &u0))));
    }
    Ok(Some(q.clone()))
}

/// Runs the procedure with `J` if given, otherwise constructs
/// `J = delta(x) d/du` from the curvature.
pub fn integrate_ode(
    p: &OdeProblem,
    j: Option<&VectorField>,
    opts: &Options,
) -> Result<IntegrationResult, IntegrateError> {
    if let Some(j) = j {
        return run_procedure(p, j, opts);
    }
    let info = classify_curvature(p, &opts.zero);
    if let Some(q) = linear_coefficient(p, &opts.zero)? {
        match linear_ode_delta(&q, p.region()) {
            Ok(lin) => return run_symbolic(p, Expr::zero(), lin.delta, JacobiSource::LinearClosedForm, opts),
            Err(reason) => {
                if let CurvatureClass::XOnly { k } = &info.class {
                    let mut r = run_table(p, numeric_delta(k, p)?, opts)?;
                    r.notes.insert(0, reason.to_string());
                    return Ok(r);
                }
            }
        }
    }
    auto_from_curvature(p, &info, opts)
}

fn numeric_delta(k: &Expr, p: &OdeProblem) -> Result<DeltaTable, IntegrateError> {
    match solve_schrodinger(k, p.region(), None)? {
        DeltaSolution::Table(t) => Ok(t),
        DeltaSolution::Symbolic(_) => unreachable!("no closed form requested"),
    }
}

fn auto_from_curvature(p: &OdeProblem, info: &CurvatureInfo, opts: &Options) -> Result<IntegrationResult, IntegrateError> {
    match &info.class {
        CurvatureClass::Constant { k } => {
            let delta = match &info.exact_k {
                Some(q) => constant_curvature_delta_exact(q),
                None => constant_curvature_delta(*k),
            };
            run_symbolic(p, Expr::zero(), delta, JacobiSource::ConstantCurvature, opts)
        }
        CurvatureClass::XOnly { k } => run_table(p, numeric_delta(k, p)?, opts),
        CurvatureClass::General => Err(IntegrateError::RequiresJacobiField {
            curvature: info.curvature.clone(),
        }),
    }
}

/// `(eta - xi phi)^(-1)` for a Lie point symmetry `X = xi d/dx + eta d/du`.
pub fn symmetry_based_factor(
    p: &OdeProblem,
    x: &VectorField,
    cfg: &SampleConfig,
) -> Result<Expr, IntegrateError> {
    if !is_lie_point_symmetry(p, x, cfg)?.is_symmetry {
        return Err(IntegrateError::NotASymmetry);
    }
    let xc = to_coordinate(p, x);
    let w = simplify(&(&xc.c2 - &(&xc.c1 * p.phi())));
    if zero_test_with(&w, p.region(), cfg)?.is_zero() {
        return Err(IntegrateError::DegenerateSymmetry);
    }
    Ok(simplify(&(Expr::one() / w)))
}
