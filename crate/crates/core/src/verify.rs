//! Numerical certification of the pipeline's claims.
//!
//! Nothing here calls the simplifier to decide a pass. Symbolic inputs are
//! differentiated with [`diff_raw`] and evaluated pointwise; tabulated
//! inputs are differentiated by central differences.

use serde::Serialize;

use crate::expr::{diff_raw, CompiledExpr, Expr, Region, Var};
use crate::geometry::{Frame, OdeProblem, VectorField};
use crate::jacobi::DeltaSolution;
use crate::quadrature::FirstIntegralValue;

/// Sample points per pointwise check.
pub const CHECK_SAMPLES: usize = 64;
/// Central-difference step as a fraction of the box size.
pub const FD_SCALE: f64 = 1e-5;
/// Fixed RK4 step.
pub const RK4_STEP: f64 = 1e-3;
/// Trajectories per constancy check.
pub const RK4_SEEDS: usize = 10;
/// Trajectories with fewer steps inside the region are skipped.
const MIN_TRAJECTORY_STEPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub max_defect: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
    /// Worst point, or the first failing one.
    pub witness: Option<(f64, f64)>,
    pub note: Option<String>,
}

impl CheckRecord {
    fn from_defects(name: &str, tol: f64, defects: impl IntoIterator<Item = ((f64, f64), f64)>) -> CheckRecord {
        let mut worst: Option<((f64, f64), f64)> = None;
        let mut samples = 0;
        for (pt, d) in defects {
            samples += 1;
            // NaN counts as a failure
            let d = if d.is_nan() { f64::INFINITY } else { d.abs() };
            if worst.is_none_or(|(_, w)| d > w) {
                worst = Some((pt, d));
            }
        }
        let max_defect = worst.map_or(0.0, |w| w.1);
        let passed = samples > 0 && max_defect < tol;
        CheckRecord {
            name: name.to_string(),
            max_defect,
            tolerance: tol,
            samples,
            passed,
            witness: worst.map(|w| w.0),
            note: (samples == 0).then(|| "no evaluable sample points".to_string()),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> CheckRecord {
        let note = note.into();
        self.note = Some(match self.note.take() {
            Some(old) => format!("{old}; {note}"),
            None => note,
        });
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    /// Every branch decision was a structural zero.
    Structural,
    /// Some decision rests on sampling.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
    pub overall: bool,
    pub level: Certification,
    pub seed: u64,
}

impl VerificationReport {
    pub fn new(level: Certification, seed: u64) -> VerificationReport {
        VerificationReport {
            checks: Vec::new(),
            overall: true,
            level,
            seed,
        }
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.overall &= check.passed;
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = CheckRecord>) {
        for c in checks {
            self.push(c);
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn samples(r: &Region, seed: u64) -> Vec<(f64, f64)> {
    r.sample_points(CHECK_SAMPLES, seed).unwrap_or_default()
}

/// `A(h) = h_x + phi h_u` without simplification.
fn a_raw(phi: &Expr, h: &Expr) -> Expr {
    diff_raw(h, Var::X) + phi.clone() * diff_raw(h, Var::U)
}

/// Max `|dP/du - dQ/dx|` by central differences at the sample points.
pub fn check_closed(
    p_form: impl Fn(f64, f64) -> Option<f64>,
    q_form: impl Fn(f64, f64) -> Option<f64>,
    r: &Region,
    tol: f64,
    seed: u64,
) -> CheckRecord {
    let hx = FD_SCALE * r.width();
    let hu = FD_SCALE * r.height();
    let defects = samples(r, seed).into_iter().map(|(x, u)| {
        let d = (|| {
            let pu = (p_form(x, u + hu)? - p_form(x, u - hu)?) / (2.0 * hu);
            let qx = (q_form(x + hx, u)? - q_form(x - hx, u)?) / (2.0 * hx);
            Some(pu - qx)
        })();
        ((x, u), d.unwrap_or(f64::NAN))
    });
    CheckRecord::from_defects("closed", tol, defects)
}

/// Pointwise `|A(I)| < tol` and constancy of `I` along RK4 solutions to
/// within `10 tol`.
pub fn check_first_integral(
    p: &OdeProblem,
    i: &FirstIntegralValue,
    tol: f64,
    seed: u64,
) -> Vec<CheckRecord> {
    let r = p.region();
    let phi = CompiledExpr::new(p.phi());
    let pts = samples(r, seed);
    let pointwise = match i {
        FirstIntegralValue::Symbolic(e) => {
            let ai = CompiledExpr::new(&a_raw(p.phi(), e));
            let defects = pts
                .iter()
                .map(|&(x, u)| ((x, u), ai.eval(x, u).unwrap_or(f64::NAN)));
            CheckRecord::from_defects("first_integral.a_of_i", tol, defects)
        }
        FirstIntegralValue::Gridded(_) => {
            let ev = i.evaluator();
            let hx = FD_SCALE * r.width();
            let hu = FD_SCALE * r.height();
            let defects = pts.iter().filter_map(|&(x, u)| {
                let ix = (ev.eval(x + hx, u)? - ev.eval(x - hx, u)?) / (2.0 * hx);
                let iu = (ev.eval(x, u + hu)? - ev.eval(x, u - hu)?) / (2.0 * hu);
                Some(((x, u), ix + phi.eval(x, u).ok()? * iu))
            });
            CheckRecord::from_defects("first_integral.a_of_i", tol, defects)
        }
    };
    let pointwise = annotate_constant_drift(pointwise, p, i, seed);
    vec![pointwise, check_trajectories(p, i, tenfold(tol), seed)]
}

/// `10 tol` rounded to 15 digits, so `1e-6` reports as `1e-5`.
fn tenfold(tol: f64) -> f64 {
    format!("{:.14e}", 10.0 * tol).parse().unwrap_or(10.0 * tol)
}

/// A first integral must satisfy `A(I) = 0`; when instead `A(I)` is a
/// nonzero constant, `I` drifts linearly along every solution.
fn annotate_constant_drift(rec: CheckRecord, p: &OdeProblem, i: &FirstIntegralValue, seed: u64) -> CheckRecord {
    let FirstIntegralValue::Symbolic(e) = i else { return rec };
    if rec.passed {
        return rec;
    }
    let ai = CompiledExpr::new(&a_raw(p.phi(), e));
    let vals: Vec<f64> = samples(p.region(), seed)
        .into_iter()
        .filter_map(|(x, u)| ai.eval(x, u).ok())
        .collect();
    let Some(&first) = vals.first() else { return rec };
    let spread = vals.iter().map(|v| (v - first).abs()).fold(0.0, f64::max);
    if spread < 1e-9 * (1.0 + first.abs()) {
        rec.with_note(format!(
            "A(I) = {first} at every sample: I increases by {first} per unit x along solutions, so it is not a first integral"
        ))
    } else {
        rec
    }
}

/// Classical RK4 for `u' = phi(x, u)` from `(x0, u0)` towards `x_end`.
/// The trajectory stops before the first point rejected by `keep` or where
/// `phi` cannot be evaluated.
pub fn rk4_trajectory(
    phi: &CompiledExpr,
    x0: f64,
    u0: f64,
    x_end: f64,
    h: f64,
    keep: impl Fn(f64, f64) -> bool,
) -> Vec<(f64, f64)> {
    let mut out = vec![(x0, u0)];
    let (mut x, mut u) = (x0, u0);
    let dir = (x_end - x0).signum();
    let f = |x: f64, u: f64| phi.eval(x, u).ok().filter(|v| v.is_finite());
    while dir * (x_end - x) > 1e-12 {
        let step = dir * h.min((x_end - x).abs());
        let next = (|| {
            let k1 = f(x, u)?;
            let k2 = f(x + step / 2.0, u + step / 2.0 * k1)?;
            let k3 = f(x + step / 2.0, u + step / 2.0 * k2)?;
            let k4 = f(x + step, u + step * k3)?;
            Some(u + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        })();
        let Some(un) = next else { break };
        let xn = if (x_end - x - step).abs() < 1e-12 { x_end } else { x + step };
        if !keep(xn, un) {
            break;
        }
        x = xn;
        u = un;
        out.push((x, u));
    }
    out
}

fn check_trajectories(p: &OdeProblem, i: &FirstIntegralValue, tol: f64, seed: u64) -> CheckRecord {
    let r = p.region();
    let phi = CompiledExpr::new(p.phi());
    let ev = i.evaluator();
    let (x_lo, x_hi) = r.x_interval();
    let seeds = r.sample_points(RK4_SEEDS, seed.wrapping_add(1)).unwrap_or_default();
    let mut used = 0;
    let mut skipped = 0;
    let mut worst: Option<((f64, f64), f64)> = None;
    for &(x0, u0) in &seeds {
        let Some(i0) = ev.eval(x0, u0) else {
            skipped += 1;
            continue;
        };
        let fwd = rk4_trajectory(&phi, x0, u0, x_hi, RK4_STEP, |x, u| r.contains(x, u));
        let bwd = rk4_trajectory(&phi, x0, u0, x_lo, RK4_STEP, |x, u| r.contains(x, u));
        if fwd.len() + bwd.len() - 2 < MIN_TRAJECTORY_STEPS {
            skipped += 1;
            continue;
        }
        used += 1;
        for &(x, u) in fwd.iter().chain(&bwd) {
            let d = ev.eval(x, u).map_or(f64::INFINITY, |v| (v - i0).abs());
            if worst.is_none_or(|(_, w)| d > w) {
                worst = Some(((x, u), d));
            }
        }
    }
    let max_defect = worst.map_or(0.0, |w| w.1);
    let mut rec = CheckRecord {
        name: "first_integral.rk4".into(),
        max_defect,
        tolerance: tol,
        samples: used,
        passed: used > 0 && max_defect < tol,
        witness: worst.map(|w| w.0),
        note: None,
    };
    if skipped > 0 {
        rec = rec.with_note(format!("{skipped} of {} seeds left the region too early", seeds.len()));
    }
    if used == 0 {
        rec = rec.with_note("inconclusive: no usable trajectory");
    }
    rec
}

/// Components `(sigma, delta)` of `J` without simplification.
fn frame_raw(p: &OdeProblem, j: &VectorField) -> (Expr, Expr) {
    match j.frame {
        Frame::Geodesic => (j.c1.clone(), j.c2.clone()),
        Frame::Coordinate => (j.c1.clone(), j.c2.clone() - j.c1.clone() * p.phi().clone()),
    }
}

/// `K = -d/du (A(phi))` without simplification.
fn curvature_raw(p: &OdeProblem) -> Expr {
    -diff_raw(&a_raw(p.phi(), p.phi()), Var::U)
}

/// `|A^2(sigma)|` and `|A^2(delta) + K delta|` at the sample points.
pub fn check_jacobi(p: &OdeProblem, j: &VectorField, tol: f64, seed: u64) -> CheckRecord {
    let (sigma, delta) = frame_raw(p, j);
    let phi = p.phi();
    let ra = CompiledExpr::new(&a_raw(phi, &a_raw(phi, &sigma)));
    let ru = CompiledExpr::new(&(a_raw(phi, &a_raw(phi, &delta)) + curvature_raw(p) * delta));
    let defects = samples(p.region(), seed).into_iter().map(|(x, u)| {
        let d = match (ra.eval(x, u), ru.eval(x, u)) {
            (Ok(a), Ok(b)) => a.abs().max(b.abs()),
            _ => f64::NAN,
        };
        ((x, u), d)
    });
    CheckRecord::from_defects("jacobi", tol, defects)
}

/// `|delta'' + K delta|` for `J = delta(x) d/du`, with `delta''` from
/// central differences for tables.
pub fn check_delta(p: &OdeProblem, delta: &DeltaSolution, tol: f64, seed: u64) -> CheckRecord {
    if let DeltaSolution::Symbolic(d) = delta {
        return check_jacobi(p, &VectorField::geodesic(Expr::zero(), d.clone()), tol, seed);
    }
    let DeltaSolution::Table(t) = delta else { unreachable!() };
    let k = CompiledExpr::new(&curvature_raw(p));
    let (lo, hi) = t.x_range();
    let h = FD_SCALE * 10.0 * (hi - lo);
    let defects = samples(p.region(), seed).into_iter().filter_map(|(x, u)| {
        if x - h < lo || x + h > hi {
            return None;
        }
        let d2 = (t.derivative(x + h)? - t.derivative(x - h)?) / (2.0 * h);
        Some(((x, u), d2 + k.eval(x, u).ok()? * t.value(x)?))
    });
    CheckRecord::from_defects("jacobi", tol, defects)
}

/// `|T(mu)| = |A(mu) + phi_u mu|` at the sample points: `mu` integrates
/// the Pfaffian form exactly when this vanishes.
pub fn check_factor(p: &OdeProblem, mu: &Expr, tol: f64, seed: u64) -> CheckRecord {
    let phi_u = diff_raw(p.phi(), Var::U);
    let t = CompiledExpr::new(&(a_raw(p.phi(), mu) + phi_u * mu.clone()));
    let defects = samples(p.region(), seed)
        .into_iter()
        .map(|(x, u)| ((x, u), t.eval(x, u).unwrap_or(f64::NAN)));
    CheckRecord::from_defects("integrating_factor", tol, defects)
}
