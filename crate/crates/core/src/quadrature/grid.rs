//! Tabulated primitives as line integrals over a rectangular grid.

use std::fmt::Write as _;

use crate::expr::{CompiledExpr, SampleConfig};
use crate::geometry::OdeProblem;

use super::{IntegratingFactor, QuadratureError, TabulatedFactor, CLOSED_TOL};

/// Grid nodes per axis.
pub const GRID_NODES: usize = 201;
/// Largest accepted disagreement between the two path orders.
pub const PATH_TOL: f64 = 1e-6;

/// Five-point Gauss–Legendre rule on `[-1, 1]`.
const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

#[derive(Debug, Clone)]
enum Factor {
    Compiled(CompiledExpr),
    Table(TabulatedFactor),
}

impl Factor {
    fn eval(&self, x: f64, u: f64) -> Option<f64> {
        match self {
            Factor::Compiled(c) => c.eval(x, u).ok(),
            Factor::Table(t) => t.eval(x, u),
        }
    }
}

/// `I(x, u)` on a grid, measured from a base node by the path that runs
/// along `x` first and then along `u`.
#[derive(Debug, Clone)]
pub struct GriddedIntegral {
    xs: Vec<f64>,
    us: Vec<f64>,
    /// Row-major, `values[i * us.len() + j]` at `(xs[i], us[j])`. Nodes
    /// whose paths cross an excluded zone are NaN.
    values: Vec<f64>,
    base: (usize, usize),
    path_discrepancy: f64,
    closedness_defect: f64,
    factor: Factor,
    phi: CompiledExpr,
}

struct Forms<'a> {
    factor: &'a Factor,
    phi: &'a CompiledExpr,
    p: &'a OdeProblem,
}

impl Forms<'_> {
    /// `(-mu phi, mu)`; NaN inside exclusions, an error elsewhere.
    fn pq(&self, x: f64, u: f64) -> Result<(f64, f64), QuadratureError> {
        let v = self
            .factor
            .eval(x, u)
            .and_then(|m| Some((-m * self.phi.eval(x, u).ok()?, m)))
            .filter(|(a, b)| a.is_finite() && b.is_finite());
        match v {
            Some(v) => Ok(v),
            None if !self.p.region().contains(x, u) => Ok((f64::NAN, f64::NAN)),
            None => Err(QuadratureError::GridSingular { x, u }),
        }
    }

    fn along_x(&self, x0: f64, x1: f64, u: f64) -> Result<f64, QuadratureError> {
        let (mid, half) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
        let mut s = 0.0;
        for (t, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            s += w * self.pq(mid + half * t, u)?.0;
        }
        Ok(s * half)
    }

    fn along_u(&self, x: f64, u0: f64, u1: f64) -> Result<f64, QuadratureError> {
        let (mid, half) = (0.5 * (u0 + u1), 0.5 * (u1 - u0));
        let mut s = 0.0;
        for (t, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            s += w * self.pq(x, mid + half * t)?.1;
        }
        Ok(s * half)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Cumulative integral along one axis from `start`, given a segment rule.
fn cumulate(
    n: usize,
    start: usize,
    mut seg: impl FnMut(usize) -> Result<f64, QuadratureError>,
) -> Result<Vec<f64>, QuadratureError> {
    let mut out = vec![0.0; n];
    for i in start + 1..n {
        out[i] = out[i - 1] + seg(i - 1)?;
    }
    for i in (0..start).rev() {
        out[i] = out[i + 1] - seg(i)?;
    }
    Ok(out)
}

pub(super) fn tabulate(
    p: &OdeProblem,
    mu: &IntegratingFactor,
    cfg: &SampleConfig,
) -> Result<GriddedIntegral, QuadratureError> {
    let factor = match mu {
        IntegratingFactor::Symbolic(e) => Factor::Compiled(CompiledExpr::new(e)),
        IntegratingFactor::Tabulated(t) => Factor::Table(t.clone()),
    };
    let phi = CompiledExpr::new(p.phi());
    let forms = Forms {
        factor: &factor,
        phi: &phi,
        p,
    };
    let region = p.region();
    let closedness_defect = closedness(&forms, cfg)?;

    let (x_lo, x_hi) = region.x_interval();
    let (u_lo, u_hi) = region.u_interval();
    let xs = linspace(x_lo, x_hi, GRID_NODES);
    let us = linspace(u_lo, u_hi, GRID_NODES);
    let base = base_node(p, &xs, &us);
    let (i0, j0) = base;
    let n = GRID_NODES;

    // x first, then u
    let row = cumulate(n, i0, |i| forms.along_x(xs[i], xs[i + 1], us[j0]))?;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        let col = cumulate(n, j0, |j| forms.along_u(xs[i], us[j], us[j + 1]))?;
        for j in 0..n {
            values[i * n + j] = row[i] + col[j];
        }
    }
    // u first, then x
    let col = cumulate(n, j0, |j| forms.along_u(xs[i0], us[j], us[j + 1]))?;
    let mut path_discrepancy: f64 = 0.0;
    for j in 0..n {
        let row = cumulate(n, i0, |i| forms.along_x(xs[i], xs[i + 1], us[j]))?;
        for i in 0..n {
            let d = (values[i * n + j] - (col[j] + row[i])).abs();
            if d.is_finite() {
                path_discrepancy = path_discrepancy.max(d);
            }
        }
    }
    if path_discrepancy >= PATH_TOL {
        return Err(QuadratureError::PathDependent(path_discrepancy));
    }
    Ok(GriddedIntegral {
        xs,
        us,
        values,
        base,
        path_discrepancy,
        closedness_defect,
        factor,
        phi,
    })
}

/// Max `|d(-mu phi)/du - d(mu)/dx|` by central differences at the sample points.
fn closedness(forms: &Forms<'_>, cfg: &SampleConfig) -> Result<f64, QuadratureError> {
    let region = forms.p.region();
    let hx = 1e-5 * region.width();
    let hu = 1e-5 * region.height();
    let pts = region
        .sample_points(cfg.samples, cfg.seed)
        .map_err(|_| crate::expr::ZeroTestError::RegionEmpty)?;
    let mut worst: f64 = 0.0;
    for (x, u) in pts {
        let Ok((p_up, _)) = forms.pq(x, u + hu) else { continue };
        let Ok((p_dn, _)) = forms.pq(x, u - hu) else { continue };
        let Ok((_, q_rt)) = forms.pq(x + hx, u) else { continue };
        let Ok((_, q_lt)) = forms.pq(x - hx, u) else { continue };
        let d = ((p_up - p_dn) / (2.0 * hu) - (q_rt - q_lt) / (2.0 * hx)).abs();
        if d.is_nan() {
            continue;
        }
        if d > CLOSED_TOL {
            return Err(QuadratureError::NotClosed { defect: d, x, u });
        }
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Grid node closest to the region's base point that lies in the region.
fn base_node(p: &OdeProblem, xs: &[f64], us: &[f64]) -> (usize, usize) {
    let region = p.region();
    let (bx, bu) = region.base_point();
    let nearest = |v: &[f64], t: f64| {
        let step = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
        (((t - v[0]) / step).round().max(0.0) as usize).min(v.len() - 1)
    };
    let (i, j) = (nearest(xs, bx), nearest(us, bu));
    if region.contains(xs[i], us[j]) {
        return (i, j);
    }
    let dist = |a: usize, b: usize| {
        ((xs[a] - bx) / region.width()).powi(2) + ((us[b] - bu) / region.height()).powi(2)
    };
    (0..xs.len())
        .flat_map(|a| (0..us.len()).map(move |b| (a, b)))
        .filter(|&(a, b)| region.contains(xs[a], us[b]))
        .min_by(|&(a, b), &(c, d)| dist(a, b).total_cmp(&dist(c, d)))
        .unwrap_or((i, j))
}

impl GriddedIntegral {
    pub fn base(&self) -> (f64, f64) {
        (self.xs[self.base.0], self.us[self.base.1])
    }

    pub fn path_discrepancy(&self) -> f64 {
        self.path_discrepancy
    }

    /// Largest finite-difference closedness defect observed while tabulating.
    pub fn closedness_defect(&self) -> f64 {
        self.closedness_defect
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.xs.len(), self.us.len())
    }

    /// Nearest node value plus a short line integral to `(x, u)`.
    pub fn eval(&self, x: f64, u: f64) -> Option<f64> {
        let n = self.us.len();
        let locate = |v: &[f64], t: f64| -> Option<usize> {
            let (lo, hi) = (v[0], v[v.len() - 1]);
            let slack = 1e-9 * (hi - lo);
            if !(t >= lo - slack && t <= hi + slack) {
                return None;
            }
            let step = (hi - lo) / (v.len() - 1) as f64;
            Some((((t - lo) / step).round().max(0.0) as usize).min(v.len() - 1))
        };
        let (i, j) = (locate(&self.xs, x)?, locate(&self.us, u)?);
        let start = self.values[i * n + j];
        if !start.is_finite() {
            return None;
        }
        let (xi, uj) = (self.xs[i], self.us[j]);
        let (mut sx, mut su) = (0.0, 0.0);
        let (xm, xh) = (0.5 * (xi + x), 0.5 * (x - xi));
        let (um, uh) = (0.5 * (uj + u), 0.5 * (u - uj));
        for (t, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            if xh != 0.0 {
                let xt = xm + xh * t;
                sx += w * -(self.factor.eval(xt, uj)? * self.phi.eval(xt, uj).ok()?);
            }
            if uh != 0.0 {
                su += w * self.factor.eval(x, um + uh * t)?;
            }
        }
        let v = start + sx * xh + su * uh;
        v.is_finite().then_some(v)
    }

    /// `x,u,I` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,u,I\n");
        let n = self.us.len();
        for (i, x) in self.xs.iter().enumerate() {
            for (j, u) in self.us.iter().enumerate() {
                let _ = writeln!(out, "{x:.17e},{u:.17e},{:.17e}", self.values[i * n + j]);
            }
        }
        out
    }
}
