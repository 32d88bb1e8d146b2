//! Zero and constancy testing: structural first, then quasi-random sampling.
//!
//! A `NumericallyZero` verdict is evidence, not proof.

use serde::Serialize;
use thiserror::Error;

use super::{diff, simplify, CompiledExpr, Expr, Region, Var};

pub const DEFAULT_ZERO_TOL: f64 = 1e-9;
pub const DEFAULT_SAMPLES: usize = 64;
pub const DEFAULT_SEED: u64 = 0;
const MIN_SAMPLES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ZeroVerdict {
    StructurallyZero,
    NumericallyZero { max_abs: f64, samples: usize },
    NonZero { x: f64, u: f64, value: f64 },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        !matches!(self, ZeroVerdict::NonZero { .. })
    }

    pub fn is_structural(&self) -> bool {
        matches!(self, ZeroVerdict::StructurallyZero)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZeroTestError {
    #[error("zero test needs at least {MIN_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("exclusions cover the whole region")]
    RegionEmpty,
    #[error("expression could not be evaluated at any sample point")]
    NoValidSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleConfig {
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            tol: DEFAULT_ZERO_TOL,
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }
}

impl SampleConfig {
    pub fn with_tol(self, tol: f64) -> Self {
        SampleConfig { tol, ..self }
    }
}

/// Decide whether `e` vanishes on `r` using the default seed.
pub fn zero_test(
    e: &Expr,
    r: &Region,
    tol: f64,
    n_samples: usize,
) -> Result<ZeroVerdict, ZeroTestError> {
    zero_test_with(
        e,
        r,
        &SampleConfig {
            tol,
            samples: n_samples,
            seed: DEFAULT_SEED,
        },
    )
}

pub fn zero_test_with(
    e: &Expr,
    r: &Region,
    cfg: &SampleConfig,
) -> Result<ZeroVerdict, ZeroTestError> {
    if cfg.samples < MIN_SAMPLES {
        return Err(ZeroTestError::TooFewSamples(cfg.samples));
    }
    let s = simplify(e);
    if s.is_zero() {
        return Ok(ZeroVerdict::StructurallyZero);
    }
    let compiled = CompiledExpr::new(&s);
    // oversample so that points hitting a pole can be skipped
    let points = r
        .sample_points(4 * cfg.samples, cfg.seed)
        .map_err(|_| ZeroTestError::RegionEmpty)?;
    let mut used = 0;
    let mut max_abs: f64 = 0.0;
    for (x, u) in points {
        let Ok(v) = compiled.eval(x, u) else { continue };
        if v.abs() > cfg.tol {
            return Ok(ZeroVerdict::NonZero { x, u, value: v });
        }
        max_abs = max_abs.max(v.abs());
        used += 1;
        if used == cfg.samples {
            break;
        }
    }
    if used == 0 {
        return Err(ZeroTestError::NoValidSamples);
    }
    Ok(ZeroVerdict::NumericallyZero {
        max_abs,
        samples: used,
    })
}

/// `Some(c)` when both partial derivatives of `e` vanish on `r`; `c` is the
/// value at the region's base point (or the first evaluable sample).
pub fn constancy_test(e: &Expr, r: &Region, tol: f64) -> Result<Option<f64>, ZeroTestError> {
    let cfg = SampleConfig::default().with_tol(tol);
    for v in [Var::X, Var::U] {
        if !zero_test_with(&diff(e, v), r, &cfg)?.is_zero() {
            return Ok(None);
        }
    }
    let s = simplify(e);
    if let Some(q) = s.num_value() {
        return Ok(Some(q));
    }
    let compiled = CompiledExpr::new(&s);
    let (bx, bu) = r.base_point();
    if let Ok(v) = compiled.eval(bx, bu) {
        return Ok(Some(v));
    }
    let points = r
        .sample_points(cfg.samples, cfg.seed)
        .map_err(|_| ZeroTestError::RegionEmpty)?;
    points
        .into_iter()
        .find_map(|(x, u)| compiled.eval(x, u).ok())
        .map(Some)
        .ok_or(ZeroTestError::NoValidSamples)
}
