//! Rectangular working regions with excluded sub-rectangles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("interval {name}={lo}:{hi} is empty or not finite")]
    BadInterval { name: &'static str, lo: f64, hi: f64 },
    #[error("excluded zone {0} is not inside the box")]
    ExclusionOutside(Rect),
    #[error("exclusions cover the whole region")]
    Empty,
    #[error("cannot parse region {text:?}: {reason}")]
    Syntax { text: String, reason: String },
}

/// Closed axis-aligned rectangle `[x_lo, x_hi] x [u_lo, u_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub u_lo: f64,
    pub u_hi: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, u: f64) -> bool {
        x >= self.x_lo && x <= self.x_hi && u >= self.u_lo && u <= self.u_hi
    }

    fn inside(&self, outer: &Rect) -> bool {
        self.x_lo >= outer.x_lo
            && self.x_hi <= outer.x_hi
            && self.u_lo >= outer.u_lo
            && self.u_hi <= outer.u_hi
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}/{}:{}", self.x_lo, self.x_hi, self.u_lo, self.u_hi)
    }
}

/// The open set the problem lives on, represented as a box minus a finite
/// list of excluded rectangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    bounds: Rect,
    exclusions: Vec<Rect>,
}

fn check_interval(name: &'static str, lo: f64, hi: f64) -> Result<(), RegionError> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(RegionError::BadInterval { name, lo, hi })
    }
}

/// Van der Corput radical inverse of `i` in `base`.
pub(crate) fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

impl Region {
    pub fn new(x_lo: f64, x_hi: f64, u_lo: f64, u_hi: f64) -> Result<Region, RegionError> {
        check_interval("x", x_lo, x_hi)?;
        check_interval("u", u_lo, u_hi)?;
        Ok(Region {
            bounds: Rect {
                x_lo,
                x_hi,
                u_lo,
                u_hi,
            },
            exclusions: Vec::new(),
        })
    }

    pub fn exclude(mut self, zone: Rect) -> Result<Region, RegionError> {
        check_interval("x", zone.x_lo, zone.x_hi)?;
        check_interval("u", zone.u_lo, zone.u_hi)?;
        if !zone.inside(&self.bounds) {
            return Err(RegionError::ExclusionOutside(zone));
        }
        self.exclusions.push(zone);
        if self.sample_points(1, 0).is_err() {
            return Err(RegionError::Empty);
        }
        Ok(self)
    }

    pub fn bounds(&self) -> &Rect {
        &self.bounds
    }

    pub fn exclusions(&self) -> &[Rect] {
        &self.exclusions
    }

    pub fn x_interval(&self) -> (f64, f64) {
        (self.bounds.x_lo, self.bounds.x_hi)
    }

    pub fn u_interval(&self) -> (f64, f64) {
        (self.bounds.u_lo, self.bounds.u_hi)
    }

    pub fn width(&self) -> f64 {
        self.bounds.x_hi - self.bounds.x_lo
    }

    pub fn height(&self) -> f64 {
        self.bounds.u_hi - self.bounds.u_lo
    }

    /// Inside the box and outside every exclusion.
    pub fn contains(&self, x: f64, u: f64) -> bool {
        self.bounds.contains(x, u) && !self.exclusions.iter().any(|z| z.contains(x, u))
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.bounds.x_lo + self.bounds.x_hi),
            0.5 * (self.bounds.u_lo + self.bounds.u_hi),
        )
    }

    /// The center if allowed, otherwise the nearest allowed sample point.
    pub fn base_point(&self) -> (f64, f64) {
        let c = self.center();
        if self.contains(c.0, c.1) {
            return c;
        }
        let scale = |x: f64, u: f64| {
            ((x - c.0) / self.width()).powi(2) + ((u - c.1) / self.height()).powi(2)
        };
        self.halton(0)
            .take(4096)
            .filter(|&(x, u)| self.contains(x, u))
            .min_by(|a, b| scale(a.0, a.1).total_cmp(&scale(b.0, b.1)))
            .unwrap_or(c)
    }

    /// Halton (2, 3) points in the open box, starting at an index derived
    /// from `seed`. Exclusions are not filtered.
    fn halton(&self, seed: u64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let start = 1 + (seed % 1_000_003).wrapping_mul(7919);
        (start..).map(move |i| {
            (
                self.bounds.x_lo + radical_inverse(i, 2) * self.width(),
                self.bounds.u_lo + radical_inverse(i, 3) * self.height(),
            )
        })
    }

    /// `n` deterministic quasi-random points of the region.
    pub fn sample_points(&self, n: usize, seed: u64) -> Result<Vec<(f64, f64)>, RegionError> {
        let budget = 4096 + 64 * n;
        let pts: Vec<_> = self
            .halton(seed)
            .take(budget)
            .filter(|&(x, u)| self.contains(x, u))
            .take(n)
            .collect();
        if pts.len() < n || (n == 0 && !self.has_interior()) {
            return Err(RegionError::Empty);
        }
        Ok(pts)
    }

    fn has_interior(&self) -> bool {
        self.halton(0).take(4096).any(|(x, u)| self.contains(x, u))
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = &self.bounds;
        write!(f, "x={}:{},u={}:{}", b.x_lo, b.x_hi, b.u_lo, b.u_hi)?;
        for z in &self.exclusions {
            write!(f, ",exclude={z}")?;
        }
        Ok(())
    }
}

/// `x=LO:HI,u=LO:HI[,exclude=XLO:XHI/ULO:UHI]...`
impl FromStr for Region {
    type Err = RegionError;

    fn from_str(text: &str) -> Result<Region, RegionError> {
        let syntax = |reason: &str| RegionError::Syntax {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let interval = |s: &str| -> Result<(f64, f64), RegionError> {
            let (lo, hi) = s.split_once(':').ok_or_else(|| syntax("expected LO:HI"))?;
            let lo = lo.trim().parse::<f64>().map_err(|_| syntax("bad number"))?;
            let hi = hi.trim().parse::<f64>().map_err(|_| syntax("bad number"))?;
            Ok((lo, hi))
        };
        let mut x = None;
        let mut u = None;
        let mut zones = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| syntax("expected KEY=VALUE"))?;
            match key.trim() {
                "x" => x = Some(interval(value)?),
                "u" => u = Some(interval(value)?),
                "exclude" => {
                    let (xs, us) = value
                        .split_once('/')
                        .ok_or_else(|| syntax("exclusion must be XLO:XHI/ULO:UHI"))?;
                    let (x_lo, x_hi) = interval(xs)?;
                    let (u_lo, u_hi) = interval(us)?;
                    zones.push(Rect {
                        x_lo,
                        x_hi,
                        u_lo,
                        u_hi,
                    });
                }
                other => return Err(syntax(&format!("unknown key {other:?}"))),
            }
        }
        let (x_lo, x_hi) = x.ok_or_else(|| syntax("missing x interval"))?;
        let (u_lo, u_hi) = u.ok_or_else(|| syntax("missing u interval"))?;
        zones
            .into_iter()
            .try_fold(Region::new(x_lo, x_hi, u_lo, u_hi)?, Region::exclude)
    }
}
