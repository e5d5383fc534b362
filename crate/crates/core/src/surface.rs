//! Plot-ready grids of the bias-free surface, the optimal-MSE surface and the
//! dominance region in `(alpha, beta, c)` space.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::theory::{biasfree_betas, dominates, Dominance};

/// An inclusive, evenly spaced axis `lo:hi:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
            return Err(Error::InvalidInput("grid bounds must be finite".into()));
        }
        if step <= 0.0 {
            return Err(Error::InvalidInput(format!("grid step must be positive, got {step}")));
        }
        if hi < lo {
            return Err(Error::InvalidInput(format!(
                "grid upper bound {hi} below lower bound {lo}"
            )));
        }
        Ok(Self { lo, hi, step })
    }

    /// A single-point axis.
    pub fn point(v: f64) -> Self {
        Self {
            lo: v,
            hi: v,
            step: 1.0,
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(move |i| self.lo + i as f64 * self.step)
    }
}

impl FromStr for GridAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad grid axis `{s}`; expected lo:hi:step or a single value")))
        };
        match parts.as_slice() {
            [v] => Ok(Self::point(num(v)?)),
            [lo, hi, step] => Self::new(num(lo)?, num(hi)?, num(step)?),
            _ => Err(Error::InvalidInput(format!(
                "bad grid axis `{s}`; expected lo:hi:step or a single value"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    /// First-order bias-free parameters, both sheets.
    BiasFree,
    /// Parameters of minimal first-order MSE, `(1 - 2a)(1 - 2b) = c`.
    Aoe,
    /// Indicator of strictly beating sample mean, ratio and product estimators.
    DominanceRegion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub indicator: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRanges {
    pub alpha: GridAxis,
    /// Only used by [`SurfaceKind::DominanceRegion`]; the other surfaces solve for beta.
    pub beta: GridAxis,
    pub c: GridAxis,
}

/// Samples the requested surface. `BiasFree` emits two rows per `(alpha, c)`
/// (plane then saddle sheet); `Aoe` skips `alpha = 1/2`, where beta is free
/// for `c = 0` and undefined otherwise.
pub fn surface_grid(kind: SurfaceKind, ranges: &SurfaceRanges) -> Vec<SurfaceRow> {
    let mut rows = Vec::new();
    let row = |alpha, beta, c, indicator| SurfaceRow {
        alpha,
        beta,
        c,
        indicator,
    };
    for c in ranges.c.values() {
        for alpha in ranges.alpha.values() {
            match kind {
                SurfaceKind::BiasFree => {
                    let (plane, saddle) = biasfree_betas(alpha, c);
                    rows.push(row(alpha, plane, c, None));
                    rows.push(row(alpha, saddle, c, None));
                }
                SurfaceKind::Aoe => {
                    let denom = 1.0 - 2.0 * alpha;
                    if denom.abs() > 1e-12 {
                        rows.push(row(alpha, 0.5 * (1.0 - c / denom), c, None));
                    }
                }
                SurfaceKind::DominanceRegion => {
                    for beta in ranges.beta.values() {
                        let inside = Dominance::ALL.iter().all(|&kind| dominates(kind, alpha, beta, c));
                        rows.push(row(alpha, beta, c, Some(inside)));
                    }
                }
            }
        }
    }
    rows
}

/// Writes rows as CSV with header `alpha,beta,c` or `alpha,beta,c,indicator`.
pub fn write_surface_csv<W: Write>(kind: SurfaceKind, rows: &[SurfaceRow], mut out: W) -> std::io::Result<()> {
    let with_indicator = kind == SurfaceKind::DominanceRegion;
    if with_indicator {
        writeln!(out, "alpha,beta,c,indicator")?;
    } else {
        writeln!(out, "alpha,beta,c")?;
    }
    for r in rows {
        write!(out, "{},{},{}", r.alpha, r.beta, r.c)?;
        if with_indicator {
            write!(out, ",{}", u8::from(r.indicator.unwrap_or(false)))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
