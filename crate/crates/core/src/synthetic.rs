//! Synthetic positive populations with prescribed means, coefficients of
//! variation and correlation.
//!
//! Skewed log-normal bases keep both variables positive at large
//! coefficients of variation. The auxiliary base is standardised, the second
//! base is orthogonalised against it, and the study variable is built as a
//! correlated mix of the two. An affine map then hits every target to
//! rounding precision.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{mean, Population};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentTargets {
    pub size: usize,
    pub mean_y: f64,
    pub mean_x: f64,
    pub cv_y: f64,
    pub cv_x: f64,
    pub r: f64,
}

impl MomentTargets {
    /// Moments of the groundwater arsenic/iron study population.
    pub fn groundwater_reference() -> Self {
        Self {
            size: 365,
            mean_y: 0.5832,
            mean_x: 0.6277,
            cv_y: 0.7681,
            cv_x: 1.1504,
            r: 0.9125,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.size < 3 {
            return Err(Error::PopulationTooSmall(self.size));
        }
        let finite = [self.mean_y, self.mean_x, self.cv_y, self.cv_x, self.r]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("targets must be finite".into()));
        }
        if self.mean_y <= 0.0 || self.mean_x <= 0.0 {
            return Err(Error::InfeasibleTargets("means must be positive".into()));
        }
        if self.cv_y <= 0.0 || self.cv_x <= 0.0 {
            return Err(Error::InfeasibleTargets(
                "coefficients of variation must be positive".into(),
            ));
        }
        if !(-1.0..=1.0).contains(&self.r) {
            return Err(Error::InfeasibleTargets(format!(
                "correlation {} outside [-1, 1]",
                self.r
            )));
        }
        Ok(())
    }
}

/// Log-scale spread of the auxiliary base.
pub const LOG_SD_X: f64 = 1.2;
/// Log-scale spread of the independent base.
pub const LOG_SD_RESIDUAL: f64 = 0.5;

/// Centres `v` and scales it to unit sample variance (divisor `len - 1`).
fn standardize(v: &mut [f64]) -> Option<()> {
    let m = mean(v);
    let ss: f64 = v.iter().map(|a| (a - m).powi(2)).sum();
    let sd = (ss / (v.len() - 1) as f64).sqrt();
    if sd.is_nan() || sd <= 0.0 {
        return None;
    }
    for a in v.iter_mut() {
        *a = (*a - m) / sd;
    }
    Some(())
}

pub fn generate_population(targets: &MomentTargets, seed: u64) -> Result<Population> {
    targets.validate()?;
    let n = targets.size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = Vec::with_capacity(n);
    let mut u: Vec<f64> = Vec::with_capacity(n);
    for _ in 0..n {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        x.push((LOG_SD_X * z1).exp());
        u.push((LOG_SD_RESIDUAL * z2).exp());
    }
    let degenerate = || Error::InfeasibleTargets("degenerate random base; try another seed".into());
    standardize(&mut x).ok_or_else(degenerate)?;
    standardize(&mut u).ok_or_else(degenerate)?;
    let proj = x.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() / (n - 1) as f64;
    for (b, a) in u.iter_mut().zip(&x) {
        *b -= proj * a;
    }
    standardize(&mut u).ok_or_else(degenerate)?;

    let r = targets.r;
    let tail = (1.0 - r * r).max(0.0).sqrt();
    let sd_y = targets.mean_y * targets.cv_y;
    let sd_x = targets.mean_x * targets.cv_x;
    let ys: Vec<f64> = x
        .iter()
        .zip(&u)
        .map(|(a, b)| targets.mean_y + sd_y * (r * a + tail * b))
        .collect();
    let xs: Vec<f64> = x.iter().map(|a| targets.mean_x + sd_x * a).collect();
    if let Some(v) = ys.iter().chain(&xs).find(|v| **v <= 0.0) {
        return Err(Error::InfeasibleTargets(format!(
            "generated non-positive value {v}; lower the coefficients of variation or change the seed"
        )));
    }
    Population::new(ys, xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::summarize;

    fn check(t: &MomentTargets, seed: u64) {
        let pop = generate_population(t, seed).unwrap();
        let st = summarize(&pop).unwrap();
        assert_eq!(pop.len(), t.size);
        assert!((st.mean_y - t.mean_y).abs() <= 1e-3 * t.mean_y);
        assert!((st.mean_x - t.mean_x).abs() <= 1e-3 * t.mean_x);
        assert!((st.cv_y - t.cv_y).abs() <= 1e-2 * t.cv_y);
        assert!((st.cv_x - t.cv_x).abs() <= 1e-2 * t.cv_x);
        assert!((st.r - t.r).abs() <= 1e-2);
        assert!(pop.y().iter().chain(pop.x()).all(|v| *v > 0.0));
    }

    #[test]
    fn reference_targets_are_hit() {
        for seed in 0..5 {
            check(&MomentTargets::groundwater_reference(), seed);
        }
    }

    #[test]
    fn uncorrelated_targets() {
        let t = MomentTargets {
            size: 200,
            mean_y: 10.0,
            mean_x: 4.0,
            cv_y: 0.1,
            cv_x: 0.3,
            r: 0.0,
        };
        check(&t, 11);
    }

    #[test]
    fn deterministic_per_seed() {
        let t = MomentTargets::groundwater_reference();
        assert_eq!(
            generate_population(&t, 42).unwrap(),
            generate_population(&t, 42).unwrap()
        );
        assert_ne!(
            generate_population(&t, 42).unwrap(),
            generate_population(&t, 43).unwrap()
        );
    }

    #[test]
    fn infeasible_targets() {
        let mut t = MomentTargets::groundwater_reference();
        t.cv_y = 0.0;
        assert!(matches!(generate_population(&t, 0), Err(Error::InfeasibleTargets(_))));
        let mut t = MomentTargets::groundwater_reference();
        t.r = 1.5;
        assert!(generate_population(&t, 0).is_err());
        let mut t = MomentTargets::groundwater_reference();
        t.size = 2;
        assert!(matches!(generate_population(&t, 0), Err(Error::PopulationTooSmall(2))));
        // a negatively correlated study variable with huge spread must go negative
        let mut t = MomentTargets::groundwater_reference();
        t.r = -0.9;
        t.cv_y = 3.0;
        assert!(matches!(generate_population(&t, 0), Err(Error::InfeasibleTargets(_))));
    }
}
