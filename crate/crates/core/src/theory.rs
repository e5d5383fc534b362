//! First-order (O(1/n)) bias and MSE of the estimators, the optimal
//! parameter curves and the dominance predicates.
//!
//! With `e2 = (xbar - Xbar) / Xbar`, every estimator in [`EstimatorSpec`]
//! expands as `ybar * (1 + a e2 + b e2^2 + ...)`. Under SRSWOR that gives
//!
//! ```text
//! bias1 = fpc * Ybar * Cx^2 * (a C + b)
//! mse1  = fpc * Ybar^2 * (Cy^2 + Cx^2 (a^2 + 2 a C))
//! ```
//!
//! where `fpc = (1 - f) / n`. The ratio-product-ratio estimator additionally
//! has its own closed forms ([`bias1_rpr`], [`mse1_rpr`], [`mse1_grad`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorSpec;
use crate::stats::{SamplingDesign, SummaryStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderResult {
    pub bias1: f64,
    pub mse1: f64,
}

/// Coefficients of `e2` and `e2^2` in the expansion of `estimate / ybar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expansion {
    pub linear: f64,
    pub quadratic: f64,
}

pub fn expansion(spec: EstimatorSpec) -> Expansion {
    let (linear, quadratic) = match spec {
        EstimatorSpec::SampleMean => (0.0, 0.0),
        EstimatorSpec::Ratio => (-1.0, 1.0),
        EstimatorSpec::Product => (1.0, 0.0),
        EstimatorSpec::RatioProductRatio { alpha, beta } => (
            -(1.0 - 2.0 * alpha) * (1.0 - 2.0 * beta),
            (1.0 - alpha - beta) * (1.0 - 2.0 * beta),
        ),
        EstimatorSpec::UnbiasedAoe { c } => (-c, c * c),
        EstimatorSpec::SrivastavaPower { k } => (k, 0.5 * k * (k - 1.0)),
        EstimatorSpec::Reddy { k } => (-k, k * k),
        EstimatorSpec::SahaiTransformed { k } => (-k, -0.5 * k * (k - 1.0)),
        EstimatorSpec::SinghRatioProduct { k } => (1.0 - 2.0 * k, k),
    };
    Expansion { linear, quadratic }
}

fn product_term(alpha: f64, beta: f64) -> f64 {
    (1.0 - 2.0 * alpha) * (1.0 - 2.0 * beta)
}

pub fn bias1_rpr(alpha: f64, beta: f64, st: &SummaryStats, d: &SamplingDesign) -> f64 {
    d.fpc_rate * (1.0 - 2.0 * beta) * (1.0 - alpha - beta - (1.0 - 2.0 * alpha) * st.c) * st.cv_x * st.cv_x * st.mean_y
}

pub fn mse1_rpr(alpha: f64, beta: f64, st: &SummaryStats, d: &SamplingDesign) -> f64 {
    let p = product_term(alpha, beta);
    d.fpc_rate * st.mean_y * st.mean_y * (st.cv_y * st.cv_y + st.cv_x * st.cv_x * (p * (p - 2.0 * st.c)))
}

/// Gradient of [`mse1_rpr`] with respect to `(alpha, beta)`. The leading sign
/// comes from `d(1 - 2 alpha)/d alpha = -2`.
pub fn mse1_grad(alpha: f64, beta: f64, st: &SummaryStats, d: &SamplingDesign) -> (f64, f64) {
    let scale = -4.0 * d.fpc_rate * st.mean_y * st.mean_y * st.cv_x * st.cv_x * (product_term(alpha, beta) - st.c);
    (scale * (1.0 - 2.0 * beta), scale * (1.0 - 2.0 * alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classical {
    SampleMean,
    Ratio,
    Product,
}

/// MSE of the classical estimators; exact for the sample mean, first order
/// for ratio and product.
pub fn mse1_classical(kind: Classical, st: &SummaryStats, d: &SamplingDesign) -> f64 {
    let cx2 = st.cv_x * st.cv_x;
    let inner = match kind {
        Classical::SampleMean => return d.fpc_rate * st.var_y,
        Classical::Ratio => 1.0 * (1.0 - 2.0 * st.c),
        Classical::Product => 1.0 * (1.0 + 2.0 * st.c),
    };
    d.fpc_rate * st.mean_y * st.mean_y * (st.cv_y * st.cv_y + cx2 * inner)
}

/// First-order MSE floor `fpc * S_Y^2 (1 - r^2)` attained on the optimal hyperbola.
pub fn minimal_mse1(st: &SummaryStats, d: &SamplingDesign) -> f64 {
    d.fpc_rate * st.var_y * (1.0 - st.r * st.r)
}

/// The two values of `beta` making the first-order bias vanish for a given
/// `alpha`: the plane `beta = 1/2` and the saddle sheet.
pub fn biasfree_betas(alpha: f64, c: f64) -> (f64, f64) {
    (0.5, 1.0 - alpha - c + 2.0 * alpha * c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AoeBranch {
    /// `alpha* = (1 - sqrt(c / (2c - 1))) / 2`.
    MinusMinus,
    /// Point reflection of [`AoeBranch::MinusMinus`] through `(1/2, 1/2)`.
    PlusPlus,
}

/// Parameters where the estimator is simultaneously first-order unbiased
/// and of minimal first-order MSE.
///
/// For `0 < c < 1/2` the parameters are complex; `is_real` is false and the
/// reported values are their real parts (both `1/2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoeSolution {
    pub alpha_star: f64,
    pub beta_star: f64,
    pub branch: AoeBranch,
    pub is_real: bool,
}

impl AoeSolution {
    /// `(1 - 2 alpha*)(1 - 2 beta*) - c`; zero on the optimal hyperbola.
    pub fn constraint_residual(&self, c: f64) -> f64 {
        product_term(self.alpha_star, self.beta_star) - c
    }
}

/// For `c < 0` the sign in `beta*` is flipped relative to `alpha*`; otherwise
/// `(1 - 2 alpha*)(1 - 2 beta*)` would equal `|c|` instead of `c`.
pub fn aoe_parameters(c: f64, branch: AoeBranch) -> Result<AoeSolution> {
    if !c.is_finite() {
        return Err(Error::InvalidInput(format!("c must be finite, got {c}")));
    }
    if c == 0.5 {
        return Err(Error::PoleAtHalf);
    }
    if c > 0.0 && c < 0.5 {
        return Ok(AoeSolution {
            alpha_star: 0.5,
            beta_star: 0.5,
            branch,
            is_real: false,
        });
    }
    let sign = match branch {
        AoeBranch::MinusMinus => -1.0,
        AoeBranch::PlusPlus => 1.0,
    };
    let beta_sign = if c < 0.0 { -sign } else { sign };
    let a = (c / (2.0 * c - 1.0)).sqrt();
    let b = (c * (2.0 * c - 1.0)).sqrt();
    Ok(AoeSolution {
        alpha_star: 0.5 * (1.0 + sign * a),
        beta_star: 0.5 * (1.0 + beta_sign * b),
        branch,
        is_real: true,
    })
}

/// Like [`aoe_parameters`] but refuses the complex region.
pub fn aoe_parameters_real(c: f64, branch: AoeBranch) -> Result<AoeSolution> {
    let sol = aoe_parameters(c, branch)?;
    if sol.is_real {
        Ok(sol)
    } else {
        Err(Error::NonRealParameters(c))
    }
}

/// First-order bias of an optimal-MSE parameter pair, parameterised by `beta`.
pub fn aoe_bias1(beta: f64, c: f64, st: &SummaryStats, d: &SamplingDesign) -> f64 {
    let t = 1.0 - 2.0 * beta;
    d.fpc_rate * st.cv_x * st.cv_x * st.mean_y * 0.5 * (c * (1.0 - 2.0 * c) + t * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dominance {
    OverProduct,
    OverRatio,
    OverSampleMean,
}

impl Dominance {
    pub const ALL: [Dominance; 3] = [Self::OverProduct, Self::OverRatio, Self::OverSampleMean];

    pub fn baseline(self) -> Classical {
        match self {
            Self::OverProduct => Classical::Product,
            Self::OverRatio => Classical::Ratio,
            Self::OverSampleMean => Classical::SampleMean,
        }
    }
}

/// Whether the ratio-product-ratio estimator at `(alpha, beta)` has strictly
/// smaller first-order MSE than the baseline, for correlation constant `c`.
pub fn dominates(kind: Dominance, alpha: f64, beta: f64, c: f64) -> bool {
    let t = 2.0 * alpha * beta - alpha - beta;
    match kind {
        Dominance::OverProduct => (1.0 + t) * (c - t) > 0.0,
        Dominance::OverRatio => t * (c - 1.0 - t) > 0.0,
        Dominance::OverSampleMean => {
            let p = product_term(alpha, beta);
            p * (2.0 * c - p) > 0.0
        }
    }
}

/// First-order MSE of any estimator.
pub fn mse1(spec: EstimatorSpec, st: &SummaryStats, d: &SamplingDesign) -> f64 {
    match spec {
        EstimatorSpec::SampleMean => mse1_classical(Classical::SampleMean, st, d),
        EstimatorSpec::RatioProductRatio { alpha, beta } => mse1_rpr(alpha, beta, st, d),
        _ => {
            let a = expansion(spec).linear;
            d.fpc_rate * st.mean_y * st.mean_y * (st.cv_y * st.cv_y + st.cv_x * st.cv_x * (a * (a + 2.0 * st.c)))
        }
    }
}

/// First-order bias of any estimator.
pub fn bias1(spec: EstimatorSpec, st: &SummaryStats, d: &SamplingDesign) -> f64 {
    match spec {
        EstimatorSpec::SampleMean => 0.0,
        EstimatorSpec::RatioProductRatio { alpha, beta } => bias1_rpr(alpha, beta, st, d),
        _ => {
            let e = expansion(spec);
            d.fpc_rate * st.mean_y * st.cv_x * st.cv_x * (e.linear * st.c + e.quadratic)
        }
    }
}

pub fn family_theory(spec: EstimatorSpec, st: &SummaryStats, d: &SamplingDesign) -> FirstOrderResult {
    FirstOrderResult {
        bias1: bias1(spec, st, d),
        mse1: mse1(spec, st, d),
    }
}

/// `mse1(num) / mse1(den)`. With `num` the sample mean this is the usual
/// efficiency relative to the sample mean. The design factor cancels.
pub fn relative_efficiency(
    num: EstimatorSpec,
    den: EstimatorSpec,
    st: &SummaryStats,
    d: &SamplingDesign,
) -> Result<f64> {
    let denominator = mse1(den, st, d);
    // r^2 = 1 makes the optimal MSE vanish; rounding leaves a residue
    if denominator <= 1e-12 * mse1_classical(Classical::SampleMean, st, d) {
        return Err(Error::DegenerateMse);
    }
    Ok(mse1(num, st, d) / denominator)
}

/// The optimally parameterised competitor family: each member attains the
/// first-order MSE floor for correlation constant `c`.
pub fn optimal_family(c: f64) -> [EstimatorSpec; 5] {
    [
        EstimatorSpec::UnbiasedAoe { c },
        EstimatorSpec::SrivastavaPower { k: -c },
        EstimatorSpec::Reddy { k: c },
        EstimatorSpec::SahaiTransformed { k: c },
        EstimatorSpec::SinghRatioProduct { k: (c + 1.0) / 2.0 },
    ]
}
