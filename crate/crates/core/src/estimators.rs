//! Point evaluation of the estimators from the sample means and the known
//! auxiliary population mean.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Selects one estimator and its parameters.
///
/// The string form is the CLI token grammar: `mean`, `ratio`, `product`,
/// `rpr:<alpha>,<beta>`, `aoe:<c>`, `srivastava:<k>`, `reddy:<k>`,
/// `sahai:<k>`, `singh:<k>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorSpec {
    SampleMean,
    /// `ybar * Xbar / xbar`.
    Ratio,
    /// `ybar * xbar / Xbar`.
    Product,
    RatioProductRatio {
        alpha: f64,
        beta: f64,
    },
    /// Closed form of the ratio-product-ratio estimator at the unbiased
    /// asymptotically optimal parameters for a given `c`. Real for every `c`.
    UnbiasedAoe {
        c: f64,
    },
    /// `ybar * (xbar / Xbar)^k`.
    SrivastavaPower {
        k: f64,
    },
    /// `ybar * Xbar / (Xbar + k (xbar - Xbar))`.
    Reddy {
        k: f64,
    },
    /// `ybar * (2 - (xbar / Xbar)^k)`.
    SahaiTransformed {
        k: f64,
    },
    /// `ybar * (k Xbar / xbar + (1 - k) xbar / Xbar)`.
    SinghRatioProduct {
        k: f64,
    },
}

/// Sample means plus the known population mean of the auxiliary variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub ybar: f64,
    pub xbar: f64,
    /// Known population mean of `x`.
    pub mean_x: f64,
}

impl SampleSummary {
    pub fn new(ybar: f64, xbar: f64, mean_x: f64) -> Result<Self> {
        if !(ybar.is_finite() && xbar.is_finite() && mean_x.is_finite()) {
            return Err(Error::InvalidInput("sample summary must be finite".into()));
        }
        if mean_x == 0.0 {
            return Err(Error::ZeroMean { variable: "x" });
        }
        Ok(Self { ybar, xbar, mean_x })
    }
}

/// The parameter pair giving the same estimator by point reflection through
/// `(1/2, 1/2)`.
pub fn symmetry_partner(alpha: f64, beta: f64) -> (f64, f64) {
    (1.0 - alpha, 1.0 - beta)
}

fn nonzero(denominator: f64) -> Result<f64> {
    if denominator == 0.0 || !denominator.is_finite() {
        Err(Error::SingularDenominator(denominator))
    } else {
        Ok(denominator)
    }
}

fn finite(value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::SingularDenominator(value))
    }
}

/// Evaluates `spec` on the sample summary `s`.
pub fn estimate(spec: EstimatorSpec, s: &SampleSummary) -> Result<f64> {
    let SampleSummary { ybar, xbar, mean_x } = *s;
    let value = match spec {
        EstimatorSpec::SampleMean => ybar,
        EstimatorSpec::Ratio => ybar * (mean_x / nonzero(xbar)?),
        EstimatorSpec::Product => ybar * (xbar / mean_x),
        EstimatorSpec::RatioProductRatio { alpha, beta } => {
            let ratio_side = nonzero(beta * xbar + (1.0 - beta) * mean_x)?;
            let inverse_side = nonzero((1.0 - beta) * xbar + beta * mean_x)?;
            // alpha * q + (1 - alpha) / q, arranged so q == 1 returns ybar exactly
            let q = inverse_side / ratio_side;
            ybar * (1.0 / q + alpha * (q - 1.0 / q))
        }
        EstimatorSpec::UnbiasedAoe { c } => {
            // Written around delta = xbar - Xbar: numerator - denominator
            // reduces to -4 c Xbar delta + 4 c (c - 1) delta^2.
            let k = 2.0 * c * c - c - 1.0;
            let delta = xbar - mean_x;
            let denominator = nonzero(4.0 * mean_x * xbar - k * delta * delta)?;
            let excess = -4.0 * c * mean_x * delta + 4.0 * c * (c - 1.0) * delta * delta;
            ybar * (1.0 + excess / denominator)
        }
        EstimatorSpec::SrivastavaPower { k } => ybar * finite((xbar / mean_x).powf(k))?,
        EstimatorSpec::Reddy { k } => ybar * (mean_x / nonzero(mean_x + k * (xbar - mean_x))?),
        EstimatorSpec::SahaiTransformed { k } => ybar * (2.0 - finite((xbar / mean_x).powf(k))?),
        EstimatorSpec::SinghRatioProduct { k } => {
            let up = xbar / mean_x;
            let down = mean_x / nonzero(xbar)?;
            ybar * (up + k * (down - up))
        }
    };
    finite(value)
}

impl EstimatorSpec {
    /// Every token keyword accepted by [`FromStr`].
    pub const TOKENS: [&'static str; 9] = [
        "mean",
        "ratio",
        "product",
        "rpr:<alpha>,<beta>",
        "aoe:<c>",
        "srivastava:<k>",
        "reddy:<k>",
        "sahai:<k>",
        "singh:<k>",
    ];

    pub fn parameters(&self) -> Vec<f64> {
        match *self {
            Self::SampleMean | Self::Ratio | Self::Product => vec![],
            Self::RatioProductRatio { alpha, beta } => vec![alpha, beta],
            Self::UnbiasedAoe { c } => vec![c],
            Self::SrivastavaPower { k }
            | Self::Reddy { k }
            | Self::SahaiTransformed { k }
            | Self::SinghRatioProduct { k } => vec![k],
        }
    }

    fn keyword(&self) -> &'static str {
        match self {
            Self::SampleMean => "mean",
            Self::Ratio => "ratio",
            Self::Product => "product",
            Self::RatioProductRatio { .. } => "rpr",
            Self::UnbiasedAoe { .. } => "aoe",
            Self::SrivastavaPower { .. } => "srivastava",
            Self::Reddy { .. } => "reddy",
            Self::SahaiTransformed { .. } => "sahai",
            Self::SinghRatioProduct { .. } => "singh",
        }
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())?;
        let params = self.parameters();
        for (i, p) in params.iter().enumerate() {
            f.write_str(if i == 0 { ":" } else { "," })?;
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for EstimatorSpec {
    type Err = Error;

    fn from_str(token: &str) -> Result<Self> {
        let invalid = || {
            Error::InvalidInput(format!(
                "unknown estimator `{token}`; valid tokens: {}",
                Self::TOKENS.join(", ")
            ))
        };
        let (keyword, args) = match token.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (token, None),
        };
        let numbers = |expected: usize| -> Result<Vec<f64>> {
            let args = args.ok_or_else(invalid)?;
            let values = args
                .split(',')
                .map(|a| a.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| invalid())?;
            if values.len() != expected || values.iter().any(|v| !v.is_finite()) {
                return Err(invalid());
            }
            Ok(values)
        };
        let spec = match keyword {
            "mean" | "ratio" | "product" if args.is_some() => return Err(invalid()),
            "mean" => Self::SampleMean,
            "ratio" => Self::Ratio,
            "product" => Self::Product,
            "rpr" => {
                let v = numbers(2)?;
                Self::RatioProductRatio {
                    alpha: v[0],
                    beta: v[1],
                }
            }
            "aoe" => Self::UnbiasedAoe { c: numbers(1)?[0] },
            "srivastava" => Self::SrivastavaPower { k: numbers(1)?[0] },
            "reddy" => Self::Reddy { k: numbers(1)?[0] },
            "sahai" => Self::SahaiTransformed { k: numbers(1)?[0] },
            "singh" => Self::SinghRatioProduct { k: numbers(1)?[0] },
            _ => return Err(invalid()),
        };
        Ok(spec)
    }
}

impl Serialize for EstimatorSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EstimatorSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let token = String::deserialize(deserializer)?;
        token.parse().map_err(serde::de::Error::custom)
    }
}
