//! Simple random sampling without replacement, sample-size planning, normal
//! quantiles and confidence intervals with finite population correction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the generator behind [`srswor`], recorded in run metadata.
pub const PRNG_NAME: &str = "ChaCha8 (rand_chacha 0.9; key = seed_from_u64(seed), stream = replication)";

/// Inverse of the standard normal CDF.
///
/// Wichura's AS 241 (PPND16), relative accuracy about 1e-16 over the whole
/// open unit interval.
#[allow(clippy::excessive_precision)]
pub fn inverse_normal_cdf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num =
            ((((((r * 2509.0809287301227 + 33430.575583588128) * r + 67265.7709270087) * r + 45921.95393154987) * r
                + 13731.693765509461)
                * r
                + 1971.5909503065514)
                * r
                + 133.14166789178438)
                * r
                + 3.3871328727963665;
        let den =
            ((((((r * 5226.495278852546 + 28729.085735721943) * r + 39307.89580009271) * r + 21213.794301586596) * r
                + 5394.196021424751)
                * r
                + 687.1870074920579)
                * r
                + 42.31333070160091)
                * r
                + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let value = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((r * 7.745450142783414e-4 + 0.022723844989269184) * r + 0.2417807251774506) * r
            + 1.2704582524523684)
            * r
            + 3.6478483247632045)
            * r
            + 5.769497221460691)
            * r
            + 4.630337846156545)
            * r
            + 1.4234371107496835;
        let den = ((((((r * 1.0507500716444168e-9 + 5.475938084995345e-4) * r + 0.015198666563616457) * r
            + 0.14810397642748008)
            * r
            + 0.6897673349851)
            * r
            + 1.6763848301838038)
            * r
            + 2.053191626637759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((r * 2.0103343992922881e-7 + 2.7115555687434876e-5) * r + 0.0012426609473880784) * r
            + 0.026532189526576124)
            * r
            + 0.2965605718285049)
            * r
            + 1.7848265399172913)
            * r
            + 5.463784911164114)
            * r
            + 6.657904643501103;
        let den = ((((((r * 2.0442631033899398e-15 + 1.421511758316446e-7) * r + 1.8463183175100548e-5) * r
            + 7.868691311456133e-4)
            * r
            + 0.014875361290850615)
            * r
            + 0.1369298809227358)
            * r
            + 0.5998322065558879)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -value
    } else {
        value
    }
}

/// Upper `(1 - confidence) / 2` quantile of the standard normal.
pub fn z_quantile(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::OutOfRange(confidence));
    }
    Ok(-inverse_normal_cdf(0.5 * (1.0 - confidence)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    /// Infinite-population size, rounded up.
    pub n0: u64,
    /// Size after finite population correction, rounded up.
    pub n: u64,
    /// Margin of error, in units of y.
    pub d: f64,
    pub confidence: f64,
    pub z: f64,
    /// `z^2 sigma2 / d^2` before rounding.
    pub n0_exact: f64,
    /// `1 / (1/n0 + 1/N)` with the rounded `n0`.
    pub n_exact: f64,
}

/// Sample size for estimating a mean within `d` at the given confidence.
pub fn plan_sample_size(sigma2: f64, d: f64, confidence: f64, population: u64) -> Result<SamplePlan> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidInput(format!("sigma2 must be positive, got {sigma2}")));
    }
    if d.is_nan() || d <= 0.0 {
        return Err(Error::InvalidInput(format!("margin must be positive, got {d}")));
    }
    if population < 1 {
        return Err(Error::InvalidInput("population size must be at least 1".into()));
    }
    let z = z_quantile(confidence)?;
    let n0_exact = z * z * sigma2 / (d * d);
    let n0 = (n0_exact.ceil() as u64).max(1);
    let (a, b) = (n0 as u128, population as u128);
    // ceil(n0 N / (n0 + N)) in integers
    let n = ((a * b).div_ceil(a + b)) as u64;
    Ok(SamplePlan {
        n0,
        n,
        d,
        confidence,
        z,
        n0_exact,
        n_exact: 1.0 / (1.0 / n0 as f64 + 1.0 / population as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub half_width: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// `z * sqrt(S^2 / n) * sqrt((N - n) / (N - 1))`.
pub fn half_width(sd_y: f64, n: usize, population: usize, z: f64) -> f64 {
    let fpc = ((population - n) as f64 / (population - 1) as f64).sqrt();
    z * (sd_y * sd_y / n as f64).sqrt() * fpc
}

pub fn confidence_interval(
    point: f64,
    sd_y: f64,
    n: usize,
    population: usize,
    confidence: f64,
) -> Result<ConfidenceInterval> {
    if n < 1 || n >= population {
        return Err(Error::InvalidDesign { n, population });
    }
    if sd_y.is_nan() || sd_y < 0.0 {
        return Err(Error::InvalidInput(format!("S_Y must be non-negative, got {sd_y}")));
    }
    let hw = half_width(sd_y, n, population, z_quantile(confidence)?);
    Ok(ConfidenceInterval {
        lo: point - hw,
        hi: point + hw,
        half_width: hw,
    })
}

/// Deterministic SRSWOR index generator that reuses its permutation buffer.
///
/// Each draw re-initialises the buffer to the identity and runs `n` steps of
/// a partial Fisher-Yates shuffle driven by ChaCha8 keyed with `seed` on
/// stream `stream`.
#[derive(Debug, Clone, Default)]
pub struct Sampler {
    buffer: Vec<usize>,
}

impl Sampler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fills `out` with a sorted uniformly random `n`-subset of `0..pop_size`.
    pub fn draw_into(&mut self, pop_size: usize, n: usize, seed: u64, stream: u64, out: &mut Vec<usize>) -> Result<()> {
        if n < 1 || n > pop_size {
            return Err(Error::InvalidDesign {
                n,
                population: pop_size,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        self.buffer.clear();
        self.buffer.extend(0..pop_size);
        for i in 0..n {
            let j = rng.random_range(i..pop_size);
            self.buffer.swap(i, j);
        }
        out.clear();
        out.extend_from_slice(&self.buffer[..n]);
        out.sort_unstable();
        Ok(())
    }
}

/// A sorted uniformly random `n`-subset of `0..pop_size`; deterministic in `(seed, stream)`.
pub fn srswor(pop_size: usize, n: usize, seed: u64, stream: u64) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(n);
    Sampler::new().draw_into(pop_size, n, seed, stream, &mut out)?;
    Ok(out)
}
