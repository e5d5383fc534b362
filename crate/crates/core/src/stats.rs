//! Populations, population-level summary statistics and the sampling design.
//!
//! Every variance and covariance uses the `N - 1` divisor.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite population of paired study (`y`) and auxiliary (`x`) values.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    y: Vec<f64>,
    x: Vec<f64>,
}

impl Population {
    pub fn new(y: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if y.len() != x.len() {
            return Err(Error::LengthMismatch { y: y.len(), x: x.len() });
        }
        if y.len() < 2 {
            return Err(Error::PopulationTooSmall(y.len()));
        }
        if let Some(i) = y.iter().zip(&x).position(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { y, x })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Population size `N`.
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn mean_y(&self) -> f64 {
        mean(&self.y)
    }

    pub fn mean_x(&self) -> f64 {
        mean(&self.x)
    }

    /// Means of `y` and `x` over the units in `indices`.
    pub fn sample_means(&self, indices: &[usize]) -> (f64, f64) {
        let k = indices.len() as f64;
        let (sy, sx) = indices
            .iter()
            .fold((0.0, 0.0), |(sy, sx), &i| (sy + self.y[i], sx + self.x[i]));
        (sy / k, sx / k)
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population moments consumed by every first-order formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean_y: f64,
    pub mean_x: f64,
    pub var_y: f64,
    pub var_x: f64,
    pub cov_xy: f64,
    /// Pearson correlation.
    pub r: f64,
    pub cv_y: f64,
    pub cv_x: f64,
    /// `r * cv_y / cv_x`.
    pub c: f64,
}

impl SummaryStats {
    /// Builds the statistics from printed moments (means, standard deviations
    /// and correlation), deriving everything else.
    pub fn from_moments(mean_y: f64, mean_x: f64, sd_y: f64, sd_x: f64, r: f64) -> Result<Self> {
        let values = [mean_y, mean_x, sd_y, sd_x, r];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("moments must be finite".into()));
        }
        if mean_y == 0.0 {
            return Err(Error::ZeroMean { variable: "y" });
        }
        if mean_x == 0.0 {
            return Err(Error::ZeroMean { variable: "x" });
        }
        if sd_y <= 0.0 {
            return Err(Error::DegenerateVariance { variable: "y" });
        }
        if sd_x <= 0.0 {
            return Err(Error::DegenerateVariance { variable: "x" });
        }
        if r.abs() > 1.0 {
            return Err(Error::InvalidInput(format!("|r| > 1 (r = {r})")));
        }
        Ok(Self::assemble(
            mean_y,
            mean_x,
            sd_y * sd_y,
            sd_x * sd_x,
            r * sd_x * sd_y,
            r,
        ))
    }

    fn assemble(mean_y: f64, mean_x: f64, var_y: f64, var_x: f64, cov_xy: f64, r: f64) -> Self {
        let cv_y = var_y.sqrt() / mean_y;
        let cv_x = var_x.sqrt() / mean_x;
        Self {
            mean_y,
            mean_x,
            var_y,
            var_x,
            cov_xy,
            r,
            cv_y,
            cv_x,
            c: r * cv_y / cv_x,
        }
    }

    pub fn sd_y(&self) -> f64 {
        self.var_y.sqrt()
    }

    pub fn sd_x(&self) -> f64 {
        self.var_x.sqrt()
    }
}

/// Computes the population summary statistics.
pub fn summarize(pop: &Population) -> Result<SummaryStats> {
    let n = pop.len();
    if n < 2 {
        return Err(Error::PopulationTooSmall(n));
    }
    let my = pop.mean_y();
    let mx = pop.mean_x();
    if my == 0.0 {
        return Err(Error::ZeroMean { variable: "y" });
    }
    if mx == 0.0 {
        return Err(Error::ZeroMean { variable: "x" });
    }
    let (mut syy, mut sxx, mut sxy) = (0.0, 0.0, 0.0);
    for (&y, &x) in pop.y().iter().zip(pop.x()) {
        let dy = y - my;
        let dx = x - mx;
        syy += dy * dy;
        sxx += dx * dx;
        sxy += dx * dy;
    }
    if syy == 0.0 {
        return Err(Error::DegenerateVariance { variable: "y" });
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateVariance { variable: "x" });
    }
    let denom = (n - 1) as f64;
    let r = (sxy / (syy * sxx).sqrt()).clamp(-1.0, 1.0);
    Ok(SummaryStats::assemble(my, mx, syy / denom, sxx / denom, sxy / denom, r))
}

/// Sample size and population size for simple random sampling without replacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingDesign {
    pub n: usize,
    #[serde(rename = "N")]
    pub population: usize,
    /// Sampling fraction `n / N`.
    pub f: f64,
    /// `(1 - f) / n`, the factor scaling every first-order bias and MSE.
    pub fpc_rate: f64,
}

pub fn make_design(n: usize, population: usize) -> Result<SamplingDesign> {
    if n < 1 || n >= population {
        return Err(Error::InvalidDesign { n, population });
    }
    let f = n as f64 / population as f64;
    Ok(SamplingDesign {
        n,
        population,
        f,
        fpc_rate: (1.0 - f) / n as f64,
    })
}

/// Reads a population from CSV with the exact header `y,x`.
pub fn load_population_csv(path: impl AsRef<Path>) -> Result<Population> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    read_population_csv(file)
}

pub fn read_population_csv<R: Read>(reader: R) -> Result<Population> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();

    match records.next() {
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing header `y,x`".into(),
            })
        }
        Some(header) => {
            let header = header.map_err(csv_error)?;
            if header.len() != 2 || &header[0] != "y" || &header[1] != "x" {
                return Err(Error::Parse {
                    line: 1,
                    message: format!(
                        "header must be exactly `y,x`, found `{}`",
                        header.iter().collect::<Vec<_>>().join(",")
                    ),
                });
            }
        }
    }

    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut last_line = 1;
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(last_line + 1, |p| p.line());
        last_line = line;
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        y.push(parse_cell(&record[0], line)?);
        x.push(parse_cell(&record[1], line)?);
    }
    if y.len() < 2 {
        return Err(Error::Parse {
            line: last_line,
            message: format!("need at least 2 data rows, found {}", y.len()),
        });
    }
    Population::new(y, x)
}

fn parse_cell(cell: &str, line: u64) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(Error::Parse {
            line,
            message: format!("non-finite value `{cell}`"),
        }),
        Err(_) => Err(Error::Parse {
            line,
            message: format!("cannot parse `{cell}` as a number"),
        }),
    }
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    Error::Parse {
        line,
        message: err.to_string(),
    }
}

/// Writes a population in the `y,x` CSV format. Values use the shortest
/// representation that round-trips.
pub fn write_population_csv<W: Write>(pop: &Population, mut out: W) -> std::io::Result<()> {
    writeln!(out, "y,x")?;
    for (y, x) in pop.y().iter().zip(pop.x()) {
        writeln!(out, "{y:?},{x:?}")?;
    }
    Ok(())
}
