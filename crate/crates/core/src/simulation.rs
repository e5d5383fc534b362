//! Monte Carlo comparison of estimators under SRSWOR, plus an exhaustive
//! all-subsets oracle for tiny populations.
//!
//! Replication `r` draws its sample from stream `r` of the seeded generator,
//! so the result depends only on the configuration. Replications run in
//! parallel but are collected in replication order before any floating
//! point aggregation, which keeps reports bit-identical for every thread
//! count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorSpec, SampleSummary};
use crate::sampling::{half_width, z_quantile, Sampler, PRNG_NAME};
use crate::stats::{mean, Population};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub reps: usize,
    pub n: usize,
    pub seed: u64,
    pub confidence: f64,
    pub estimators: Vec<EstimatorSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub estimator: EstimatorSpec,
    /// Draws where the estimator was defined.
    pub valid_draws: usize,
    pub singular_count: usize,
    pub coverage: f64,
    /// Share of intervals lying entirely below the population mean.
    pub neg_bias_rate: f64,
    /// Share of intervals lying entirely above the population mean.
    pub pos_bias_rate: f64,
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub mse_empirical: f64,
    /// Empirical MSE of the sample mean over the same draws divided by this
    /// estimator's empirical MSE.
    pub re_vs_sample_mean: Option<f64>,
    pub skewness: Option<f64>,
    /// Non-excess kurtosis (3 for a normal distribution).
    pub kurtosis: Option<f64>,
}

/// Counts of the orderings of estimators by absolute deviation from the
/// population mean, closest first. Ties keep configuration order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankingTable {
    pub labels: Vec<String>,
    pub counts: BTreeMap<Vec<usize>, u64>,
}

impl RankingTable {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// How often each estimator came first.
    pub fn first_place_counts(&self) -> Vec<u64> {
        let mut firsts = vec![0; self.labels.len()];
        for (order, &count) in &self.counts {
            firsts[order[0]] += count;
        }
        firsts
    }

    /// Rows sorted by descending count, ties by ordering.
    pub fn rows(&self) -> Vec<RankingRow> {
        let mut rows: Vec<_> = self.counts.iter().map(|(order, &count)| (order, count)).collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        rows.into_iter()
            .map(|(order, count)| RankingRow {
                order: order.iter().map(|&i| self.labels[i].clone()).collect(),
                count,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub order: Vec<String>,
    pub count: u64,
}

impl Serialize for RankingTable {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimMetadata {
    pub seed: u64,
    pub prng: String,
    pub reps: usize,
    pub n: usize,
    pub population_size: usize,
    pub confidence: f64,
    pub z: f64,
    pub true_mean: f64,
    pub sd_y: f64,
    pub half_width: f64,
    /// Replications where every estimator was defined.
    pub ranked_draws: u64,
    /// Not serialised so that reports stay byte-identical across runs.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub metadata: SimMetadata,
    pub estimators: Vec<EstimatorReport>,
    pub ranking: RankingTable,
}

/// One replication: the sample mean and each configured estimator (`None`
/// where undefined).
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub ybar: f64,
    pub estimates: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub report: SimReport,
    pub replications: Vec<Replication>,
}

fn validate(pop: &Population, cfg: &SimConfig) -> Result<()> {
    if cfg.reps < 1 {
        return Err(Error::InvalidInput("reps must be at least 1".into()));
    }
    if cfg.n < 1 || cfg.n >= pop.len() {
        return Err(Error::InvalidDesign {
            n: cfg.n,
            population: pop.len(),
        });
    }
    if cfg.estimators.is_empty() {
        return Err(Error::InvalidInput("no estimators configured".into()));
    }
    Ok(())
}

/// Runs the simulation on the global rayon pool.
pub fn run_simulation(pop: &Population, cfg: &SimConfig) -> Result<SimRun> {
    simulate(pop, cfg)
}

/// Runs the simulation on a dedicated pool of `threads` workers. The output
/// does not depend on `threads`.
pub fn run_simulation_with_threads(pop: &Population, cfg: &SimConfig, threads: usize) -> Result<SimRun> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot build thread pool: {e}")))?;
    pool.install(|| simulate(pop, cfg))
}

fn simulate(pop: &Population, cfg: &SimConfig) -> Result<SimRun> {
    validate(pop, cfg)?;
    let started = Instant::now();
    let z = z_quantile(cfg.confidence)?;
    let true_mean = pop.mean_y();
    let mean_x = pop.mean_x();
    if mean_x == 0.0 {
        return Err(Error::ZeroMean { variable: "x" });
    }
    let big_n = pop.len();
    let sd_y = (pop.y().iter().map(|y| (y - true_mean).powi(2)).sum::<f64>() / (big_n - 1) as f64).sqrt();
    let hw = half_width(sd_y, cfg.n, big_n, z);

    let replications: Vec<Replication> = (0..cfg.reps)
        .into_par_iter()
        .map_init(
            || (Sampler::new(), Vec::with_capacity(cfg.n)),
            |(sampler, idx), r| {
                sampler
                    .draw_into(big_n, cfg.n, cfg.seed, r as u64, idx)
                    .expect("design validated");
                let (ybar, xbar) = pop.sample_means(idx);
                let s = SampleSummary { ybar, xbar, mean_x };
                Replication {
                    ybar,
                    estimates: cfg.estimators.iter().map(|&spec| estimate(spec, &s).ok()).collect(),
                }
            },
        )
        .collect();

    let baseline_mse = mean(
        &replications
            .iter()
            .map(|r| (r.ybar - true_mean).powi(2))
            .collect::<Vec<_>>(),
    );

    let estimators = cfg
        .estimators
        .iter()
        .enumerate()
        .map(|(j, &spec)| {
            let values: Vec<f64> = replications.iter().filter_map(|r| r.estimates[j]).collect();
            summarize_draws(spec, &values, cfg.reps, true_mean, hw, baseline_mse)
        })
        .collect();

    let mut ranking = RankingTable {
        labels: cfg.estimators.iter().map(ToString::to_string).collect(),
        counts: BTreeMap::new(),
    };
    for rep in &replications {
        let Some(values) = rep.estimates.iter().copied().collect::<Option<Vec<f64>>>() else {
            continue;
        };
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| {
            (values[a] - true_mean)
                .abs()
                .total_cmp(&(values[b] - true_mean).abs())
                .then(a.cmp(&b))
        });
        *ranking.counts.entry(order).or_default() += 1;
    }

    let metadata = SimMetadata {
        seed: cfg.seed,
        prng: PRNG_NAME.to_string(),
        reps: cfg.reps,
        n: cfg.n,
        population_size: big_n,
        confidence: cfg.confidence,
        z,
        true_mean,
        sd_y,
        half_width: hw,
        ranked_draws: ranking.total(),
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok(SimRun {
        report: SimReport {
            metadata,
            estimators,
            ranking,
        },
        replications,
    })
}

fn summarize_draws(
    spec: EstimatorSpec,
    values: &[f64],
    reps: usize,
    true_mean: f64,
    hw: f64,
    baseline_mse: f64,
) -> EstimatorReport {
    let valid = values.len();
    let (mut covered, mut below, mut above) = (0usize, 0usize, 0usize);
    for &v in values {
        if v + hw < true_mean {
            below += 1;
        } else if v - hw > true_mean {
            above += 1;
        } else {
            covered += 1;
        }
    }
    let rate = |k: usize| k as f64 / valid as f64;
    let (q1, median, q3) = quartiles(values).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    let m = if valid > 0 { mean(values) } else { f64::NAN };
    let mse = if valid > 0 {
        values.iter().map(|v| (v - true_mean).powi(2)).sum::<f64>() / valid as f64
    } else {
        f64::NAN
    };
    let (skewness, kurtosis) = shape(values, m);
    EstimatorReport {
        estimator: spec,
        valid_draws: valid,
        singular_count: reps - valid,
        coverage: rate(covered),
        neg_bias_rate: rate(below),
        pos_bias_rate: rate(above),
        mean: m,
        q1,
        median,
        q3,
        mse_empirical: mse,
        re_vs_sample_mean: (mse > 0.0).then(|| baseline_mse / mse),
        skewness,
        kurtosis,
    }
}

/// Moment skewness and kurtosis around `m`.
fn shape(values: &[f64], m: f64) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let k = values.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / k, m3 / k, m4 / k);
    if m2 <= 0.0 {
        return (None, None);
    }
    (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2)))
}

/// Lower quartile, median and upper quartile by linear interpolation between
/// order statistics at 0-based position `p (len - 1)`.
pub fn quartiles(values: &[f64]) -> Result<(f64, f64, f64)> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let at = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    };
    Ok((at(0.25), at(0.5), at(0.75)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub exact_expectation: f64,
    pub exact_mse: f64,
    pub exact_bias: f64,
}

/// Largest number of subsets [`exhaustive_oracle`] will enumerate.
pub const ORACLE_LIMIT: u128 = 1_000_000;

fn bounded_binomial(n: usize, k: usize, limit: u128) -> std::result::Result<u128, u128> {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > limit {
            return Err(c);
        }
    }
    Ok(c)
}

/// Exact expectation, MSE and bias of `spec` under SRSWOR of size `n`, by
/// enumerating every subset with equal weight.
pub fn exhaustive_oracle(pop: &Population, n: usize, spec: EstimatorSpec) -> Result<OracleResult> {
    let big_n = pop.len();
    if n < 1 || n > big_n {
        return Err(Error::InvalidDesign { n, population: big_n });
    }
    let subsets = bounded_binomial(big_n, n, ORACLE_LIMIT).map_err(|subsets| Error::TooLarge {
        subsets,
        limit: ORACLE_LIMIT,
    })?;
    let true_mean = pop.mean_y();
    let mean_x = pop.mean_x();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for subset in (0..big_n).combinations(n) {
        let (ybar, xbar) = pop.sample_means(&subset);
        let v = estimate(spec, &SampleSummary::new(ybar, xbar, mean_x)?)?;
        sum += v;
        sum_sq += (v - true_mean).powi(2);
    }
    let count = subsets as f64;
    let exact_expectation = sum / count;
    Ok(OracleResult {
        exact_expectation,
        exact_mse: sum_sq / count,
        exact_bias: exact_expectation - true_mean,
    })
}

fn pct(v: f64) -> String {
    format!("{:.2}%", 100.0 * v)
}

/// Aligned-column text rendering: coverage/quartile table, MSE table and
/// the ranking table.
pub fn render_text(report: &SimReport) -> String {
    let m = &report.metadata;
    let width = report
        .estimators
        .iter()
        .map(|e| e.estimator.to_string().len())
        .max()
        .unwrap_or(9)
        .max(9);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} replications, n = {}, N = {}, seed = {}, {:.0}% intervals (half-width {:.4}), true mean {:.4}",
        m.reps,
        m.n,
        m.population_size,
        m.seed,
        100.0 * m.confidence,
        m.half_width,
        m.true_mean
    );
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<width$}  {:>9}  {:>9}  {:>9}  {:>10}  {:>10}  {:>10}  {:>8}",
        "estimator", "coverage", "neg. bias", "pos. bias", "lo. quart.", "median", "up. quart.", "singular"
    );
    for e in &report.estimators {
        let _ = writeln!(
            s,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>10.4}  {:>10.4}  {:>10.4}  {:>8}",
            e.estimator.to_string(),
            pct(e.coverage),
            pct(e.neg_bias_rate),
            pct(e.pos_bias_rate),
            e.q1,
            e.median,
            e.q3,
            e.singular_count
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<width$}  {:>10}  {:>10}  {:>9}  {:>9}",
        "estimator", "MSE", "MSE(mean)/MSE", "skewness", "kurtosis"
    );
    let opt = |v: Option<f64>, digits: usize| v.map_or("-".to_string(), |v| format!("{v:.digits$}"));
    for e in &report.estimators {
        let _ = writeln!(
            s,
            "{:<width$}  {:>10.6}  {:>13}  {:>9}  {:>9}",
            e.estimator.to_string(),
            e.mse_empirical,
            e.re_vs_sample_mean.map_or("-".to_string(), pct),
            opt(e.skewness, 4),
            opt(e.kurtosis, 4)
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "ordering by |estimate - mean| (closest first)  count");
    for row in report.ranking.rows() {
        let _ = writeln!(s, "{}  {}", row.order.join(" < "), row.count);
    }
    s
}

/// Per-replication estimates as CSV with header `rep,estimator,estimate,covered`.
/// Undefined estimates leave the last two fields empty.
pub fn write_replications_csv<W: Write>(run: &SimRun, mut out: W) -> std::io::Result<()> {
    let m = &run.report.metadata;
    let labels: Vec<String> = run.report.estimators.iter().map(|e| e.estimator.to_string()).collect();
    writeln!(out, "rep,estimator,estimate,covered")?;
    for (r, rep) in run.replications.iter().enumerate() {
        for (label, value) in labels.iter().zip(&rep.estimates) {
            // tokens with parameters contain commas
            let label = if label.contains(',') {
                format!("\"{label}\"")
            } else {
                label.clone()
            };
            match value {
                Some(v) => {
                    let covered = (v - m.true_mean).abs() <= m.half_width;
                    writeln!(out, "{r},{label},{v:?},{covered}")?
                }
                None => writeln!(out, "{r},{label},,")?,
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{make_design, summarize};

    fn toy() -> Population {
        Population::new(vec![3.1, 4.7, 2.2, 5.9, 4.0, 3.3], vec![6.0, 9.5, 4.1, 11.8, 7.7, 6.9]).unwrap()
    }

    #[test]
    fn quartile_examples() {
        assert_eq!(quartiles(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), (2.0, 3.0, 4.0));
        assert_eq!(quartiles(&[7.5]).unwrap(), (7.5, 7.5, 7.5));
        assert_eq!(quartiles(&[4.0, 1.0, 3.0, 2.0]).unwrap(), (1.75, 2.5, 3.25));
        assert!(matches!(quartiles(&[]), Err(Error::Empty)));
    }

    #[test]
    fn oracle_sample_mean_identity() {
        let pop = toy();
        let st = summarize(&pop).unwrap();
        let d = make_design(3, 6).unwrap();
        let res = exhaustive_oracle(&pop, 3, EstimatorSpec::SampleMean).unwrap();
        assert!(res.exact_bias.abs() <= 4.0 * f64::EPSILON * st.mean_y);
        let expected = d.fpc_rate * st.var_y;
        assert!((res.exact_mse - expected).abs() <= 1e-14 * expected);
        let line = exhaustive_oracle(&pop, 3, EstimatorSpec::RatioProductRatio { alpha: 2.7, beta: 0.5 }).unwrap();
        assert_eq!(line, res);
    }

    #[test]
    fn oracle_guard() {
        let pop = Population::new(vec![1.0; 40], (0..40).map(f64::from).collect()).unwrap();
        assert!(matches!(
            exhaustive_oracle(&pop, 20, EstimatorSpec::SampleMean),
            Err(Error::TooLarge { .. })
        ));
        assert!(exhaustive_oracle(&pop, 3, EstimatorSpec::SampleMean).is_ok());
        assert_eq!(bounded_binomial(6, 3, ORACLE_LIMIT), Ok(20));
        assert_eq!(bounded_binomial(30, 27, ORACLE_LIMIT), Ok(4060));
    }

    #[test]
    fn constant_study_variable() {
        let pop = Population::new(vec![2.0; 10], (1..=10).map(f64::from).collect()).unwrap();
        let cfg = SimConfig {
            reps: 200,
            n: 4,
            seed: 1,
            confidence: 0.9,
            estimators: vec![EstimatorSpec::SampleMean],
        };
        let run = run_simulation(&pop, &cfg).unwrap();
        let e = &run.report.estimators[0];
        assert_eq!(e.coverage, 1.0);
        assert_eq!(e.mse_empirical, 0.0);
        assert_eq!(e.re_vs_sample_mean, None);
        assert_eq!(e.skewness, None);
    }

    #[test]
    fn single_replication_ranking() {
        let cfg = SimConfig {
            reps: 1,
            n: 3,
            seed: 9,
            confidence: 0.9,
            estimators: vec![EstimatorSpec::SampleMean, EstimatorSpec::Ratio, EstimatorSpec::Product],
        };
        let run = run_simulation(&toy(), &cfg).unwrap();
        assert_eq!(run.report.ranking.total(), 1);
        assert_eq!(run.report.ranking.rows().len(), 1);
        assert_eq!(run.report.ranking.rows()[0].order.len(), 3);
    }

    #[test]
    fn singular_draws_are_counted_not_fatal() {
        // x straddles zero so some samples have xbar = 0 exactly
        let pop = Population::new(vec![1.0, 2.0, 3.0, 4.0], vec![-1.0, 1.0, -1.0, 3.0]).unwrap();
        let cfg = SimConfig {
            reps: 400,
            n: 2,
            seed: 5,
            confidence: 0.9,
            estimators: vec![EstimatorSpec::SampleMean, EstimatorSpec::Ratio],
        };
        let run = run_simulation(&pop, &cfg).unwrap();
        let ratio = &run.report.estimators[1];
        assert!(ratio.singular_count > 0);
        assert_eq!(ratio.singular_count + ratio.valid_draws, 400);
        assert_eq!(run.report.ranking.total() as usize, ratio.valid_draws);
        let sum = ratio.coverage + ratio.neg_bias_rate + ratio.pos_bias_rate;
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs() {
        let base = SimConfig {
            reps: 10,
            n: 3,
            seed: 0,
            confidence: 0.9,
            estimators: vec![EstimatorSpec::SampleMean],
        };
        let pop = toy();
        assert!(run_simulation(
            &pop,
            &SimConfig {
                reps: 0,
                ..base.clone()
            }
        )
        .is_err());
        assert!(run_simulation(&pop, &SimConfig { n: 6, ..base.clone() }).is_err());
        assert!(run_simulation(
            &pop,
            &SimConfig {
                confidence: 1.0,
                ..base.clone()
            }
        )
        .is_err());
        assert!(run_simulation(
            &pop,
            &SimConfig {
                estimators: vec![],
                ..base
            }
        )
        .is_err());
    }

    #[test]
    fn csv_dump_header_and_rows() {
        let cfg = SimConfig {
            reps: 2,
            n: 3,
            seed: 3,
            confidence: 0.9,
            estimators: vec![
                EstimatorSpec::SampleMean,
                EstimatorSpec::RatioProductRatio { alpha: 0.0, beta: 0.25 },
            ],
        };
        let run = run_simulation(&toy(), &cfg).unwrap();
        let mut buf = Vec::new();
        write_replications_csv(&run, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "rep,estimator,estimate,covered");
        assert_eq!(lines.len(), 5);
        assert!(lines[2].starts_with("0,\"rpr:0,0.25\","));
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(rdr.records().count(), 4);
    }
}
