use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rpr::estimators::EstimatorSpec;
use rpr::sampling::{confidence_interval, plan_sample_size};
use rpr::simulation::{render_text, run_simulation, run_simulation_with_threads, write_replications_csv, SimConfig};
use rpr::stats::{load_population_csv, make_design, summarize, write_population_csv, SamplingDesign, SummaryStats};
use rpr::surface::{surface_grid, write_surface_csv, GridAxis, SurfaceKind, SurfaceRanges};
use rpr::synthetic::{generate_population, MomentTargets};
use rpr::theory::{
    aoe_parameters, bias1_rpr, dominates, mse1_grad, mse1_rpr, relative_efficiency, AoeBranch, AoeSolution, Dominance,
};

#[derive(Parser)]
#[command(
    name = "rpr",
    version,
    about = "Ratio-product-ratio estimation of a finite population mean"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Biasfree,
    Aoe,
    Region,
}

#[derive(Subcommand)]
enum Command {
    /// Population summary statistics of a `y,x` CSV file.
    Analyze {
        csv: PathBuf,
        /// Sample and population size `n,N`; adds the design to the output.
        #[arg(long, value_parser = parse_design)]
        design: Option<SamplingDesign>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Sample size for estimating the mean within a margin of error.
    Plan {
        /// Population variance of y.
        #[arg(long)]
        sigma2: f64,
        /// Margin of error in units of y.
        #[arg(long, conflicts_with = "margin_percent", required_unless_present = "margin_percent")]
        margin: Option<f64>,
        /// Margin of error as a percentage of `--mean`.
        #[arg(long, requires = "mean")]
        margin_percent: Option<f64>,
        #[arg(long)]
        mean: Option<f64>,
        #[arg(long, default_value_t = 0.90)]
        confidence: f64,
        #[arg(long)]
        population_size: u64,
        /// Also report the interval half-width for this population S_Y at the planned n.
        #[arg(long)]
        sd_y: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// First-order bias and MSE, gradient, dominance, optimal parameters and efficiencies.
    Theory {
        /// Population moments `mean_y,mean_x,sd_y,sd_x,r`.
        #[arg(long, conflicts_with = "stats")]
        moments: Option<String>,
        /// Summary statistics as JSON (output of `analyze`) or a population CSV.
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        /// Overrides the population constant C.
        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,
        #[arg(long, value_parser = parse_design)]
        design: Option<SamplingDesign>,
        /// Report the optimal-MSE bias-free parameters.
        #[arg(long)]
        aoe: bool,
        /// Report efficiencies of ratio, product and optimal estimators over the sample mean.
        #[arg(long)]
        re: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Plot-ready CSV grid of a parameter surface.
    Surface {
        #[arg(long, value_enum)]
        kind: Kind,
        /// `lo:hi:step` or a single value.
        #[arg(long, default_value = "-2:2:0.05", allow_hyphen_values = true)]
        alpha: GridAxis,
        /// Only used by `--kind region`.
        #[arg(long, default_value = "-2:2:0.05", allow_hyphen_values = true)]
        beta: GridAxis,
        #[arg(long, default_value = "0.6092", allow_hyphen_values = true)]
        c: GridAxis,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic positive population with target moments.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 365)]
        size: usize,
        #[arg(long, default_value_t = 0.5832)]
        mean_y: f64,
        #[arg(long, default_value_t = 0.6277)]
        mean_x: f64,
        #[arg(long, default_value_t = 0.7681)]
        cv_y: f64,
        #[arg(long, default_value_t = 1.1504)]
        cv_x: f64,
        #[arg(long, default_value_t = 0.9125, allow_hyphen_values = true)]
        r: f64,
    },
    /// Monte Carlo comparison of estimators under SRSWOR.
    Simulate {
        #[arg(long)]
        population: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.90)]
        confidence: f64,
        /// Estimator tokens: mean, ratio, product, rpr:A,B, aoe:C, srivastava:K, reddy:K, sahai:K, singh:K.
        #[arg(long, num_args = 1.., required = true)]
        estimators: Vec<String>,
        /// Worker threads; affects wall time only.
        #[arg(long)]
        threads: Option<usize>,
        /// Report JSON path; the manifest is written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Per-replication estimates as CSV.
        #[arg(long)]
        per_rep_csv: Option<PathBuf>,
        /// What to print on stdout.
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

fn parse_design(s: &str) -> Result<SamplingDesign, String> {
    let (n, big_n) = s.split_once(',').ok_or_else(|| format!("expected n,N, got `{s}`"))?;
    let n = n.trim().parse().map_err(|_| format!("bad sample size `{n}`"))?;
    let big_n = big_n
        .trim()
        .parse()
        .map_err(|_| format!("bad population size `{big_n}`"))?;
    make_design(n, big_n).map_err(|e| e.to_string())
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

trait ExitClass<T> {
    fn input(self) -> Result<T, Failure>;
    fn internal(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ExitClass<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 2,
            error: e.into(),
        })
    }

    fn internal(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 3,
            error: e.into(),
        })
    }
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    version: &'static str,
    seed: u64,
    inputs: Vec<String>,
    outputs: Vec<String>,
    timestamp_unix: u64,
    wall_time_secs: f64,
    arguments: Vec<String>,
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn write_manifest(
    command: &str,
    seed: u64,
    inputs: &[&Path],
    outputs: &[&Path],
    wall_time_secs: f64,
    path: &Path,
) -> Result<(), Failure> {
    let manifest = RunManifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        wall_time_secs,
        arguments: std::env::args().collect(),
    };
    write_json(path, &manifest)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).internal()?;
    text.push('\n');
    std::fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .input()
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(value).internal()?);
    Ok(())
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn parse_moments(s: &str) -> anyhow::Result<SummaryStats> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| anyhow!("bad --moments `{s}`; expected mean_y,mean_x,sd_y,sd_x,r"))?;
    let [my, mx, sy, sx, r] = v[..] else {
        return Err(anyhow!("--moments needs five values, got {}", v.len()));
    };
    Ok(SummaryStats::from_moments(my, mx, sy, sx, r)?)
}

fn load_stats(path: &Path) -> anyhow::Result<SummaryStats> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let value: serde_json::Value = serde_json::from_str(&text).context("invalid JSON")?;
        // `analyze` nests the statistics under "stats"
        let stats = value.get("stats").cloned().unwrap_or(value);
        Ok(serde_json::from_value(stats).context("JSON does not describe summary statistics")?)
    } else {
        Ok(summarize(&load_population_csv(path)?)?)
    }
}

#[derive(Serialize)]
struct AnalyzeOutput {
    population_size: usize,
    stats: SummaryStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    design: Option<SamplingDesign>,
}

fn analyze(csv: &Path, design: Option<SamplingDesign>, format: Format) -> Result<(), Failure> {
    let pop = load_population_csv(csv).input()?;
    let stats = summarize(&pop).input()?;
    let out = AnalyzeOutput {
        population_size: pop.len(),
        stats,
        design,
    };
    match format {
        Format::Json => print_json(&out),
        Format::Text => {
            let rows = [
                ("N", pop.len().to_string()),
                ("mean y", format!("{:.4}", stats.mean_y)),
                ("mean x", format!("{:.4}", stats.mean_x)),
                ("S_Y", format!("{:.4}", stats.sd_y())),
                ("S_X", format!("{:.4}", stats.sd_x())),
                ("C_Y", format!("{:.4}", stats.cv_y)),
                ("C_X", format!("{:.4}", stats.cv_x)),
                ("r", format!("{:.4}", stats.r)),
                ("C", format!("{:.4}", stats.c)),
            ];
            for (k, v) in rows {
                println!("{k:<8} {v}");
            }
            if let Some(d) = design {
                println!("{:<8} {:.6}  (n = {}, N = {})", "fpc", d.fpc_rate, d.n, d.population);
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct PlanOutput {
    #[serde(flatten)]
    plan: rpr::sampling::SamplePlan,
    population_size: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    half_width: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn plan(
    sigma2: f64,
    margin: Option<f64>,
    margin_percent: Option<f64>,
    mean: Option<f64>,
    confidence: f64,
    population: u64,
    sd_y: Option<f64>,
    format: Format,
) -> Result<(), Failure> {
    let d = match (margin, margin_percent, mean) {
        (Some(d), _, _) => d,
        (None, Some(p), Some(m)) => p / 100.0 * m,
        _ => return Err(anyhow!("give --margin, or --margin-percent with --mean")).input(),
    };
    let plan = plan_sample_size(sigma2, d, confidence, population).input()?;
    let half_width = match sd_y {
        Some(s) if plan.n < population => Some(
            confidence_interval(0.0, s, plan.n as usize, population as usize, confidence)
                .input()?
                .half_width,
        ),
        _ => None,
    };
    let out = PlanOutput {
        plan,
        population_size: population,
        half_width,
    };
    match format {
        Format::Json => print_json(&out),
        Format::Text => {
            println!("z      {:.4}", plan.z);
            println!("d      {:.4}", plan.d);
            println!("n0     {}  ({:.3})", plan.n0, plan.n0_exact);
            println!("n      {}  ({:.3})", plan.n, plan.n_exact);
            if let Some(h) = half_width {
                println!("half-width  {h:.4}");
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct DominanceFlags {
    over_product: bool,
    over_ratio: bool,
    over_sample_mean: bool,
    all: bool,
}

#[derive(Serialize)]
struct PointOutput {
    alpha: f64,
    beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bias1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mse1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gradient: Option<[f64; 2]>,
    dominance: DominanceFlags,
}

#[derive(Serialize)]
struct AoeOutput {
    minus_minus: AoeSolution,
    plus_plus: AoeSolution,
}

#[derive(Serialize)]
struct EfficiencyRow {
    estimator: String,
    percent: f64,
}

#[derive(Serialize)]
struct TheoryOutput {
    c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    stats: Option<SummaryStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    design: Option<SamplingDesign>,
    #[serde(skip_serializing_if = "Option::is_none")]
    point: Option<PointOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    aoe: Option<AoeOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_efficiency: Option<Vec<EfficiencyRow>>,
}

#[allow(clippy::too_many_arguments)]
fn theory(
    moments: Option<String>,
    stats_path: Option<PathBuf>,
    alpha: Option<f64>,
    beta: Option<f64>,
    c_override: Option<f64>,
    design: Option<SamplingDesign>,
    want_aoe: bool,
    want_re: bool,
    format: Format,
) -> Result<(), Failure> {
    let stats = match (moments, stats_path) {
        (Some(m), _) => Some(parse_moments(&m).input()?),
        (None, Some(p)) => Some(load_stats(&p).input()?),
        (None, None) => None,
    };
    let c = match (c_override, stats) {
        (Some(c), _) => c,
        (None, Some(s)) => s.c,
        (None, None) => return Err(anyhow!("give --moments, --stats or --c")).input(),
    };
    let point = match (alpha, beta) {
        (Some(alpha), Some(beta)) => {
            let flags = Dominance::ALL.map(|k| dominates(k, alpha, beta, c));
            let with_design = stats.zip(design);
            Some(PointOutput {
                alpha,
                beta,
                bias1: with_design.map(|(s, d)| bias1_rpr(alpha, beta, &s, &d)),
                mse1: with_design.map(|(s, d)| mse1_rpr(alpha, beta, &s, &d)),
                gradient: with_design.map(|(s, d)| {
                    let (ga, gb) = mse1_grad(alpha, beta, &s, &d);
                    [ga, gb]
                }),
                dominance: DominanceFlags {
                    over_product: flags[0],
                    over_ratio: flags[1],
                    over_sample_mean: flags[2],
                    all: flags.iter().all(|&f| f),
                },
            })
        }
        (None, None) => None,
        _ => return Err(anyhow!("--alpha and --beta go together")).input(),
    };
    let aoe = if want_aoe {
        Some(AoeOutput {
            minus_minus: aoe_parameters(c, AoeBranch::MinusMinus).input()?,
            plus_plus: aoe_parameters(c, AoeBranch::PlusPlus).input()?,
        })
    } else {
        None
    };
    let relative_efficiency = if want_re {
        let st = stats
            .ok_or_else(|| anyhow!("--re needs --moments or --stats"))
            .input()?;
        // efficiencies do not depend on the design
        let d = design.unwrap_or(make_design(1, 2).internal()?);
        let rows = [
            EstimatorSpec::SampleMean,
            EstimatorSpec::Ratio,
            EstimatorSpec::Product,
            EstimatorSpec::UnbiasedAoe { c: st.c },
        ]
        .into_iter()
        .map(|spec| {
            relative_efficiency(EstimatorSpec::SampleMean, spec, &st, &d).map(|re| EfficiencyRow {
                estimator: spec.to_string(),
                percent: 100.0 * re,
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .input()?;
        Some(rows)
    } else {
        None
    };
    let out = TheoryOutput {
        c,
        stats,
        design,
        point,
        aoe,
        relative_efficiency,
    };
    match format {
        Format::Json => print_json(&out),
        Format::Text => {
            println!("C = {:.4}", out.c);
            if let Some(p) = &out.point {
                println!("alpha = {}, beta = {}", p.alpha, p.beta);
                if let (Some(b), Some(m), Some(g)) = (p.bias1, p.mse1, p.gradient) {
                    println!(
                        "  bias1 = {b:.6e}  mse1 = {m:.6e}  gradient = ({:.6e}, {:.6e})",
                        g[0], g[1]
                    );
                }
                let flag = |f: bool| if f { "yes" } else { "no" };
                println!(
                    "  beats product: {}  ratio: {}  sample mean: {}",
                    flag(p.dominance.over_product),
                    flag(p.dominance.over_ratio),
                    flag(p.dominance.over_sample_mean)
                );
            }
            if let Some(a) = &out.aoe {
                for s in [a.minus_minus, a.plus_plus] {
                    println!(
                        "{:?}: alpha* = {:.4}, beta* = {:.4}{}",
                        s.branch,
                        s.alpha_star,
                        s.beta_star,
                        if s.is_real {
                            ""
                        } else {
                            " (real parts; no real solution)"
                        }
                    );
                }
            }
            if let Some(rows) = &out.relative_efficiency {
                let w = rows.iter().map(|r| r.estimator.len()).max().unwrap_or(0).max(9);
                println!("{:<w$}  {:>20}", "Estimator", "Relative efficiency");
                for r in rows {
                    println!("{:<w$}  {:>19.2}%", r.estimator, r.percent);
                }
            }
            Ok(())
        }
    }
}

fn surface(kind: Kind, alpha: GridAxis, beta: GridAxis, c: GridAxis, out: Option<PathBuf>) -> Result<(), Failure> {
    let kind = match kind {
        Kind::Biasfree => SurfaceKind::BiasFree,
        Kind::Aoe => SurfaceKind::Aoe,
        Kind::Region => SurfaceKind::DominanceRegion,
    };
    let rows = surface_grid(kind, &SurfaceRanges { alpha, beta, c });
    match out {
        Some(path) => {
            let file = File::create(&path)
                .with_context(|| format!("cannot create {}", path.display()))
                .input()?;
            let mut w = BufWriter::new(file);
            write_surface_csv(kind, &rows, &mut w).input()?;
            w.flush().input()
        }
        None => write_surface_csv(kind, &rows, std::io::stdout().lock()).input(),
    }
}

fn generate(out: &Path, seed: u64, targets: MomentTargets) -> Result<(), Failure> {
    let started = std::time::Instant::now();
    let pop = generate_population(&targets, seed).input()?;
    let file = File::create(out)
        .with_context(|| format!("cannot create {}", out.display()))
        .input()?;
    let mut w = BufWriter::new(file);
    write_population_csv(&pop, &mut w).input()?;
    w.flush().input()?;
    let manifest = manifest_path(out);
    write_manifest(
        "generate",
        seed,
        &[],
        &[out],
        started.elapsed().as_secs_f64(),
        &manifest,
    )?;
    let stats = summarize(&pop).input()?;
    eprintln!(
        "wrote {} units to {} (C = {:.4}, r = {:.4})",
        pop.len(),
        out.display(),
        stats.c,
        stats.r
    );
    Ok(())
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    manifest: String,
    #[serde(flatten)]
    report: &'a rpr::simulation::SimReport,
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    population: &Path,
    reps: usize,
    n: usize,
    seed: u64,
    confidence: f64,
    tokens: &[String],
    threads: Option<usize>,
    out: &Path,
    per_rep_csv: Option<&Path>,
    format: Format,
) -> Result<(), Failure> {
    let estimators = tokens
        .iter()
        .map(|t| t.parse::<EstimatorSpec>())
        .collect::<Result<Vec<_>, _>>()
        .input()?;
    let pop = load_population_csv(population).input()?;
    let cfg = SimConfig {
        reps,
        n,
        seed,
        confidence,
        estimators,
    };
    let run = match threads {
        Some(t) => run_simulation_with_threads(&pop, &cfg, t),
        None => run_simulation(&pop, &cfg),
    }
    .input()?;
    let manifest = manifest_path(out);
    let report = SimulateOutput {
        manifest: file_name(&manifest),
        report: &run.report,
    };
    write_json(out, &report)?;
    let mut outputs = vec![out];
    if let Some(path) = per_rep_csv {
        let file = File::create(path)
            .with_context(|| format!("cannot create {}", path.display()))
            .input()?;
        let mut w = BufWriter::new(file);
        write_replications_csv(&run, &mut w).input()?;
        w.flush().input()?;
        outputs.push(path);
    }
    write_manifest(
        "simulate",
        seed,
        &[population],
        &outputs,
        run.report.metadata.wall_time_secs,
        &manifest,
    )?;
    match format {
        Format::Json => print_json(&report),
        Format::Text => {
            print!("{}", render_text(&run.report));
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze { csv, design, format } => analyze(&csv, design, format),
        Command::Plan {
            sigma2,
            margin,
            margin_percent,
            mean,
            confidence,
            population_size,
            sd_y,
            format,
        } => plan(
            sigma2,
            margin,
            margin_percent,
            mean,
            confidence,
            population_size,
            sd_y,
            format,
        ),
        Command::Theory {
            moments,
            stats,
            alpha,
            beta,
            c,
            design,
            aoe,
            re,
            format,
        } => theory(moments, stats, alpha, beta, c, design, aoe, re, format),
        Command::Surface {
            kind,
            alpha,
            beta,
            c,
            out,
        } => surface(kind, alpha, beta, c, out),
        Command::Generate {
            out,
            seed,
            size,
            mean_y,
            mean_x,
            cv_y,
            cv_x,
            r,
        } => generate(
            &out,
            seed,
            MomentTargets {
                size,
                mean_y,
                mean_x,
                cv_y,
                cv_x,
                r,
            },
        ),
        Command::Simulate {
            population,
            reps,
            n,
            seed,
            confidence,
            estimators,
            threads,
            out,
            per_rep_csv,
            format,
        } => simulate(
            &population,
            reps,
            n,
            seed,
            confidence,
            &estimators,
            threads,
            &out,
            per_rep_csv.as_deref(),
            format,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
