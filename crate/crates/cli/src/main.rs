//! `masim`: simulate MA(q) error terms, measure inter-peak distances, and
//! compare them with the closed-form distance law.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.

mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use masim_core::analytic::{self, MAX_ENUMERATION_D, MAX_EXACT_D, MIN_ORACLE_SAMPLES};
use masim_core::{stats, AnalyticModel, InnovationDistribution, SimulationConfig};

use crate::output::OracleRow;

#[derive(Debug, Parser)]
#[command(
    name = "masim",
    version,
    about = "Distances between local maxima of MA(q) error terms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate MA(q) streams and write the merged distance histogram.
    ///
    /// CSV columns: d,count,tail. The last row has tail=1 and d = d_max + 1;
    /// it aggregates every distance above d_max.
    Simulate(SimulateArgs),
    /// Tabulate the closed-form law Pr[d] = (d-1)/2^d.
    ///
    /// CSV columns: d,pmf,cdf,pi.
    Pmf(PmfArgs),
    /// Simulate, then compare the empirical law with the closed form.
    ///
    /// CSV columns: d,count,empirical_pmf,analytic_pmf,abs_error,in_asymptotic_regime,tail.
    /// The last row (tail=1, d = d_max + 1) aggregates every distance above d_max.
    Compare(SimulateArgs),
    /// Check pi(d) by enumeration and, optionally, Pr[d] by direct Monte Carlo.
    ///
    /// CSV columns: d,valley_pattern_count,expected,match,mc_q,mc_estimate,mc_std_error,analytic_pmf.
    /// Monte Carlo columns are empty unless --mc-samples is given.
    /// Exits 1 if any enumeration row fails to match.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Dist {
    Uniform,
    Normal,
    Exponential,
}

impl From<Dist> for InnovationDistribution {
    fn from(d: Dist) -> Self {
        match d {
            Dist::Uniform => InnovationDistribution::Uniform01,
            Dist::Normal => InnovationDistribution::StandardNormal,
            Dist::Exponential => InnovationDistribution::ExponentialUnitRate,
        }
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Window order: each term sums q + 1 innovations.
    #[arg(long)]
    q: u32,
    /// Total number of terms, split evenly (rounded up) across streams.
    #[arg(long, value_parser = clap::value_parser!(u64).range(3..))]
    n: u64,
    #[arg(long, value_enum, default_value_t = Dist::Normal)]
    dist: Dist,
    #[arg(long, env = "MASIM_SEED", default_value_t = 0)]
    seed: u64,
    /// Independent parallel streams.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    streams: u32,
    /// Histogram cutoff; longer distances go to the tail bin.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(2..=MAX_EXACT_D as u64))]
    d_max: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct PmfArgs {
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(2..=MAX_EXACT_D as u64))]
    d_max: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Largest distance to enumerate.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(2..=MAX_ENUMERATION_D as u64))]
    d_max: u64,
    /// Monte Carlo samples per distance; enables the Monte Carlo oracle.
    #[arg(long, value_parser = clap::value_parser!(u64).range(MIN_ORACLE_SAMPLES..))]
    mc_samples: Option<u64>,
    /// Window order for the Monte Carlo oracle; defaults to d + 2 per row.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    q: Option<u32>,
    #[arg(long, env = "MASIM_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug)]
enum Failure {
    Runtime(String),
    Usage(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(format!("I/O error: {e}"))
    }
}

impl From<masim_core::Error> for Failure {
    fn from(e: masim_core::Error) -> Self {
        match e {
            masim_core::Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Runtime(msg)) => {
            eprintln!("masim: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("masim: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate(args) => run_simulate(&args),
        Command::Pmf(args) => run_pmf(&args),
        Command::Compare(args) => run_compare(&args),
        Command::Oracle(args) => run_oracle(&args),
    }
}

fn open_output(args: &OutputArgs) -> Result<Box<dyn Write>, Failure> {
    Ok(match &args.out {
        Some(path) => {
            Box::new(BufWriter::new(File::create(path).map_err(|e| {
                Failure::Runtime(format!("cannot create {}: {e}", path.display()))
            })?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn config_of(args: &SimulateArgs) -> Result<SimulationConfig, Failure> {
    Ok(
        SimulationConfig::new(args.q as usize, args.n, args.dist.into(), args.seed)?
            .with_streams(args.streams)?
            .with_d_max(args.d_max as usize)?,
    )
}

fn run_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let outcome = masim_core::run(&config_of(args)?)?;
    let mut out = open_output(&args.output)?;
    match args.output.format {
        Format::Csv => output::histogram_csv(&mut out, &outcome.histogram)?,
        Format::Json => output::json(&mut out, &output::HistogramDocument::new(&outcome))?,
    }
    out.flush()?;
    Ok(())
}

fn run_pmf(args: &PmfArgs) -> Result<(), Failure> {
    let model = AnalyticModel::new(args.d_max as usize)?;
    let mut out = open_output(&args.output)?;
    match args.output.format {
        Format::Csv => output::pmf_csv(&mut out, &model.table())?,
        Format::Json => output::json(&mut out, &output::PmfDocument::new(&model))?,
    }
    out.flush()?;
    Ok(())
}

fn run_compare(args: &SimulateArgs) -> Result<(), Failure> {
    let config = config_of(args)?;
    let outcome = masim_core::run(&config)?;
    let model = AnalyticModel::new(config.d_max)?;
    let report = stats::compare(&outcome.histogram, &model, outcome.metadata())?;
    let mut out = open_output(&args.output)?;
    match args.output.format {
        Format::Csv => output::report_csv(&mut out, &report)?,
        Format::Json => output::json(&mut out, &report)?,
    }
    out.flush()?;
    Ok(())
}

fn run_oracle(args: &OracleArgs) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for d in 2..=args.d_max as usize {
        let count = analytic::valley_pattern_count(d)?;
        let monte_carlo = match args.mc_samples {
            Some(samples) => {
                let q = args.q.map_or(d + 2, |q| q as usize);
                Some(analytic::pattern_probability_oracle(d, q, samples, args.seed)?)
            }
            None => None,
        };
        rows.push(OracleRow::new(d, count, monte_carlo));
    }
    let mut out = open_output(&args.output)?;
    match args.output.format {
        Format::Csv => output::oracle_csv(&mut out, &rows)?,
        Format::Json => output::json(
            &mut out,
            &output::OracleDocument::new(args.d_max, args.mc_samples, args.seed, &rows),
        )?,
    }
    out.flush()?;
    if let Some(bad) = rows.iter().find(|r| !r.matches) {
        return Err(Failure::Runtime(format!(
            "enumeration mismatch at d = {}: counted {}, expected {}",
            bad.d, bad.valley_pattern_count, bad.expected
        )));
    }
    Ok(())
}
