//! `nps`: fit, compare and explore normal power-series models from the
//! command line.

mod commands;
mod ingest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use commands::Failure;
use nps::Family;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "nps", version, about = "Normal power-series distributions: fitting, comparison, moments and sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one family to a data column.
    Fit(FitArgs),
    /// Fit several families plus a normal baseline and rank them by AIC.
    Compare(CompareArgs),
    /// Moments, variance, skewness and kurtosis of one model.
    Moments(MomentsArgs),
    /// Draw a random sample, one value per line.
    Sample(SampleArgs),
    /// Tabulate pdf, cdf and hazard on a grid as CSV.
    Curve(CurveArgs),
    /// Repeated simulation and fitting from a known truth.
    Simulate(SimulateArgs),
    /// Check closed forms against brute-force oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Direct,
    Em,
}

impl From<Method> for nps::inference::FitMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Direct => Self::Direct,
            Method::Em => Self::Em,
        }
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    /// CSV file with the observations.
    #[arg(long)]
    data: PathBuf,
    /// Column name or 0-based index (default: first column).
    #[arg(long)]
    column: Option<String>,
}

#[derive(Debug, Args)]
struct FitOptions {
    #[arg(long, value_enum, default_value = "direct")]
    method: Method,
    /// Allow θ outside the power-series domain where the density remains valid (direct only).
    #[arg(long)]
    extended: bool,
    /// Relative log-likelihood change that stops EM.
    #[arg(long, default_value_t = 1e-8, value_parser = positive)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_em_iter: usize,
    #[arg(long, default_value_t = 200)]
    max_qn_iter: usize,
    /// Starting values for θ, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta_starts: Option<Vec<f64>>,
    /// Smallest sample size accepted.
    #[arg(long, default_value_t = 10)]
    min_n: usize,
    /// Skip standard errors.
    #[arg(long)]
    no_se: bool,
}

impl FitOptions {
    fn config(&self) -> nps::inference::FitConfig {
        nps::inference::FitConfig {
            domain: if self.extended {
                nps::inference::DomainMode::Extended
            } else {
                nps::inference::DomainMode::Proper
            },
            tol: self.tol,
            max_em_iter: self.max_em_iter,
            max_qn_iter: self.max_qn_iter,
            theta_starts: self.theta_starts.clone(),
            min_n: self.min_n,
            standard_errors: !self.no_se,
        }
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output format on stdout.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Also write the JSON result to this file.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Family: geometric|ng, poisson|np, logarithmic|nl, binomial:<m>|nb:<m>, negbinomial:<k>|nnb:<k>.
    #[arg(long, value_parser = family)]
    family: Family,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    sigma: f64,
    #[arg(long, allow_hyphen_values = true)]
    theta: f64,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long, value_parser = family)]
    family: Family,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    fit: FitOptions,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Comma-separated candidates, e.g. ng,np,nl,nb:5,normal.
    #[arg(long, value_delimiter = ',', default_value = "ng,np,nl,normal")]
    families: Vec<String>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    fit: FitOptions,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MomentMethodArg {
    Integral,
    Series,
    Approx,
    MonteCarlo,
}

#[derive(Debug, Args)]
struct MomentsArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "integral")]
    method: MomentMethodArg,
    /// Truncation tolerance for the series method.
    #[arg(long, default_value_t = 1e-12, value_parser = positive)]
    series_tol: f64,
    /// Draws for the Monte Carlo method.
    #[arg(long, default_value_t = 1_000_000)]
    draws: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Sampler {
    Inverse,
    Compound,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of draws.
    #[arg(short = 'n', long = "count", value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "inverse")]
    sampler: Sampler,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Columns to emit, comma separated: pdf, cdf, hazard.
    #[arg(long, value_delimiter = ',', default_value = "pdf,cdf,hazard")]
    what: Vec<commands::CurveColumn>,
    /// Grid as lo:hi:steps (steps intervals, steps + 1 points); default μ ± 5σ in 200 steps.
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_parser = family)]
    family: Family,
    /// True parameters as mu,sigma,theta.
    #[arg(long, allow_hyphen_values = true)]
    truth: String,
    /// Sample size per replicate.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    fit: FitOptionsEm,
    #[command(flatten)]
    out: OutputArgs,
}

/// Fit options for simulation, where EM is the default estimator.
#[derive(Debug, Args)]
struct FitOptionsEm {
    #[arg(long, value_enum, default_value = "em")]
    method: Method,
    #[arg(long)]
    extended: bool,
    #[arg(long, default_value_t = 1e-8, value_parser = positive)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_em_iter: usize,
    #[arg(long, default_value_t = 200)]
    max_qn_iter: usize,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Family for the information-matrix check.
    #[arg(long, value_parser = family, default_value = "geometric")]
    family: Family,
    /// Data for the information-matrix check; simulated when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    column: Option<String>,
    /// Size of the simulated sample.
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: nps::NpsError| e.to_string())
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("'{s}' is not a positive number")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(4),
            };
        }
    };
    let result = match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Compare(a) => commands::compare(a),
        Command::Moments(a) => commands::moments(a),
        Command::Sample(a) => commands::sample(a),
        Command::Curve(a) => commands::curve(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Compute(_) => 1,
            Failure::Ingest(_) => 2,
            Failure::NotConverged => 3,
            Failure::Usage(_) => 4,
        }
    }
}
