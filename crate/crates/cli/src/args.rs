use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Early-exercise boundary and price of the American put under the
/// square-root CEV process, in rescaled time t = σ²(T_F − T_0)/2.
#[derive(Parser, Debug)]
#[command(name = "fbcev", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve for the exercise boundary α(t).
    Boundary(BoundaryArgs),
    /// Solve the regime II similarity function 𝓕(Λ).
    Flambda(FlambdaArgs),
    /// Price the put on a grid of (S, t).
    Price(PriceArgs),
    /// Perpetual boundary and price.
    Perpetual(PerpetualArgs),
    /// Cross-check the boundary solvers and the regime matching relations.
    Compare(CompareArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Strike K.
    #[arg(long, default_value_t = 1.0)]
    pub strike: f64,
    /// ρ = 2r/σ² directly (excludes --rate/--sigma).
    #[arg(long, conflicts_with_all = ["rate", "sigma"])]
    pub rho: Option<f64>,
    /// Risk-free rate r (with --sigma).
    #[arg(long, requires = "sigma")]
    pub rate: Option<f64>,
    /// Volatility σ (with --rate).
    #[arg(long, requires = "rate")]
    pub sigma: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ie,
    Pde,
    Asymptotic,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ie => "ie",
            Method::Pde => "pde",
            Method::Asymptotic => "asymptotic",
        }
    }
}

#[derive(Args, Debug)]
pub struct BoundaryArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 2.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
    #[arg(long, value_enum, default_value_t = Method::Ie)]
    pub method: Method,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct FlambdaArgs {
    #[arg(long, default_value_t = 1.0)]
    pub strike: f64,
    #[arg(long, default_value_t = -30.0, allow_negative_numbers = true)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 100)]
    pub nodes: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct PriceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Asset levels, comma separated; 0.1K, 0.2K, …, 3K when absent.
    #[arg(long, value_delimiter = ',')]
    pub s: Vec<f64>,
    /// Times, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub t: Vec<f64>,
    /// Boundary CSV (t, alpha[, log_alpha]); solved by the IE method when absent.
    #[arg(long)]
    pub boundary_file: Option<PathBuf>,
    /// Minimum horizon of the solved boundary.
    #[arg(long, default_value_t = 2.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct PerpetualArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
    /// Per-time table (csv); the summary goes next to it with extension
    /// `.json`. With `--format json` only the summary is written.
    #[command(flatten)]
    pub output: OutputArgs,
}
