use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const DEFAULT_SEED: u64 = 20240917;

#[derive(Debug, Parser)]
#[command(
    name = "peb",
    version,
    about = "Binarized ATE and policy effect of binarization"
)]
pub struct Cli {
    /// Worker threads for bootstrap and Monte Carlo loops (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate BATE or PEB from a CSV file.
    Estimate(EstimateArgs),
    /// Run the Monte Carlo study and write the result tables.
    Simulate(SimulateArgs),
    /// Print exact parameter values for the simulation DGP.
    Truth(TruthArgs),
    /// Write treatment density curves under the status quo or a cutoff policy.
    Densities(DensityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    TextTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Geq,
    Lt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Reg,
    Ipw,
    Aipw,
    Tmle,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimandArg {
    Bate,
    Peb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CiMethodArg {
    Normal,
    Percentile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArmArg {
    StatusQuo,
    Tilde1,
    Tilde0,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// CSV with columns y, t or a, then covariates.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Cutoff for a continuous treatment column `a`.
    #[arg(long, allow_negative_numbers = true)]
    pub cutoff: Option<f64>,
    #[arg(long, value_enum, default_value_t = DirectionArg::Geq)]
    pub direction: DirectionArg,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Aipw)]
    pub estimator: EstimatorArg,
    #[arg(long, value_enum, default_value_t = EstimandArg::Bate)]
    pub estimand: EstimandArg,
    /// Policy arm for PEB (0 or 1).
    #[arg(long)]
    pub arm: Option<u8>,
    #[arg(long, default_value_t = 0.95)]
    pub ci_level: f64,
    /// Bootstrap resamples for IPW standard errors.
    #[arg(long, default_value_t = 1000)]
    pub bootstrap_reps: usize,
    #[arg(long, value_enum, default_value_t = CiMethodArg::Normal)]
    pub ci_method: CiMethodArg,
    #[arg(long, env = "PEB_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Warn about propensities within this distance of 0 or 1.
    #[arg(long, default_value_t = 0.01)]
    pub positivity_eps: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Overrides for the simulation data-generating process.
#[derive(Debug, Args)]
pub struct DgpArgs {
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    pub cutoff: f64,
    #[arg(long, value_enum, default_value_t = DirectionArg::Geq)]
    pub direction: DirectionArg,
    #[arg(long, default_value_t = 0.5)]
    pub w_prob: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub a_mean_base: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub a_mean_slope: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a_sd: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Comma-separated sample sizes.
    #[arg(long = "n", value_delimiter = ',', default_values_t = vec![150usize, 300, 500])]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, default_value_t = 200)]
    pub bootstrap_reps: usize,
    /// Comma-separated estimators.
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = vec![EstimatorArg::Reg, EstimatorArg::Ipw])]
    pub estimators: Vec<EstimatorArg>,
    /// PEB arm reported alongside BATE.
    #[arg(long, default_value_t = 1)]
    pub arm: u8,
    #[arg(long, default_value_t = 0.95)]
    pub ci_level: f64,
    #[arg(long, env = "PEB_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub dgp: DgpArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TruthArgs {
    #[arg(long, value_enum, default_value_t = Format::TextTable)]
    pub format: Format,
    #[command(flatten)]
    pub dgp: DgpArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// Covariate value (0 or 1).
    #[arg(long)]
    pub w: u8,
    #[arg(long, value_enum, default_value_t = ArmArg::StatusQuo)]
    pub arm: ArmArg,
    /// Grid as start:stop:step.
    #[arg(long, default_value = "0:12:0.01")]
    pub grid: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub dgp: DgpArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}
