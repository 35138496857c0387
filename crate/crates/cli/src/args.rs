use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "mflq", version, about = "Mean-field stochastic LQ control with assets and liabilities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the Riccati recursions and print the feedback gains.
    Solve(SolveArgs),
    /// Monte Carlo estimate of the closed-loop cost.
    Simulate(SimulateArgs),
    /// Solve an asset-liability problem from JSON or a returns history.
    Alm(AlmArgs),
    /// Run the invariant battery on random instances.
    Verify(VerifyArgs),
    /// Reproduce the three-period asset-liability example.
    Example(ExampleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Problem JSON (scalar or vector noise).
    pub problem: PathBuf,
    /// Also solve the multiplier (P-form) recursion.
    #[arg(long)]
    pub p_form: bool,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Gaussian,
    Rademacher,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    pub problem: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = SamplerArg::Gaussian)]
    pub sampler: SamplerArg,
    /// Use cross-path sample means instead of the exact means.
    #[arg(long)]
    pub population_coupling: bool,
    /// Initial moments JSON; defaults to zero means and identity covariances.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Refuse to run without an explicit seed.
    #[arg(long)]
    pub ci: bool,
    /// Record wall-clock timings in the report.
    #[arg(long)]
    pub timings: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MomentArg {
    Pooled,
    PerStep,
}

#[derive(Debug, Clone, Args)]
pub struct AlmArgs {
    /// ALM problem JSON.
    #[arg(required_unless_present = "returns", conflicts_with = "returns")]
    pub alm: Option<PathBuf>,
    /// CSV of per-period excess returns, one column per asset.
    #[arg(long)]
    pub returns: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub horizon: usize,
    #[arg(long, value_enum, default_value_t = MomentArg::Pooled)]
    pub moments: MomentArg,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub f: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q_n: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub q_bar_n: f64,
    /// Initial moments JSON (one-dimensional); defaults to unit variances.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Consistent,
    NegQ,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 50)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Upper bounds "n,m,N" on the random dimensions.
    #[arg(long, default_value = "2,2,3")]
    pub max_dims: String,
    /// Terminal value of the mean cross multiplier used in the P-form check.
    #[arg(long, value_enum, default_value_t = BoundaryArg::Consistent)]
    pub pxy_boundary: BoundaryArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExampleArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}
