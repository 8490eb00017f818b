use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use richcore::coreset::{CoresetMode, RatioNorm};
use richcore::solvers::ConstraintDomain;

#[derive(Debug, Parser)]
#[command(name = "richcore", version, about = "Deterministic coresets for least-squares regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select a coreset and report its rows, scales and predicted bound.
    Build(RunArgs),
    /// Build, then solve full and coreset problems and compare.
    Verify(RunArgs),
    /// Sweep coreset sizes against a uniform-sampling baseline (JSON lines).
    Bench(BenchArgs),
    /// Lower-bound constructions for target-agnostic coresets.
    Adversarial(AdversarialArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ModeArg {
    Simple,
    MultiObjective,
    ArbitraryConstrained,
    MultipleSpectral,
    MultipleFrobenius,
    Agnostic,
}

impl From<ModeArg> for CoresetMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Simple => CoresetMode::Simple,
            ModeArg::MultiObjective => CoresetMode::MultiObjective,
            ModeArg::ArbitraryConstrained => CoresetMode::ArbitraryConstrained,
            ModeArg::MultipleSpectral => CoresetMode::MultipleSpectral,
            ModeArg::MultipleFrobenius => CoresetMode::MultipleFrobenius,
            ModeArg::Agnostic => CoresetMode::Agnostic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum DomainArg {
    #[default]
    Unconstrained,
    Nnls,
}

impl From<DomainArg> for ConstraintDomain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Unconstrained => ConstraintDomain::Unconstrained,
            DomainArg::Nnls => ConstraintDomain::Nonnegative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Spectral,
    Frobenius,
}

impl From<NormArg> for RatioNorm {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Spectral => RatioNorm::Spectral,
            NormArg::Frobenius => RatioNorm::Frobenius,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Coreset size.
    #[arg(short = 'r', long = "size")]
    pub r: Option<usize>,
    /// Data matrix as CSV, one row per line.
    #[arg(long, conflicts_with = "synthetic")]
    pub input: Option<PathBuf>,
    /// Generated data: `gaussian:N,D[,W]`, `two-point` or `hard:N,D[,R]`.
    #[arg(long)]
    pub synthetic: Option<String>,
    /// Target CSV; columns are appended in order. Repeatable.
    #[arg(long)]
    pub target: Vec<PathBuf>,
    /// Take target column `j` (0-based) out of the data file. Repeatable.
    #[arg(long)]
    pub target_col: Vec<usize>,
    /// Skip one header line in every CSV.
    #[arg(long)]
    pub header: bool,
    #[arg(long, value_enum, default_value = "unconstrained")]
    pub domain: DomainArg,
    /// Ratio norm for agnostic mode; other modes fix their own.
    #[arg(long, value_enum)]
    pub norm: Option<NormArg>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated coreset sizes; defaults to 2k, 4k, 8k.
    #[arg(long, value_delimiter = ',')]
    pub rs: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Construction {
    #[value(name = "7")]
    Deterministic,
    #[value(name = "8")]
    Randomized,
    #[value(name = "two-point")]
    TwoPoint,
}

#[derive(Debug, Clone, Args)]
pub struct AdversarialArgs {
    /// `7`: every fixed coreset; `8`: uniform sampler; `two-point`: single-row coresets.
    #[arg(long, value_enum, default_value = "7")]
    pub theorem: Construction,
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(short = 'r', long = "size", default_value_t = 3)]
    pub r: usize,
    /// Target size for the randomized construction.
    #[arg(long, default_value_t = 2)]
    pub ell: usize,
    /// Monte-Carlo draws for the randomized construction (0 disables).
    #[arg(long, default_value_t = 0)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
