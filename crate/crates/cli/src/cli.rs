use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "assassin-sim",
    version,
    about = "Birth-and-assassination and rumor scotching experiments",
    long_about = "Monte Carlo samplers, analytic solvers and estimators for the \
                  birth-and-assassination process and the rumor scotching process. \
                  Tables go to --out (or stdout) as CSV; summaries go to stderr. \
                  Every --out file gets a <out>.manifest.json sidecar that `replay` can rerun. \
                  ASSASSIN_SIM_THREADS sets the worker count (0 = all cores)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample total progeny and extinction times of the B&A process.
    BaSample(BaSampleArgs),
    /// Integer moments E N^k for k <= p.
    Moments(MomentsArgs),
    /// Hill plot of the progeny tail against the analytic exponent.
    Tail(TailArgs),
    /// Stability verdict for a killing distribution.
    Stability(StabilityArgs),
    /// Extinction profile pi(t) by fixed-point iteration.
    Extinction(ExtinctionArgs),
    /// Laplace transform E exp(-theta Y(t)) by fixed-point iteration.
    Laplace(LaplaceArgs),
    /// Sample recovered counts of the rumor scotching process.
    RumorSample(RumorSampleArgs),
    /// Finite-n rumor process against its B&A limit.
    Converge(ConvergeArgs),
    /// Rerun the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::BaSample(_) => "ba-sample",
            Command::Moments(_) => "moments",
            Command::Tail(_) => "tail",
            Command::Stability(_) => "stability",
            Command::Extinction(_) => "extinction",
            Command::Laplace(_) => "laplace",
            Command::RumorSample(_) => "rumor-sample",
            Command::Converge(_) => "converge",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct Caps {
    /// Particle cap per replica.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_particles: u64,
    /// Time cap per replica.
    #[arg(long, default_value_t = 1e4)]
    pub max_time: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct BaSampleArgs {
    #[arg(long)]
    pub lambda: f64,
    /// free | at-risk-at=T | dies-at=T
    #[arg(long, default_value = "free")]
    pub root: String,
    /// exp:MU | det:K | gamma:SHAPE,RATE
    #[arg(long, default_value = "exp:1")]
    pub killing: String,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: u64,
    #[command(flatten)]
    pub caps: Caps,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMode {
    ClosedForm,
    Recursion,
    Mc,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct MomentsArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub p: usize,
    #[arg(long, value_enum, default_value_t = MomentMode::Recursion)]
    pub mode: MomentMode,
    /// Replicas for --mode mc.
    #[arg(long, default_value_t = 100_000)]
    pub replicas: u64,
    #[command(flatten)]
    pub caps: Caps,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct TailArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub replicas: u64,
    /// FIRST:LAST[:STEP] over the number of order statistics.
    #[arg(long, default_value = "10:1000:10")]
    pub k_range: String,
    /// Skip the U(0,1) tie-breaking jitter.
    #[arg(long)]
    pub no_jitter: bool,
    #[command(flatten)]
    pub caps: Caps,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct StabilityArgs {
    #[arg(long)]
    pub lambda: f64,
    /// exp:MU | det:K | gamma:SHAPE,RATE
    #[arg(long, default_value = "exp:1")]
    pub killing: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct SolverArgs {
    /// Truncation horizon T of the grid.
    #[arg(long, default_value_t = 40.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// Sup-norm stopping tolerance between iterates.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 200_000)]
    pub max_iter: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct ExtinctionArgs {
    #[arg(long)]
    pub lambda: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// B&A replicas for the survival comparison (0 = none).
    #[arg(long, default_value_t = 0)]
    pub mc_replicas: u64,
    #[command(flatten)]
    pub caps: Caps,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct LaplaceArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub theta: f64,
    #[arg(long)]
    pub t: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Replicas of Y(t) for the Monte Carlo comparison (0 = none).
    #[arg(long, default_value_t = 0)]
    pub mc_replicas: u64,
    #[command(flatten)]
    pub caps: Caps,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitArg {
    Paper,
    FullBlame,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct RumorSampleArgs {
    /// Vertices 1..=n; required for the complete topology.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub lambda: f64,
    /// complete | file=PATH (edge list, vertex 0 auxiliary)
    #[arg(long, default_value = "complete")]
    pub topology: String,
    #[arg(long, value_enum, default_value_t = InitArg::Paper)]
    pub init: InitArg,
    /// Recover vertex 1 deterministically at this time.
    #[arg(long)]
    pub force_root_recovery: Option<f64>,
    /// Per-edge infection rate is lambda / scale (default: n for complete, 1 for files).
    #[arg(long)]
    pub infection_scale: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: u64,
    #[arg(long, default_value_t = 1_000_000_000)]
    pub max_events: u64,
    #[arg(long, default_value_t = 1e9)]
    pub max_time: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub lambda: f64,
    /// Comma-separated, strictly increasing.
    #[arg(long)]
    pub n_list: String,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: u64,
    /// Compare Y_n(t) with Y(t) instead of N_n with N.
    #[arg(long)]
    pub t: Option<f64>,
    /// Fraction delta in P(N_n >= delta n) for lambda > 1/4.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[command(flatten)]
    pub caps: Caps,
    #[arg(long, default_value_t = 1_000_000_000)]
    pub max_events: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write to this path instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
