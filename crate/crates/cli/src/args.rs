use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use folner_lab_core::{CostKind, FolnerKind};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "folner-lab", version, about = "Følner-average experiments on ℤ^d shift spaces")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Upper-density trace of an example set.
    Density(DensityArgs),
    /// Besicovitch pseudometric trace with truncation enclosures.
    Besicovitch(PairTraceArgs),
    /// Threshold Besicovitch variant over a δ grid.
    Dprime(DprimeArgs),
    /// Exact mismatch density trace.
    Dbar(DbarArgs),
    /// Empirical pattern distribution on one Følner set.
    Empirical(EmpiricalArgs),
    /// Prokhorov distance between two empirical distributions.
    Prokhorov(ProkhorovArgs),
    /// Approximate set of accumulation points of empirical measures.
    Omega(OmegaArgs),
    /// Exact optimal transport between two pattern distributions.
    Transport(TransportArgs),
    /// Lower chain for ρ̄ between two periodic orbits.
    RhoChain(RhoChainArgs),
    /// Marginal exactness of glued couplings on random triples.
    GlueCheck(RandomTriplesArgs),
    /// d̄ estimate versus exact ρ̄ on periodic pairs.
    #[command(name = "nowy-check")]
    #[serde(rename = "nowy-check")]
    DbRhoCheck(DbRhoArgs),
    /// Triangle inequality for min-cost transport on random triples.
    TriangleCheck(RandomTriplesArgs),
    /// Temperedness ratios of a box Følner sequence.
    Tempered(TemperedArgs),
    /// Catalogue of example configurations and their structural checks.
    Examples(ExamplesArgs),
    /// Normalized block entropy.
    Entropy(EntropyArgs),
    /// End-to-end convergence pipelines for the prime and substitution examples.
    Convergence(ConvergenceArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Density(_) => "density",
            Command::Besicovitch(_) => "besicovitch",
            Command::Dprime(_) => "dprime",
            Command::Dbar(_) => "dbar",
            Command::Empirical(_) => "empirical",
            Command::Prokhorov(_) => "prokhorov",
            Command::Omega(_) => "omega",
            Command::Transport(_) => "transport",
            Command::RhoChain(_) => "rho-chain",
            Command::GlueCheck(_) => "glue-check",
            Command::DbRhoCheck(_) => "nowy-check",
            Command::TriangleCheck(_) => "triangle-check",
            Command::Tempered(_) => "tempered",
            Command::Examples(_) => "examples",
            Command::Entropy(_) => "entropy",
            Command::Convergence(_) => "convergence",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Boxes,
    Centered,
}

impl From<Kind> for FolnerKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Boxes => FolnerKind::Boxes,
            Kind::Centered => FolnerKind::Centered,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cost {
    Hamming,
    Admissible,
}

impl From<Cost> for CostKind {
    fn from(c: Cost) -> Self {
        match c {
            Cost::Hamming => CostKind::Hamming,
            Cost::Admissible => CostKind::Admissible,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct Output {
    /// Directory for `<command>.csv` and `<command>.json`; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Følner sequence and evaluation indices.
#[derive(Args, Debug, Serialize)]
pub struct Averaging {
    #[arg(long, value_enum, default_value = "centered")]
    pub kind: Kind,
    /// Largest index; the trace uses a halving ladder ending here.
    #[arg(long = "N", default_value_t = 200)]
    pub big_n: usize,
    /// Explicit increasing indices, overriding the ladder.
    #[arg(long = "n", value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
}

#[derive(Args, Debug, Serialize)]
pub struct DensityArgs {
    /// Example name; the set is where the configuration equals 1.
    #[arg(long)]
    pub set: String,
    /// Dimension for `const:` and `random:` examples.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub avg: Averaging,
    /// Expected limit; with it the command becomes a check.
    #[arg(long)]
    pub expect: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct PairArgs {
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub z: String,
    /// Dimension for `const:` and `random:` examples.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct PairTraceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: PairArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub avg: Averaging,
    /// Truncation radius of the admissible metric.
    #[arg(long, default_value_t = 12)]
    pub radius: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct DprimeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: PairArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub avg: Averaging,
    #[arg(long, default_value_t = 12)]
    pub radius: u64,
    /// Comma-separated δ values; the default grid is 1.0001 and k/200.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct DbarArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: PairArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub avg: Averaging,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct EmpiricalArgs {
    #[arg(long)]
    pub x: String,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// `box:k` for `{0..k-1}^d`, or points like `0,0;0,1;1,0`.
    #[arg(long, default_value = "box:2")]
    pub window: String,
    #[arg(long, value_enum, default_value = "centered")]
    pub kind: Kind,
    #[arg(long = "N", default_value_t = 200)]
    pub big_n: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct ProkhorovArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value = "box:2")]
    pub window: String,
    #[arg(long, value_enum, default_value = "centered")]
    pub kind: Kind,
    #[arg(long = "N", default_value_t = 200)]
    pub big_n: usize,
    /// Also compute the exact value by enumerating distance levels.
    #[arg(long)]
    pub exact: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct OmegaArgs {
    #[arg(long)]
    pub x: String,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, default_value = "box:2")]
    pub window: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub avg: Averaging,
    /// Prokhorov radius under which two empirical measures are merged.
    #[arg(long, default_value_t = 0.05)]
    pub merge_tol: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct TransportArgs {
    /// JSON distribution literal; otherwise the empirical measure of `--x`.
    #[arg(long)]
    pub mu: Option<PathBuf>,
    #[arg(long)]
    pub nu: Option<PathBuf>,
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub z: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, default_value = "box:2")]
    pub window: String,
    #[arg(long, value_enum, default_value = "centered")]
    pub kind: Kind,
    #[arg(long = "N", default_value_t = 50)]
    pub big_n: usize,
    #[arg(long, value_enum, default_value = "hamming")]
    pub cost: Cost,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct RhoChainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: PairArgs,
    /// Windows `{0..k-1}^d` for `k = 1..=k_max`.
    #[arg(long, default_value_t = 4)]
    pub k_max: usize,
    #[arg(long, value_enum, default_value = "hamming")]
    pub cost: Cost,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct RandomTriplesArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Window length in ℤ.
    #[arg(long, default_value_t = 3)]
    pub width: i64,
    /// Largest mass denominator.
    #[arg(long, default_value_t = 12)]
    pub max_denominator: i64,
    #[arg(long, default_value_t = 5)]
    pub max_support: usize,
    #[arg(long, value_enum, default_value = "admissible")]
    pub cost: Cost,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct DbRhoArgs {
    /// `random:K` for K seeded pairs, or words like `0110/01,001/1`.
    #[arg(long, default_value = "random:20")]
    pub pairs: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 12)]
    pub max_period: usize,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub k_max: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "boxes")]
    pub kind: Kind,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct TemperedArgs {
    /// `z:d` for ℤ^d.
    #[arg(long, default_value = "z:1")]
    pub group: String,
    #[arg(long, value_enum, default_value = "boxes")]
    pub kind: Kind,
    /// Ratios are reported for `1..=n`.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Bound on the ratios; `2^d` when absent.
    #[arg(long)]
    pub c: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct ExamplesArgs {
    /// Render one example on `F_N` as CSV rows `coords..,symbol`.
    #[arg(long)]
    pub show: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long = "N", default_value_t = 10)]
    pub big_n: usize,
    /// Substitution stages whose tilings are verified.
    #[arg(long, default_value_t = 6)]
    pub stages: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct EntropyArgs {
    #[arg(long)]
    pub x: String,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Counting region `{0..N-1}^d`.
    #[arg(long = "N", default_value_t = 120)]
    pub big_n: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    pub k: Vec<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Args, Debug, Serialize)]
pub struct ConvergenceArgs {
    /// Centered window for the visible-point pipelines.
    #[arg(long = "N", default_value_t = 600)]
    pub big_n: usize,
    /// Prime approximants `1..=primes`.
    #[arg(long, default_value_t = 5)]
    pub primes: usize,
    /// Substitution stages `1..=stages`.
    #[arg(long, default_value_t = 5)]
    pub stages: usize,
    #[arg(long, default_value_t = 0.01)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}
