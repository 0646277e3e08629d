use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hellfit::Branching;

#[derive(Debug, Parser)]
#[command(name = "hellfit", version, about = "Decide whether a sample and a model sample come from close distributions")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "HELLFIT_THREADS")]
    pub threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Base seed for simulations.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply the fitness criterion to a mother sample and a model sample.
    Fit(FitArgs),
    /// Divergence threshold and Bayes error bound for a slack or divergence.
    Threshold(ThresholdArgs),
    /// Re-run a simulation table (1-4: k = 3 shifts, 5-6: pairwise scans).
    Simulate(SimulateArgs),
    /// Monte Carlo check of a risk expansion (2, 3) or the bias bound (4).
    Validate(ValidateArgs),
    /// Build the partition of a model sample and print it.
    Partition(PartitionArgs),
    /// Criterion on every two-dimensional marginal.
    Pairwise(PairwiseArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Field delimiter of the CSV inputs.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,

    /// Support bounds per axis as `lo:hi` pairs separated by commas, e.g. `0:1,-inf:inf`.
    #[arg(long, value_parser = parse_bounds)]
    pub bounds: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Args)]
pub struct PartitionShape {
    /// Number of axes split recursively.
    #[arg(long)]
    pub depth: usize,

    /// Bins per split: one integer, or one per level (`4,2,2`).
    #[arg(long, value_parser = parse_branching)]
    pub branching: Branching,

    /// 1-based split order (`3,1,2`); defaults to `1,2,..`.
    #[arg(long, value_delimiter = ',')]
    pub axes: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub mother: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub shape: PartitionShape,
    #[arg(long, value_parser = parse_epsilon)]
    pub epsilon: f64,
    #[command(flatten)]
    pub input: InputArgs,
    /// Also write a per-axis Kolmogorov-Smirnov baseline (JSON) here.
    #[arg(long)]
    pub ks_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "target")]
pub struct ThresholdTarget {
    #[arg(long, value_parser = parse_epsilon)]
    pub epsilon: Option<f64>,
    #[arg(long, value_parser = parse_positive)]
    pub delta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// hellinger, kl, reverse-kl, chi2 or alpha:<value>.
    #[arg(long, default_value = "hellinger")]
    pub generator: String,
    #[command(flatten)]
    pub target: ThresholdTarget,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
    pub table: u8,
    #[arg(long)]
    pub n2: Option<usize>,
    /// Mother sample sizes, one column each.
    #[arg(long, value_delimiter = ',')]
    pub n1: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    #[arg(long, value_parser = parse_epsilon, default_value_t = 0.05)]
    pub epsilon: f64,
    /// Dimension of the pairwise tables.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Uniform,
    Normal,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=4))]
    pub theorem: u8,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Extra sample sizes for a log-log rate check (theorem 3).
    #[arg(long, value_delimiter = ',')]
    pub rate: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
    /// True bin masses for theorem 2 (default: four equal bins).
    #[arg(long, value_delimiter = ',')]
    pub masses: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = FamilyArg::Uniform)]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub depth: usize,
    #[arg(long, value_parser = parse_branching, default_value = "4")]
    pub branching: Branching,
    /// Mother/model sizes for theorem 4.
    #[arg(long, default_value_t = 1000)]
    pub n1: usize,
    #[arg(long, default_value_t = 100_000)]
    pub n2: usize,
    /// Mother mean shift and covariance mix for theorem 4.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long, default_value = "hellinger")]
    pub generator: String,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub shape: PartitionShape,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Args)]
pub struct PairwiseArgs {
    #[arg(long)]
    pub mother: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_parser = parse_branching, default_value = "4")]
    pub branching: Branching,
    #[arg(long, value_parser = parse_epsilon)]
    pub epsilon: f64,
    #[command(flatten)]
    pub input: InputArgs,
}

pub fn parse_epsilon(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(e) if e > 0.0 && e < 0.5 => Ok(e),
        _ => Err("epsilon must be in (0, 0.5)".into()),
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(d) if d > 0.0 && d.is_finite() => Ok(d),
        _ => Err("must be a positive number".into()),
    }
}

pub fn parse_branching(s: &str) -> Result<Branching, String> {
    let bins: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad bin count {t:?}")))
        .collect::<Result<_, _>>()?;
    if bins.iter().any(|&b| b < 2) {
        return Err("every bin count must be at least 2".into());
    }
    Ok(match bins.as_slice() {
        [b] => Branching::Uniform(*b),
        _ => Branching::PerLevel(bins),
    })
}

fn parse_endpoint(s: &str) -> Result<f64, String> {
    match s.trim() {
        "-inf" => Ok(f64::NEG_INFINITY),
        "inf" | "+inf" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|_| format!("bad bound {t:?}")),
    }
}

pub fn parse_bounds(s: &str) -> Result<Vec<(f64, f64)>, String> {
    s.split(',')
        .map(|pair| {
            let (lo, hi) = pair
                .split_once(':')
                .ok_or_else(|| format!("bound {pair:?} is not lo:hi"))?;
            let (lo, hi) = (parse_endpoint(lo)?, parse_endpoint(hi)?);
            if lo >= hi {
                return Err(format!("bound {pair:?} is empty"));
            }
            Ok((lo, hi))
        })
        .collect()
}
