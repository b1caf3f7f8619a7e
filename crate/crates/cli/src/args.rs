use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "bnrisk", version, about = "Bayesian-network risk analysis pipelines")]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Parse and check a model file.
    Validate(ValidateArgs),
    /// Learn CPTs from a dataset (EM when variables are latent).
    Fit(FitArgs),
    /// Rank variables by strength of influence on a target.
    Strength(StrengthArgs),
    /// Conditional probability of a target state for each source state.
    Profile(ProfileArgs),
    /// Best achievable posterior with k pieces of evidence, per pool.
    Multifactor(MultifactorArgs),
    /// Evidence combinations whose posterior clears a threshold.
    Profiles(ProfilesArgs),
    /// Spearman correlation between two strength rankings.
    Compare(CompareArgs),
    /// Sample a synthetic dataset.
    Simulate(SimulateArgs),
    /// Per-state counts and percentages of a dataset.
    Summarize(SummarizeArgs),
    /// Run a command again from its manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Fit(_) => "fit",
            Command::Strength(_) => "strength",
            Command::Profile(_) => "profile",
            Command::Multifactor(_) => "multifactor",
            Command::Profiles(_) => "profiles",
            Command::Compare(_) => "compare",
            Command::Simulate(_) => "simulate",
            Command::Summarize(_) => "summarize",
            Command::Replay(_) => "replay",
        }
    }

    pub fn output_mut(&mut self) -> Option<&mut OutputArgs> {
        Some(match self {
            Command::Validate(a) => &mut a.output,
            Command::Fit(a) => &mut a.output,
            Command::Strength(a) => &mut a.output,
            Command::Profile(a) => &mut a.output,
            Command::Multifactor(a) => &mut a.output,
            Command::Profiles(a) => &mut a.output,
            Command::Compare(a) => &mut a.output,
            Command::Simulate(a) => &mut a.output,
            Command::Summarize(a) => &mut a.output,
            Command::Replay(_) => return None,
        })
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    /// Directory for outputs and the run manifest.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct StructureArgs {
    /// Variable declarations (JSON model layout; CPTs ignored). Defaults to
    /// the built-in survey schema.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Edges as JSON (`{"edges": [["A", "B"], ...]}` or a model file).
    /// Defaults to the schema file's edges, or the built-in DAG.
    #[arg(long)]
    pub dag: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PriorArgs {
    /// Prior mean of P(Previous_CB_Offending = Yes).
    #[arg(long, default_value_t = 0.1)]
    pub prior_p: f64,
    /// Equivalent sample size of the Dirichlet prior.
    #[arg(long, default_value_t = 2.0)]
    pub ess: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterActionArg {
    Drop,
    Blank,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FilterArgs {
    /// Treat game answers faster than this (ms) as unreliable.
    #[arg(long)]
    pub min_response_ms: Option<u64>,
    /// Treat players who did not report honest play as unreliable.
    #[arg(long)]
    pub require_honesty: bool,
    /// What to do with unreliable answers.
    #[arg(long, value_enum, default_value = "drop")]
    pub filter_action: FilterActionArg,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub structure: StructureArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub filters: FilterArgs,
    /// Variables to treat as unobserved; switches to EM. Any data column of
    /// a latent variable is ignored.
    #[arg(long, value_delimiter = ',')]
    pub latent: Vec<String>,
    /// EM restart seed (generated and recorded if absent).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricArg {
    WeightedJs,
    PairwiseMax,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct StrengthArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = bnrisk::data::OUTCOME)]
    pub target: String,
    /// Variable expected to be irrelevant; defaults to A1Q1_PhotoSharing
    /// when the model has it.
    #[arg(long)]
    pub control: Option<String>,
    /// Variables to score (default: every other variable).
    #[arg(long, value_delimiter = ',')]
    pub candidates: Vec<String>,
    #[arg(long, value_enum, default_value = "weighted-js")]
    pub metric: MetricArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ProfileArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = bnrisk::data::OUTCOME)]
    pub target: String,
    #[arg(long, default_value = bnrisk::data::YES)]
    pub state: String,
    #[arg(long)]
    pub source: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MultifactorArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = bnrisk::data::OUTCOME)]
    pub target: String,
    #[arg(long, default_value = bnrisk::data::YES)]
    pub state: String,
    #[arg(long, default_value_t = 1)]
    pub k_min: usize,
    /// Largest evidence size; clipped to each pool's size.
    #[arg(long, default_value_t = 5)]
    pub k_max: usize,
    /// Game pool (default: game-answer variables).
    #[arg(long, value_delimiter = ',')]
    pub game_pool: Vec<String>,
    /// Profiling pool (default: demographic, psychological and other
    /// outcome variables).
    #[arg(long, value_delimiter = ',')]
    pub profiling_pool: Vec<String>,
    /// Prior used for the Bayes-factor threshold lines.
    #[arg(long, default_value_t = 0.1)]
    pub prior_p: f64,
    #[arg(long, default_value = "1e8", value_parser = parse_count)]
    pub max_evals: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ProfilesArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = bnrisk::data::OUTCOME)]
    pub target: String,
    #[arg(long, default_value = bnrisk::data::YES)]
    pub state: String,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Posterior threshold (default: the substantial Bayes-factor posterior
    /// for `--prior-p`).
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub prior_p: f64,
    /// Candidate pool (default: the profiling pool).
    #[arg(long, value_delimiter = ',')]
    pub pool: Vec<String>,
    #[arg(long, default_value = "1e8", value_parser = parse_count)]
    pub max_evals: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    /// First strength CSV.
    pub a: PathBuf,
    /// Second strength CSV.
    pub b: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    /// Sampling seed (generated and recorded if absent).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sample from this model instead of the built-in generator (no
    /// response-time or honesty columns).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// A `<command>.manifest.json` written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Accepts plain integers and integral scientific notation such as `1e8`.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 => Ok(x as u64),
        _ => Err(format!("`{s}` is not a non-negative whole number")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("1e8"), Ok(100_000_000));
        assert_eq!(parse_count("250"), Ok(250));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cli = Cli::try_parse_from(["bnrisk", "simulate", "--n", "10", "--seed", "4", "--out", "x"]).unwrap();
        let value = serde_json::to_value(&cli.command).unwrap();
        let back: Command = serde_json::from_value(value).unwrap();
        match back {
            Command::Simulate(a) => {
                assert_eq!((a.n, a.seed), (10, Some(4)));
                assert_eq!(a.output.out, PathBuf::from("x"));
            }
            other => panic!("{other:?}"),
        }
    }
}
