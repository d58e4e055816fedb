//! `tagtrace` command-line tool.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tagtrace::recommend::RecMode;
use tagtrace::{Dimension, Population, SimilarityMode};

#[derive(Debug, Parser)]
#[command(name = "tagtrace", version = concat!(env!("CARGO_PKG_VERSION"), " (", env!("CARGO_PKG_NAME"), ")"))]
#[command(about = "Content-reuse, interest-sharing and recommendation analytics for tagging traces")]
pub struct Cli {
    /// Cap on worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a trace and report what was accepted and rejected.
    Validate(InputArgs),
    /// Daily item/tag/user reuse series and their summaries.
    Reuse(ReuseArgs),
    /// Pairwise interest sharing, its summary and CDF.
    Similarity(SimilarityArgs),
    /// Interest sharing per time window.
    Windows(WindowsArgs),
    /// Thresholded interest-sharing graph and its topology.
    Graph(GraphArgs),
    /// Neighbour-based recommendation success rate under a temporal split.
    Recommend(RecommendArgs),
    /// Generate a synthetic trace.
    Synth(SynthArgs),
    /// Run every analysis with defaults and bundle the summaries.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Trace file, `-` for standard input.
    #[arg(long, short, default_value = "-")]
    pub input: PathBuf,

    /// `canonical-tsv` or `citeulike-pipe`.
    #[arg(long, default_value = "canonical-tsv")]
    pub format: String,

    /// Column order for `citeulike-pipe`, e.g. `item,user,timestamp,tag`.
    #[arg(long)]
    pub pipe_columns: Option<String>,

    /// Output directory.
    #[arg(long, short, env = "TAGTRACE_OUT", default_value = "tagtrace-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DimensionArg {
    Item,
    Tag,
    User,
    All,
}

impl DimensionArg {
    pub fn dimensions(self) -> Vec<Dimension> {
        match self {
            DimensionArg::Item => vec![Dimension::Item],
            DimensionArg::Tag => vec![Dimension::Tag],
            DimensionArg::User => vec![Dimension::User],
            DimensionArg::All => Dimension::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    UserItem,
    UserTag,
    Both,
}

impl ModeArg {
    pub fn modes(self) -> Vec<SimilarityMode> {
        match self {
            ModeArg::UserItem => vec![SimilarityMode::UserItem],
            ModeArg::UserTag => vec![SimilarityMode::UserTag],
            ModeArg::Both => vec![SimilarityMode::UserItem, SimilarityMode::UserTag],
        }
    }
}

fn parse_mode(s: &str) -> Result<SimilarityMode, String> {
    s.parse().map_err(|e: tagtrace::Error| e.to_string())
}

fn parse_population(s: &str) -> Result<Population, String> {
    s.parse().map_err(|e: tagtrace::Error| e.to_string())
}

fn parse_rec_mode(s: &str) -> Result<RecMode, String> {
    s.parse().map_err(|e: tagtrace::Error| e.to_string())
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("{v} must be a positive number")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        Ok(v) => Err(format!("{v} is not in (0, 1)")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_probability(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        Ok(v) => Err(format!("{v} is not a probability")),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Args)]
pub struct ReuseArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_enum, default_value = "all")]
    pub dimension: DimensionArg,

    /// Count distinct entities per day instead of assignments.
    #[arg(long)]
    pub distinct: bool,
}

#[derive(Debug, Args)]
pub struct SimilarityArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_enum, default_value = "both")]
    pub mode: ModeArg,

    /// `nonzero` (pairs sharing something) or `all` (every user pair).
    #[arg(long, value_parser = parse_population, default_value = "nonzero")]
    pub population: Population,

    /// CDF grid resolution; 0 emits only the distinct weights.
    #[arg(long, default_value_t = 1000)]
    pub grid: usize,

    /// Fail if more pairs than this would be stored.
    #[arg(long)]
    pub max_pairs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct WindowsArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_enum, default_value = "both")]
    pub mode: ModeArg,

    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..))]
    pub window_days: u32,

    /// Profiles accumulate from the start of the trace.
    #[arg(long)]
    pub cumulative: bool,

    #[arg(long)]
    pub max_pairs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_parser = parse_mode, default_value = "user-item")]
    pub mode: SimilarityMode,

    /// Keep edges with weight >= threshold [default: 0.05 user-item, 0.03 user-tag].
    #[arg(long, value_parser = parse_positive, conflicts_with = "knee")]
    pub threshold: Option<f64>,

    /// Pick the threshold at the knee of the nonzero-weight CDF.
    #[arg(long)]
    pub knee: bool,

    #[arg(long)]
    pub max_pairs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Cutoff as epoch seconds or ISO-8601.
    #[arg(long, conflicts_with = "train_fraction")]
    pub cutoff: Option<String>,

    /// Cutoff at this quantile of the events.
    #[arg(long, value_parser = parse_fraction)]
    pub train_fraction: Option<f64>,

    /// Neighbours per user.
    #[arg(short, long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,

    /// Recommendation list length.
    #[arg(short, long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,

    /// What to recommend: `items` or `tags`.
    #[arg(long, value_parser = parse_rec_mode, default_value = "items")]
    pub target: RecMode,

    /// Similarity used to pick neighbours.
    #[arg(long, value_parser = parse_mode, default_value = "user-item")]
    pub similarity: SimilarityMode,

    /// Ignore neighbours below this weight.
    #[arg(long, value_parser = parse_positive)]
    pub min_weight: Option<f64>,

    /// Also write per-user outcomes.
    #[arg(long)]
    pub per_user: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub users: usize,
    #[arg(long, default_value_t = 30)]
    pub days: usize,
    #[arg(long, default_value_t = 500)]
    pub events_per_day: usize,
    #[arg(long, default_value_t = 0.2, value_parser = parse_probability)]
    pub item_reuse_p: f64,
    #[arg(long, default_value_t = 0.9, value_parser = parse_probability)]
    pub tag_reuse_p: f64,
    #[arg(long, default_value_t = 4)]
    pub communities: usize,
    #[arg(long, default_value_t = 200)]
    pub item_pool: usize,
    #[arg(long, default_value_t = 0.05, value_parser = parse_probability)]
    pub noise_p: f64,

    /// Write `trace.tsv` and `ground_truth.json` here instead of printing
    /// the trace.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_parser = parse_fraction, default_value_t = 0.8)]
    pub train_fraction: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            commands::report_error("usage", &e.to_string());
            return ExitCode::from(2);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_broken_pipe() => ExitCode::SUCCESS,
        Err(e) => {
            commands::report_error(e.kind(), &e.to_string());
            ExitCode::from(e.exit_code())
        }
    }
}
