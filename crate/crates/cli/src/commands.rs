use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};

use serde::Serialize;
use serde_json::{json, Value};
use tagtrace::graph::{self, build_graph, knee_threshold};
use tagtrace::ingest::{self, parse_timestamp};
use tagtrace::recommend::{self, EvalParams};
use tagtrace::reuse::{daily_series, daily_series_distinct, ReuseSeries};
use tagtrace::similarity::{self, all_pairs_with, cdf, summary, AllPairsOptions, WindowOptions};
use tagtrace::synth::{self, GenConfig};
use tagtrace::{classify, Dimension, Format, PipeLayout, Population, Profiles, Real, SimilarityMode, Trace, ValidationReport};
use thiserror::Error;

use crate::output::OutputDir;
use crate::{Cli, Command, GraphArgs, InputArgs, RecommendArgs, ReportArgs, ReuseArgs, SimilarityArgs, SynthArgs, WindowsArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] tagtrace::Error),
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(e) => e.kind(),
        }
    }

    /// Downstream closed the pipe early (`| head`); not worth reporting.
    pub fn is_broken_pipe(&self) -> bool {
        matches!(self, CliError::Data(tagtrace::Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe)
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

type Result<T, E = CliError> = std::result::Result<T, E>;

/// One JSON object per error on stderr.
pub fn report_error(kind: &str, message: &str) {
    let line = json!({ "error": kind, "message": message.trim_end() });
    eprintln!("{line}");
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Validate(args) => validate(&args),
        Command::Reuse(args) => reuse(&args),
        Command::Similarity(args) => similarity(&args),
        Command::Windows(args) => windows(&args),
        Command::Graph(args) => graph_cmd(&args),
        Command::Recommend(args) => recommend_cmd(&args),
        Command::Synth(args) => synth_cmd(&args),
        Command::Report(args) => report(&args),
    }
}

fn format_of(args: &InputArgs) -> Result<Format> {
    let format: Format = args.format.parse().map_err(|e: tagtrace::Error| CliError::Usage(e.to_string()))?;
    match (format, &args.pipe_columns) {
        (Format::CiteulikePipe(_), Some(cols)) => {
            let layout: PipeLayout = cols.parse().map_err(|e: tagtrace::Error| CliError::Usage(e.to_string()))?;
            Ok(Format::CiteulikePipe(layout))
        }
        (Format::CanonicalTsv, Some(_)) => Err(CliError::Usage("--pipe-columns requires --format citeulike-pipe".into())),
        (format, None) => Ok(format),
    }
}

fn load(args: &InputArgs) -> Result<(Trace, ValidationReport)> {
    let format = format_of(args)?;
    let parsed = if args.input.as_os_str() == "-" {
        ingest::parse_trace(io::stdin().lock(), &format)
    } else {
        ingest::parse_trace(BufReader::new(File::open(&args.input)?), &format)
    };
    Ok(parsed?)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value).map_err(tagtrace::Error::from)?)
}

fn write_json<T: Serialize>(out: &OutputDir, name: &str, value: &T) -> Result<()> {
    let text = to_json(value)?;
    out.write(name, |w| -> Result<()> { Ok(writeln!(w, "{text}")?) })?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = to_json(value)?;
    writeln!(io::stdout().lock(), "{text}")?;
    Ok(())
}

fn validate(args: &InputArgs) -> Result<()> {
    let (_, report) = load(args)?;
    let out = OutputDir::create(&args.out)?;
    write_json(&out, "validation.json", &report)?;
    print_json(&report)
}

fn reuse_series(trace: &Trace, dim: Dimension, distinct: bool) -> ReuseSeries<Real> {
    if distinct {
        daily_series_distinct(trace, dim)
    } else {
        daily_series(classify(trace), dim)
    }
}

fn reuse(args: &ReuseArgs) -> Result<()> {
    let (trace, _) = load(&args.input)?;
    let out = OutputDir::create(&args.input.out)?;
    let mut summaries = Vec::new();
    for dim in args.dimension.dimensions() {
        let series = reuse_series(&trace, dim, args.distinct);
        out.write(&format!("reuse_{}.csv", dim.as_str()), |w| series.write_csv(w))?;
        summaries.push(series.summarize()?);
    }
    write_json(&out, "reuse_summary.json", &summaries)?;

    let mut stdout = io::stdout().lock();
    for s in &summaries {
        let label = match s.dimension {
            Dimension::Item => "Reused items",
            Dimension::Tag => "Reused tags",
            Dimension::User => "Existent users activity",
        };
        writeln!(stdout, "{label}\tAverage\t{:.2} ({:.2}%)", s.mean_abs, s.mean_pct)?;
        writeln!(stdout, "{label}\tS.Deviation\t{:.2} ({:.2}%)", s.sd_abs, s.sd_pct)?;
        writeln!(stdout, "{label}\tMedian\t{:.2} ({:.2}%)", s.median_abs, s.median_pct)?;
    }
    Ok(())
}

fn similarity(args: &SimilarityArgs) -> Result<()> {
    let (trace, _) = load(&args.input)?;
    let out = OutputDir::create(&args.input.out)?;
    let profiles = Profiles::build(&trace);
    let mut summaries = Vec::new();
    for mode in args.mode.modes() {
        let sim = all_pairs_with(&profiles, mode, AllPairsOptions { max_pairs: args.max_pairs })?;
        out.write(&format!("pairs_{}.csv", mode.as_str()), |w| sim.write_csv(&trace, w))?;
        let points = cdf::<Real>(&sim, args.population, args.grid)?;
        out.write(&format!("cdf_{}.csv", mode.as_str()), |w| similarity::write_cdf_csv(&points, w))?;
        summaries.push(summary::<Real>(&sim, args.population)?);
    }
    write_json(&out, "similarity_summary.json", &summaries)?;
    print_json(&summaries)
}

fn windows(args: &WindowsArgs) -> Result<()> {
    let (trace, _) = load(&args.input)?;
    let out = OutputDir::create(&args.input.out)?;
    let opts = WindowOptions { window_days: args.window_days, cumulative: args.cumulative, max_pairs: args.max_pairs };
    let mut counts = Vec::new();
    for mode in args.mode.modes() {
        let stats = similarity::windowed::<Real>(&trace, mode, opts)?;
        out.write(&format!("windows_{}.csv", mode.as_str()), |w| similarity::write_windows_csv(&stats, w))?;
        counts.push(json!({ "mode": mode, "windows": stats.len() }));
    }
    print_json(&counts)
}

fn topology_for(
    trace: &Trace,
    profiles: &Profiles,
    mode: SimilarityMode,
    threshold: Option<f64>,
    knee: bool,
    max_pairs: Option<usize>,
    out: Option<&OutputDir>,
) -> Result<tagtrace::TopologyReport> {
    let sim = all_pairs_with(profiles, mode, AllPairsOptions { max_pairs })?;
    let threshold = if knee {
        let points = cdf::<Real>(&sim, Population::Nonzero, 1000)?;
        knee_threshold(&points).ok_or(tagtrace::Error::EmptyInput("no knee in a flat cdf"))?
    } else {
        threshold.unwrap_or_else(|| graph::default_threshold(mode))
    };
    let g = build_graph(&sim, trace.num_users(), threshold)?;
    if let Some(out) = out {
        out.write(&format!("edges_{}.csv", mode.as_str()), |w| g.write_edges_csv(trace, w))?;
        out.write(&format!("nodes_{}.csv", mode.as_str()), |w| g.write_nodes_csv(trace, w))?;
    }
    Ok(g.topology())
}

fn graph_cmd(args: &GraphArgs) -> Result<()> {
    let (trace, _) = load(&args.input)?;
    let out = OutputDir::create(&args.input.out)?;
    let profiles = Profiles::build(&trace);
    let report = topology_for(&trace, &profiles, args.mode, args.threshold, args.knee, args.max_pairs, Some(&out))?;
    write_json(&out, &format!("topology_{}.json", args.mode.as_str()), &report)?;
    print_json(&report)
}

fn recommend_cmd(args: &RecommendArgs) -> Result<()> {
    let (trace, _) = load(&args.input)?;
    let cutoff = match (&args.cutoff, args.train_fraction) {
        (Some(raw), _) => {
            parse_timestamp(raw).ok_or_else(|| CliError::Usage(format!("cannot parse cutoff `{raw}`")))?
        }
        (None, fraction) => recommend::cutoff_at_fraction(&trace, fraction.unwrap_or(0.8))?,
    };
    let split = recommend::split(&trace, cutoff)?;
    let params = EvalParams {
        k: args.k as usize,
        n: args.n as usize,
        mode: args.target,
        similarity: args.similarity,
        threshold: args.min_weight,
    };
    let (report, outcomes) = recommend::evaluate_detailed::<Real>(&split, params)?;
    let out = OutputDir::create(&args.input.out)?;
    write_json(&out, "eval.json", &report)?;
    if args.per_user {
        out.write("per_user.csv", |w| recommend::write_outcomes_csv(&trace, &outcomes, w))?;
    }
    print_json(&report)
}

fn synth_cmd(args: &SynthArgs) -> Result<()> {
    let cfg = GenConfig {
        seed: args.seed,
        users: args.users,
        days: args.days,
        events_per_day: args.events_per_day,
        item_reuse_p: args.item_reuse_p,
        tag_reuse_p: args.tag_reuse_p,
        communities: args.communities,
        intra_community_item_pool: args.item_pool,
        noise_p: args.noise_p,
        ..GenConfig::default()
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let (trace, truth) = synth::generate(&cfg)?;
    match &args.out {
        None => trace.write_canonical_tsv(BufWriter::new(io::stdout().lock()))?,
        Some(dir) => {
            let out = OutputDir::create(dir)?;
            out.write("trace.tsv", |w| trace.write_canonical_tsv(w))?;
            write_json(&out, "ground_truth.json", &truth)?;
        }
    }
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let (trace, validation) = load(&args.input)?;
    let out = OutputDir::create(&args.input.out)?;

    let classified: Vec<_> = classify(&trace).collect();
    let reuse = Dimension::ALL
        .iter()
        .map(|&dim| daily_series::<Real, _>(classified.iter().copied(), dim).summarize())
        .collect::<tagtrace::Result<Vec<_>>>()?;
    drop(classified);

    let profiles = Profiles::build(&trace);
    let mut sims = Vec::new();
    let mut topologies = Vec::new();
    for mode in [SimilarityMode::UserItem, SimilarityMode::UserTag] {
        match similarity::all_pairs(&profiles, mode) {
            Ok(sim) => {
                for population in [Population::Nonzero, Population::All] {
                    match summary::<Real>(&sim, population) {
                        Ok(s) => sims.push(serde_json::to_value(s).map_err(tagtrace::Error::from)?),
                        Err(e) => sims.push(error_value(&e, Some((mode, population)))),
                    }
                }
                let g = build_graph(&sim, trace.num_users(), graph::default_threshold(mode))?;
                topologies.push(serde_json::to_value(g.topology()).map_err(tagtrace::Error::from)?);
            }
            Err(e) => sims.push(error_value(&e, Some((mode, Population::Nonzero)))),
        }
    }

    let recommendation = recommend::cutoff_at_fraction(&trace, args.train_fraction)
        .and_then(|c| recommend::split(&trace, c))
        .and_then(|split| recommend::evaluate::<Real>(&split, EvalParams::default()));
    let recommendation = match recommendation {
        Ok(r) => serde_json::to_value(r).map_err(tagtrace::Error::from)?,
        Err(e) => error_value(&e, None),
    };

    let bundle = json!({
        "validation": validation,
        "reuse": reuse,
        "similarity": sims,
        "topology": topologies,
        "recommendation": recommendation,
    });
    write_json(&out, "report.json", &bundle)?;
    print_json(&bundle)
}

fn error_value(e: &tagtrace::Error, context: Option<(SimilarityMode, Population)>) -> Value {
    let mut v = json!({ "error": e.kind(), "message": e.to_string() });
    if let Some((mode, population)) = context {
        v["mode"] = json!(mode);
        v["population"] = json!(population);
    }
    v
}
