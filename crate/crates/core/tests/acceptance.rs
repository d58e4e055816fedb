//! Acceptance suite. Runs every criterion in order and prints one
//! `[PASS]` / `[FAIL]` / `[SKIP]` line each; exits nonzero if any fails.
//!
//! The historical CiteULike check only runs when `TAGTRACE_CITEULIKE_DUMP`
//! points at a dump (format via `TAGTRACE_CITEULIKE_FORMAT`, default
//! `citeulike-pipe`; column order via `TAGTRACE_CITEULIKE_COLUMNS`).

mod common;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tagtrace::graph::{build_graph, knee_threshold, rand_index, InterestGraph};
use tagtrace::recommend::{self, EvalParams, RecMode, Recommender};
use tagtrace::reuse::{daily_series, ReuseSeries};
use tagtrace::similarity::{cdf, cdf_at, summary, Population};
use tagtrace::synth::{self, CopycatConfig, GenConfig};
use tagtrace::{all_pairs, classify, parse_trace, Dimension, Format, PipeLayout, Profiles, SimilarityMode, UserId};

const SWEEP_TRACES: u64 = 50;
const SWEEP_MAX_USERS: usize = 500;
const SWEEP_MAX_EVENTS: usize = 20_000;
const WEIGHT_TOLERANCE: f64 = 1e-12;
const SWEEP_BUDGET: Duration = Duration::from_secs(60);
const RAND_INDEX_TARGET: f64 = 0.9;
const GRAPH_SWEEP: u64 = 50;
const GRAPH_MAX_NODES: usize = 300;
const COPYCAT_TARGET: f64 = 0.9;
const SCALE_ASSIGNMENTS: usize = 3_342_694;
const SCALE_USERS: usize = 21_980;
const SCALE_TIME_BUDGET: Duration = Duration::from_secs(600);
const SCALE_MEMORY_BUDGET_KB: u64 = 8 * 1024 * 1024;
const PAPER_TOLERANCE: f64 = 0.10;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn similarity_oracle_equivalence() -> Check {
    let started = Instant::now();
    let mut pairs = 0usize;
    for i in 0..SWEEP_TRACES {
        let t = sweep_trace(i, SWEEP_MAX_USERS, SWEEP_MAX_EVENTS);
        ensure(t.num_users() <= SWEEP_MAX_USERS && t.len() <= SWEEP_MAX_EVENTS, || format!("trace {i} too large"))?;
        let profiles = Profiles::build(&t);
        for mode in [SimilarityMode::UserItem, SimilarityMode::UserTag] {
            let sim = all_pairs(&profiles, mode).map_err(|e| e.to_string())?;
            let brute = brute_all_pairs(&t, t.assignments(), mode);
            ensure(sim.len() == brute.len(), || format!("trace {i} {mode:?}: {} vs {} pairs", sim.len(), brute.len()))?;
            for e in sim.entries() {
                let expected = brute
                    .get(&(e.a.0, e.b.0))
                    .ok_or_else(|| format!("trace {i} {mode:?}: spurious pair {:?}", (e.a, e.b)))?;
                let w: f64 = e.weight();
                ensure((w - expected).abs() <= WEIGHT_TOLERANCE, || format!("trace {i}: weight {w} vs {expected}"))?;
            }
            pairs += sim.len();
        }
    }
    let elapsed = started.elapsed();
    ensure(elapsed < SWEEP_BUDGET, || format!("sweep took {elapsed:?}"))?;
    Ok(format!("{SWEEP_TRACES} traces, {pairs} nonzero pairs identical, {elapsed:.1?}"))
}

fn reuse_classifier_equivalence() -> Check {
    let mut events = 0usize;
    for i in 0..SWEEP_TRACES {
        let t = sweep_trace(i, SWEEP_MAX_USERS, SWEEP_MAX_EVENTS);
        let flags: Vec<[bool; 3]> = classify(&t).map(|c| [c.item_new, c.tag_new, c.user_new]).collect();
        ensure(flags == oracle_flags(&t), || format!("trace {i}: flags differ from two-pass oracle"))?;
        for dim in Dimension::ALL {
            let new = flags.iter().filter(|f| f[dim_index(dim)]).count();
            ensure(new == t.cardinality(dim), || format!("trace {i} {dim:?}: {new} new vs {}", t.cardinality(dim)))?;
            let series: ReuseSeries<f64> = daily_series(classify(&t), dim);
            let summed: u64 = series.records.iter().map(|r| r.new_count).sum();
            ensure(summed as usize == t.cardinality(dim), || format!("trace {i} {dim:?}: daily new sum {summed}"))?;
        }
        events += t.len();
    }
    Ok(format!("{SWEEP_TRACES} traces, {events} events, exact flag equality"))
}

fn planted_community_recovery() -> Check {
    let cfg = GenConfig {
        seed: 4,
        users: 200,
        communities: 4,
        noise_p: 0.05,
        days: 25,
        events_per_day: 2000,
        item_reuse_p: 0.5,
        tag_reuse_p: 0.9,
        intra_community_item_pool: 200,
        ..Default::default()
    };
    let run = || -> Result<(f64, f64, f64), String> {
        let (t, truth) = synth::generate(&cfg).map_err(|e| e.to_string())?;
        let sim = all_pairs(&Profiles::build(&t), SimilarityMode::UserItem).map_err(|e| e.to_string())?;
        let points = cdf::<f64>(&sim, Population::Nonzero, 200).map_err(|e| e.to_string())?;
        let knee = knee_threshold(&points).ok_or("degenerate cdf")?;
        let planted = truth.labels(&t);
        let mut best = (0.0, knee);
        for step in 1..=32 {
            let threshold = knee * step as f64 / 8.0;
            let g = build_graph(&sim, t.num_users(), threshold).map_err(|e| e.to_string())?;
            let ri = rand_index(&g.component_labels(), &planted);
            if ri > best.0 {
                best = (ri, threshold);
            }
        }
        Ok((best.0, best.1, knee))
    };
    let (ri, threshold, knee) = run()?;
    ensure(run()? == (ri, threshold, knee), || "not deterministic per seed".into())?;
    ensure(ri >= RAND_INDEX_TARGET, || format!("best Rand index {ri:.4} at threshold {threshold:.4}"))?;
    Ok(format!("Rand index {ri:.4} at threshold {threshold:.4} (knee {knee:.4})"))
}

fn graph_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2007);
    let mut triangles = 0u64;
    for i in 0..GRAPH_SWEEP {
        let (n, edges) = random_graph(&mut rng, GRAPH_MAX_NODES);
        let g = InterestGraph::<f64>::from_weighted_edges(
            n,
            edges.iter().map(|&(a, b)| (UserId(a), UserId(b), 1.0)),
            1.0,
            SimilarityMode::UserItem,
        )
        .map_err(|e| e.to_string())?;
        let expected = brute_triangles(n, &edges);
        ensure(g.triangles_per_node() == expected, || format!("graph {i}: triangle counts differ"))?;
        let report = g.topology();
        ensure(report.component_sizes() == brute_component_sizes(n, &edges), || format!("graph {i}: components differ"))?;
        ensure(report.triangles * 3 == expected.iter().sum::<u64>(), || format!("graph {i}: triangle total"))?;
        triangles += report.triangles;
    }
    Ok(format!("{GRAPH_SWEEP} graphs, {triangles} triangles, exact"))
}

fn generator_statistics() -> Check {
    let cfg = GenConfig { seed: 2000, users: 500, days: 30, events_per_day: 2000, item_reuse_p: 0.5, ..Default::default() };
    let (t, _) = synth::generate(&cfg).map_err(|e| e.to_string())?;
    let series: ReuseSeries<f64> = daily_series(classify(&t), Dimension::Item);
    let mean = series.summarize().map_err(|e| e.to_string())?.mean_pct;
    // standard error of the mean of `days` daily binomial percentages
    let p = cfg.item_reuse_p;
    let se = 100.0 * (p * (1.0 - p) / cfg.events_per_day as f64).sqrt() / (cfg.days as f64).sqrt();
    let z = (mean - 100.0 * p) / se;
    ensure(z.abs() <= 3.0, || format!("mean reused {mean:.4}% is {z:.2} standard errors from 50%"))?;
    Ok(format!("mean reused {mean:.4}% ({z:+.2} SE)"))
}

fn recommender_oracle() -> Check {
    let mut lists = 0;
    for seed in 0..5 {
        let cfg = GenConfig { seed, users: 100, days: 20, events_per_day: 150, item_reuse_p: 0.4, ..Default::default() };
        let (t, _) = synth::generate(&cfg).map_err(|e| e.to_string())?;
        let cutoff = recommend::cutoff_at_fraction(&t, 0.8).map_err(|e| e.to_string())?;
        let split = recommend::split(&t, cutoff).map_err(|e| e.to_string())?;
        let rec: Recommender<f64> = Recommender::train(&split, SimilarityMode::UserItem).map_err(|e| e.to_string())?;
        for p in rec.profiles().iter() {
            for (mode, items, dim) in [(RecMode::Items, true, Dimension::Item), (RecMode::Tags, false, Dimension::Tag)] {
                let got = rec.recommend(p.user, 5, 10, mode).map_err(|e| e.to_string())?;
                let want = brute_recommend(&t, split.train(), p.user.0, 5, 10, SimilarityMode::UserItem, items);
                let same = got.ranked.len() == want.len()
                    && got
                        .ranked
                        .iter()
                        .zip(&want)
                        .all(|(&(e, s), (name, score))| t.entity_name(dim, e) == name && (s - score).abs() < WEIGHT_TOLERANCE);
                ensure(same, || format!("seed {seed} user {}: ranked list differs", t.user_name(p.user)))?;
                lists += 1;
            }
        }
        let a = recommend::evaluate::<f64>(&split, EvalParams::default()).map_err(|e| e.to_string())?;
        let b = recommend::evaluate::<f64>(&split, EvalParams::default()).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("seed {seed}: evaluation not deterministic"))?;
    }

    let (t, cutoff) = synth::generate_copycat(&CopycatConfig::default()).map_err(|e| e.to_string())?;
    let split = recommend::split(&t, cutoff).map_err(|e| e.to_string())?;
    let params = EvalParams { k: 1, n: 10, ..EvalParams::default() };
    let report = recommend::evaluate::<f64>(&split, params).map_err(|e| e.to_string())?;
    ensure(report.success_rate >= COPYCAT_TARGET, || format!("copy-cat success rate {}", report.success_rate))?;
    Ok(format!(
        "{lists} ranked lists equal exhaustive scoring; copy-cat success {:.3} over {} users",
        report.success_rate, report.users_evaluated
    ))
}

fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn scale_target() -> Check {
    let days = 1000;
    let cfg = GenConfig {
        seed: 2008,
        users: SCALE_USERS,
        days,
        events_per_day: SCALE_ASSIGNMENTS.div_ceil(days),
        item_reuse_p: 0.18,
        tag_reuse_p: 0.9,
        communities: 100,
        intra_community_item_pool: 500,
        noise_p: 0.05,
        ..Default::default()
    };
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("scale.tsv");
    {
        let (t, _) = synth::generate(&cfg).map_err(|e| e.to_string())?;
        t.write_canonical_tsv(BufWriter::new(File::create(&path).map_err(|e| e.to_string())?))
            .map_err(|e| e.to_string())?;
    }

    let started = Instant::now();
    let file = File::open(&path).map_err(|e| e.to_string())?;
    let (t, _) = parse_trace(BufReader::new(file), &Format::CanonicalTsv).map_err(|e| e.to_string())?;
    let classified: Vec<_> = classify(&t).collect();
    for dim in Dimension::ALL {
        let series: ReuseSeries<f64> = daily_series(classified.iter().copied(), dim);
        series.summarize().map_err(|e| e.to_string())?;
    }
    drop(classified);
    let profiles = Profiles::build(&t);
    let mut edges = Vec::new();
    for mode in [SimilarityMode::UserItem, SimilarityMode::UserTag] {
        let sim = all_pairs(&profiles, mode).map_err(|e| e.to_string())?;
        summary::<f64>(&sim, Population::Nonzero).map_err(|e| e.to_string())?;
        summary::<f64>(&sim, Population::All).map_err(|e| e.to_string())?;
        cdf::<f64>(&sim, Population::Nonzero, 1000).map_err(|e| e.to_string())?;
        let threshold = tagtrace::graph::default_threshold(mode);
        let g = build_graph(&sim, t.num_users(), threshold).map_err(|e| e.to_string())?;
        g.topology();
        edges.push((sim.len(), g.edge_count()));
    }
    let elapsed = started.elapsed();
    let peak = peak_rss_kb();

    ensure(t.len() >= SCALE_ASSIGNMENTS && t.num_users() >= SCALE_USERS - 10, || {
        format!("trace too small: {} assignments, {} users", t.len(), t.num_users())
    })?;
    ensure(elapsed < SCALE_TIME_BUDGET, || format!("pipeline took {elapsed:?}"))?;
    let peak = peak.ok_or("peak memory unavailable (no /proc/self/status)")?;
    ensure(peak < SCALE_MEMORY_BUDGET_KB, || format!("peak RSS {} MiB", peak / 1024))?;
    Ok(format!(
        "{} assignments / {} users in {elapsed:.1?}, peak RSS {} MiB, pairs (item, tag) = ({}, {})",
        t.len(),
        t.num_users(),
        peak / 1024,
        edges[0].0,
        edges[1].0
    ))
}

fn within(actual: f64, expected: f64) -> bool {
    (actual - expected).abs() <= PAPER_TOLERANCE * expected.abs()
}

/// `None` when no dump is configured.
fn citeulike_reproduction() -> Option<Check> {
    let path = std::env::var_os("TAGTRACE_CITEULIKE_DUMP")?;
    Some((|| {
        let format = match std::env::var("TAGTRACE_CITEULIKE_FORMAT").as_deref() {
            Ok("canonical-tsv") => Format::CanonicalTsv,
            _ => {
                let layout = match std::env::var("TAGTRACE_CITEULIKE_COLUMNS") {
                    Ok(cols) => cols.parse::<PipeLayout>().map_err(|e| e.to_string())?,
                    Err(_) => PipeLayout::default(),
                };
                Format::CiteulikePipe(layout)
            }
        };
        let file = File::open(&path).map_err(|e| e.to_string())?;
        let (t, _) = parse_trace(BufReader::new(file), &format).map_err(|e| e.to_string())?;
        let classified: Vec<_> = classify(&t).collect();
        let item = daily_series::<f64, _>(classified.iter().copied(), Dimension::Item).summarize().map_err(|e| e.to_string())?;
        let tag = daily_series::<f64, _>(classified.iter().copied(), Dimension::Tag).summarize().map_err(|e| e.to_string())?;
        let profiles = Profiles::build(&t);
        let items = all_pairs(&profiles, SimilarityMode::UserItem).map_err(|e| e.to_string())?;
        let tags = all_pairs(&profiles, SimilarityMode::UserTag).map_err(|e| e.to_string())?;
        let s = summary::<f64>(&items, Population::Nonzero).map_err(|e| e.to_string())?;
        let cdf_item = cdf_at(&cdf::<f64>(&items, Population::Nonzero, 1000).map_err(|e| e.to_string())?, 0.05);
        let cdf_tag = cdf_at(&cdf::<f64>(&tags, Population::Nonzero, 1000).map_err(|e| e.to_string())?, 0.03);

        let checks = [
            ("item mean %", item.mean_pct, within(item.mean_pct, 18.43)),
            ("item median %", item.median_pct, within(item.median_pct, 16.12)),
            ("tag mean %", tag.mean_pct, within(tag.mean_pct, 89.92)),
            ("user-item mean", s.mean, within(s.mean, 0.076119)),
            ("user-item median", s.median, within(s.median, 0.023256)),
            ("CDF item(0.05)", cdf_item, cdf_item >= 0.85 * (1.0 - PAPER_TOLERANCE)),
            ("CDF tag(0.03)", cdf_tag, within(cdf_tag, 0.75)),
        ];
        let detail: Vec<String> = checks.iter().map(|(n, v, ok)| format!("{n}={v:.5}{}", if *ok { "" } else { "(!)" })).collect();
        let detail = detail.join(", ");
        ensure(checks.iter().all(|c| c.2), || detail.clone())?;
        Ok(detail)
    })())
}

type Criterion = (&'static str, Box<dyn Fn() -> Option<Check>>);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("similarity oracle equivalence", Box::new(|| Some(similarity_oracle_equivalence()))),
        ("reuse classifier equivalence", Box::new(|| Some(reuse_classifier_equivalence()))),
        ("planted-community recovery", Box::new(|| Some(planted_community_recovery()))),
        ("graph oracle", Box::new(|| Some(graph_oracle()))),
        ("generator statistical check", Box::new(|| Some(generator_statistics()))),
        ("recommender determinism and oracle", Box::new(|| Some(recommender_oracle()))),
        ("scale target", Box::new(|| Some(scale_target()))),
        ("historical CiteULike reproduction", Box::new(citeulike_reproduction)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();

    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Some(Err(format!("panicked: {}", msg.unwrap_or_default())))
        });
        match outcome {
            Some(Ok(detail)) => println!("[PASS] {name}: {detail}"),
            Some(Err(detail)) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
            None => println!("[SKIP] {name}: TAGTRACE_CITEULIKE_DUMP not set"),
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
