//! Brute-force oracles. They work from entity names and ordered sets and
//! never call into the code paths they check.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tagtrace::synth::{self, GenConfig};
use tagtrace::trace::SECONDS_PER_DAY;
use tagtrace::{Dimension, SimilarityMode, TagAssignment, Trace};

pub type Names = (String, String, String);

pub fn names(trace: &Trace, a: &TagAssignment) -> Names {
    (
        trace.user_name(a.user).to_owned(),
        trace.item_name(a.item).to_owned(),
        trace.tag_name(a.tag).to_owned(),
    )
}

/// Random records with repeated entities, timestamp ties and exact
/// duplicates, in arbitrary order.
pub fn random_records(rng: &mut ChaCha8Rng, max_users: usize, max_events: usize) -> Vec<(String, String, String, i64)> {
    let users = rng.gen_range(2..=max_users);
    let items = rng.gen_range(1..=users * 3);
    let tags = rng.gen_range(1..=50);
    let events = rng.gen_range(1..=max_events);
    let days = rng.gen_range(1..=60);
    let mut out: Vec<(String, String, String, i64)> = Vec::with_capacity(events);
    for _ in 0..events {
        let rec = (
            format!("user{}", rng.gen_range(0..users)),
            format!("item{}", rng.gen_range(0..items)),
            format!("tag{}", rng.gen_range(0..tags)),
            rng.gen_range(0..days * SECONDS_PER_DAY / 600) * 600,
        );
        if rng.gen_bool(0.02) && !out.is_empty() {
            let dup = out[rng.gen_range(0..out.len())].clone();
            out.push(dup);
        }
        out.push(rec);
    }
    out
}

pub fn trace_of(records: &[(String, String, String, i64)]) -> Trace {
    Trace::from_records(records.iter().map(|(u, i, t, s)| (u.as_str(), i.as_str(), t.as_str(), *s))).unwrap()
}

/// Trace number `i` of the randomized sweep: even entries come from the
/// generator, odd ones are unstructured random records.
pub fn sweep_trace(i: u64, max_users: usize, max_events: usize) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + i);
    if i.is_multiple_of(2) {
        let users = rng.gen_range(10..=max_users);
        let days = rng.gen_range(1..=40);
        let cfg = GenConfig {
            seed: rng.gen(),
            users,
            days,
            events_per_day: rng.gen_range(1..=max_events / days),
            item_reuse_p: rng.gen_range(0.0..1.0),
            tag_reuse_p: rng.gen_range(0.0..1.0),
            communities: rng.gen_range(1..=8.min(users)),
            intra_community_item_pool: rng.gen_range(1..300),
            noise_p: rng.gen_range(0.0..0.3),
            ..Default::default()
        };
        synth::generate(&cfg).unwrap().0
    } else {
        trace_of(&random_records(&mut rng, max_users, max_events))
    }
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct OracleProfile {
    pub items: BTreeSet<String>,
    pub tags: BTreeSet<String>,
    pub assignments: u64,
}

/// Two passes: count assignments per user, then collect sets.
pub fn oracle_profiles(trace: &Trace) -> BTreeMap<String, OracleProfile> {
    let mut out: BTreeMap<String, OracleProfile> = BTreeMap::new();
    for a in trace.assignments() {
        out.entry(trace.user_name(a.user).to_owned()).or_default().assignments += 1;
    }
    for a in trace.assignments() {
        let (u, i, t) = names(trace, a);
        let p = out.get_mut(&u).unwrap();
        p.items.insert(i);
        p.tags.insert(t);
    }
    out
}

/// First pass records each entity's first position, second pass flags it.
pub fn oracle_flags(trace: &Trace) -> Vec<[bool; 3]> {
    let mut first: [HashMap<String, usize>; 3] = Default::default();
    for (pos, a) in trace.assignments().iter().enumerate() {
        let (u, i, t) = names(trace, a);
        first[0].entry(i).or_insert(pos);
        first[1].entry(t).or_insert(pos);
        first[2].entry(u).or_insert(pos);
    }
    trace
        .assignments()
        .iter()
        .enumerate()
        .map(|(pos, a)| {
            let (u, i, t) = names(trace, a);
            [first[0][&i] == pos, first[1][&t] == pos, first[2][&u] == pos]
        })
        .collect()
}

pub fn dim_index(dim: Dimension) -> usize {
    match dim {
        Dimension::Item => 0,
        Dimension::Tag => 1,
        Dimension::User => 2,
    }
}

/// Per UTC day: (day number, total, new).
pub fn oracle_daily(trace: &Trace, dim: Dimension) -> Vec<(i64, u64, u64)> {
    let flags = oracle_flags(trace);
    let mut days: BTreeMap<i64, (u64, u64)> = BTreeMap::new();
    for (a, f) in trace.assignments().iter().zip(&flags) {
        let d = days.entry(a.timestamp.div_euclid(SECONDS_PER_DAY)).or_default();
        d.0 += 1;
        d.1 += f[dim_index(dim)] as u64;
    }
    days.into_iter().map(|(d, (t, n))| (d, t, n)).collect()
}

pub fn user_sets(trace: &Trace, assignments: &[TagAssignment], mode: SimilarityMode) -> BTreeMap<u32, BTreeSet<String>> {
    let mut sets: BTreeMap<u32, BTreeSet<String>> = BTreeMap::new();
    for a in assignments {
        let (_, i, t) = names(trace, a);
        sets.entry(a.user.0).or_default().insert(match mode {
            SimilarityMode::UserItem => i,
            SimilarityMode::UserTag => t,
        });
    }
    sets
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.union(b).count();
    inter as f64 / union as f64
}

/// Every user pair, double loop; only nonzero weights are kept.
pub fn brute_all_pairs(trace: &Trace, assignments: &[TagAssignment], mode: SimilarityMode) -> BTreeMap<(u32, u32), f64> {
    let sets = user_sets(trace, assignments, mode);
    let users: Vec<_> = sets.keys().copied().collect();
    let mut out = BTreeMap::new();
    for (x, &a) in users.iter().enumerate() {
        for &b in &users[x + 1..] {
            let w = jaccard(&sets[&a], &sets[&b]);
            if w > 0.0 {
                out.insert((a, b), w);
            }
        }
    }
    out
}

/// Triangles through each node by enumerating all vertex triples.
pub fn brute_triangles(n: usize, edges: &[(u32, u32)]) -> Vec<u64> {
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in edges {
        if a != b {
            adj[a as usize][b as usize] = true;
            adj[b as usize][a as usize] = true;
        }
    }
    let mut t = vec![0u64; n];
    for a in 0..n {
        for b in a + 1..n {
            if !adj[a][b] {
                continue;
            }
            for c in b + 1..n {
                if adj[a][c] && adj[b][c] {
                    t[a] += 1;
                    t[b] += 1;
                    t[c] += 1;
                }
            }
        }
    }
    t
}

/// Component sizes by breadth-first search, largest first.
pub fn brute_component_sizes(n: usize, edges: &[(u32, u32)]) -> Vec<u64> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a as usize].push(b as usize);
        adj[b as usize].push(a as usize);
    }
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> (usize, Vec<(u32, u32)>) {
    let n = rng.gen_range(1..=max_nodes);
    let p = rng.gen_range(0.0..0.15);
    let mut edges = Vec::new();
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    (n, edges)
}

/// Exhaustive re-scoring: weigh every other training user, keep the top `k`
/// nonzero ones, score every entity of the training universe.
pub fn brute_recommend(
    trace: &Trace,
    train: &[TagAssignment],
    user: u32,
    k: usize,
    n: usize,
    sim_mode: SimilarityMode,
    items: bool,
) -> Vec<(String, f64)> {
    let sim_sets = user_sets(trace, train, sim_mode);
    let rec_mode = if items { SimilarityMode::UserItem } else { SimilarityMode::UserTag };
    let rec_sets = user_sets(trace, train, rec_mode);
    let me = &sim_sets[&user];
    let mut neighbors: Vec<(u32, f64)> = sim_sets
        .iter()
        .filter(|(&v, _)| v != user)
        .map(|(&v, s)| (v, jaccard(me, s)))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    neighbors.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    neighbors.truncate(k);

    let universe: BTreeSet<&String> = rec_sets.values().flatten().collect();
    let mut scored: Vec<(String, f64)> = Vec::new();
    for e in universe {
        if rec_sets[&user].contains(e) {
            continue;
        }
        let mut score = 0.0;
        let mut any = false;
        for (v, w) in &neighbors {
            if rec_sets[v].contains(e) {
                score += w;
                any = true;
            }
        }
        if any {
            scored.push((e.clone(), score));
        }
    }
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(n);
    scored
}
