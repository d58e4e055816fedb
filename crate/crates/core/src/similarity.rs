//! Pairwise interest sharing: the Jaccard ratio of two users' item sets
//! (user-item) or tag vocabularies (user-tag).
//!
//! [`all_pairs`] only ever touches pairs that share at least one entity. It
//! walks an inverted index (entity → users holding it), so its cost is the
//! sum over entities of the squared posting-list length rather than the
//! square of the user count.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile::{Profiles, UserProfile};
use crate::reuse::utc_day;
use crate::scalar::Scalar;
use crate::stats::{self, Quartiles};
use crate::trace::{ItemId, TagId, Trace, UserId, SECONDS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SimilarityMode {
    #[serde(rename = "user-item")]
    UserItem,
    #[serde(rename = "user-tag")]
    UserTag,
}

impl SimilarityMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SimilarityMode::UserItem => "user-item",
            SimilarityMode::UserTag => "user-tag",
        }
    }

    fn set_len(self, p: &UserProfile) -> usize {
        match self {
            SimilarityMode::UserItem => p.items.len(),
            SimilarityMode::UserTag => p.tags.len(),
        }
    }
}

/// Dense entity id usable as an inverted-index key.
trait RawId: Copy + Send + Sync {
    fn raw(self) -> usize;
}

impl RawId for ItemId {
    #[inline]
    fn raw(self) -> usize {
        self.index()
    }
}

impl RawId for TagId {
    #[inline]
    fn raw(self) -> usize {
        self.index()
    }
}

impl std::str::FromStr for SimilarityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "user-item" | "item" => Ok(SimilarityMode::UserItem),
            "user-tag" | "tag" => Ok(SimilarityMode::UserTag),
            other => Err(Error::config(format!("unknown similarity mode `{other}`"))),
        }
    }
}

/// Size of the intersection of two sorted, duplicate-free slices.
pub fn sorted_intersection_len<T: Ord>(a: &[T], b: &[T]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// `|A ∩ B| / |A ∪ B|` for the two users' sets in `mode`.
pub fn pair_similarity<S: Scalar>(a: &UserProfile, b: &UserProfile, mode: SimilarityMode) -> Result<S> {
    if a.user == b.user {
        return Err(Error::SelfPair(a.user.to_string()));
    }
    let inter = match mode {
        SimilarityMode::UserItem => sorted_intersection_len(&a.items, &b.items),
        SimilarityMode::UserTag => sorted_intersection_len(&a.tags, &b.tags),
    };
    let union = mode.set_len(a) + mode.set_len(b) - inter;
    if union == 0 {
        return Ok(S::zero());
    }
    Ok(S::ratio(inter as u64, union as u64))
}

/// A user pair with a nonzero overlap. `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairEntry {
    pub a: UserId,
    pub b: UserId,
    pub intersection: u32,
    pub union: u32,
}

impl PairEntry {
    #[inline]
    pub fn weight<S: Scalar>(&self) -> S {
        S::ratio(u64::from(self.intersection), u64::from(self.union))
    }
}

/// All user pairs with nonzero interest sharing. Pairs absent from
/// `entries` share nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseSimilarity {
    pub mode: SimilarityMode,
    /// Sorted by `(a, b)`.
    entries: Vec<PairEntry>,
    /// Users considered.
    universe: usize,
}

impl SparseSimilarity {
    pub fn entries(&self) -> &[PairEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    /// Pairs of considered users with no overlap.
    pub fn zero_pairs(&self) -> u64 {
        let n = self.universe as u64;
        n * n.saturating_sub(1) / 2 - self.entries.len() as u64
    }

    pub fn entry(&self, x: UserId, y: UserId) -> Option<&PairEntry> {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        self.entries
            .binary_search_by(|e| (e.a, e.b).cmp(&(a, b)))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Weight of an unordered pair, zero if they share nothing.
    pub fn weight<S: Scalar>(&self, x: UserId, y: UserId) -> S {
        self.entry(x, y).map_or(S::zero(), PairEntry::weight)
    }

    /// Stored weights in entry order.
    pub fn weights<S: Scalar>(&self) -> Vec<S> {
        self.entries.iter().map(PairEntry::weight).collect()
    }

    /// `user_a,user_b,weight`
    pub fn write_csv<W: Write>(&self, trace: &Trace, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["user_a", "user_b", "weight"])?;
        for e in &self.entries {
            let weight: f64 = e.weight();
            w.write_record([trace.user_name(e.a), trace.user_name(e.b), &weight.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AllPairsOptions {
    /// Fail rather than store more than this many pairs.
    pub max_pairs: Option<usize>,
}

pub fn all_pairs(profiles: &Profiles, mode: SimilarityMode) -> Result<SparseSimilarity> {
    all_pairs_with(profiles, mode, AllPairsOptions::default())
}

pub fn all_pairs_with(profiles: &Profiles, mode: SimilarityMode, opts: AllPairsOptions) -> Result<SparseSimilarity> {
    if profiles.len() < 2 {
        return Err(Error::EmptyInput("all-pairs similarity needs at least two users"));
    }
    let entries = match mode {
        SimilarityMode::UserItem => overlapping_pairs(profiles, |p| &p.items, opts.max_pairs)?,
        SimilarityMode::UserTag => overlapping_pairs(profiles, |p| &p.tags, opts.max_pairs)?,
    };
    Ok(SparseSimilarity { mode, entries, universe: profiles.len() })
}

fn overlapping_pairs<E, F>(profiles: &Profiles, set: F, max_pairs: Option<usize>) -> Result<Vec<PairEntry>>
where
    E: RawId,
    F: Fn(&UserProfile) -> &[E] + Sync,
{
    let universe = profiles.universe();
    let mut set_len = vec![0u32; universe];
    let mut posting_len: Vec<u32> = Vec::new();
    for p in profiles.iter() {
        set_len[p.user.index()] = set(p).len() as u32;
        for e in set(p) {
            let e = e.raw();
            if e >= posting_len.len() {
                posting_len.resize(e + 1, 0);
            }
            posting_len[e] += 1;
        }
    }
    // CSR-style inverted index; users are visited in id order, so every
    // posting list comes out sorted.
    let mut offsets = Vec::with_capacity(posting_len.len() + 1);
    offsets.push(0usize);
    for &len in &posting_len {
        offsets.push(offsets.last().unwrap() + len as usize);
    }
    let mut postings = vec![0u32; *offsets.last().unwrap()];
    let mut fill = offsets.clone();
    for p in profiles.iter() {
        for e in set(p) {
            postings[fill[e.raw()]] = p.user.0;
            fill[e.raw()] += 1;
        }
    }
    drop(fill);

    let stored = AtomicUsize::new(0);
    let cap = max_pairs.unwrap_or(usize::MAX);
    let users: Vec<&UserProfile> = profiles.iter().collect();
    let rows: Vec<Vec<PairEntry>> = users
        .par_iter()
        .map_init(
            || (vec![0u32; universe], Vec::<u32>::new()),
            |(counts, touched), p| {
                let a = p.user.0;
                for e in set(p) {
                    let list = &postings[offsets[e.raw()]..offsets[e.raw() + 1]];
                    let after = list.partition_point(|&u| u <= a);
                    for &b in &list[after..] {
                        let c = &mut counts[b as usize];
                        if *c == 0 {
                            touched.push(b);
                        }
                        *c += 1;
                    }
                }
                touched.sort_unstable();
                let la = set_len[a as usize];
                let row: Vec<PairEntry> = touched
                    .drain(..)
                    .map(|b| {
                        let inter = std::mem::take(&mut counts[b as usize]);
                        PairEntry { a: UserId(a), b: UserId(b), intersection: inter, union: la + set_len[b as usize] - inter }
                    })
                    .collect();
                if stored.fetch_add(row.len(), Ordering::Relaxed) + row.len() > cap {
                    return Err(Error::PairCapExceeded { cap });
                }
                Ok(row)
            },
        )
        .collect::<Result<_>>()?;

    let mut entries = Vec::with_capacity(rows.iter().map(Vec::len).sum());
    for row in rows {
        entries.extend(row);
    }
    Ok(entries)
}

/// Which pairs the statistics range over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Population {
    /// Pairs with nonzero overlap.
    Nonzero,
    /// Every pair of considered users.
    All,
}

impl std::str::FromStr for Population {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonzero" => Ok(Population::Nonzero),
            "all" => Ok(Population::All),
            other => Err(Error::config(format!("unknown population `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilaritySummary<S> {
    pub mode: SimilarityMode,
    pub population: Population,
    pub pairs: u64,
    pub mean: S,
    pub sd: S,
    pub median: S,
}

fn population_weights<S: Scalar>(sim: &SparseSimilarity, population: Population) -> (Vec<S>, u64) {
    let zeros = match population {
        Population::Nonzero => 0,
        Population::All => sim.zero_pairs(),
    };
    (sim.weights(), zeros)
}

pub fn summary<S: Scalar>(sim: &SparseSimilarity, population: Population) -> Result<SimilaritySummary<S>> {
    let (mut w, zeros) = population_weights::<S>(sim, population);
    let m = stats::moments_with_zeros(&mut w, zeros)?;
    Ok(SimilaritySummary { mode: sim.mode, population, pairs: m.count, mean: m.mean, sd: m.sd, median: m.median })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfPoint<S> {
    pub threshold: S,
    pub cum_prob: S,
}

/// Empirical CDF `P(weight <= x)` sampled at `x = i / resolution` for
/// `i in 0..=resolution` and at every distinct weight.
pub fn cdf<S: Scalar>(sim: &SparseSimilarity, population: Population, resolution: usize) -> Result<Vec<CdfPoint<S>>> {
    let (mut w, zeros) = population_weights::<S>(sim, population);
    let n = w.len() as u64 + zeros;
    if n == 0 {
        return Err(Error::EmptyInput("cdf over an empty population"));
    }
    w.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut xs: Vec<S> = (0..=resolution).map(|i| S::ratio(i as u64, resolution.max(1) as u64)).collect();
    if resolution == 0 {
        xs.clear();
    }
    xs.extend(w.iter().copied());
    if zeros > 0 {
        xs.push(S::zero());
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();

    let total = S::from_count(n);
    Ok(xs
        .into_iter()
        .map(|x| {
            let below = w.partition_point(|&v| v <= x) as u64 + zeros;
            CdfPoint { threshold: x, cum_prob: S::from_count(below) / total }
        })
        .collect())
}

/// `P(weight <= x)` read off a CDF produced by [`cdf`].
pub fn cdf_at<S: Scalar>(points: &[CdfPoint<S>], x: S) -> S {
    let i = points.partition_point(|p| p.threshold <= x);
    if i == 0 {
        S::zero()
    } else {
        points[i - 1].cum_prob
    }
}

pub fn write_cdf_csv<S: Scalar, W: Write>(points: &[CdfPoint<S>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["threshold", "cum_prob"])?;
    for p in points {
        w.write_record([p.threshold.to_string(), p.cum_prob.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Interest sharing within one time window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowStats<S> {
    pub window_start: NaiveDate,
    pub active_users: u64,
    /// Nonzero pairs the quartiles range over.
    pub population: u64,
    pub quartiles: Option<Quartiles<S>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowOptions {
    pub window_days: u32,
    /// Profiles accumulate everything up to the window end instead of only
    /// the window's own assignments.
    pub cumulative: bool,
    pub max_pairs: Option<usize>,
}

impl Default for WindowOptions {
    fn default() -> Self {
        WindowOptions { window_days: 30, cumulative: false, max_pairs: None }
    }
}

/// Split the trace into consecutive `window_days` windows starting at the
/// first event and summarise the nonzero pair weights of each.
pub fn windowed<S: Scalar>(trace: &Trace, mode: SimilarityMode, opts: WindowOptions) -> Result<Vec<WindowStats<S>>> {
    if opts.window_days == 0 {
        return Err(Error::config("window length must be at least one day"));
    }
    let width = i64::from(opts.window_days) * SECONDS_PER_DAY;
    let (first, last) = trace.span();
    let windows = (last - first) / width + 1;
    let mut out = Vec::with_capacity(windows as usize);
    for w in 0..windows {
        let start = first + w * width;
        let lo = if opts.cumulative { 0 } else { trace.partition_point(start) };
        let hi = trace.partition_point(start + width);
        let profiles = Profiles::from_assignments(&trace.assignments()[lo..hi], trace.num_users());
        let (population, quartiles) = if profiles.len() < 2 {
            (0, None)
        } else {
            let sim = all_pairs_with(&profiles, mode, AllPairsOptions { max_pairs: opts.max_pairs })?;
            let mut weights = sim.weights::<S>();
            (weights.len() as u64, stats::quartiles(&mut weights))
        };
        out.push(WindowStats { window_start: utc_day(start), active_users: profiles.len() as u64, population, quartiles });
    }
    Ok(out)
}

/// `window_start,population,min,q1,median,q3,max`; windows without pairs
/// leave the quartile columns empty.
pub fn write_windows_csv<S: Scalar, W: Write>(windows: &[WindowStats<S>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["window_start", "population", "min", "q1", "median", "q3", "max"])?;
    for s in windows {
        let mut row = vec![s.window_start.to_string(), s.population.to_string()];
        match &s.quartiles {
            Some(q) => row.extend([q.min, q.q1, q.median, q.q3, q.max].iter().map(S::to_string)),
            None => row.extend(std::iter::repeat_n(String::new(), 5)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
