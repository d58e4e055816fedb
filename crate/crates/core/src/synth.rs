//! Seeded synthetic traces with planted reuse rates and planted interest
//! communities.
//!
//! The random stream is ChaCha8 seeded through `SeedableRng::seed_from_u64`
//! (rand_chacha 0.3, rand 0.8). Changing either crate's major version may
//! change generated traces.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::trace::{Timestamp, Trace, TraceBuilder, SECONDS_PER_DAY};

/// 2004-11-01T00:00:00Z
pub const DEFAULT_START: Timestamp = 1_099_267_200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenConfig {
    pub seed: u64,
    pub users: usize,
    pub days: usize,
    pub events_per_day: usize,
    /// Probability an event tags an already-seen item.
    pub item_reuse_p: f64,
    /// Probability an event uses an already-seen tag.
    pub tag_reuse_p: f64,
    pub communities: usize,
    /// Cap on the items each community reuses from.
    pub intra_community_item_pool: usize,
    /// Probability a reuse draw ignores the community and samples globally.
    pub noise_p: f64,
    pub start: Timestamp,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 7,
            users: 200,
            days: 30,
            events_per_day: 500,
            item_reuse_p: 0.2,
            tag_reuse_p: 0.9,
            communities: 4,
            intra_community_item_pool: 200,
            noise_p: 0.05,
            start: DEFAULT_START,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("item_reuse_p", self.item_reuse_p), ("tag_reuse_p", self.tag_reuse_p), ("noise_p", self.noise_p)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} = {p} is not a probability")));
            }
        }
        if self.communities < 1 || self.users < self.communities {
            return Err(Error::config("need users >= communities >= 1"));
        }
        if self.days < 1 || self.events_per_day < 1 || self.intra_community_item_pool < 1 {
            return Err(Error::config("days, events_per_day and intra_community_item_pool must be >= 1"));
        }
        if self.start < 0 {
            return Err(Error::config("start timestamp must be non-negative"));
        }
        Ok(())
    }

    pub fn community_of(&self, user: usize) -> usize {
        user % self.communities
    }
}

pub fn user_name(user: usize) -> String {
    format!("u{user}")
}

/// What the generator planted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    /// Every configured user, including any that drew no event.
    pub community_of: BTreeMap<String, u32>,
    pub config: GenConfig,
}

impl GroundTruth {
    /// Planted community of each user of `trace`, indexed by user id.
    pub fn labels(&self, trace: &Trace) -> Vec<u32> {
        trace.users().iter().map(|u| self.community_of[u]).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Entities seen so far, globally and per community.
struct Pools {
    global: usize,
    community: Vec<Vec<usize>>,
    cap: usize,
}

impl Pools {
    fn new(communities: usize, cap: usize) -> Self {
        Pools { global: 0, community: vec![Vec::new(); communities], cap }
    }

    fn draw(&mut self, rng: &mut ChaCha8Rng, group: usize, reuse_p: f64, noise_p: f64) -> usize {
        if self.global > 0 && rng.gen_bool(reuse_p) {
            let pool = &self.community[group];
            let escape = rng.gen_bool(noise_p);
            return if !escape && !pool.is_empty() {
                pool[rng.gen_range(0..pool.len())]
            } else {
                rng.gen_range(0..self.global)
            };
        }
        let fresh = self.global;
        self.global += 1;
        if self.community[group].len() < self.cap {
            self.community[group].push(fresh);
        }
        fresh
    }
}

pub fn generate(cfg: &GenConfig) -> Result<(Trace, GroundTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut items = Pools::new(cfg.communities, cfg.intra_community_item_pool);
    let mut tags = Pools::new(cfg.communities, usize::MAX);
    let user_names: Vec<String> = (0..cfg.users).map(user_name).collect();
    let mut b = TraceBuilder::default();
    let mut seq = 0u64;
    for day in 0..cfg.days as i64 {
        for j in 0..cfg.events_per_day as i64 {
            let ts = cfg.start + day * SECONDS_PER_DAY + j * SECONDS_PER_DAY / cfg.events_per_day as i64;
            let user = rng.gen_range(0..cfg.users);
            let group = cfg.community_of(user);
            let item = items.draw(&mut rng, group, cfg.item_reuse_p, cfg.noise_p);
            let tag = tags.draw(&mut rng, group, cfg.tag_reuse_p, cfg.noise_p);
            b.push(&user_names[user], &format!("i{item}"), &format!("t{tag}"), ts, seq);
            seq += 1;
        }
    }
    let (trace, _) = b.build()?;
    let community_of = (0..cfg.users).map(|u| (user_names[u].clone(), cfg.community_of(u) as u32)).collect();
    Ok((trace, GroundTruth { community_of, config: cfg.clone() }))
}

/// Users in partner pairs `(2i, 2i + 1)`. In every window each user posts a
/// few fresh items and re-posts the items its partner posted in the
/// previous window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CopycatConfig {
    pub seed: u64,
    pub pairs: usize,
    /// At least 3, so partners already overlap before the last window.
    pub windows: usize,
    pub window_days: usize,
    /// Fresh items per user and window are drawn from `1..=max_fresh_items`.
    pub max_fresh_items: usize,
    pub start: Timestamp,
}

impl Default for CopycatConfig {
    fn default() -> Self {
        CopycatConfig { seed: 11, pairs: 50, windows: 4, window_days: 30, max_fresh_items: 5, start: DEFAULT_START }
    }
}

/// Copy-cat trace and the start of its last window, the natural cutoff.
pub fn generate_copycat(cfg: &CopycatConfig) -> Result<(Trace, Timestamp)> {
    if cfg.windows < 3 || cfg.pairs < 1 || cfg.window_days < 1 || cfg.max_fresh_items < 1 {
        return Err(Error::config("copycat needs windows >= 3 and positive pairs, window_days, max_fresh_items"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let users = 2 * cfg.pairs;
    let width = cfg.window_days as i64 * SECONDS_PER_DAY;
    let mut b = TraceBuilder::default();
    let mut seq = 0u64;
    let mut next_item = 0usize;
    let mut previous: Vec<Vec<usize>> = vec![Vec::new(); users];
    for w in 0..cfg.windows as i64 {
        let mut current: Vec<Vec<usize>> = vec![Vec::new(); users];
        let mut events: Vec<(Timestamp, usize, usize)> = Vec::new();
        for (u, fresh) in current.iter_mut().enumerate() {
            for _ in 0..rng.gen_range(1..=cfg.max_fresh_items) {
                fresh.push(next_item);
                next_item += 1;
            }
            for &item in fresh.iter().chain(&previous[u ^ 1]) {
                events.push((cfg.start + w * width + rng.gen_range(0..width), u, item));
            }
        }
        events.sort_unstable();
        for (ts, u, item) in events {
            let tag = format!("t{}", rng.gen_range(0..8));
            b.push(&user_name(u), &format!("i{item}"), &tag, ts, seq);
            seq += 1;
        }
        previous = current;
    }
    let (trace, _) = b.build()?;
    Ok((trace, cfg.start + (cfg.windows as i64 - 1) * width))
}
