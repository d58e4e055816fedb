//! Neighbour-based recommendation over the interest-sharing graph, evaluated
//! with a temporal train/test split.
//!
//! A user's neighbours are the `k` users with the highest nonzero training
//! similarity. Every entity a neighbour holds, and the user does not, scores
//! the sum of the weights of the neighbours holding it.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile::{Profiles, UserProfile};
use crate::scalar::Scalar;
use crate::similarity::{all_pairs, SimilarityMode, SparseSimilarity};
use crate::trace::{Dimension, TagAssignment, Timestamp, Trace, UserId};

/// What gets recommended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RecMode {
    Items,
    Tags,
}

impl RecMode {
    fn dimension(self) -> Dimension {
        match self {
            RecMode::Items => Dimension::Item,
            RecMode::Tags => Dimension::Tag,
        }
    }
}

impl std::str::FromStr for RecMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "items" | "item" => Ok(RecMode::Items),
            "tags" | "tag" => Ok(RecMode::Tags),
            other => Err(Error::config(format!("unknown recommendation mode `{other}`"))),
        }
    }
}

fn owned(p: &UserProfile, mode: RecMode) -> Vec<u32> {
    match mode {
        RecMode::Items => p.items.iter().map(|i| i.0).collect(),
        RecMode::Tags => p.tags.iter().map(|t| t.0).collect(),
    }
}

/// Events before `cutoff` train, the rest test.
#[derive(Debug, Clone, Copy)]
pub struct TemporalSplit<'a> {
    trace: &'a Trace,
    cutoff: Timestamp,
    boundary: usize,
}

impl<'a> TemporalSplit<'a> {
    pub fn trace(&self) -> &'a Trace {
        self.trace
    }

    pub fn cutoff(&self) -> Timestamp {
        self.cutoff
    }

    pub fn train(&self) -> &'a [TagAssignment] {
        &self.trace.assignments()[..self.boundary]
    }

    pub fn test(&self) -> &'a [TagAssignment] {
        &self.trace.assignments()[self.boundary..]
    }

    /// The training period as a standalone trace.
    pub fn train_trace(&self) -> Result<Trace> {
        self.trace.restrict(0..self.boundary)
    }

    /// The test period as a standalone trace.
    pub fn test_trace(&self) -> Result<Trace> {
        self.trace.restrict(self.boundary..self.trace.len())
    }
}

/// Partition by timestamp. The cutoff must leave at least one event on each
/// side: `first < cutoff <= last`.
pub fn split(trace: &Trace, cutoff: Timestamp) -> Result<TemporalSplit<'_>> {
    let (first, last) = trace.span();
    if cutoff <= first || cutoff > last {
        return Err(Error::config(format!("cutoff {cutoff} outside the trace span ({first}, {last}]")));
    }
    Ok(TemporalSplit { trace, cutoff, boundary: trace.partition_point(cutoff) })
}

/// Timestamp of the event at the `fraction` quantile of the trace, for use
/// as a cutoff.
pub fn cutoff_at_fraction(trace: &Trace, fraction: f64) -> Result<Timestamp> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::config(format!("train fraction {fraction} not in (0, 1)")));
    }
    let idx = ((fraction * trace.len() as f64).ceil() as usize).min(trace.len() - 1);
    Ok(trace.assignments()[idx].timestamp)
}

/// Per-user neighbour lists, strongest first, ties by user id.
#[derive(Debug, Clone)]
pub struct Neighborhoods<S> {
    lists: Vec<Vec<(UserId, S)>>,
}

impl<S: Scalar> Neighborhoods<S> {
    pub fn from_similarity(sim: &SparseSimilarity, universe: usize) -> Self {
        let mut lists: Vec<Vec<(UserId, S)>> = vec![Vec::new(); universe];
        for e in sim.entries() {
            let w = e.weight::<S>();
            lists[e.a.index()].push((e.b, w));
            lists[e.b.index()].push((e.a, w));
        }
        for list in &mut lists {
            list.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
        }
        Neighborhoods { lists }
    }

    fn empty(universe: usize) -> Self {
        Neighborhoods { lists: vec![Vec::new(); universe] }
    }

    /// Up to `k` strongest neighbours with weight at least `min_weight`.
    pub fn top(&self, user: UserId, k: usize, min_weight: Option<S>) -> &[(UserId, S)] {
        let list = &self.lists[user.index()];
        let list = &list[..k.min(list.len())];
        match min_weight {
            Some(m) => &list[..list.partition_point(|&(_, w)| w >= m)],
            None => list,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation<S> {
    pub user: UserId,
    pub mode: RecMode,
    /// `(entity id, score)`, best first; ties by entity name.
    pub ranked: Vec<(u32, S)>,
}

impl<S> Recommendation<S> {
    pub fn contains(&self, entity: u32) -> bool {
        self.ranked.iter().any(|&(e, _)| e == entity)
    }
}

/// Training-period state needed to answer recommendation queries.
pub struct Recommender<'a, S> {
    trace: &'a Trace,
    profiles: Profiles,
    neighbors: Neighborhoods<S>,
    min_weight: Option<S>,
}

impl<'a, S: Scalar> Recommender<'a, S> {
    /// `profiles` and `sim` must both come from the training period only.
    pub fn new(trace: &'a Trace, profiles: Profiles, sim: &SparseSimilarity) -> Self {
        let neighbors = Neighborhoods::from_similarity(sim, trace.num_users());
        Recommender { trace, profiles, neighbors, min_weight: None }
    }

    /// Train on the training side of `split`, weighting neighbours by
    /// `similarity`.
    pub fn train(split: &TemporalSplit<'a>, similarity: SimilarityMode) -> Result<Self> {
        let trace = split.trace();
        let profiles = Profiles::from_assignments(split.train(), trace.num_users());
        let neighbors = if profiles.len() >= 2 {
            Neighborhoods::from_similarity(&all_pairs(&profiles, similarity)?, trace.num_users())
        } else {
            Neighborhoods::empty(trace.num_users())
        };
        Ok(Recommender { trace, profiles, neighbors, min_weight: None })
    }

    /// Ignore neighbours weaker than `min_weight`.
    pub fn with_min_weight(mut self, min_weight: Option<S>) -> Self {
        self.min_weight = min_weight;
        self
    }

    pub fn profiles(&self) -> &Profiles {
        &self.profiles
    }

    pub fn neighbors(&self, user: UserId, k: usize) -> &[(UserId, S)] {
        self.neighbors.top(user, k, self.min_weight)
    }

    pub fn recommend(&self, user: UserId, k: usize, n: usize, mode: RecMode) -> Result<Recommendation<S>> {
        let me = self
            .profiles
            .get(user)
            .ok_or_else(|| Error::ColdStart(self.trace.user_name(user).to_owned()))?;
        let mine = owned(me, mode);
        let mut scores: HashMap<u32, S> = HashMap::new();
        for &(v, w) in self.neighbors(user, k) {
            let theirs = self.profiles.get(v).expect("neighbour without a training profile");
            for e in owned(theirs, mode) {
                if mine.binary_search(&e).is_err() {
                    let s = scores.entry(e).or_insert_with(S::zero);
                    *s = *s + w;
                }
            }
        }
        let dim = mode.dimension();
        let mut ranked: Vec<(u32, S)> = scores.into_iter().collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.trace.entity_name(dim, a.0).cmp(self.trace.entity_name(dim, b.0)))
        });
        ranked.truncate(n);
        Ok(Recommendation { user, mode, ranked })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalParams<S> {
    /// Neighbours per user.
    pub k: usize,
    /// Recommendation list length.
    pub n: usize,
    pub mode: RecMode,
    pub similarity: SimilarityMode,
    /// Neighbours below this weight are ignored.
    pub threshold: Option<S>,
}

impl<S> Default for EvalParams<S> {
    fn default() -> Self {
        EvalParams { k: 20, n: 10, mode: RecMode::Items, similarity: SimilarityMode::UserItem, threshold: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserOutcome {
    pub user: UserId,
    /// Test-period entities found in the list.
    pub hits: u64,
    pub success: bool,
    /// Whether any test-period entity already existed during training.
    pub reused_only_applicable: bool,
    pub reused_only_success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport<S> {
    pub cutoff: Timestamp,
    pub users_evaluated: u64,
    /// Test-period users with no training activity; not evaluated.
    pub cold_start_users: u64,
    pub empty_recommendations: u64,
    pub successes: u64,
    pub success_rate: S,
    pub reused_only_users: u64,
    pub reused_only_successes: u64,
    /// `None` when no evaluated user touched a pre-existing entity.
    pub success_rate_reused_only: Option<S>,
    pub parameters: EvalParams<S>,
}

pub fn evaluate<S: Scalar>(split: &TemporalSplit<'_>, params: EvalParams<S>) -> Result<EvalReport<S>> {
    evaluate_detailed(split, params).map(|(r, _)| r)
}

/// Evaluation report plus one outcome per evaluated user, in user-id order.
pub fn evaluate_detailed<S: Scalar>(
    split: &TemporalSplit<'_>,
    params: EvalParams<S>,
) -> Result<(EvalReport<S>, Vec<UserOutcome>)> {
    let trace = split.trace();
    let rec = Recommender::train(split, params.similarity)?.with_min_weight(params.threshold);
    let test = Profiles::from_assignments(split.test(), trace.num_users());

    let dim = params.mode.dimension();
    let mut in_training = vec![false; trace.cardinality(dim)];
    for a in split.train() {
        in_training[dim.entity(a) as usize] = true;
    }

    let (evaluated, cold): (Vec<&UserProfile>, Vec<&UserProfile>) =
        test.iter().partition(|p| rec.profiles().get(p.user).is_some());
    if evaluated.is_empty() {
        return Err(Error::EmptyEvaluation);
    }

    let results: Vec<(UserOutcome, bool)> = evaluated
        .par_iter()
        .map(|p| {
            let list = rec.recommend(p.user, params.k, params.n, params.mode)?;
            let actual = owned(p, params.mode);
            let hits = actual.iter().filter(|&&e| list.contains(e)).count() as u64;
            let reused: Vec<u32> = actual.iter().copied().filter(|&e| in_training[e as usize]).collect();
            let reused_hits = reused.iter().filter(|&&e| list.contains(e)).count();
            let outcome = UserOutcome {
                user: p.user,
                hits,
                success: hits > 0,
                reused_only_applicable: !reused.is_empty(),
                reused_only_success: reused_hits > 0,
            };
            Ok((outcome, list.ranked.is_empty()))
        })
        .collect::<Result<_>>()?;

    let users_evaluated = results.len() as u64;
    let successes = results.iter().filter(|(o, _)| o.success).count() as u64;
    let reused_only_users = results.iter().filter(|(o, _)| o.reused_only_applicable).count() as u64;
    let reused_only_successes = results.iter().filter(|(o, _)| o.reused_only_success).count() as u64;
    let report = EvalReport {
        cutoff: split.cutoff(),
        users_evaluated,
        cold_start_users: cold.len() as u64,
        empty_recommendations: results.iter().filter(|(_, empty)| *empty).count() as u64,
        successes,
        success_rate: S::ratio(successes, users_evaluated),
        reused_only_users,
        reused_only_successes,
        success_rate_reused_only: (reused_only_users > 0).then(|| S::ratio(reused_only_successes, reused_only_users)),
        parameters: params,
    };
    Ok((report, results.into_iter().map(|(o, _)| o).collect()))
}

/// `user,hits,success,reused_only_applicable`
pub fn write_outcomes_csv<W: Write>(trace: &Trace, outcomes: &[UserOutcome], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user", "hits", "success", "reused_only_applicable"])?;
    for o in outcomes {
        w.write_record([
            trace.user_name(o.user),
            &o.hits.to_string(),
            &o.success.to_string(),
            &o.reused_only_applicable.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
