//! The thresholded interest-sharing graph and its topology.
//!
//! Nodes are all users of a trace, including those left without any edge
//! once weak links are pruned; those isolated users are part of what the
//! topology report measures.

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::similarity::{CdfPoint, SimilarityMode, SparseSimilarity};
use crate::trace::{Trace, UserId};

/// Default user-item pruning threshold.
pub const DEFAULT_ITEM_THRESHOLD: f64 = 0.05;
/// Default user-tag pruning threshold.
pub const DEFAULT_TAG_THRESHOLD: f64 = 0.03;

pub fn default_threshold(mode: SimilarityMode) -> f64 {
    match mode {
        SimilarityMode::UserItem => DEFAULT_ITEM_THRESHOLD,
        SimilarityMode::UserTag => DEFAULT_TAG_THRESHOLD,
    }
}

/// Simple undirected weighted graph over users `0..nodes`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterestGraph<S> {
    pub mode: SimilarityMode,
    pub threshold: S,
    nodes: usize,
    /// `(a, b, weight)` with `a < b`, sorted.
    edges: Vec<(UserId, UserId, S)>,
    /// Sorted neighbour lists.
    adjacency: Vec<Vec<u32>>,
}

/// Keep the pairs of `sim` whose weight is at least `threshold`.
pub fn build_graph<S: Scalar>(sim: &SparseSimilarity, nodes: usize, threshold: S) -> Result<InterestGraph<S>> {
    InterestGraph::from_weighted_edges(
        nodes,
        sim.entries().iter().map(|e| (e.a, e.b, e.weight::<S>())),
        threshold,
        sim.mode,
    )
}

impl<S: Scalar> InterestGraph<S> {
    /// Build from arbitrary weighted edges; self-loops and edges below
    /// `threshold` are dropped, repeated pairs keep the first weight.
    pub fn from_weighted_edges<I>(nodes: usize, edges: I, threshold: S, mode: SimilarityMode) -> Result<Self>
    where
        I: IntoIterator<Item = (UserId, UserId, S)>,
    {
        // written this way round so NaN is rejected too
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(threshold > S::zero()) {
            return Err(Error::config("graph threshold must be strictly positive"));
        }
        let mut kept: Vec<(UserId, UserId, S)> = edges
            .into_iter()
            .filter(|&(a, b, w)| a != b && w >= threshold)
            .map(|(a, b, w)| if a < b { (a, b, w) } else { (b, a, w) })
            .collect();
        if let Some(&(_, b, _)) = kept.iter().find(|&&(_, b, _)| b.index() >= nodes) {
            return Err(Error::config(format!("edge endpoint {b} outside the {nodes}-node universe")));
        }
        kept.sort_by_key(|&(a, b, _)| (a, b));
        kept.dedup_by_key(|&mut (a, b, _)| (a, b));

        let mut adjacency = vec![Vec::new(); nodes];
        for &(a, b, _) in &kept {
            adjacency[a.index()].push(b.0);
            adjacency[b.index()].push(a.0);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(InterestGraph { mode, threshold, nodes, edges: kept, adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(UserId, UserId, S)] {
        &self.edges
    }

    pub fn neighbors(&self, v: UserId) -> &[u32] {
        &self.adjacency[v.index()]
    }

    pub fn degree(&self, v: UserId) -> usize {
        self.adjacency[v.index()].len()
    }

    /// Connected-component label per node; labels are numbered in order of
    /// each component's smallest node.
    pub fn component_labels(&self) -> Vec<u32> {
        let mut dsu = DisjointSet::new(self.nodes);
        for &(a, b, _) in &self.edges {
            dsu.union(a.0, b.0);
        }
        let mut label_of_root: HashMap<u32, u32> = HashMap::new();
        (0..self.nodes as u32)
            .map(|v| {
                let root = dsu.find(v);
                let next = label_of_root.len() as u32;
                *label_of_root.entry(root).or_insert(next)
            })
            .collect()
    }

    /// Triangles through each node.
    pub fn triangles_per_node(&self) -> Vec<u64> {
        // Orient every edge from lower to higher (degree, id) rank; each
        // triangle is then found exactly once from its lowest-ranked corner.
        let rank = |v: u32| (self.adjacency[v as usize].len(), v);
        let forward: Vec<Vec<u32>> = (0..self.nodes as u32)
            .map(|u| self.adjacency[u as usize].iter().copied().filter(|&v| rank(v) > rank(u)).collect())
            .collect();
        let mut counts = vec![0u64; self.nodes];
        for u in 0..self.nodes {
            for &v in &forward[u] {
                let (fu, fv) = (&forward[u], &forward[v as usize]);
                let (mut i, mut j) = (0, 0);
                while i < fu.len() && j < fv.len() {
                    match fu[i].cmp(&fv[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            counts[u] += 1;
                            counts[v as usize] += 1;
                            counts[fu[i] as usize] += 1;
                            i += 1;
                            j += 1;
                        }
                    }
                }
            }
        }
        counts
    }

    /// `triangles(v) / C(deg(v), 2)`; undefined below degree 2.
    pub fn local_clustering(&self) -> Vec<Option<S>> {
        self.triangles_per_node()
            .into_iter()
            .zip(&self.adjacency)
            .map(|(t, adj)| {
                let d = adj.len() as u64;
                (d >= 2).then(|| S::ratio(t, d * (d - 1) / 2))
            })
            .collect()
    }

    pub fn topology(&self) -> TopologyReport<S> {
        let n = self.nodes;
        let labels = self.component_labels();
        let mut sizes = vec![0u64; n];
        for &l in &labels {
            sizes[l as usize] += 1;
        }
        sizes.retain(|&s| s > 0);

        // Largest non-singleton component, ties to the lowest label.
        let giant = sizes
            .iter()
            .enumerate()
            .filter(|&(_, &s)| s >= 2)
            .max_by(|(la, sa), (lb, sb)| sa.cmp(sb).then(lb.cmp(la)))
            .map(|(l, _)| l as u32);
        let giant_size = giant.map_or(0, |g| sizes[g as usize]);

        let mut histogram: Vec<ComponentBucket> = Vec::new();
        let mut sorted = sizes.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        for s in sorted {
            match histogram.last_mut() {
                Some(b) if b.size == s => b.count += 1,
                _ => histogram.push(ComponentBucket { size: s, count: 1 }),
            }
        }

        let isolated = self.adjacency.iter().filter(|a| a.is_empty()).count() as u64;
        let small = sizes.iter().filter(|&&s| s >= 2).sum::<u64>() - giant_size;

        let clustering = self.local_clustering();
        let triangles = self.triangles_per_node().iter().sum::<u64>() / 3;
        let in_core = |v: usize| giant == Some(labels[v]);
        let all = average(clustering.iter().copied(), false);
        let core = average(clustering.iter().enumerate().filter(|&(v, _)| in_core(v)).map(|(_, c)| *c), false);
        let all_zero = average(clustering.iter().copied(), true);
        let core_zero = average(clustering.iter().enumerate().filter(|&(v, _)| in_core(v)).map(|(_, c)| *c), true);

        let frac = |x: u64| if n == 0 { S::zero() } else { S::ratio(x, n as u64) };
        TopologyReport {
            mode: self.mode,
            threshold: self.threshold,
            nodes: n as u64,
            edges: self.edges.len() as u64,
            isolated,
            isolated_fraction: frac(isolated),
            components: histogram,
            giant_size,
            giant_fraction: frac(giant_size),
            small_component_fraction: frac(small),
            triangles,
            avg_clustering_all: all,
            avg_clustering_core: core,
            avg_clustering_all_with_zeros: all_zero,
            avg_clustering_core_with_zeros: core_zero,
        }
    }

    /// `user_a,user_b,weight`
    pub fn write_edges_csv<W: Write>(&self, trace: &Trace, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["user_a", "user_b", "weight"])?;
        for (a, b, weight) in &self.edges {
            w.write_record([trace.user_name(*a), trace.user_name(*b), &weight.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `user,degree,component`, one row per node including isolated users.
    pub fn write_nodes_csv<W: Write>(&self, trace: &Trace, out: W) -> Result<()> {
        let labels = self.component_labels();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["user", "degree", "component"])?;
        for (v, (adj, label)) in self.adjacency.iter().zip(&labels).enumerate() {
            w.write_record([trace.user_name(UserId(v as u32)), &adj.len().to_string(), &label.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean of the defined values; with `undefined_as_zero` the undefined ones
/// count as zero instead of being skipped.
fn average<S: Scalar>(values: impl Iterator<Item = Option<S>>, undefined_as_zero: bool) -> Option<S> {
    let (mut sum, mut n) = (S::zero(), 0u64);
    for v in values {
        match v {
            Some(c) => {
                sum = sum + c;
                n += 1;
            }
            None if undefined_as_zero => n += 1,
            None => {}
        }
    }
    (n > 0).then(|| sum / S::from_count(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComponentBucket {
    pub size: u64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologyReport<S> {
    pub mode: SimilarityMode,
    pub threshold: S,
    pub nodes: u64,
    pub edges: u64,
    pub isolated: u64,
    pub isolated_fraction: S,
    /// Component sizes, largest first.
    pub components: Vec<ComponentBucket>,
    /// Largest component with at least two nodes; 0 when edgeless.
    pub giant_size: u64,
    pub giant_fraction: S,
    /// Nodes in components that are neither singletons nor the giant.
    pub small_component_fraction: S,
    pub triangles: u64,
    /// Over nodes of degree >= 2.
    pub avg_clustering_all: Option<S>,
    /// Over nodes of degree >= 2 inside the giant component.
    pub avg_clustering_core: Option<S>,
    /// Over all nodes, degree < 2 counting as 0.
    pub avg_clustering_all_with_zeros: Option<S>,
    /// Over all giant-component nodes, degree < 2 counting as 0.
    pub avg_clustering_core_with_zeros: Option<S>,
}

impl<S: Scalar> TopologyReport<S> {
    /// Component sizes, largest first, one entry per component.
    pub fn component_sizes(&self) -> Vec<u64> {
        self.components.iter().flat_map(|b| std::iter::repeat_n(b.size, b.count as usize)).collect()
    }
}

struct DisjointSet {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut v: u32) -> u32 {
        while self.parent[v as usize] != v {
            let p = self.parent[v as usize];
            self.parent[v as usize] = self.parent[p as usize];
            v = p;
        }
        v
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
    }
}

/// Knee of a CDF curve: the sampled threshold farthest from the chord
/// joining the first and last points, both axes rescaled to `[0, 1]`.
pub fn knee_threshold<S: Scalar>(points: &[CdfPoint<S>]) -> Option<S> {
    let (first, last) = (points.first()?, points.last()?);
    let dx = last.threshold - first.threshold;
    let dy = last.cum_prob - first.cum_prob;
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(dx > S::zero()) || !(dy > S::zero()) {
        return None;
    }
    points
        .iter()
        .map(|p| {
            let x = (p.threshold - first.threshold) / dx;
            let y = (p.cum_prob - first.cum_prob) / dy;
            // Distance above the diagonal y = x, up to a constant factor.
            (p.threshold, y - x)
        })
        .fold(None, |best: Option<(S, S)>, (t, d)| match best {
            Some((_, bd)) if bd >= d => best,
            _ => Some((t, d)),
        })
        .map(|(t, _)| t)
}

/// Rand index between two labelings of the same nodes: the fraction of node
/// pairs on which they agree (same group in both, or different in both).
pub fn rand_index(a: &[u32], b: &[u32]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings of different sizes");
    let n = a.len() as u64;
    if n < 2 {
        return 1.0;
    }
    let pairs = |k: u64| k * k.saturating_sub(1) / 2;
    let mut joint: HashMap<(u32, u32), u64> = HashMap::new();
    let mut ca: HashMap<u32, u64> = HashMap::new();
    let mut cb: HashMap<u32, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
    }
    let same_both: u64 = joint.values().map(|&k| pairs(k)).sum();
    let same_a: u64 = ca.values().map(|&k| pairs(k)).sum();
    let same_b: u64 = cb.values().map(|&k| pairs(k)).sum();
    let total = pairs(n);
    let agree = total + 2 * same_both - same_a - same_b;
    agree as f64 / total as f64
}
