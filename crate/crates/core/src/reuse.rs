//! Content reuse: does an assignment reference an item, tag or user that
//! already occurred earlier in the trace?
//!
//! An entity is new exactly at its first occurrence in the `(timestamp,
//! seq)` order. Later assignments on the same day count as reuse.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats;
use crate::trace::{Dimension, TagAssignment, Timestamp, Trace, SECONDS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifiedAssignment {
    pub assignment: TagAssignment,
    pub item_new: bool,
    pub tag_new: bool,
    pub user_new: bool,
}

impl ClassifiedAssignment {
    #[inline]
    pub fn is_new(&self, dim: Dimension) -> bool {
        match dim {
            Dimension::Item => self.item_new,
            Dimension::Tag => self.tag_new,
            Dimension::User => self.user_new,
        }
    }
}

/// Single forward pass over a trace, flagging first occurrences.
pub struct Classifier<'a> {
    inner: std::slice::Iter<'a, TagAssignment>,
    seen_items: Vec<bool>,
    seen_tags: Vec<bool>,
    seen_users: Vec<bool>,
}

#[inline]
fn first_sighting(seen: &mut [bool], id: u32) -> bool {
    !std::mem::replace(&mut seen[id as usize], true)
}

impl Iterator for Classifier<'_> {
    type Item = ClassifiedAssignment;

    fn next(&mut self) -> Option<ClassifiedAssignment> {
        let a = *self.inner.next()?;
        Some(ClassifiedAssignment {
            assignment: a,
            item_new: first_sighting(&mut self.seen_items, a.item.0),
            tag_new: first_sighting(&mut self.seen_tags, a.tag.0),
            user_new: first_sighting(&mut self.seen_users, a.user.0),
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.inner.size_hint()
    }
}

impl ExactSizeIterator for Classifier<'_> {}

pub fn classify(trace: &Trace) -> Classifier<'_> {
    Classifier {
        inner: trace.assignments().iter(),
        seen_items: vec![false; trace.num_items()],
        seen_tags: vec![false; trace.num_tags()],
        seen_users: vec![false; trace.num_users()],
    }
}

pub fn utc_day(ts: Timestamp) -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).unwrap() + chrono::Days::new(ts.div_euclid(SECONDS_PER_DAY) as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailyReuseRecord<S> {
    pub day: NaiveDate,
    pub total: u64,
    pub new_count: u64,
    pub reused_count: u64,
    pub reused_pct: S,
}

impl<S: Scalar> DailyReuseRecord<S> {
    fn from_counts(day: NaiveDate, total: u64, new_count: u64) -> Self {
        let reused_count = total - new_count;
        DailyReuseRecord {
            day,
            total,
            new_count,
            reused_count,
            reused_pct: S::ratio(reused_count, total) * S::hundred(),
        }
    }
}

/// Daily reuse along one dimension, sorted by day. Days without activity are
/// absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReuseSeries<S> {
    pub dimension: Dimension,
    /// Counts distinct entities per day instead of assignments.
    pub distinct: bool,
    pub records: Vec<DailyReuseRecord<S>>,
}

/// Assignment-level daily series: `total` is the day's assignment count and
/// `reused_count` those whose `dimension` entity was not new.
pub fn daily_series<S, I>(classified: I, dimension: Dimension) -> ReuseSeries<S>
where
    S: Scalar,
    I: IntoIterator<Item = ClassifiedAssignment>,
{
    let mut days: BTreeMap<i64, (u64, u64)> = BTreeMap::new();
    for c in classified {
        let slot = days.entry(c.assignment.timestamp.div_euclid(SECONDS_PER_DAY)).or_default();
        slot.0 += 1;
        slot.1 += u64::from(c.is_new(dimension));
    }
    let records = days
        .into_iter()
        .map(|(day, (total, new))| DailyReuseRecord::from_counts(utc_day(day * SECONDS_PER_DAY), total, new))
        .collect();
    ReuseSeries { dimension, distinct: false, records }
}

/// Entity-level daily series: `total` is the number of distinct entities
/// active on the day, `new_count` those first seen that day.
pub fn daily_series_distinct<S: Scalar>(trace: &Trace, dimension: Dimension) -> ReuseSeries<S> {
    const NEVER: i64 = i64::MIN;
    let n = trace.cardinality(dimension);
    let mut first_day = vec![NEVER; n];
    let mut last_counted = vec![NEVER; n];
    let mut days: BTreeMap<i64, (u64, u64)> = BTreeMap::new();
    for a in trace.assignments() {
        let day = a.timestamp.div_euclid(SECONDS_PER_DAY);
        let e = dimension.entity(a) as usize;
        if first_day[e] == NEVER {
            first_day[e] = day;
        }
        if last_counted[e] != day {
            last_counted[e] = day;
            let slot = days.entry(day).or_default();
            slot.0 += 1;
            slot.1 += u64::from(first_day[e] == day);
        }
    }
    let records = days
        .into_iter()
        .map(|(day, (total, new))| DailyReuseRecord::from_counts(utc_day(day * SECONDS_PER_DAY), total, new))
        .collect();
    ReuseSeries { dimension, distinct: true, records }
}

/// Table-style summary of a daily series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReuseSummary<S> {
    pub dimension: Dimension,
    pub days: u64,
    pub mean_abs: S,
    pub sd_abs: S,
    pub median_abs: S,
    pub mean_pct: S,
    pub sd_pct: S,
    pub median_pct: S,
}

impl<S: Scalar> ReuseSeries<S> {
    pub fn summarize(&self) -> Result<ReuseSummary<S>> {
        if self.records.is_empty() {
            return Err(Error::EmptyInput("reuse series has no days"));
        }
        let mut abs: Vec<S> = self.records.iter().map(|r| S::from_count(r.reused_count)).collect();
        let mut pct: Vec<S> = self.records.iter().map(|r| r.reused_pct).collect();
        let a = stats::moments(&mut abs)?;
        let p = stats::moments(&mut pct)?;
        Ok(ReuseSummary {
            dimension: self.dimension,
            days: self.records.len() as u64,
            mean_abs: a.mean,
            sd_abs: a.sd,
            median_abs: a.median,
            mean_pct: p.mean,
            sd_pct: p.sd,
            median_pct: p.median,
        })
    }

    /// `day,total,new_count,reused_count,reused_pct`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["day", "total", "new_count", "reused_count", "reused_pct"])?;
        for r in &self.records {
            w.write_record([
                r.day.to_string(),
                r.total.to_string(),
                r.new_count.to_string(),
                r.reused_count.to_string(),
                r.reused_pct.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
