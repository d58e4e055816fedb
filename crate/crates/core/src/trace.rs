//! The tagging-community trace: users, items, tags and the time-ordered
//! sequence of tag assignments linking them.
//!
//! Entity identifiers are dense `u32` indices assigned in order of first
//! appearance in the sorted trace, so two traces holding the same events
//! always carry the same identifiers.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};
use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

pub const SECONDS_PER_DAY: i64 = 86_400;

macro_rules! entity_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

entity_id!(
    /// Index into [`Trace::users`].
    UserId
);
entity_id!(
    /// Index into [`Trace::items`].
    ItemId
);
entity_id!(
    /// Index into [`Trace::tags`].
    TagId
);

/// One event: `user` attached `tag` to `item` at `timestamp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TagAssignment {
    pub user: UserId,
    pub tag: TagId,
    pub item: ItemId,
    pub timestamp: Timestamp,
    /// Position in the source file, breaks timestamp ties.
    pub seq: u64,
}

impl TagAssignment {
    #[inline]
    fn order_key(&self) -> (Timestamp, u64) {
        (self.timestamp, self.seq)
    }
}

/// Which entity of an assignment a metric looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Item,
    Tag,
    User,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Item, Dimension::Tag, Dimension::User];

    #[inline]
    pub fn entity(self, a: &TagAssignment) -> u32 {
        match self {
            Dimension::Item => a.item.0,
            Dimension::Tag => a.tag.0,
            Dimension::User => a.user.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Item => "item",
            Dimension::Tag => "tag",
            Dimension::User => "user",
        }
    }
}

impl std::str::FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "item" => Ok(Dimension::Item),
            "tag" => Ok(Dimension::Tag),
            "user" => Ok(Dimension::User),
            other => Err(Error::config(format!("unknown dimension `{other}`"))),
        }
    }
}

/// Name table mapping dense ids to the original identifiers.
#[derive(Debug, Clone, Default)]
pub(crate) struct Interner {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Interner {
    pub(crate) fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = u32::try_from(self.names.len()).expect("more than u32::MAX entities");
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    /// Rebuild with ids ordered by first use in `order`, which must visit
    /// every interned id. Returns the old → new mapping.
    fn reorder(self, order: impl Iterator<Item = u32>) -> (Interner, Vec<u32>) {
        const UNSET: u32 = u32::MAX;
        let mut remap = vec![UNSET; self.names.len()];
        let mut names: Vec<Option<String>> = self.names.into_iter().map(Some).collect();
        let mut out = Interner::default();
        out.names.reserve(names.len());
        for old in order {
            let slot = &mut remap[old as usize];
            if *slot == UNSET {
                let name = names[old as usize].take().unwrap();
                *slot = out.names.len() as u32;
                out.index.insert(name.clone(), *slot);
                out.names.push(name);
            }
        }
        debug_assert!(remap.iter().all(|&r| r != UNSET));
        (out, remap)
    }

    fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    fn len(&self) -> usize {
        self.names.len()
    }
}

/// Time-ordered, duplicate-free multiset of tag assignments.
#[derive(Debug, Clone)]
pub struct Trace {
    assignments: Vec<TagAssignment>,
    users: Interner,
    items: Interner,
    tags: Interner,
}

impl Trace {
    /// Convenience constructor from `(user, item, tag, timestamp)` records,
    /// in source order. Tags are normalised as during parsing.
    pub fn from_records<'a, I>(records: I) -> Result<Trace>
    where
        I: IntoIterator<Item = (&'a str, &'a str, &'a str, Timestamp)>,
    {
        let mut b = TraceBuilder::default();
        for (seq, (user, item, tag, ts)) in records.into_iter().enumerate() {
            let tag = normalize_tag(tag);
            if user.is_empty() || item.is_empty() || tag.is_empty() || ts < 0 {
                return Err(Error::config(format!("invalid record #{seq}")));
            }
            b.push(user, item, &tag, ts, seq as u64);
        }
        b.build().map(|(trace, _)| trace)
    }

    pub fn assignments(&self) -> &[TagAssignment] {
        &self.assignments
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn num_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn users(&self) -> &[String] {
        &self.users.names
    }

    pub fn items(&self) -> &[String] {
        &self.items.names
    }

    pub fn tags(&self) -> &[String] {
        &self.tags.names
    }

    pub fn user_name(&self, id: UserId) -> &str {
        &self.users.names[id.index()]
    }

    pub fn item_name(&self, id: ItemId) -> &str {
        &self.items.names[id.index()]
    }

    pub fn tag_name(&self, id: TagId) -> &str {
        &self.tags.names[id.index()]
    }

    pub fn user_id(&self, name: &str) -> Option<UserId> {
        self.users.get(name).map(UserId)
    }

    pub fn item_id(&self, name: &str) -> Option<ItemId> {
        self.items.get(name).map(ItemId)
    }

    pub fn tag_id(&self, name: &str) -> Option<TagId> {
        self.tags.get(name).map(TagId)
    }

    /// Number of distinct entities along `dim`.
    pub fn cardinality(&self, dim: Dimension) -> usize {
        match dim {
            Dimension::Item => self.num_items(),
            Dimension::Tag => self.num_tags(),
            Dimension::User => self.num_users(),
        }
    }

    /// Name of entity `id` along `dim`.
    pub fn entity_name(&self, dim: Dimension, id: u32) -> &str {
        match dim {
            Dimension::Item => &self.items.names[id as usize],
            Dimension::Tag => &self.tags.names[id as usize],
            Dimension::User => &self.users.names[id as usize],
        }
    }

    /// `(first, last)` timestamp.
    pub fn span(&self) -> (Timestamp, Timestamp) {
        (
            self.assignments.first().unwrap().timestamp,
            self.assignments.last().unwrap().timestamp,
        )
    }

    /// Index of the first assignment with `timestamp >= ts`.
    pub fn partition_point(&self, ts: Timestamp) -> usize {
        self.assignments.partition_point(|a| a.timestamp < ts)
    }

    /// A standalone trace holding only `self.assignments()[range]`, with
    /// entity tables restricted to what that range references.
    pub fn restrict(&self, range: Range<usize>) -> Result<Trace> {
        let mut b = TraceBuilder::default();
        for a in &self.assignments[range] {
            b.push(
                self.user_name(a.user),
                self.item_name(a.item),
                self.tag_name(a.tag),
                a.timestamp,
                a.seq,
            );
        }
        b.build().map(|(t, _)| t)
    }

    /// Serialise as canonical TSV (`user \t item \t tag \t epoch-seconds`).
    pub fn write_canonical_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for a in &self.assignments {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                self.user_name(a.user),
                self.item_name(a.item),
                self.tag_name(a.tag),
                a.timestamp
            )?;
        }
        out.flush()
    }

    /// Same events in the same order with the same names, ignoring `seq`.
    pub fn same_events(&self, other: &Trace) -> bool {
        self.len() == other.len()
            && self.users.names == other.users.names
            && self.items.names == other.items.names
            && self.tags.names == other.tags.names
            && self
                .assignments
                .iter()
                .zip(&other.assignments)
                .all(|(a, b)| (a.user, a.item, a.tag, a.timestamp) == (b.user, b.item, b.tag, b.timestamp))
    }
}

/// Trim and case-fold a raw tag.
pub fn normalize_tag(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// Accumulates assignments in source order, then sorts, drops exact
/// duplicates and assigns canonical ids.
#[derive(Debug, Default)]
pub(crate) struct TraceBuilder {
    assignments: Vec<TagAssignment>,
    users: Interner,
    items: Interner,
    tags: Interner,
}

impl TraceBuilder {
    pub(crate) fn push(&mut self, user: &str, item: &str, tag: &str, timestamp: Timestamp, seq: u64) {
        let user = UserId(self.users.intern(user));
        let item = ItemId(self.items.intern(item));
        let tag = TagId(self.tags.intern(tag));
        self.assignments.push(TagAssignment { user, tag, item, timestamp, seq });
    }

    /// Returns the trace and the number of exact duplicates dropped.
    pub(crate) fn build(self) -> Result<(Trace, u64)> {
        let TraceBuilder { mut assignments, users, items, tags } = self;
        if assignments.is_empty() {
            return Err(Error::EmptyTrace);
        }

        // Duplicates share a timestamp, so grouping by the full quadruple
        // with seq last keeps the earliest occurrence of each.
        assignments.sort_unstable_by_key(|a| (a.timestamp, a.user, a.tag, a.item, a.seq));
        let before = assignments.len();
        assignments.dedup_by_key(|a| (a.timestamp, a.user, a.tag, a.item));
        let duplicates = (before - assignments.len()) as u64;
        assignments.sort_unstable_by_key(TagAssignment::order_key);

        let (users, user_map) = users.reorder(assignments.iter().map(|a| a.user.0));
        let (items, item_map) = items.reorder(assignments.iter().map(|a| a.item.0));
        let (tags, tag_map) = tags.reorder(assignments.iter().map(|a| a.tag.0));
        for a in &mut assignments {
            a.user = UserId(user_map[a.user.index()]);
            a.item = ItemId(item_map[a.item.index()]);
            a.tag = TagId(tag_map[a.tag.index()]);
        }

        Ok((Trace { assignments, users, items, tags }, duplicates))
    }
}
