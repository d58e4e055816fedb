//! Streaming trace ingestion with per-line validation.
//!
//! Malformed lines are counted and skipped; only an unreadable source or a
//! source with no usable record at all is fatal.

use std::io::BufRead;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::trace::{normalize_tag, Timestamp, Trace, TraceBuilder};

/// Field of a pipe-delimited record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Item,
    User,
    Timestamp,
    Tag,
    Skip,
}

/// Column order of a pipe-delimited dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipeLayout {
    columns: Vec<Column>,
}

impl Default for PipeLayout {
    /// `item|user|timestamp|tag`
    fn default() -> Self {
        PipeLayout { columns: vec![Column::Item, Column::User, Column::Timestamp, Column::Tag] }
    }
}

impl FromStr for PipeLayout {
    type Err = Error;

    /// Comma-separated column names, e.g. `user,item,tag,timestamp`; `-`
    /// marks a column to ignore.
    fn from_str(s: &str) -> Result<Self> {
        let columns = s
            .split(',')
            .map(|c| match c.trim() {
                "item" => Ok(Column::Item),
                "user" => Ok(Column::User),
                "timestamp" => Ok(Column::Timestamp),
                "tag" => Ok(Column::Tag),
                "-" | "_" => Ok(Column::Skip),
                other => Err(Error::config(format!("unknown pipe column `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        for required in [Column::Item, Column::User, Column::Timestamp, Column::Tag] {
            let n = columns.iter().filter(|&&c| c == required).count();
            if n != 1 {
                return Err(Error::config(format!(
                    "pipe layout must name {required:?} exactly once, found {n}"
                )));
            }
        }
        Ok(PipeLayout { columns })
    }
}

/// Input record format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Format {
    /// `user \t item \t tag \t timestamp`
    CanonicalTsv,
    /// Pipe-delimited CiteULike-style dump.
    CiteulikePipe(PipeLayout),
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical-tsv" | "tsv" => Ok(Format::CanonicalTsv),
            "citeulike-pipe" | "pipe" => Ok(Format::CiteulikePipe(PipeLayout::default())),
            other => Err(Error::config(format!("unknown trace format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Rejections {
    pub malformed: u64,
    pub empty_tag: u64,
    pub bad_timestamp: u64,
    pub duplicate: u64,
}

impl Rejections {
    pub fn total(&self) -> u64 {
        self.malformed + self.empty_tag + self.bad_timestamp + self.duplicate
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: Timestamp,
    pub end: Timestamp,
    pub start_utc: String,
    pub end_utc: String,
}

/// Accounting for every record line of the source.
///
/// `total_lines` counts record lines; blank and `#` comment lines are
/// reported separately in `skipped_lines`, so `parsed + rejected ==
/// total_lines` always holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub total_lines: u64,
    pub parsed: u64,
    pub rejected: u64,
    pub reasons: Rejections,
    pub skipped_lines: u64,
    pub span: Option<Span>,
    pub users: u64,
    pub items: u64,
    pub tags: u64,
    pub assignments: u64,
}

impl ValidationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl Span {
    fn new(start: Timestamp, end: Timestamp) -> Self {
        Span { start, end, start_utc: utc_string(start), end_utc: utc_string(end) }
    }
}

pub fn utc_string(ts: Timestamp) -> String {
    DateTime::from_timestamp(ts, 0)
        .map(|d| d.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        .unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TimeFormat {
    Epoch,
    Iso,
}

fn parse_epoch(s: &str) -> Option<Timestamp> {
    s.parse::<i64>().ok().filter(|&t| t >= 0)
}

/// ISO-8601 / RFC 3339 and the space-separated variants seen in SQL dumps.
/// Fractional seconds are truncated; values without an offset are UTC.
fn parse_iso(s: &str) -> Option<Timestamp> {
    if let Ok(d) = DateTime::parse_from_rfc3339(s) {
        return Some(d.timestamp());
    }
    for fmt in ["%Y-%m-%d %H:%M:%S%.f%#z", "%Y-%m-%dT%H:%M:%S%.f%#z"] {
        if let Ok(d) = DateTime::parse_from_str(s, fmt) {
            return Some(d.timestamp());
        }
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(d) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(d.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .map(|d| d.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp())
}

/// Integer epoch seconds or any accepted ISO-8601 form; `None` for
/// unparseable or pre-epoch values.
pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    let s = s.trim();
    parse_epoch(s).or_else(|| parse_iso(s).filter(|&t| t >= 0))
}

enum LineOutcome<'a> {
    Record { user: &'a str, item: &'a str, tag: String, ts: Timestamp },
    Malformed,
    EmptyTag,
    BadTimestamp,
}

struct LineParser {
    format: Format,
    time: Option<TimeFormat>,
}

impl LineParser {
    fn timestamp(&mut self, raw: &str) -> Option<Timestamp> {
        let raw = raw.trim();
        match self.time {
            Some(TimeFormat::Epoch) => parse_epoch(raw),
            Some(TimeFormat::Iso) => parse_iso(raw).filter(|&t| t >= 0),
            None => {
                if let Some(t) = parse_epoch(raw) {
                    self.time = Some(TimeFormat::Epoch);
                    Some(t)
                } else if let Some(t) = parse_iso(raw).filter(|&t| t >= 0) {
                    self.time = Some(TimeFormat::Iso);
                    Some(t)
                } else {
                    None
                }
            }
        }
    }

    fn parse<'a>(&mut self, line: &'a str) -> LineOutcome<'a> {
        let (user, item, tag, ts) = match &self.format {
            Format::CanonicalTsv => {
                let mut fields = line.split('\t');
                let (Some(user), Some(item), Some(tag), Some(ts), None) =
                    (fields.next(), fields.next(), fields.next(), fields.next(), fields.next())
                else {
                    return LineOutcome::Malformed;
                };
                (user, item, tag, ts)
            }
            Format::CiteulikePipe(layout) => {
                let fields: Vec<&str> = line.split('|').collect();
                if fields.len() != layout.columns.len() || line.contains('\t') {
                    return LineOutcome::Malformed;
                }
                let (mut user, mut item, mut tag, mut ts) = ("", "", "", "");
                for (col, value) in layout.columns.iter().zip(fields) {
                    match col {
                        Column::User => user = value,
                        Column::Item => item = value,
                        Column::Tag => tag = value,
                        Column::Timestamp => ts = value,
                        Column::Skip => {}
                    }
                }
                (user.trim(), item.trim(), tag, ts)
            }
        };
        if user.is_empty() || item.is_empty() {
            return LineOutcome::Malformed;
        }
        let tag = normalize_tag(tag);
        if tag.is_empty() {
            return LineOutcome::EmptyTag;
        }
        match self.timestamp(ts) {
            Some(ts) => LineOutcome::Record { user, item, tag, ts },
            None => LineOutcome::BadTimestamp,
        }
    }
}

/// Read a whole trace from `source` in a single pass.
pub fn parse_trace<R: BufRead>(mut source: R, format: &Format) -> Result<(Trace, ValidationReport)> {
    let mut parser = LineParser { format: format.clone(), time: None };
    let mut builder = TraceBuilder::default();
    let mut reasons = Rejections::default();
    let mut total_lines = 0u64;
    let mut skipped_lines = 0u64;
    let mut buf = Vec::new();

    for seq in 0u64.. {
        buf.clear();
        if source.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let raw = buf.strip_suffix(b"\n").unwrap_or(&buf);
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        if raw.iter().all(u8::is_ascii_whitespace) || raw.first() == Some(&b'#') {
            skipped_lines += 1;
            continue;
        }
        total_lines += 1;
        let Ok(line) = std::str::from_utf8(raw) else {
            reasons.malformed += 1;
            continue;
        };
        match parser.parse(line) {
            LineOutcome::Record { user, item, tag, ts } => builder.push(user, item, &tag, ts, seq),
            LineOutcome::Malformed => reasons.malformed += 1,
            LineOutcome::EmptyTag => reasons.empty_tag += 1,
            LineOutcome::BadTimestamp => reasons.bad_timestamp += 1,
        }
    }

    let (trace, duplicates) = builder.build()?;
    reasons.duplicate = duplicates;
    let (start, end) = trace.span();
    let report = ValidationReport {
        total_lines,
        parsed: trace.len() as u64,
        rejected: reasons.total(),
        reasons,
        skipped_lines,
        span: Some(Span::new(start, end)),
        users: trace.num_users() as u64,
        items: trace.num_items() as u64,
        tags: trace.num_tags() as u64,
        assignments: trace.len() as u64,
    };
    debug_assert_eq!(report.parsed + report.rejected, report.total_lines);
    Ok((trace, report))
}
