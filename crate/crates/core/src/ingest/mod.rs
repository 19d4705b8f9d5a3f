//! Event ingestion: XES logs, the line protocol, and log replay.
//!
//! Every source is normalized to [`Event`] values carrying an absolute UTC
//! timestamp. Offline logs are grouped into [`Trace`]s, streams are plain
//! iterators of events in arrival order.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub mod replay;
pub mod stream;
pub mod xes;

pub use replay::{replay, Replay, ReplayOptions};
pub use stream::{decode_line, encode_line, LineError, LineEvents, StreamSource};
pub use xes::{parse_xes, parse_xes_bytes, parse_xes_path, XesError, XesParse};

pub type Timestamp = DateTime<Utc>;

/// Lifecycle transition of an event.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lifecycle {
    Start,
    Complete,
    Other(String),
}

impl Lifecycle {
    /// Case-insensitive: `START`, `Start` and `start` all map to `Start`.
    pub fn parse(raw: &str) -> Lifecycle {
        let trimmed = raw.trim();
        if trimmed.eq_ignore_ascii_case("start") {
            Lifecycle::Start
        } else if trimmed.eq_ignore_ascii_case("complete") {
            Lifecycle::Complete
        } else {
            Lifecycle::Other(trimmed.to_string())
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Lifecycle::Start => "start",
            Lifecycle::Complete => "complete",
            Lifecycle::Other(s) => s,
        }
    }
}

impl fmt::Display for Lifecycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Lifecycle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Lifecycle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Ok(Lifecycle::parse(&raw))
    }
}

/// One lifecycle transition of one activity in one process instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub trace_id: String,
    pub activity: String,
    pub lifecycle: Lifecycle,
    pub timestamp: Timestamp,
    pub attrs: BTreeMap<String, String>,
}

impl Event {
    pub fn new(
        trace_id: impl Into<String>,
        activity: impl Into<String>,
        lifecycle: Lifecycle,
        timestamp: Timestamp,
    ) -> Event {
        Event {
            trace_id: trace_id.into(),
            activity: activity.into(),
            lifecycle,
            timestamp,
            attrs: BTreeMap::new(),
        }
    }

    pub fn is_start(&self) -> bool {
        self.lifecycle == Lifecycle::Start
    }

    pub fn is_complete(&self) -> bool {
        self.lifecycle == Lifecycle::Complete
    }
}

/// The events of one process instance, sorted by timestamp (stable, so ties
/// keep log order).
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub trace_id: String,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn new(trace_id: impl Into<String>, mut events: Vec<Event>) -> Trace {
        let trace_id = trace_id.into();
        for e in &mut events {
            if e.trace_id != trace_id {
                e.trace_id = trace_id.clone();
            }
        }
        events.sort_by_key(|e| e.timestamp);
        Trace { trace_id, events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceMeta {
    pub name: String,
    pub trace_count: usize,
    pub event_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub traces: Vec<Trace>,
    pub source: SourceMeta,
}

impl EventLog {
    pub fn new(name: impl Into<String>, traces: Vec<Trace>) -> EventLog {
        let event_count = traces.iter().map(Trace::len).sum();
        EventLog {
            source: SourceMeta {
                name: name.into(),
                trace_count: traces.len(),
                event_count,
            },
            traces,
        }
    }

    pub fn event_count(&self) -> usize {
        self.traces.iter().map(Trace::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Splits into the first `n` traces (in log order) and the remainder.
    pub fn split_at(&self, n: usize) -> (EventLog, EventLog) {
        let n = n.min(self.traces.len());
        let head = self.traces[..n].to_vec();
        let tail = self.traces[n..].to_vec();
        (
            EventLog::new(format!("{}[..{}]", self.source.name, n), head),
            EventLog::new(format!("{}[{}..]", self.source.name, n), tail),
        )
    }

    /// `⌈fraction · N⌉` training traces, the rest for testing.
    pub fn split_fraction(&self, fraction: f64) -> (EventLog, EventLog) {
        self.split_at(split_point(self.traces.len(), fraction))
    }
}

pub fn split_point(trace_count: usize, fraction: f64) -> usize {
    let f = fraction.clamp(0.0, 1.0);
    ((trace_count as f64) * f).ceil() as usize
}

/// Seconds from `from` to `to`, negative when `to` precedes `from`.
pub fn seconds_between(from: Timestamp, to: Timestamp) -> f64 {
    let delta = to - from;
    match delta.num_nanoseconds() {
        Some(ns) => ns as f64 / 1e9,
        None => delta.num_milliseconds() as f64 / 1e3,
    }
}

/// Offsets a timestamp by fractional seconds (nanosecond resolution).
pub fn add_seconds(ts: Timestamp, seconds: f64) -> Timestamp {
    let ns = (seconds * 1e9).round();
    ts + chrono::TimeDelta::nanoseconds(ns as i64)
}

/// Parses RFC 3339 plus the ISO-8601 variants seen in XES exports
/// (`+0200` offsets, missing offset meaning UTC).
pub fn parse_timestamp(raw: &str) -> Option<Timestamp> {
    let raw = raw.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f%z", "%Y-%m-%d %H:%M:%S%.f%z"] {
        if let Ok(t) = DateTime::parse_from_str(raw, fmt) {
            return Some(t.with_timezone(&Utc));
        }
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = chrono::NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(t.and_utc());
        }
    }
    None
}
