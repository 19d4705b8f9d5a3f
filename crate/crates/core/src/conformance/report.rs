use std::io::{self, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CheckerConfig;
use crate::ingest::Timestamp;
use crate::model::DistanceKey;

/// JSON has no infinity; non-finite values are written as `"inf"`.
pub(crate) mod lossless_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_sign_positive() {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("not a number: {t}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationKind {
    Duration,
    Distance,
    UnfinishedEstimate,
}

/// One detected temporal deviation. Immutable once emitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRecord {
    #[serde(rename = "trace")]
    pub trace_id: String,
    pub kind: DeviationKind,
    pub key: DistanceKey,
    #[serde(rename = "observed_s")]
    pub observed: f64,
    #[serde(with = "lossless_f64")]
    pub z: f64,
    #[serde(with = "lossless_f64")]
    pub cost: f64,
    pub at: Timestamp,
}

impl DeviationRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Final totals of one process instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    #[serde(rename = "trace")]
    pub trace_id: String,
    pub events: usize,
    pub structural: f64,
    #[serde(with = "lossless_f64")]
    pub temporal: f64,
    #[serde(with = "lossless_f64")]
    pub combined: f64,
    pub deviations: usize,
    pub evicted: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub events: u64,
    /// Complete events with a matching open start.
    pub duration_observations: u64,
    /// ... of which the profile had statistics for.
    pub duration_checked: u64,
    pub duration_deviations: u64,
    /// Start events preceded by a complete in their trace.
    pub distance_observations: u64,
    pub distance_checked: u64,
    pub distance_deviations: u64,
    pub unfinished_penalties: u64,
    pub foreign_events: u64,
    pub evictions: u64,
    pub resurrections: u64,
    pub repeated_starts: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub config: CheckerConfig,
    pub counters: Counters,
    pub traces: Vec<TraceReport>,
    pub deviations: Vec<DeviationRecord>,
}

impl CostReport {
    pub fn new(config: CheckerConfig) -> CostReport {
        CostReport {
            config,
            counters: Counters::default(),
            traces: Vec::new(),
            deviations: Vec::new(),
        }
    }

    pub fn trace(&self, id: &str) -> Option<&TraceReport> {
        self.traces.iter().find(|t| t.trace_id == id)
    }

    pub fn total_deviations(&self) -> usize {
        self.deviations.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(bytes: &[u8]) -> serde_json::Result<CostReport> {
        serde_json::from_slice(bytes)
    }

    /// Deviation records as CSV, columns in record field order.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trace", "kind", "key", "observed_s", "z", "cost", "at"])?;
        for r in &self.deviations {
            let kind = match r.kind {
                DeviationKind::Duration => "duration",
                DeviationKind::Distance => "distance",
                DeviationKind::UnfinishedEstimate => "unfinished_estimate",
            };
            w.write_record([
                r.trace_id.as_str(),
                kind,
                &r.key.to_string(),
                &r.observed.to_string(),
                &r.z.to_string(),
                &r.cost.to_string(),
                &r.at.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true),
            ])?;
        }
        w.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_timestamp;

    fn record(z: f64) -> DeviationRecord {
        DeviationRecord {
            trace_id: "t1".into(),
            kind: DeviationKind::Distance,
            key: DistanceKey::distance("A", "B, C"),
            observed: 10.0,
            z,
            cost: 2.0 * z,
            at: parse_timestamp("2020-01-01T00:00:29Z").unwrap(),
        }
    }

    #[test]
    fn record_line_format() {
        let line = record(14.0).to_line();
        assert_eq!(
            line,
            r#"{"trace":"t1","kind":"distance","key":"distance:A->B, C","observed_s":10.0,"z":14.0,"cost":28.0,"at":"2020-01-01T00:00:29Z"}"#
        );
        let back: DeviationRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, record(14.0));
    }

    #[test]
    fn infinite_z_survives_json() {
        let line = record(f64::INFINITY).to_line();
        assert!(line.contains(r#""z":"inf""#));
        let back: DeviationRecord = serde_json::from_str(&line).unwrap();
        assert!(back.z.is_infinite());
    }

    #[test]
    fn csv_quotes_keys() {
        let mut report = CostReport::new(CheckerConfig::default());
        report.deviations.push(record(14.0));
        let mut out = Vec::new();
        report.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("trace,kind,key,observed_s,z,cost,at"));
        assert_eq!(
            lines.next(),
            Some("t1,distance,\"distance:A->B, C\",10,14,28,2020-01-01T00:00:29Z")
        );
    }
}
