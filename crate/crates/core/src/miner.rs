//! Temporal profile mining.
//!
//! One pass per trace collects duration samples (start to matching complete of
//! the same activity) and distance samples (last complete to the next start).
//! Statistics are computed after every trace has been scanned. Distances with
//! fewer than `min_support` samples are dropped; durations are always kept.

use std::collections::{BTreeMap, HashMap};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{seconds_between, EventLog, Lifecycle, Timestamp, Trace};
use crate::model::{DistanceKey, DistanceStats, KeyKind, TemporalProfile};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StddevMode {
    #[default]
    Population,
    Sample,
}

impl StddevMode {
    pub fn other(self) -> StddevMode {
        match self {
            StddevMode::Population => StddevMode::Sample,
            StddevMode::Sample => StddevMode::Population,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinerConfig {
    /// Minimum number of samples for a distance to stay in the profile (κ of
    /// the mining step).
    pub min_support: u64,
    #[serde(default)]
    pub stddev_mode: StddevMode,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            min_support: 0,
            stddev_mode: StddevMode::Population,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("no samples")]
    Empty,
    #[error("non-finite sample {0}")]
    NonFinite(f64),
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Count, mean, standard deviation, min and max of `samples` (seconds).
///
/// Samples are sorted first so the result does not depend on their order.
pub fn stats_of(samples: &[f64], mode: StddevMode) -> Result<DistanceStats, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    if let Some(&bad) = samples.iter().find(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(bad));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);

    let mut mean = compensated_sum(sorted.iter().copied()) / n as f64;
    // Second pass removes the residual rounding error of the first.
    mean += compensated_sum(sorted.iter().map(|x| x - mean)) / n as f64;
    let mean = mean.clamp(min, max);

    let squares = compensated_sum(sorted.iter().map(|x| (x - mean) * (x - mean)));
    let denom = match mode {
        StddevMode::Population => n as f64,
        StddevMode::Sample if n > 1 => (n - 1) as f64,
        StddevMode::Sample => 1.0,
    };
    Ok(DistanceStats {
        n: n as u64,
        mean,
        stddev: (squares / denom).sqrt(),
        min,
        max,
    })
}

/// Profile plus counters describing how it was obtained.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MiningOutcome {
    pub profile: TemporalProfile,
    pub duration_samples: usize,
    /// Distance samples before the support filter.
    pub distance_samples: usize,
    pub filtered_distance_keys: usize,
    /// Starts that overwrote a still-open start of the same activity.
    pub repeated_starts: usize,
    /// Samples below zero; only possible for out-of-order input.
    pub negative_samples: usize,
}

/// Raw samples per key, before statistics.
pub type SampleTable = BTreeMap<DistanceKey, Vec<f64>>;

#[derive(Debug, Default)]
struct Collector {
    samples: SampleTable,
    repeated_starts: usize,
    negative_samples: usize,
}

impl Collector {
    fn push(&mut self, key: DistanceKey, value: f64) {
        if value < 0.0 {
            self.negative_samples += 1;
        }
        self.samples.entry(key).or_default().push(value);
    }

    fn scan(&mut self, trace: &Trace) {
        let mut open_starts: HashMap<&str, Timestamp> = HashMap::new();
        let mut last_complete: Option<(&str, Timestamp)> = None;
        for event in &trace.events {
            match event.lifecycle {
                Lifecycle::Start => {
                    if open_starts
                        .insert(&event.activity, event.timestamp)
                        .is_some()
                    {
                        self.repeated_starts += 1;
                    }
                    if let Some((prev, at)) = last_complete {
                        let key = DistanceKey::distance(prev, event.activity.as_str());
                        self.push(key, seconds_between(at, event.timestamp));
                    }
                }
                Lifecycle::Complete => {
                    if let Some(started) = open_starts.remove(event.activity.as_str()) {
                        let key = DistanceKey::duration(event.activity.as_str());
                        self.push(key, seconds_between(started, event.timestamp));
                    }
                    last_complete = Some((&event.activity, event.timestamp));
                }
                Lifecycle::Other(_) => {}
            }
        }
    }
}

/// Collects raw duration and distance samples without computing statistics.
pub fn collect_samples(log: &EventLog) -> SampleTable {
    let mut c = Collector::default();
    log.traces.iter().for_each(|t| c.scan(t));
    c.samples
}

pub fn mine(log: &EventLog, config: &MinerConfig) -> MiningOutcome {
    let mut collector = Collector::default();
    for trace in &log.traces {
        collector.scan(trace);
    }
    if collector.negative_samples > 0 {
        warn!(
            "{} negative samples: the log is not timestamp-ordered within traces",
            collector.negative_samples
        );
    }
    let mut outcome = MiningOutcome {
        repeated_starts: collector.repeated_starts,
        negative_samples: collector.negative_samples,
        ..MiningOutcome::default()
    };
    for (key, samples) in collector.samples {
        match key.kind {
            KeyKind::Duration => outcome.duration_samples += samples.len(),
            KeyKind::Distance => {
                outcome.distance_samples += samples.len();
                if (samples.len() as u64) < config.min_support {
                    outcome.filtered_distance_keys += 1;
                    continue;
                }
            }
        }
        let stats = stats_of(&samples, config.stddev_mode).expect("sample lists are non-empty");
        outcome.profile.insert(key, stats);
    }
    outcome
}

pub fn mine_profile(log: &EventLog, config: &MinerConfig) -> TemporalProfile {
    mine(log, config).profile
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_timestamp, Event};

    const EPS: f64 = 1e-12;

    fn at(secs: f64) -> Timestamp {
        crate::ingest::add_seconds(parse_timestamp("2020-01-01T00:00:00Z").unwrap(), secs)
    }

    fn ev(trace: &str, activity: &str, lc: Lifecycle, secs: f64) -> Event {
        Event::new(trace, activity, lc, at(secs))
    }

    #[test]
    fn stats_of_small_sets() {
        let s = stats_of(&[4.0, 6.0, 8.0], StddevMode::Population).unwrap();
        assert_eq!((s.n, s.mean, s.min, s.max), (3, 6.0, 4.0, 8.0));
        // sqrt(8/3), computed by hand
        assert!((s.stddev - 1.632_993_161_855_452).abs() < EPS);
        let s = stats_of(&[4.0, 6.0, 8.0], StddevMode::Sample).unwrap();
        assert_eq!(s.stddev, 2.0);

        let s = stats_of(&[5.0], StddevMode::Sample).unwrap();
        assert_eq!((s.mean, s.stddev), (5.0, 0.0));

        for x in [0.1, 1.0 / 3.0, 7.77e5, -2.5] {
            let s = stats_of(&[x, x, x], StddevMode::Population).unwrap();
            assert_eq!(s.stddev, 0.0);
            assert_eq!(s.mean, x);
        }
        assert_eq!(stats_of(&[], StddevMode::Population), Err(StatsError::Empty));
        assert!(matches!(
            stats_of(&[1.0, f64::NAN], StddevMode::Population),
            Err(StatsError::NonFinite(_))
        ));
    }

    #[test]
    fn stats_mean_is_stable_over_wide_ranges() {
        // 250k samples spanning 0.1 .. 1e6 s; exact mean from integer arithmetic.
        let n = 250_000u64;
        let samples: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { 0.1 } else { 1e6 + (i % 1000) as f64 })
            .collect();
        let exact_sum: f64 = {
            // Integer tenths avoid rounding in the reference.
            let tenths: u128 = (0..n)
                .map(|i| if i % 2 == 0 { 1u128 } else { (1e7 as u128) + 10 * (i % 1000) as u128 })
                .sum();
            tenths as f64 / 10.0
        };
        let exact_mean = exact_sum / n as f64;
        let s = stats_of(&samples, StddevMode::Population).unwrap();
        assert!(((s.mean - exact_mean) / exact_mean).abs() < 1e-6);
        assert!(((s.mean - exact_mean) / exact_mean).abs() < 1e-12);
    }

    #[test]
    fn single_trace_single_duration() {
        let log = EventLog::new(
            "one",
            vec![Trace::new(
                "t",
                vec![
                    ev("t", "A", Lifecycle::Start, 0.0),
                    ev("t", "A", Lifecycle::Complete, 10.0),
                ],
            )],
        );
        let p = mine_profile(&log, &MinerConfig::default());
        assert_eq!(p.len(), 1);
        let a = p.duration("A").unwrap();
        assert_eq!((a.n, a.mean, a.stddev), (1, 10.0, 0.0));
    }

    /// Durations {4, 6, 8} for A and distances {1, 3} for A→B.
    fn three_trace_log() -> EventLog {
        let t = |id: &str, dur: f64, gap: Option<f64>| {
            let mut events = vec![
                ev(id, "A", Lifecycle::Start, 0.0),
                ev(id, "A", Lifecycle::Complete, dur),
            ];
            if let Some(g) = gap {
                events.push(ev(id, "B", Lifecycle::Start, dur + g));
            }
            Trace::new(id, events)
        };
        EventLog::new(
            "three",
            vec![t("t1", 4.0, Some(1.0)), t("t2", 6.0, Some(3.0)), t("t3", 8.0, None)],
        )
    }

    #[test]
    fn three_trace_synthetic_log() {
        let outcome = mine(&three_trace_log(), &MinerConfig::default());
        let a = outcome.profile.duration("A").unwrap();
        assert_eq!(a.mean, 6.0);
        assert!((a.stddev - 1.632993).abs() < 1e-6);
        let ab = outcome.profile.get(&DistanceKey::distance("A", "B")).unwrap();
        assert_eq!((ab.n, ab.mean, ab.stddev), (2, 2.0, 1.0));
        assert_eq!(outcome.duration_samples, 3);
        assert_eq!(outcome.distance_samples, 2);
    }

    #[test]
    fn support_filter_applies_to_distances_only() {
        let config = MinerConfig {
            min_support: 3,
            ..MinerConfig::default()
        };
        let outcome = mine(&three_trace_log(), &config);
        assert!(outcome.profile.duration("A").is_some());
        assert_eq!(outcome.profile.distances().count(), 0);
        assert_eq!(outcome.filtered_distance_keys, 1);
    }

    #[test]
    fn complete_only_events_are_distance_origins() {
        let log = EventLog::new(
            "sub",
            vec![Trace::new(
                "t",
                vec![
                    ev("t", "A_PREACCEPTED", Lifecycle::Complete, 0.0),
                    ev("t", "W_Completeren aanvraag", Lifecycle::Other("SCHEDULE".into()), 1.0),
                    ev("t", "W_Completeren aanvraag", Lifecycle::Start, 5.0),
                    ev("t", "W_Completeren aanvraag", Lifecycle::Complete, 9.0),
                ],
            )],
        );
        let p = mine_profile(&log, &MinerConfig::default());
        assert!(p.duration("A_PREACCEPTED").is_none());
        let d = p
            .get(&DistanceKey::distance("A_PREACCEPTED", "W_Completeren aanvraag"))
            .unwrap();
        assert_eq!(d.mean, 5.0);
        assert_eq!(p.duration("W_Completeren aanvraag").unwrap().mean, 4.0);
    }

    #[test]
    fn repeated_start_is_last_write_wins() {
        let log = EventLog::new(
            "rep",
            vec![Trace::new(
                "t",
                vec![
                    ev("t", "A", Lifecycle::Start, 0.0),
                    ev("t", "A", Lifecycle::Start, 3.0),
                    ev("t", "A", Lifecycle::Complete, 10.0),
                ],
            )],
        );
        let outcome = mine(&log, &MinerConfig::default());
        assert_eq!(outcome.profile.duration("A").unwrap().mean, 7.0);
        assert_eq!(outcome.repeated_starts, 1);
    }

    #[test]
    fn trace_order_does_not_matter() {
        let log = three_trace_log();
        let mut reversed = log.clone();
        reversed.traces.reverse();
        assert_eq!(
            mine_profile(&log, &MinerConfig::default()),
            mine_profile(&reversed, &MinerConfig::default())
        );
    }
}
