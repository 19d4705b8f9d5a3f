//! Controlled timestamp anomalies for validation runs.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{add_seconds, seconds_between, EventLog, Lifecycle, Trace};

/// Which traces an anomaly applies to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSelector {
    Ids(Vec<String>),
    /// Positions in log order.
    Indices(Vec<usize>),
    /// `n` traces drawn with the anomaly's seed among those containing the activity.
    Sample(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnomalyKind {
    /// Moves each complete so the instance lasts `factor` times as long.
    StretchDuration { factor: f64 },
    /// Same as a stretch with `factor < 1`.
    ReduceDuration { factor: f64 },
    /// Moves each start event by `offset_s` seconds.
    DelayStart { offset_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub selector: TraceSelector,
    pub activity: String,
    #[serde(flatten)]
    pub kind: AnomalyKind,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum InjectError {
    #[error("selector for '{activity}' matches no trace")]
    NoTrace { activity: String },
    #[error("activity '{activity}' has no {what} event in the selected traces")]
    NoEvent { activity: String, what: &'static str },
    #[error("anomaly factor must be a positive number, got {0}")]
    Factor(f64),
    #[error("start offset must be finite, got {0}")]
    Offset(f64),
    #[error("sample of {wanted} traces requested but only {available} contain '{activity}'")]
    Sample {
        activity: String,
        wanted: usize,
        available: usize,
    },
}

/// One applied anomaly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub trace_id: String,
    pub activity: String,
    pub events_moved: usize,
}

fn has_activity(trace: &Trace, activity: &str) -> bool {
    trace.events.iter().any(|e| e.activity == activity)
}

fn select(log: &EventLog, anomaly: &Anomaly) -> Result<Vec<usize>, InjectError> {
    let picked: Vec<usize> = match &anomaly.selector {
        TraceSelector::Ids(ids) => {
            let ids: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
            (0..log.traces.len())
                .filter(|&i| ids.contains(log.traces[i].trace_id.as_str()))
                .collect()
        }
        TraceSelector::Indices(ix) => {
            let ix: BTreeSet<usize> = ix.iter().copied().collect();
            ix.into_iter().filter(|&i| i < log.traces.len()).collect()
        }
        TraceSelector::Sample(n) => {
            let pool: Vec<usize> = (0..log.traces.len())
                .filter(|&i| has_activity(&log.traces[i], &anomaly.activity))
                .collect();
            if *n > pool.len() {
                return Err(InjectError::Sample {
                    activity: anomaly.activity.clone(),
                    wanted: *n,
                    available: pool.len(),
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(anomaly.seed);
            let mut chosen: Vec<usize> = sample(&mut rng, pool.len(), *n)
                .into_iter()
                .map(|k| pool[k])
                .collect();
            chosen.sort_unstable();
            chosen
        }
    };
    if picked.is_empty() {
        return Err(InjectError::NoTrace {
            activity: anomaly.activity.clone(),
        });
    }
    Ok(picked)
}

fn apply(trace: &mut Trace, activity: &str, kind: AnomalyKind) -> usize {
    let mut moved = 0;
    match kind {
        AnomalyKind::StretchDuration { factor } | AnomalyKind::ReduceDuration { factor } => {
            if factor == 1.0 {
                return 0;
            }
            let mut open = None;
            for ev in trace.events.iter_mut().filter(|e| e.activity == activity) {
                match ev.lifecycle {
                    Lifecycle::Start => open = Some(ev.timestamp),
                    Lifecycle::Complete => {
                        if let Some(start) = open.take() {
                            let d = seconds_between(start, ev.timestamp);
                            ev.timestamp = add_seconds(start, d * factor);
                            moved += 1;
                        }
                    }
                    Lifecycle::Other(_) => {}
                }
            }
        }
        AnomalyKind::DelayStart { offset_s } => {
            for ev in trace.events.iter_mut() {
                if ev.activity == activity && ev.lifecycle == Lifecycle::Start {
                    ev.timestamp = add_seconds(ev.timestamp, offset_s);
                    moved += 1;
                }
            }
        }
    }
    if moved > 0 {
        trace.events.sort_by_key(|e| e.timestamp);
    }
    moved
}

/// Applies every anomaly in order and returns the modified log with an
/// account of what moved. An empty plan returns the log unchanged.
pub fn inject_anomalies(
    log: &EventLog,
    plan: &[Anomaly],
) -> Result<(EventLog, Vec<Injection>), InjectError> {
    let mut out = log.clone();
    let mut applied = Vec::new();
    for anomaly in plan {
        match anomaly.kind {
            AnomalyKind::StretchDuration { factor } | AnomalyKind::ReduceDuration { factor } => {
                if !(factor > 0.0) || !factor.is_finite() {
                    return Err(InjectError::Factor(factor));
                }
            }
            AnomalyKind::DelayStart { offset_s } => {
                if !offset_s.is_finite() {
                    return Err(InjectError::Offset(offset_s));
                }
            }
        }
        let (wanted, what) = match anomaly.kind {
            AnomalyKind::DelayStart { .. } => (Lifecycle::Start, "start"),
            _ => (Lifecycle::Complete, "complete"),
        };
        let targets = select(&out, anomaly)?;
        let eligible = targets.iter().any(|&i| {
            out.traces[i]
                .events
                .iter()
                .any(|e| e.activity == anomaly.activity && e.lifecycle == wanted)
        });
        if !eligible {
            return Err(InjectError::NoEvent {
                activity: anomaly.activity.clone(),
                what,
            });
        }
        for i in targets {
            let trace = &mut out.traces[i];
            let moved = apply(trace, &anomaly.activity, anomaly.kind);
            applied.push(Injection {
                trace_id: trace.trace_id.clone(),
                activity: anomaly.activity.clone(),
                events_moved: moved,
            });
        }
    }
    Ok((out, applied))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_timestamp, Event, Timestamp};

    fn at(s: f64) -> Timestamp {
        add_seconds(parse_timestamp("2021-03-01T08:00:00Z").unwrap(), s)
    }

    fn log() -> EventLog {
        let trace = |id: &str, off: f64| {
            Trace::new(
                id,
                vec![
                    Event::new(id, "A", Lifecycle::Start, at(off)),
                    Event::new(id, "A", Lifecycle::Complete, at(off + 10.0)),
                    Event::new(id, "B", Lifecycle::Start, at(off + 12.0)),
                    Event::new(id, "B", Lifecycle::Complete, at(off + 20.0)),
                ],
            )
        };
        EventLog::new("t", (0..5).map(|i| trace(&format!("c{i}"), i as f64 * 100.0)).collect())
    }

    fn anomaly(selector: TraceSelector, activity: &str, kind: AnomalyKind) -> Anomaly {
        Anomaly {
            selector,
            activity: activity.into(),
            kind,
            seed: 7,
        }
    }

    #[test]
    fn empty_plan_is_identity() {
        let (out, applied) = inject_anomalies(&log(), &[]).unwrap();
        assert_eq!(out, log());
        assert!(applied.is_empty());
    }

    #[test]
    fn unit_factor_is_identity() {
        let plan = [anomaly(
            TraceSelector::Indices(vec![0, 1, 2]),
            "A",
            AnomalyKind::StretchDuration { factor: 1.0 },
        )];
        assert_eq!(inject_anomalies(&log(), &plan).unwrap().0, log());
    }

    #[test]
    fn stretch_moves_only_the_complete_and_resorts() {
        let plan = [anomaly(
            TraceSelector::Ids(vec!["c1".into()]),
            "A",
            AnomalyKind::StretchDuration { factor: 20.0 },
        )];
        let (out, applied) = inject_anomalies(&log(), &plan).unwrap();
        assert_eq!(applied[0].events_moved, 1);
        let t = &out.traces[1];
        let names: Vec<_> = t.events.iter().map(|e| (e.activity.as_str(), e.lifecycle.as_str())).collect();
        assert_eq!(
            names,
            [("A", "start"), ("B", "start"), ("B", "complete"), ("A", "complete")]
        );
        assert_eq!(t.events[3].timestamp, at(300.0));
        assert_eq!(out.traces[0], log().traces[0]);
    }

    #[test]
    fn delay_start_moves_one_event() {
        let plan = [anomaly(
            TraceSelector::Indices(vec![4]),
            "B",
            AnomalyKind::DelayStart { offset_s: 3600.0 },
        )];
        let (out, _) = inject_anomalies(&log(), &plan).unwrap();
        let before = &log().traces[4].events;
        let after = &out.traces[4].events;
        let changed: Vec<_> = before
            .iter()
            .filter(|e| !after.contains(e))
            .collect();
        assert_eq!(changed.len(), 1);
        assert_eq!(changed[0].activity, "B");
        assert!(after.iter().any(|e| e.timestamp == at(400.0 + 12.0 + 3600.0)));
    }

    #[test]
    fn empty_selection_is_an_error() {
        let plan = [anomaly(
            TraceSelector::Ids(vec!["nope".into()]),
            "A",
            AnomalyKind::StretchDuration { factor: 2.0 },
        )];
        assert!(matches!(inject_anomalies(&log(), &plan), Err(InjectError::NoTrace { .. })));
        let plan = [anomaly(
            TraceSelector::Indices(vec![0]),
            "Z",
            AnomalyKind::DelayStart { offset_s: 1.0 },
        )];
        assert!(matches!(inject_anomalies(&log(), &plan), Err(InjectError::NoEvent { .. })));
        let plan = [anomaly(
            TraceSelector::Indices(vec![0]),
            "A",
            AnomalyKind::StretchDuration { factor: 0.0 },
        )];
        assert_eq!(inject_anomalies(&log(), &plan).unwrap_err(), InjectError::Factor(0.0));
    }

    #[test]
    fn sampling_is_seeded() {
        let plan = [anomaly(
            TraceSelector::Sample(2),
            "A",
            AnomalyKind::ReduceDuration { factor: 0.1 },
        )];
        let a = inject_anomalies(&log(), &plan).unwrap();
        let b = inject_anomalies(&log(), &plan).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1.len(), 2);
        let plan = [anomaly(TraceSelector::Sample(9), "A", AnomalyKind::ReduceDuration { factor: 0.1 })];
        assert!(matches!(inject_anomalies(&log(), &plan), Err(InjectError::Sample { .. })));
    }

    #[test]
    fn plan_json_shape() {
        let json = r#"[{"selector": {"ids": ["c0"]}, "activity": "A", "kind": "stretch-duration", "factor": 20, "seed": 1}]"#;
        let plan: Vec<Anomaly> = serde_json::from_str(json).unwrap();
        assert_eq!(plan[0].kind, AnomalyKind::StretchDuration { factor: 20.0 });
    }
}
