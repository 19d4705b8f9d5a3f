//! Streaming checker with a bounded trace table, and its offline counterpart.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use chrono::Utc;
use log::{debug, warn};

use super::align::{AlignModel, AlignState};
use super::cost::{assess, CostParams};
use super::report::{CostReport, Counters, DeviationKind, DeviationRecord, TraceReport};
use super::{CheckerConfig, Clock, TickPolicy};
use crate::ingest::{add_seconds, seconds_between, Event, EventLog, Lifecycle, Timestamp};
use crate::model::{DistanceKey, TimedProcessModel};

/// Live notifications from a running checker.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckerEvent {
    /// Costs of a trace right after one of its events.
    Step {
        trace_id: String,
        structural: f64,
        temporal: f64,
    },
    Deviation(DeviationRecord),
    /// A trace left the table, by eviction or at the end of the run.
    Closed(TraceReport),
}

pub type Sink = Box<dyn FnMut(&CheckerEvent) + Send>;

#[derive(Debug, Clone, Copy, PartialEq)]
struct PendingPenalty {
    cost: f64,
    z: f64,
    observed: f64,
    at: Timestamp,
}

/// Runtime state of one process instance.
#[derive(Debug, Clone)]
pub struct TraceState {
    pub trace_id: String,
    prefix: VecDeque<Event>,
    events_seen: usize,
    align: AlignState,
    cost_structural: f64,
    cost_time: f64,
    preceding_complete: Option<Event>,
    open_starts: HashMap<String, Timestamp>,
    unfinished: HashMap<String, Option<PendingPenalty>>,
    last_seen: Timestamp,
    first_seq: u64,
    /// Sequence number of the latest event; breaks eviction ties.
    age: u64,
    deviations: usize,
}

impl TraceState {
    fn new(trace_id: String, align: &AlignModel, at: Timestamp, seq: u64) -> TraceState {
        TraceState {
            trace_id,
            prefix: VecDeque::new(),
            events_seen: 0,
            align: AlignState::new(align),
            cost_structural: 0.0,
            cost_time: 0.0,
            preceding_complete: None,
            open_starts: HashMap::new(),
            unfinished: HashMap::new(),
            last_seen: at,
            first_seq: seq,
            age: seq,
            deviations: 0,
        }
    }

    pub fn cost_structural(&self) -> f64 {
        self.cost_structural
    }

    /// Committed temporal cost only.
    pub fn cost_time(&self) -> f64 {
        self.cost_time
    }

    pub fn pending_penalty(&self, activity: &str) -> Option<f64> {
        self.unfinished.get(activity).map(|p| p.map_or(0.0, |p| p.cost))
    }

    /// Committed cost plus the current unfinished-activity penalties.
    pub fn temporal(&self) -> f64 {
        self.cost_time
            + self
                .unfinished
                .values()
                .flatten()
                .map(|p| p.cost)
                .sum::<f64>()
    }

    pub fn retained_events(&self) -> usize {
        self.prefix.len()
    }

    pub fn open_activities(&self) -> impl Iterator<Item = &str> {
        self.open_starts.keys().map(String::as_str)
    }
}

/// The per-trace rules, shared by the stream and batch drivers.
struct Engine {
    model: Arc<TimedProcessModel>,
    align: AlignModel,
    params: CostParams,
    prefix_cap: usize,
}

impl Engine {
    fn new(model: Arc<TimedProcessModel>, config: &CheckerConfig) -> Engine {
        Engine {
            align: AlignModel::compile(model.root()),
            model,
            params: config.cost_params(),
            prefix_cap: config.prefix_cap.max(1),
        }
    }

    fn record(
        &self,
        state: &mut TraceState,
        kind: DeviationKind,
        key: DistanceKey,
        observed: f64,
        z: f64,
        cost: f64,
        at: Timestamp,
        out: &mut Vec<DeviationRecord>,
    ) {
        state.deviations += 1;
        out.push(DeviationRecord {
            trace_id: state.trace_id.clone(),
            kind,
            key,
            observed,
            z,
            cost,
            at,
        });
    }

    fn observe(
        &self,
        state: &mut TraceState,
        event: &Event,
        counters: &mut Counters,
        out: &mut Vec<DeviationRecord>,
    ) {
        counters.events += 1;
        state.events_seen += 1;
        state.last_seen = event.timestamp;
        if state.prefix.len() == self.prefix_cap {
            state.prefix.pop_front();
        }
        state.prefix.push_back(event.clone());

        let step = state.align.step(&self.align, event);
        if step.foreign {
            counters.foreign_events += 1;
        }
        state.cost_structural = f64::from(step.cost);

        match event.lifecycle {
            Lifecycle::Complete => {
                if let Some(started) = state.open_starts.remove(&event.activity) {
                    counters.duration_observations += 1;
                    let observed = seconds_between(started, event.timestamp);
                    let key = DistanceKey::duration(event.activity.as_str());
                    if let Some(a) = assess(observed, &key, &self.model, self.params) {
                        counters.duration_checked += 1;
                        if a.cost > 0.0 {
                            counters.duration_deviations += 1;
                            state.cost_time += a.cost;
                            let kind = DeviationKind::Duration;
                            self.record(state, kind, key, observed, a.z, a.cost, event.timestamp, out);
                        }
                    }
                }
                state.unfinished.remove(&event.activity);
                state.preceding_complete = Some(event.clone());
            }
            Lifecycle::Start => {
                if let Some(prev) = &state.preceding_complete {
                    counters.distance_observations += 1;
                    let observed = seconds_between(prev.timestamp, event.timestamp);
                    let key = DistanceKey::distance(prev.activity.as_str(), event.activity.as_str());
                    if let Some(a) = assess(observed, &key, &self.model, self.params) {
                        counters.distance_checked += 1;
                        if a.cost > 0.0 {
                            counters.distance_deviations += 1;
                            state.cost_time += a.cost;
                            let kind = DeviationKind::Distance;
                            self.record(state, kind, key, observed, a.z, a.cost, event.timestamp, out);
                        }
                    }
                }
                if state
                    .open_starts
                    .insert(event.activity.clone(), event.timestamp)
                    .is_some()
                {
                    counters.repeated_starts += 1;
                }
                state.unfinished.insert(event.activity.clone(), None);
            }
            Lifecycle::Other(_) => {}
        }
    }

    /// Replaces the provisional penalty of every activity running longer
    /// than its mean duration.
    fn tick(&self, state: &mut TraceState, now: Timestamp) {
        for (activity, &started) in &state.open_starts {
            let key = DistanceKey::duration(activity.as_str());
            let Some(stats) = self.model.profile().get(&key) else {
                continue;
            };
            let elapsed = seconds_between(started, now);
            if elapsed <= stats.mean {
                continue;
            }
            if let Some(a) = assess(elapsed, &key, &self.model, self.params) {
                state.unfinished.insert(
                    activity.clone(),
                    Some(PendingPenalty {
                        cost: a.cost,
                        z: a.z,
                        observed: elapsed,
                        at: now,
                    }),
                );
            }
        }
    }

    /// Commits pending penalties and produces the final totals.
    fn close(
        &self,
        mut state: TraceState,
        evicted: bool,
        counters: &mut Counters,
        out: &mut Vec<DeviationRecord>,
    ) -> TraceReport {
        let mut pending: Vec<(String, PendingPenalty)> = state
            .unfinished
            .drain()
            .filter_map(|(a, p)| p.map(|p| (a, p)))
            .filter(|(_, p)| p.cost > 0.0)
            .collect();
        pending.sort_by(|a, b| a.0.cmp(&b.0));
        for (activity, p) in pending {
            counters.unfinished_penalties += 1;
            state.cost_time += p.cost;
            let key = DistanceKey::duration(activity);
            let kind = DeviationKind::UnfinishedEstimate;
            self.record(&mut state, kind, key, p.observed, p.z, p.cost, p.at, out);
        }
        TraceReport {
            trace_id: state.trace_id,
            events: state.events_seen,
            structural: state.cost_structural,
            temporal: state.cost_time,
            combined: state.cost_structural + state.cost_time,
            deviations: state.deviations,
            evicted,
        }
    }
}

/// Online checker holding at most `tsize` traces.
pub struct StreamChecker {
    engine: Engine,
    config: CheckerConfig,
    traces: HashMap<String, TraceState>,
    by_age: BTreeMap<(Timestamp, u64), String>,
    seq: u64,
    now: Option<Timestamp>,
    next_tick: Option<Timestamp>,
    recently_evicted: VecDeque<String>,
    recently_evicted_set: HashSet<String>,
    report: CostReport,
    retain: bool,
    peak_live: usize,
    sink: Option<Sink>,
    scratch: Vec<DeviationRecord>,
}

impl StreamChecker {
    pub fn new(model: Arc<TimedProcessModel>, config: CheckerConfig) -> StreamChecker {
        let tsize = config.tsize.max(1);
        StreamChecker {
            engine: Engine::new(model, &config),
            traces: HashMap::with_capacity(tsize.min(1 << 16)),
            by_age: BTreeMap::new(),
            seq: 0,
            now: None,
            next_tick: None,
            recently_evicted: VecDeque::new(),
            recently_evicted_set: HashSet::new(),
            report: CostReport::new(config),
            config: CheckerConfig { tsize, ..config },
            retain: true,
            peak_live: 0,
            sink: None,
            scratch: Vec::new(),
        }
    }

    /// Live notifications for every step, deviation and closed trace.
    pub fn with_sink(mut self, sink: Sink) -> StreamChecker {
        self.sink = Some(sink);
        self
    }

    /// With `false`, closed traces and records go only to the sink, keeping
    /// memory flat on unbounded streams. Counters are always kept.
    pub fn retain_records(mut self, retain: bool) -> StreamChecker {
        self.retain = retain;
        self
    }

    pub fn live_traces(&self) -> usize {
        self.traces.len()
    }

    pub fn peak_live_traces(&self) -> usize {
        self.peak_live
    }

    pub fn counters(&self) -> &Counters {
        &self.report.counters
    }

    pub fn trace(&self, id: &str) -> Option<&TraceState> {
        self.traces.get(id)
    }

    pub fn now(&self) -> Option<Timestamp> {
        self.now
    }

    fn emit(&mut self, ev: CheckerEvent) {
        if let Some(sink) = self.sink.as_mut() {
            sink(&ev);
        }
        if self.retain {
            match ev {
                CheckerEvent::Deviation(r) => self.report.deviations.push(r),
                CheckerEvent::Closed(t) => self.report.traces.push(t),
                CheckerEvent::Step { .. } => {}
            }
        }
    }

    fn flush_records(&mut self) {
        let records = std::mem::take(&mut self.scratch);
        for r in records {
            self.emit(CheckerEvent::Deviation(r));
        }
    }

    fn advance_clock(&mut self, event_ts: Timestamp) -> Timestamp {
        let now = match self.config.clock {
            Clock::StreamTime => self.now.map_or(event_ts, |n| n.max(event_ts)),
            Clock::Wall => Utc::now(),
        };
        self.now = Some(now);
        now
    }

    fn evict_oldest(&mut self) {
        let Some((_, id)) = self.by_age.pop_first() else {
            return;
        };
        let Some(state) = self.traces.remove(&id) else {
            return;
        };
        debug!("evicting trace {id}");
        self.report.counters.evictions += 1;
        if self.recently_evicted.len() == self.config.tsize {
            if let Some(old) = self.recently_evicted.pop_front() {
                self.recently_evicted_set.remove(&old);
            }
        }
        self.recently_evicted.push_back(id.clone());
        self.recently_evicted_set.insert(id);
        let mut scratch = std::mem::take(&mut self.scratch);
        let report = self
            .engine
            .close(state, true, &mut self.report.counters, &mut scratch);
        self.scratch = scratch;
        self.flush_records();
        self.emit(CheckerEvent::Closed(report));
    }

    /// Feeds one event. Returns the trace's (structural, temporal) costs.
    pub fn push(&mut self, event: &Event) -> (f64, f64) {
        let now = self.advance_clock(event.timestamp);
        self.seq += 1;
        let seq = self.seq;

        if !self.traces.contains_key(&event.trace_id) {
            if self.traces.len() >= self.config.tsize {
                self.evict_oldest();
            }
            if self.recently_evicted_set.contains(&event.trace_id) {
                self.report.counters.resurrections += 1;
                warn!("trace {} reappeared after eviction; starting fresh", event.trace_id);
            }
            let state = TraceState::new(event.trace_id.clone(), &self.engine.align, event.timestamp, seq);
            self.traces.insert(event.trace_id.clone(), state);
            self.peak_live = self.peak_live.max(self.traces.len());
        }

        let state = self.traces.get_mut(&event.trace_id).expect("inserted above");
        self.by_age.remove(&(state.last_seen, state.age));
        let mut scratch = std::mem::take(&mut self.scratch);
        self.engine
            .observe(state, event, &mut self.report.counters, &mut scratch);
        state.age = seq;
        if self.config.tick_policy == TickPolicy::PerEvent {
            self.engine.tick(state, now);
        }
        self.by_age
            .insert((state.last_seen, state.age), event.trace_id.clone());
        let costs = (state.cost_structural, state.temporal());
        self.scratch = scratch;
        self.flush_records();

        if let TickPolicy::Periodic(interval) = self.config.tick_policy {
            match self.next_tick {
                None => self.next_tick = Some(add_seconds(now, interval)),
                Some(due) if now >= due => {
                    self.tick_at(now);
                    let mut next = due;
                    while next <= now {
                        next = add_seconds(next, interval);
                    }
                    self.next_tick = Some(next);
                }
                Some(_) => {}
            }
        }

        if self.sink.is_some() {
            self.emit(CheckerEvent::Step {
                trace_id: event.trace_id.clone(),
                structural: costs.0,
                temporal: costs.1,
            });
        }
        costs
    }

    /// Re-estimates unfinished activities of every live trace at `now`.
    pub fn tick_at(&mut self, now: Timestamp) {
        for state in self.traces.values_mut() {
            self.engine.tick(state, now);
        }
    }

    /// Ticks using the configured clock.
    pub fn tick(&mut self) {
        let now = match self.config.clock {
            Clock::Wall => Utc::now(),
            Clock::StreamTime => match self.now {
                Some(n) => n,
                None => return,
            },
        };
        self.tick_at(now);
    }

    /// Closes every remaining trace (first-seen order) and returns the report.
    pub fn finish(mut self) -> CostReport {
        let mut remaining: Vec<TraceState> = self.traces.drain().map(|(_, s)| s).collect();
        remaining.sort_by_key(|s| s.first_seq);
        self.by_age.clear();
        for state in remaining {
            let mut scratch = std::mem::take(&mut self.scratch);
            let report = self
                .engine
                .close(state, false, &mut self.report.counters, &mut scratch);
            self.scratch = scratch;
            self.flush_records();
            self.emit(CheckerEvent::Closed(report));
        }
        self.report
    }
}

/// Runs a whole event sequence through a [`StreamChecker`].
pub fn check_stream<I>(events: I, model: Arc<TimedProcessModel>, config: CheckerConfig) -> CostReport
where
    I: IntoIterator<Item = Event>,
{
    let mut checker = StreamChecker::new(model, config);
    for ev in events {
        checker.push(&ev);
    }
    checker.finish()
}

/// Offline check of a complete log.
///
/// Traces are merged by timestamp (ties in log order) and checked with the
/// stream clock and no eviction; `tsize` and `clock` are ignored. Gives the same report as replaying the log
/// into [`check_stream`] with a table large enough for every trace.
pub fn check_log(log: &EventLog, model: Arc<TimedProcessModel>, config: CheckerConfig) -> CostReport {
    let engine = Engine::new(model, &config);
    let mut report = CostReport::new(config);
    let mut states: Vec<Option<TraceState>> = vec![None; log.traces.len()];
    let mut first_seen: Vec<usize> = Vec::with_capacity(log.traces.len());
    let mut records = Vec::new();

    let mut heap: BinaryHeap<Reverse<(Timestamp, usize, usize)>> = log
        .traces
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.events.is_empty())
        .map(|(i, t)| Reverse((t.events[0].timestamp, i, 0)))
        .collect();
    let mut now: Option<Timestamp> = None;
    let mut next_tick: Option<Timestamp> = None;
    let mut seq = 0u64;

    while let Some(Reverse((ts, ti, ei))) = heap.pop() {
        let trace = &log.traces[ti];
        if let Some(next) = trace.events.get(ei + 1) {
            heap.push(Reverse((next.timestamp, ti, ei + 1)));
        }
        let event = &trace.events[ei];
        let current = now.map_or(ts, |n| n.max(ts));
        now = Some(current);
        seq += 1;
        let state = states[ti].get_or_insert_with(|| {
            first_seen.push(ti);
            TraceState::new(event.trace_id.clone(), &engine.align, ts, seq)
        });
        engine.observe(state, event, &mut report.counters, &mut records);
        state.age = seq;
        if config.tick_policy == TickPolicy::PerEvent {
            engine.tick(state, current);
        }
        if let TickPolicy::Periodic(interval) = config.tick_policy {
            match next_tick {
                None => next_tick = Some(add_seconds(current, interval)),
                Some(due) if current >= due => {
                    for s in states.iter_mut().flatten() {
                        engine.tick(s, current);
                    }
                    let mut next = due;
                    while next <= current {
                        next = add_seconds(next, interval);
                    }
                    next_tick = Some(next);
                }
                Some(_) => {}
            }
        }
    }
    report.deviations = records;
    for ti in first_seen {
        let state = states[ti].take().expect("seen traces have state");
        let closed = engine.close(state, false, &mut report.counters, &mut report.deviations);
        report.traces.push(closed);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_timestamp, Trace};
    use crate::model::{DistanceStats, ModelNode, PartialAnnotation, TaskAnnotation, TemporalProfile};

    fn at(secs: f64) -> Timestamp {
        add_seconds(parse_timestamp("2020-01-01T00:00:00Z").unwrap(), secs)
    }

    fn ev(trace: &str, activity: &str, lc: Lifecycle, secs: f64) -> Event {
        Event::new(trace, activity, lc, at(secs))
    }

    fn stats(mean: f64, stddev: f64) -> DistanceStats {
        DistanceStats {
            n: 10,
            mean,
            stddev,
            min: 0.0,
            max: mean + 10.0 * stddev,
        }
    }

    fn model() -> Arc<TimedProcessModel> {
        let profile: TemporalProfile = [
            (DistanceKey::duration("A"), stats(20.0, 4.0)),
            (DistanceKey::distance("A", "B"), stats(3.0, 0.5)),
            (DistanceKey::duration("B"), stats(6.0, 0.5)),
            (DistanceKey::duration("C"), stats(4.0, 1.0)),
        ]
        .into_iter()
        .collect();
        let m = TimedProcessModel::new(ModelNode::Sequence(vec![
            ModelNode::task("A"),
            ModelNode::task("B"),
            ModelNode::task("C"),
        ]))
        .unwrap()
        .annotate("B", TaskAnnotation { omega: 1.0, kappa: 2.0 })
        .unwrap()
        .override_key(
            DistanceKey::distance("A", "B"),
            PartialAnnotation { omega: Some(2.0), kappa: Some(3.0) },
        )
        .unwrap()
        .infuse(profile);
        Arc::new(m)
    }

    fn inclusive() -> CheckerConfig {
        CheckerConfig {
            inclusive_threshold: true,
            ..CheckerConfig::default()
        }
    }

    #[test]
    fn distance_deviation_is_committed_on_start() {
        let mut c = StreamChecker::new(model(), inclusive());
        c.push(&ev("t1", "A", Lifecycle::Start, 0.0));
        assert_eq!(c.push(&ev("t1", "A", Lifecycle::Complete, 19.0)), (0.0, 0.0));
        assert_eq!(c.push(&ev("t1", "B", Lifecycle::Start, 29.0)), (0.0, 28.0));
        let report = c.finish();
        assert_eq!(report.deviations.len(), 1);
        assert_eq!(report.deviations[0].z, 14.0);
        assert_eq!(report.counters.duration_checked, 1);
        assert_eq!(report.counters.distance_deviations, 1);
    }

    #[test]
    fn unfinished_penalty_is_replaced_not_accumulated() {
        let mut c = StreamChecker::new(model(), inclusive());
        c.push(&ev("t1", "B", Lifecycle::Start, 0.0));
        c.tick_at(at(7.0));
        // z = |7 - 6| / 0.5 = 2, at κ = 2 inclusive
        assert_eq!(c.trace("t1").unwrap().pending_penalty("B"), Some(2.0));
        c.tick_at(at(7.0));
        c.tick_at(at(7.0));
        assert_eq!(c.trace("t1").unwrap().temporal(), 2.0);
        c.tick_at(at(8.0));
        assert_eq!(c.trace("t1").unwrap().temporal(), 4.0);
        assert_eq!(c.trace("t1").unwrap().cost_time(), 0.0);
        // The real duration supersedes the estimate.
        c.push(&ev("t1", "B", Lifecycle::Complete, 6.2));
        let state = c.trace("t1").unwrap();
        assert_eq!(state.pending_penalty("B"), None);
        assert_eq!(state.temporal(), 0.0);
    }

    #[test]
    fn elapsed_below_mean_adds_nothing() {
        let mut c = StreamChecker::new(model(), inclusive());
        c.push(&ev("t1", "B", Lifecycle::Start, 0.0));
        c.tick_at(at(5.9));
        assert_eq!(c.trace("t1").unwrap().temporal(), 0.0);
    }

    #[test]
    fn finish_commits_pending_penalties() {
        let mut c = StreamChecker::new(model(), inclusive());
        c.push(&ev("t1", "B", Lifecycle::Start, 0.0));
        c.tick_at(at(8.0));
        let report = c.finish();
        let t = report.trace("t1").unwrap();
        assert_eq!(t.temporal, 4.0);
        assert_eq!(report.deviations.len(), 1);
        assert_eq!(report.deviations[0].kind, DeviationKind::UnfinishedEstimate);
        assert_eq!(report.deviations[0].observed, 8.0);
        assert_eq!(report.counters.unfinished_penalties, 1);
    }

    #[test]
    fn eviction_keeps_the_table_bounded() {
        let k = 4;
        let cfg = CheckerConfig { tsize: k, ..CheckerConfig::default() };
        let mut c = StreamChecker::new(model(), cfg);
        for i in 0..=k {
            c.push(&ev(&format!("t{i}"), "A", Lifecycle::Complete, i as f64));
            assert!(c.live_traces() <= k);
        }
        assert_eq!(c.counters().evictions, 1);
        let report = c.finish();
        assert_eq!(report.traces[0].trace_id, "t0");
        assert!(report.traces[0].evicted);
        assert_eq!(report.traces.len(), k + 1);
    }

    #[test]
    fn eviction_picks_least_recently_seen() {
        let cfg = CheckerConfig { tsize: 2, ..CheckerConfig::default() };
        let mut c = StreamChecker::new(model(), cfg);
        c.push(&ev("a", "A", Lifecycle::Start, 0.0));
        c.push(&ev("b", "A", Lifecycle::Start, 1.0));
        c.push(&ev("a", "A", Lifecycle::Complete, 2.0));
        c.push(&ev("c", "A", Lifecycle::Start, 3.0));
        assert!(c.trace("a").is_some());
        assert!(c.trace("b").is_none());
        // b comes back: fresh instance, counted.
        c.push(&ev("b", "A", Lifecycle::Complete, 4.0));
        assert_eq!(c.counters().resurrections, 1);
        assert_eq!(c.counters().evictions, 2);
    }

    #[test]
    fn eviction_commits_penalties() {
        let cfg = CheckerConfig { tsize: 1, inclusive_threshold: true, ..CheckerConfig::default() };
        let mut c = StreamChecker::new(model(), cfg);
        c.push(&ev("a", "B", Lifecycle::Start, 0.0));
        c.push(&ev("b", "A", Lifecycle::Start, 8.0));
        c.push(&ev("a2", "A", Lifecycle::Start, 8.0));
        let report = c.finish();
        // The only tick that saw `a` ran at its own start; no estimate then.
        assert_eq!(report.trace("a").unwrap().temporal, 0.0);

        let mut c = StreamChecker::new(model(), cfg);
        c.push(&ev("a", "B", Lifecycle::Start, 0.0));
        c.tick_at(at(8.0));
        c.push(&ev("b", "A", Lifecycle::Start, 8.0));
        let report = c.finish();
        let a = report.trace("a").unwrap();
        assert!(a.evicted);
        assert_eq!(a.temporal, 4.0);
    }

    #[test]
    fn periodic_ticks_cover_all_traces() {
        let cfg = CheckerConfig {
            tick_policy: TickPolicy::Periodic(5.0),
            inclusive_threshold: true,
            ..CheckerConfig::default()
        };
        let mut c = StreamChecker::new(model(), cfg);
        c.push(&ev("a", "B", Lifecycle::Start, 0.0));
        c.push(&ev("b", "A", Lifecycle::Start, 3.0));
        assert_eq!(c.trace("a").unwrap().temporal(), 0.0);
        c.push(&ev("b", "A", Lifecycle::Complete, 8.0));
        // tick at 8: B has run 8 s, z = 4
        assert_eq!(c.trace("a").unwrap().temporal(), 4.0);
    }

    #[test]
    fn sink_sees_every_step() {
        use std::sync::Mutex;
        let seen = Arc::new(Mutex::new(Vec::new()));
        let s2 = Arc::clone(&seen);
        let mut c = StreamChecker::new(model(), inclusive())
            .with_sink(Box::new(move |e| s2.lock().unwrap().push(e.clone())))
            .retain_records(false);
        c.push(&ev("t1", "A", Lifecycle::Start, 0.0));
        c.push(&ev("t1", "A", Lifecycle::Complete, 19.0));
        c.push(&ev("t1", "B", Lifecycle::Start, 29.0));
        let report = c.finish();
        assert!(report.deviations.is_empty() && report.traces.is_empty());
        let seen = seen.lock().unwrap();
        let steps = seen.iter().filter(|e| matches!(e, CheckerEvent::Step { .. })).count();
        assert_eq!(steps, 3);
        assert!(seen.iter().any(|e| matches!(e, CheckerEvent::Deviation(r) if r.cost == 28.0)));
        assert!(matches!(seen.last(), Some(CheckerEvent::Closed(t)) if t.combined == 28.0));
    }

    #[test]
    fn check_log_matches_stream_on_small_log() {
        let log = EventLog::new(
            "small",
            vec![
                Trace::new(
                    "t1",
                    vec![
                        ev("t1", "A", Lifecycle::Start, 0.0),
                        ev("t1", "A", Lifecycle::Complete, 40.0),
                        ev("t1", "B", Lifecycle::Start, 41.0),
                    ],
                ),
                Trace::new(
                    "t2",
                    vec![
                        ev("t2", "A", Lifecycle::Start, 5.0),
                        ev("t2", "A", Lifecycle::Complete, 19.0),
                        ev("t2", "B", Lifecycle::Start, 40.0),
                        ev("t2", "B", Lifecycle::Complete, 60.0),
                    ],
                ),
            ],
        );
        let cfg = inclusive();
        let batch = check_log(&log, model(), cfg);
        let stream = check_stream(
            crate::ingest::replay(&log, Default::default()),
            model(),
            CheckerConfig { tsize: 2, ..cfg },
        );
        assert_eq!(batch.traces, stream.traces);
        assert_eq!(batch.deviations, stream.deviations);
        assert_eq!(batch.counters, stream.counters);
        assert_eq!(batch.deviations.len(), 4);
    }

    #[test]
    fn empty_log_gives_empty_report() {
        let report = check_log(&EventLog::default(), model(), CheckerConfig::default());
        assert!(report.traces.is_empty());
        assert_eq!(report.counters, Counters::default());
    }
}
