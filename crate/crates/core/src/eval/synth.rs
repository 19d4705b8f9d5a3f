//! Seeded synthetic logs drawn from a process tree.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::{add_seconds, parse_timestamp, Event, EventLog, Lifecycle, Timestamp, Trace};
use crate::model::ModelNode;

/// Uniform on `mean ± spread`, clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub mean: f64,
    pub spread: f64,
}

impl Timing {
    pub const fn new(mean: f64, spread: f64) -> Timing {
        Timing { mean, spread }
    }

    /// Population standard deviation of the draw (ignoring the clamp).
    pub fn stddev(&self) -> f64 {
        self.spread / 3f64.sqrt()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let x = if self.spread > 0.0 {
            rng.gen_range(self.mean - self.spread..=self.mean + self.spread)
        } else {
            self.mean
        };
        // Millisecond grid keeps every timestamp exactly representable.
        (x.max(0.0) * 1000.0).round() / 1000.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub traces: usize,
    pub seed: u64,
    pub origin: Timestamp,
    /// Time between consecutive trace starts.
    pub arrival: Timing,
    pub duration: Timing,
    pub durations: BTreeMap<String, Timing>,
    /// Time from one task's complete to the next task's start.
    pub gap: Timing,
    /// Per activity instance: log only its complete event.
    pub complete_only: f64,
    /// Per event: leave it out.
    pub drop_event: f64,
    /// Per trace: insert an activity the model does not know.
    pub foreign: f64,
    /// Per activity instance: log a second start before the complete.
    pub restart: f64,
    /// Per trace: cut it at a random point.
    pub truncate: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            traces: 50,
            seed: 0,
            origin: parse_timestamp("2022-01-03T08:00:00Z").expect("valid literal"),
            arrival: Timing::new(60.0, 30.0),
            duration: Timing::new(30.0, 5.0),
            durations: BTreeMap::new(),
            gap: Timing::new(10.0, 2.0),
            complete_only: 0.0,
            drop_event: 0.0,
            foreign: 0.0,
            restart: 0.0,
            truncate: 0.0,
        }
    }
}

struct Gen<'a> {
    spec: &'a SynthSpec,
    rng: ChaCha8Rng,
    trace_id: String,
    events: Vec<Event>,
}

impl Gen<'_> {
    fn chance(&mut self, p: f64) -> bool {
        p > 0.0 && self.rng.gen_bool(p.min(1.0))
    }

    fn push(&mut self, activity: &str, lifecycle: Lifecycle, at: f64) {
        let ts = add_seconds(self.spec.origin, at);
        self.events.push(Event::new(self.trace_id.as_str(), activity, lifecycle, ts));
    }

    /// Emits the subtree starting at `t` and returns when it ends.
    fn walk(&mut self, node: &ModelNode, t: f64) -> f64 {
        match node {
            ModelNode::Task(name) => {
                let start = t + self.spec.gap.draw(&mut self.rng);
                let timing = self.spec.durations.get(name).copied().unwrap_or(self.spec.duration);
                let end = start + timing.draw(&mut self.rng);
                if self.chance(self.spec.complete_only) {
                    self.push(name, Lifecycle::Complete, end);
                } else {
                    self.push(name, Lifecycle::Start, start);
                    if self.chance(self.spec.restart) {
                        let again = (start + end) / 2.0;
                        self.push(name, Lifecycle::Start, (again * 1000.0).round() / 1000.0);
                    }
                    self.push(name, Lifecycle::Complete, end);
                }
                end
            }
            ModelNode::Sequence(children) => children.iter().fold(t, |at, c| self.walk(c, at)),
            ModelNode::Xor(children) => {
                let k = self.rng.gen_range(0..children.len());
                self.walk(&children[k], t)
            }
            ModelNode::Parallel(children) => children
                .iter()
                .map(|c| self.walk(c, t))
                .fold(t, f64::max),
        }
    }
}

/// Generates `spec.traces` traces named `case-<i>`, each a run of `model`
/// with the configured timing and noise. Same spec, same log.
pub fn generate(model: &ModelNode, spec: &SynthSpec) -> EventLog {
    let mut gen = Gen {
        spec,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        trace_id: String::new(),
        events: Vec::new(),
    };
    let mut traces = Vec::with_capacity(spec.traces);
    let mut origin = 0.0;
    for i in 0..spec.traces {
        gen.trace_id = format!("case-{i}");
        gen.events.clear();
        let end = gen.walk(model, origin);
        if gen.chance(spec.foreign) {
            let at = gen.rng.gen_range(origin..=end.max(origin));
            gen.push("unmodelled", Lifecycle::Complete, (at * 1000.0).round() / 1000.0);
        }
        let mut events = std::mem::take(&mut gen.events);
        if spec.drop_event > 0.0 {
            events.retain(|_| !gen.chance(spec.drop_event));
        }
        let mut trace = Trace::new(gen.trace_id.as_str(), events);
        if gen.chance(spec.truncate) && !trace.events.is_empty() {
            let keep = gen.rng.gen_range(1..=trace.events.len());
            trace.events.truncate(keep);
        }
        if !trace.events.is_empty() {
            traces.push(trace);
        }
        origin += spec.arrival.draw(&mut gen.rng);
    }
    EventLog::new(format!("synthetic-{}", spec.seed), traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::seconds_between;

    fn abc() -> ModelNode {
        ModelNode::Sequence(vec![ModelNode::task("A"), ModelNode::task("B"), ModelNode::task("C")])
    }

    #[test]
    fn same_seed_same_log() {
        let spec = SynthSpec { seed: 11, restart: 0.2, drop_event: 0.1, ..SynthSpec::default() };
        assert_eq!(generate(&abc(), &spec), generate(&abc(), &spec));
        let other = SynthSpec { seed: 12, ..spec.clone() };
        assert_ne!(generate(&abc(), &spec), generate(&abc(), &other));
    }

    #[test]
    fn clean_runs_follow_the_model() {
        let log = generate(&abc(), &SynthSpec::default());
        assert_eq!(log.traces.len(), 50);
        for t in &log.traces {
            let names: Vec<_> = t.events.iter().map(|e| e.activity.as_str()).collect();
            assert_eq!(names, ["A", "A", "B", "B", "C", "C"]);
            let d = seconds_between(t.events[0].timestamp, t.events[1].timestamp);
            assert!((25.0..=35.0).contains(&d), "{d}");
        }
    }

    #[test]
    fn parallel_branches_overlap() {
        let model = ModelNode::Parallel(vec![ModelNode::task("X"), ModelNode::task("Y")]);
        let log = generate(&model, &SynthSpec { traces: 5, ..SynthSpec::default() });
        for t in &log.traces {
            assert!(t.events[0].is_start() && t.events[1].is_start());
        }
    }

    #[test]
    fn timing_stddev() {
        assert!((Timing::new(10.0, 3f64.sqrt()).stddev() - 1.0).abs() < 1e-15);
    }
}
