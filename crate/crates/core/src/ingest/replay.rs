//! Turns an offline log back into a stream.
//!
//! Events of all traces are merged in global timestamp order (ties keep log
//! order) and keep their original timestamps. Only the emission pacing is
//! affected by `speed` and jitter.

use std::thread;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{seconds_between, Event, EventLog, Timestamp};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOptions {
    /// 0 emits as fast as possible, otherwise gaps are scaled by `1 / speed`.
    pub speed: f64,
    /// Uniform extra pause in `[0, jitter)` per emission.
    pub jitter: Duration,
    pub seed: u64,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions {
            speed: 0.0,
            jitter: Duration::ZERO,
            seed: 0,
        }
    }
}

pub struct Replay {
    events: std::vec::IntoIter<Event>,
    options: ReplayOptions,
    rng: ChaCha8Rng,
    prev: Option<Timestamp>,
    paused: Duration,
}

/// Merges `log` into one globally ordered stream.
pub fn replay(log: &EventLog, options: ReplayOptions) -> Replay {
    let mut merged: Vec<Event> = log
        .traces
        .iter()
        .flat_map(|t| t.events.iter().cloned())
        .collect();
    merged.sort_by_key(|e| e.timestamp);
    Replay {
        events: merged.into_iter(),
        rng: ChaCha8Rng::seed_from_u64(options.seed),
        options,
        prev: None,
        paused: Duration::ZERO,
    }
}

impl Replay {
    /// Next event and the pause that should precede it, without sleeping.
    pub fn next_with_pause(&mut self) -> Option<(Event, Duration)> {
        let ev = self.events.next()?;
        let mut pause = Duration::ZERO;
        if self.options.speed > 0.0 {
            if let Some(prev) = self.prev {
                let gap = seconds_between(prev, ev.timestamp).max(0.0) / self.options.speed;
                if gap.is_finite() {
                    pause += Duration::from_secs_f64(gap);
                }
            }
        }
        if !self.options.jitter.is_zero() {
            let max = self.options.jitter.as_secs_f64();
            pause += Duration::from_secs_f64(self.rng.gen_range(0.0..max));
        }
        self.prev = Some(ev.timestamp);
        self.paused += pause;
        Some((ev, pause))
    }

    /// Total pause time emitted so far.
    pub fn paused(&self) -> Duration {
        self.paused
    }

    pub fn remaining(&self) -> usize {
        self.events.len()
    }
}

impl Iterator for Replay {
    type Item = Event;

    fn next(&mut self) -> Option<Event> {
        let (ev, pause) = self.next_with_pause()?;
        if !pause.is_zero() {
            thread::sleep(pause);
        }
        Some(ev)
    }
}
