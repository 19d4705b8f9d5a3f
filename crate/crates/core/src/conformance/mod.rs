//! Time-aware conformance checking.
//!
//! Per event the checker updates the structural prefix-alignment cost and
//! adds weighted z-score costs for task durations (on complete) and for the
//! distance from the previous complete (on start). Activities that are still
//! running past their mean duration carry a provisional penalty that is
//! replaced on every tick and dropped once the complete event arrives.

use serde::{Deserialize, Serialize};

pub mod align;
pub mod checker;
pub mod cost;
pub mod report;

pub use align::{align_prefix, align_trace, AlignModel, AlignState, StepOutcome};
pub use checker::{check_log, check_stream, CheckerEvent, StreamChecker, TraceState};
pub use cost::{assess, exceeds, temporal_cost, weighted_cost, z_score, Assessment, CostParams};
pub use report::{CostReport, Counters, DeviationKind, DeviationRecord, TraceReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TickPolicy {
    /// Re-estimate the current trace's unfinished activities after each of its events.
    PerEvent,
    /// Re-estimate every trace whenever this many seconds have passed.
    Periodic(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clock {
    Wall,
    /// Latest event timestamp seen so far; reproducible.
    StreamTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckerConfig {
    /// TSIZE: the most process instances held at once.
    pub tsize: usize,
    /// φ: global multiplier on temporal deviation costs.
    pub phi: f64,
    pub inclusive_threshold: bool,
    pub tick_policy: TickPolicy,
    pub clock: Clock,
    /// Raw events retained per trace; the alignment frontier covers the rest.
    pub prefix_cap: usize,
}

impl Default for CheckerConfig {
    fn default() -> Self {
        CheckerConfig {
            tsize: 10_000,
            phi: 1.0,
            inclusive_threshold: false,
            tick_policy: TickPolicy::PerEvent,
            clock: Clock::StreamTime,
            prefix_cap: 10_000,
        }
    }
}

impl CheckerConfig {
    pub fn cost_params(&self) -> CostParams {
        CostParams {
            phi: self.phi,
            inclusive_threshold: self.inclusive_threshold,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.tsize == 0 {
            return Err("tsize must be at least 1".into());
        }
        if !(self.phi >= 0.0) {
            return Err("phi must be >= 0".into());
        }
        if let TickPolicy::Periodic(s) = self.tick_policy {
            if !(s > 0.0) || !s.is_finite() {
                return Err("tick interval must be a positive number of seconds".into());
            }
        }
        Ok(())
    }
}
