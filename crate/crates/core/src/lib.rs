//! Streaming time-aware conformance checking for event logs.
//!
//! Mine a temporal profile from historical traces, attach it to a
//! block-structured process model, then check live or recorded event
//! streams for structural and temporal deviations.

pub mod cli;
pub mod conformance;
pub mod eval;
pub mod ingest;
pub mod miner;
pub mod model;

pub use conformance::{check_log, check_stream, CheckerConfig, CostReport, StreamChecker};
pub use ingest::{Event, EventLog, Lifecycle, Trace};
pub use miner::{mine, mine_profile, MinerConfig, StddevMode};
pub use model::{DistanceKey, DistanceStats, ModelNode, TemporalProfile, TimedProcessModel};
