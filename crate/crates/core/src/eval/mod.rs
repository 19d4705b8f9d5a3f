//! Experiment driver: split, mine, check, summarise, and optionally compare
//! against expected tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformance::{check_log, CheckerConfig, CostReport, Counters, DeviationKind};
use crate::ingest::{parse_xes_path, split_point, EventLog, XesError};
use crate::miner::{mine, MinerConfig, MiningOutcome};
use crate::model::{DistanceKey, DistanceStats, ModelError, ModelNode, TemporalProfile, TimedProcessModel};

pub mod fixtures;
pub mod inject;
pub mod synth;

pub use inject::{inject_anomalies, Anomaly, AnomalyKind, InjectError, Injection, TraceSelector};
pub use synth::{generate, SynthSpec, Timing};

/// Default relative tolerance on μ and σ.
pub const LOOSE_TOLERANCE: f64 = 0.02;
/// Tolerance for regression baselines captured from this implementation.
pub const STRICT_TOLERANCE: f64 = 0.001;
/// Tolerance on the reported maximum z.
pub const MAX_Z_TOLERANCE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Xes(#[from] XesError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Inject(#[from] InjectError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedRow {
    pub key: DistanceKey,
    pub n: u64,
    pub mean: f64,
    pub stddev: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

/// Checking results to compare against; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpectedChecking {
    pub duration_observations: Option<u64>,
    pub duration_deviations: Option<u64>,
    pub distance_observations: Option<u64>,
    pub distance_deviations: Option<u64>,
    pub max_duration_z: Option<f64>,
    pub max_duration_z_trace: Option<String>,
    pub max_duration_deviations_per_trace: Option<usize>,
    pub max_distance_deviations_per_trace: Option<usize>,
    pub traces_at_max_distance_deviations: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpectedValues {
    pub profile: Vec<ExpectedRow>,
    /// The mined key set must equal the listed keys, not merely contain them.
    pub exact_key_set: bool,
    pub checking: Option<ExpectedChecking>,
}

/// Inline values, or a path to a JSON file holding them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExpectedSource {
    File(PathBuf),
    Inline(ExpectedValues),
}

fn default_split() -> f64 {
    0.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub dataset: PathBuf,
    /// Model file; without one, a sequence of the training activities in
    /// first-seen order is used.
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default = "default_split")]
    pub split_fraction: f64,
    /// Explicit training size; overrides the fraction.
    #[serde(default)]
    pub train_traces: Option<usize>,
    #[serde(default)]
    pub miner: MinerConfig,
    #[serde(default)]
    pub checker: CheckerConfig,
    #[serde(default)]
    pub expected: Option<ExpectedSource>,
    /// Compare μ and σ at the strict tolerance.
    #[serde(default)]
    pub strict: bool,
    /// Applied to the test split; selector indices count from its first trace.
    #[serde(default)]
    pub anomalies: Vec<Anomaly>,
}

impl ExperimentSpec {
    pub fn new(name: impl Into<String>, dataset: impl Into<PathBuf>) -> ExperimentSpec {
        ExperimentSpec {
            name: name.into(),
            dataset: dataset.into(),
            model: None,
            split_fraction: default_split(),
            train_traces: None,
            miner: MinerConfig::default(),
            checker: CheckerConfig::default(),
            expected: None,
            strict: false,
            anomalies: Vec::new(),
        }
    }

    /// Reads a spec file. Relative paths are taken from the spec's directory
    /// and an expected-values file is inlined.
    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentSpec, EvalError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut spec: ExperimentSpec = serde_json::from_slice(&bytes)?;
        let base = path.parent().unwrap_or(Path::new("."));
        spec.dataset = base.join(&spec.dataset);
        spec.model = spec.model.map(|m| base.join(m));
        if let Some(ExpectedSource::File(file)) = &spec.expected {
            let file = base.join(file);
            let bytes = fs::read(&file).map_err(|source| EvalError::Io { path: file, source })?;
            spec.expected = Some(ExpectedSource::Inline(serde_json::from_slice(&bytes)?));
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(EvalError::Spec(format!(
                "split fraction must lie strictly between 0 and 1, got {}",
                self.split_fraction
            )));
        }
        self.checker.validate().map_err(EvalError::Spec)?;
        for a in &self.anomalies {
            match a.kind {
                AnomalyKind::StretchDuration { factor } | AnomalyKind::ReduceDuration { factor }
                    if !(factor > 0.0) =>
                {
                    return Err(EvalError::Spec(format!("anomaly factor must be > 0, got {factor}")));
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn expected(&self) -> Result<Option<ExpectedValues>, EvalError> {
        match &self.expected {
            None => Ok(None),
            Some(ExpectedSource::Inline(v)) => Ok(Some(v.clone())),
            Some(ExpectedSource::File(file)) => {
                let bytes = fs::read(file).map_err(|source| EvalError::Io {
                    path: file.clone(),
                    source,
                })?;
                Ok(Some(serde_json::from_slice(&bytes)?))
            }
        }
    }

    pub fn train_count(&self, trace_count: usize) -> usize {
        self.train_traces
            .unwrap_or_else(|| split_point(trace_count, self.split_fraction))
            .min(trace_count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExperimentStatus {
    Completed,
    DatasetUnavailable { path: PathBuf },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MiningSummary {
    pub duration_samples: usize,
    pub distance_samples: usize,
    pub filtered_distance_keys: usize,
    pub repeated_starts: usize,
    pub negative_samples: usize,
}

impl From<&MiningOutcome> for MiningSummary {
    fn from(m: &MiningOutcome) -> Self {
        MiningSummary {
            duration_samples: m.duration_samples,
            distance_samples: m.distance_samples,
            filtered_distance_keys: m.filtered_distance_keys,
            repeated_starts: m.repeated_starts,
            negative_samples: m.negative_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxZ {
    pub trace: String,
    pub key: DistanceKey,
    #[serde(with = "crate::conformance::report::lossless_f64")]
    pub z: f64,
    pub observed_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckingSummary {
    pub counters: Counters,
    /// Deviation count → number of traces with exactly that many (counts ≥ 1).
    pub duration_deviations_per_trace: BTreeMap<usize, usize>,
    pub distance_deviations_per_trace: BTreeMap<usize, usize>,
    pub max_duration_z: Option<MaxZ>,
    pub max_distance_z: Option<MaxZ>,
}

impl CheckingSummary {
    pub fn from_report(report: &CostReport) -> CheckingSummary {
        let mut per_trace: BTreeMap<(&str, DeviationKind), usize> = BTreeMap::new();
        let mut max_duration: Option<MaxZ> = None;
        let mut max_distance: Option<MaxZ> = None;
        for r in &report.deviations {
            *per_trace.entry((r.trace_id.as_str(), r.kind)).or_default() += 1;
            let slot = match r.kind {
                DeviationKind::Duration => &mut max_duration,
                DeviationKind::Distance => &mut max_distance,
                DeviationKind::UnfinishedEstimate => continue,
            };
            if slot.as_ref().is_none_or(|m| r.z > m.z) {
                *slot = Some(MaxZ {
                    trace: r.trace_id.clone(),
                    key: r.key.clone(),
                    z: r.z,
                    observed_s: r.observed,
                });
            }
        }
        let mut duration_hist = BTreeMap::new();
        let mut distance_hist = BTreeMap::new();
        for ((_, kind), count) in per_trace {
            match kind {
                DeviationKind::Duration => *duration_hist.entry(count).or_default() += 1,
                DeviationKind::Distance => *distance_hist.entry(count).or_default() += 1,
                DeviationKind::UnfinishedEstimate => {}
            }
        }
        CheckingSummary {
            counters: report.counters.clone(),
            duration_deviations_per_trace: duration_hist,
            distance_deviations_per_trace: distance_hist,
            max_duration_z: max_duration,
            max_distance_z: max_distance,
        }
    }

    pub fn max_duration_deviations(&self) -> usize {
        self.duration_deviations_per_trace.keys().next_back().copied().unwrap_or(0)
    }

    pub fn max_distance_deviations(&self) -> usize {
        self.distance_deviations_per_trace.keys().next_back().copied().unwrap_or(0)
    }

    pub fn traces_at_max_distance_deviations(&self) -> usize {
        self.distance_deviations_per_trace.values().next_back().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

/// Re-run of one stage with a single setting flipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub label: String,
    pub assertions: Vec<Assertion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checking: Option<CheckingSummary>,
}

impl Variant {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    #[serde(flatten)]
    pub status: ExperimentStatus,
    pub train_traces: usize,
    pub test_traces: usize,
    pub test_events: usize,
    pub mining: MiningSummary,
    pub profile: TemporalProfile,
    pub checking: CheckingSummary,
    pub injections: Vec<Injection>,
    pub assertions: Vec<Assertion>,
    pub variants: Vec<Variant>,
}

impl ExperimentReport {
    fn unavailable(spec: &ExperimentSpec) -> ExperimentReport {
        ExperimentReport {
            spec: spec.clone(),
            status: ExperimentStatus::DatasetUnavailable {
                path: spec.dataset.clone(),
            },
            train_traces: 0,
            test_traces: 0,
            test_events: 0,
            mining: MiningSummary::default(),
            profile: TemporalProfile::new(),
            checking: CheckingSummary::default(),
            injections: Vec::new(),
            assertions: Vec::new(),
            variants: Vec::new(),
        }
    }

    pub fn is_available(&self) -> bool {
        self.status == ExperimentStatus::Completed
    }

    /// True when every assertion of the configured run holds.
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn within(actual: f64, expected: f64, tol: f64) -> bool {
    (actual - expected).abs() <= tol * expected.abs()
}

fn check_profile(profile: &TemporalProfile, expected: &ExpectedValues, tol: f64) -> Vec<Assertion> {
    let mut out = Vec::new();
    for row in &expected.profile {
        let name = row.key.to_string();
        match profile.get(&row.key) {
            None => out.push(Assertion {
                name: format!("{name} present"),
                expected: "present".into(),
                actual: "missing".into(),
                pass: false,
            }),
            Some(s) => {
                out.push(Assertion {
                    name: format!("{name} n"),
                    expected: row.n.to_string(),
                    actual: s.n.to_string(),
                    pass: s.n == row.n,
                });
                out.push(Assertion {
                    name: format!("{name} mean"),
                    expected: format!("{:.2}", row.mean),
                    actual: format!("{:.2}", s.mean),
                    pass: within(s.mean, row.mean, tol),
                });
                out.push(Assertion {
                    name: format!("{name} stddev"),
                    expected: format!("{:.2}", row.stddev),
                    actual: format!("{:.2}", s.stddev),
                    pass: within(s.stddev, row.stddev, tol),
                });
            }
        }
    }
    if expected.exact_key_set {
        let count = |kind| expected.profile.iter().filter(|r| r.key.kind == kind).count();
        let durations = count(crate::model::KeyKind::Duration);
        let distances = count(crate::model::KeyKind::Distance);
        let got_d = profile.durations().count();
        let got_t = profile.distances().count();
        out.push(Assertion {
            name: "duration entries".into(),
            expected: durations.to_string(),
            actual: got_d.to_string(),
            pass: durations == got_d,
        });
        out.push(Assertion {
            name: "distance entries".into(),
            expected: distances.to_string(),
            actual: got_t.to_string(),
            pass: distances == got_t,
        });
    }
    out
}

fn check_checking(summary: &CheckingSummary, expected: &ExpectedChecking) -> Vec<Assertion> {
    let mut out = Vec::new();
    let mut exact = |name: &str, want: Option<u64>, got: u64| {
        if let Some(want) = want {
            out.push(Assertion {
                name: name.into(),
                expected: want.to_string(),
                actual: got.to_string(),
                pass: want == got,
            });
        }
    };
    let c = &summary.counters;
    exact("duration observations", expected.duration_observations, c.duration_checked);
    exact("duration deviations", expected.duration_deviations, c.duration_deviations);
    exact("distance observations", expected.distance_observations, c.distance_checked);
    exact("distance deviations", expected.distance_deviations, c.distance_deviations);
    exact(
        "max duration deviations per trace",
        expected.max_duration_deviations_per_trace.map(|v| v as u64),
        summary.max_duration_deviations() as u64,
    );
    exact(
        "max distance deviations per trace",
        expected.max_distance_deviations_per_trace.map(|v| v as u64),
        summary.max_distance_deviations() as u64,
    );
    exact(
        "traces at max distance deviations",
        expected.traces_at_max_distance_deviations.map(|v| v as u64),
        summary.traces_at_max_distance_deviations() as u64,
    );
    if let Some(want) = expected.max_duration_z {
        let got = summary.max_duration_z.as_ref().map(|m| m.z);
        out.push(Assertion {
            name: "max duration z".into(),
            expected: format!("{want:.1}"),
            actual: got.map_or("none".into(), |z| format!("{z:.1}")),
            pass: got.is_some_and(|z| within(z, want, MAX_Z_TOLERANCE)),
        });
    }
    if let Some(want) = &expected.max_duration_z_trace {
        let got = summary.max_duration_z.as_ref().map(|m| m.trace.as_str());
        out.push(Assertion {
            name: "max duration z trace".into(),
            expected: want.clone(),
            actual: got.unwrap_or("none").into(),
            pass: got == Some(want.as_str()),
        });
    }
    out
}

/// Sequence of every activity in first-seen order.
pub fn flat_model(log: &EventLog) -> ModelNode {
    let mut seen = std::collections::BTreeSet::new();
    let mut tasks = Vec::new();
    for t in &log.traces {
        for e in &t.events {
            if seen.insert(e.activity.as_str()) {
                tasks.push(ModelNode::task(e.activity.as_str()));
            }
        }
    }
    ModelNode::Sequence(tasks)
}

fn load_model(spec: &ExperimentSpec, train: &EventLog) -> Result<TimedProcessModel, EvalError> {
    match &spec.model {
        Some(path) => {
            let file = fs::File::open(path).map_err(|source| EvalError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(TimedProcessModel::load(file)?)
        }
        None => Ok(TimedProcessModel::new(flat_model(train))?),
    }
}

/// Runs an experiment on an already loaded log.
pub fn run_on_log(spec: &ExperimentSpec, log: &EventLog) -> Result<ExperimentReport, EvalError> {
    spec.validate()?;
    let expected = spec.expected()?;
    let tol = if spec.strict { STRICT_TOLERANCE } else { LOOSE_TOLERANCE };

    let (train, test) = log.split_at(spec.train_count(log.traces.len()));
    let (test, injections) = inject_anomalies(&test, &spec.anomalies)?;
    info!(
        "{}: {} training traces, {} test traces ({} events)",
        spec.name,
        train.traces.len(),
        test.traces.len(),
        test.event_count()
    );

    let mined = mine(&train, &spec.miner);
    let base = load_model(spec, &train)?;
    let model = Arc::new(base.clone().infuse(mined.profile.clone()));
    let report = check_log(&test, Arc::clone(&model), spec.checker);
    let checking = CheckingSummary::from_report(&report);

    let mut assertions = Vec::new();
    let mut variants = Vec::new();
    if let Some(expected) = &expected {
        let profile_checks = check_profile(&mined.profile, expected, tol);
        let profile_ok = profile_checks.iter().all(|a| a.pass);
        assertions.extend(profile_checks);
        if !profile_ok && !expected.profile.is_empty() {
            let alt = spec.miner.stddev_mode.other();
            let cfg = MinerConfig {
                stddev_mode: alt,
                ..spec.miner
            };
            let alt_profile = mine(&train, &cfg).profile;
            variants.push(Variant {
                label: format!("stddev_mode={}", serde_json::to_value(alt)?.as_str().unwrap_or("?")),
                assertions: check_profile(&alt_profile, expected, tol),
                checking: None,
            });
        }
        if let Some(want) = &expected.checking {
            assertions.extend(check_checking(&checking, want));
            let flipped = CheckerConfig {
                inclusive_threshold: !spec.checker.inclusive_threshold,
                ..spec.checker
            };
            let alt = CheckingSummary::from_report(&check_log(&test, Arc::clone(&model), flipped));
            variants.push(Variant {
                label: format!("inclusive_threshold={}", flipped.inclusive_threshold),
                assertions: check_checking(&alt, want),
                checking: Some(alt),
            });
        }
    }

    Ok(ExperimentReport {
        spec: spec.clone(),
        status: ExperimentStatus::Completed,
        train_traces: train.traces.len(),
        test_traces: test.traces.len(),
        test_events: test.event_count(),
        mining: MiningSummary::from(&mined),
        profile: mined.profile,
        checking,
        injections,
        assertions,
        variants,
    })
}

/// Loads the dataset and runs the experiment. A missing dataset is not an
/// error: the report carries a `dataset_unavailable` status instead.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport, EvalError> {
    spec.validate()?;
    if !spec.dataset.exists() {
        return Ok(ExperimentReport::unavailable(spec));
    }
    let parsed = parse_xes_path(&spec.dataset)?;
    for w in &parsed.warnings {
        log::warn!("{}: {w}", spec.dataset.display());
    }
    run_on_log(spec, &parsed.log)
}

fn key_label(key: &DistanceKey) -> String {
    match key.kind {
        crate::model::KeyKind::Duration => key.from.clone(),
        crate::model::KeyKind::Distance => format!("{} -> {}", key.from, key.to),
    }
}

/// Plain-text table with the columns Name, Profile Size, μ, σ, Min, Max.
pub fn render_table<'a>(rows: impl IntoIterator<Item = (&'a DistanceKey, &'a DistanceStats)>) -> String {
    let rows: Vec<(String, &DistanceStats)> = rows.into_iter().map(|(k, s)| (key_label(k), s)).collect();
    let width = rows.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0).max(4);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$} | {:>12} | {:>12} | {:>12} | {:>10} | {:>12}",
        "Name", "Profile Size", "μ", "σ", "Min", "Max"
    );
    let _ = writeln!(out, "{}", "-".repeat(width + 73));
    for (name, s) in rows {
        let _ = writeln!(
            out,
            "{:<width$} | {:>12} | {:>12.2} | {:>12.2} | {:>10.2} | {:>12.2}",
            name, s.n, s.mean, s.stddev, s.min, s.max
        );
    }
    out
}

fn render_assertions(out: &mut String, assertions: &[Assertion]) {
    for a in assertions {
        let mark = if a.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "  {mark} {}: expected {}, got {}", a.name, a.expected, a.actual);
    }
}

pub fn render_report(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "experiment {}", report.spec.name);
    if let ExperimentStatus::DatasetUnavailable { path } = &report.status {
        let _ = writeln!(out, "dataset unavailable: {}", path.display());
        return out;
    }
    let _ = writeln!(
        out,
        "train traces {}, test traces {}, test events {}\n",
        report.train_traces, report.test_traces, report.test_events
    );
    let _ = writeln!(out, "Task durations (s)\n{}", render_table(report.profile.durations()));
    let _ = writeln!(out, "Temporal distances (s)\n{}", render_table(report.profile.distances()));
    let c = &report.checking.counters;
    let _ = writeln!(
        out,
        "durations: {} checked, {} deviating\ndistances: {} checked, {} deviating\nunfinished penalties: {}",
        c.duration_checked, c.duration_deviations, c.distance_checked, c.distance_deviations, c.unfinished_penalties
    );
    for (label, hist) in [
        ("duration", &report.checking.duration_deviations_per_trace),
        ("distance", &report.checking.distance_deviations_per_trace),
    ] {
        let cells: Vec<String> = hist.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        let _ = writeln!(out, "{label} deviations per trace (count:traces): {}", cells.join(" "));
    }
    if let Some(m) = &report.checking.max_duration_z {
        let _ = writeln!(out, "max duration z {:.1} in {} ({})", m.z, m.trace, key_label(&m.key));
    }
    if let Some(m) = &report.checking.max_distance_z {
        let _ = writeln!(out, "max distance z {:.1} in {} ({})", m.z, m.trace, key_label(&m.key));
    }
    if !report.injections.is_empty() {
        let _ = writeln!(out, "injected anomalies: {}", report.injections.len());
    }
    if !report.assertions.is_empty() {
        let _ = writeln!(out, "\nassertions");
        render_assertions(&mut out, &report.assertions);
    }
    for v in &report.variants {
        let verdict = if v.passed() { "matches" } else { "differs" };
        let _ = writeln!(out, "\nvariant {} ({verdict})", v.label);
        render_assertions(&mut out, &v.assertions);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Lifecycle;

    fn abc_log() -> EventLog {
        let model = ModelNode::Sequence(vec![ModelNode::task("A"), ModelNode::task("B")]);
        generate(&model, &SynthSpec { traces: 10, seed: 3, ..SynthSpec::default() })
    }

    #[test]
    fn split_uses_ceiling_or_override() {
        let spec = ExperimentSpec::new("x", "none");
        assert_eq!(spec.train_count(10), 8);
        assert_eq!(spec.train_count(13087), 10470);
        let spec = ExperimentSpec { train_traces: Some(10469), ..spec };
        assert_eq!(spec.train_count(13087), 10469);
        assert_eq!(spec.train_count(5), 5);
    }

    #[test]
    fn invalid_fraction_is_rejected() {
        for f in [0.0, 1.0, -0.2, f64::NAN] {
            let spec = ExperimentSpec { split_fraction: f, ..ExperimentSpec::new("x", "none") };
            assert!(spec.validate().is_err(), "{f}");
        }
    }

    #[test]
    fn missing_dataset_is_a_status() {
        let spec = ExperimentSpec::new("gone", "/nonexistent/log.xes");
        let report = run_experiment(&spec).unwrap();
        assert!(!report.is_available());
        assert!(render_report(&report).contains("dataset unavailable"));
        assert!(report.to_json().contains(r#""status": "dataset_unavailable""#));
    }

    #[test]
    fn runs_on_a_synthetic_log() {
        let log = abc_log();
        let spec = ExperimentSpec::new("synthetic", "in-memory");
        let report = run_on_log(&spec, &log).unwrap();
        assert_eq!((report.train_traces, report.test_traces), (8, 2));
        assert_eq!(report.profile.durations().count(), 2);
        assert_eq!(report.checking.counters.duration_checked, 4);
        assert_eq!(report.checking.counters.duration_deviations, 0);
        let text = render_report(&report);
        assert!(text.contains("Profile Size"));
    }

    #[test]
    fn assertion_mode_reports_both_variants() {
        let log = abc_log();
        let (train, _) = log.split_at(8);
        let real = mine(&train, &MinerConfig::default()).profile;
        let a = real.duration("A").unwrap();
        let expected = ExpectedValues {
            profile: vec![ExpectedRow {
                key: DistanceKey::duration("A"),
                n: a.n,
                mean: a.mean * 1.05,
                stddev: a.stddev,
                min: None,
                max: None,
            }],
            exact_key_set: false,
            checking: Some(ExpectedChecking {
                duration_deviations: Some(0),
                ..ExpectedChecking::default()
            }),
        };
        let spec = ExperimentSpec {
            expected: Some(ExpectedSource::Inline(expected)),
            ..ExperimentSpec::new("x", "in-memory")
        };
        let report = run_on_log(&spec, &log).unwrap();
        assert!(!report.passed());
        let failed: Vec<_> = report.assertions.iter().filter(|a| !a.pass).map(|a| a.name.as_str()).collect();
        assert_eq!(failed, ["duration:A mean"]);
        let labels: Vec<_> = report.variants.iter().map(|v| v.label.as_str()).collect();
        assert_eq!(labels, ["stddev_mode=sample", "inclusive_threshold=true"]);
    }

    #[test]
    fn anomalies_hit_the_test_split() {
        let log = abc_log();
        let spec = ExperimentSpec {
            anomalies: vec![Anomaly {
                selector: TraceSelector::Indices(vec![0]),
                activity: "A".into(),
                kind: AnomalyKind::StretchDuration { factor: 20.0 },
                seed: 0,
            }],
            ..ExperimentSpec::new("x", "in-memory")
        };
        let report = run_on_log(&spec, &log).unwrap();
        assert_eq!(report.injections[0].trace_id, log.traces[8].trace_id);
        assert_eq!(report.checking.counters.duration_deviations, 1);
        let m = report.checking.max_duration_z.unwrap();
        assert_eq!(m.trace, log.traces[8].trace_id);
    }

    #[test]
    fn histograms_count_traces() {
        let log = abc_log();
        let (train, test) = log.split_at(8);
        let model = Arc::new(
            TimedProcessModel::new(flat_model(&train))
                .unwrap()
                .infuse(mine(&train, &MinerConfig::default()).profile),
        );
        let mut stretched = test.clone();
        for t in &mut stretched.traces {
            for e in &mut t.events {
                if e.activity == "B" && e.lifecycle == Lifecycle::Complete {
                    e.timestamp = crate::ingest::add_seconds(e.timestamp, 500.0);
                }
            }
        }
        let summary = CheckingSummary::from_report(&check_log(&stretched, model, CheckerConfig::default()));
        assert_eq!(summary.duration_deviations_per_trace.get(&1), Some(&2));
        assert_eq!(summary.max_duration_deviations(), 1);
    }
}
