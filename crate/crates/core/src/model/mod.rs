//! Block-structured process models annotated with deviation weights and
//! thresholds, and carrying the temporal profile mined for them.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod profile;

pub use profile::{DistanceKey, DistanceStats, KeyKind, KeyParseError, ProfileError, TemporalProfile};

/// Control flow: tasks composed by sequence, exclusive choice and parallel split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelNode {
    #[serde(rename = "task")]
    Task(String),
    #[serde(rename = "seq")]
    Sequence(Vec<ModelNode>),
    #[serde(rename = "xor")]
    Xor(Vec<ModelNode>),
    #[serde(rename = "par")]
    Parallel(Vec<ModelNode>),
}

impl ModelNode {
    pub fn task(name: impl Into<String>) -> ModelNode {
        ModelNode::Task(name.into())
    }

    pub fn children(&self) -> &[ModelNode] {
        match self {
            ModelNode::Task(_) => &[],
            ModelNode::Sequence(c) | ModelNode::Xor(c) | ModelNode::Parallel(c) => c,
        }
    }

    /// Task names in depth-first order.
    pub fn tasks(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_tasks(&mut out);
        out
    }

    fn collect_tasks<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ModelNode::Task(name) => out.push(name),
            _ => self.children().iter().for_each(|c| c.collect_tasks(out)),
        }
    }

    pub fn xor_count(&self) -> usize {
        let own = usize::from(matches!(self, ModelNode::Xor(_)));
        own + self.children().iter().map(ModelNode::xor_count).sum::<usize>()
    }

    pub fn parallel_count(&self) -> usize {
        let own = usize::from(matches!(self, ModelNode::Parallel(_)));
        own + self.children().iter().map(ModelNode::parallel_count).sum::<usize>()
    }
}

/// Weight ω and z-score threshold κ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskAnnotation {
    pub omega: f64,
    pub kappa: f64,
}

impl TaskAnnotation {
    pub const DEFAULT: TaskAnnotation = TaskAnnotation {
        omega: 1.0,
        kappa: 3.0,
    };

    fn is_valid(&self) -> bool {
        self.omega >= 0.0 && self.kappa >= 0.0 && !self.omega.is_nan() && !self.kappa.is_nan()
    }
}

impl Default for TaskAnnotation {
    fn default() -> Self {
        TaskAnnotation::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PartialAnnotation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("reading model: {0}")]
    Io(#[from] std::io::Error),
    #[error("{kind} block without children")]
    EmptyBlock { kind: &'static str },
    #[error("task with an empty name")]
    EmptyTaskName,
    #[error("duplicate task '{0}'")]
    DuplicateTask(String),
    #[error("annotation references unknown task '{0}'")]
    UnknownTask(String),
    #[error("override for {key} references unknown task '{task}'")]
    UnknownOverrideTask { key: String, task: String },
    #[error("invalid weights for '{0}': omega and kappa must be >= 0")]
    InvalidWeights(String),
    #[error("embedded profile has a duration for '{0}', which is not a model task")]
    ForeignDuration(String),
    #[error("embedded profile: {0}")]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    root: ModelNode,
    #[serde(default)]
    annotations: BTreeMap<String, PartialAnnotation>,
    #[serde(default)]
    distance_overrides: Vec<OverrideEntry>,
    #[serde(default)]
    defaults: Option<TaskAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    profile: Option<TemporalProfile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct OverrideEntry {
    key: DistanceKey,
    #[serde(flatten)]
    weights: PartialAnnotation,
}

/// A process model with per-task (ω, κ), per-key overrides and an infused
/// temporal profile. Immutable once built; share it behind an `Arc`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedProcessModel {
    root: ModelNode,
    annotations: BTreeMap<String, TaskAnnotation>,
    overrides: BTreeMap<DistanceKey, PartialAnnotation>,
    defaults: TaskAnnotation,
    profile: TemporalProfile,
}

fn validate_tree(node: &ModelNode, seen: &mut BTreeSet<String>) -> Result<(), ModelError> {
    match node {
        ModelNode::Task(name) => {
            if name.is_empty() {
                return Err(ModelError::EmptyTaskName);
            }
            if !seen.insert(name.clone()) {
                return Err(ModelError::DuplicateTask(name.clone()));
            }
            Ok(())
        }
        ModelNode::Sequence(c) | ModelNode::Xor(c) | ModelNode::Parallel(c) => {
            if c.is_empty() {
                let kind = match node {
                    ModelNode::Sequence(_) => "seq",
                    ModelNode::Xor(_) => "xor",
                    _ => "par",
                };
                return Err(ModelError::EmptyBlock { kind });
            }
            c.iter().try_for_each(|child| validate_tree(child, seen))
        }
    }
}

impl TimedProcessModel {
    /// Validates the tree; every task gets the default annotation.
    pub fn new(root: ModelNode) -> Result<TimedProcessModel, ModelError> {
        Self::with_defaults(root, TaskAnnotation::DEFAULT)
    }

    pub fn with_defaults(
        root: ModelNode,
        defaults: TaskAnnotation,
    ) -> Result<TimedProcessModel, ModelError> {
        let mut seen = BTreeSet::new();
        validate_tree(&root, &mut seen)?;
        if !defaults.is_valid() {
            return Err(ModelError::InvalidWeights("defaults".into()));
        }
        let annotations = seen.into_iter().map(|t| (t, defaults)).collect();
        Ok(TimedProcessModel {
            root,
            annotations,
            overrides: BTreeMap::new(),
            defaults,
            profile: TemporalProfile::new(),
        })
    }

    pub fn annotate(
        mut self,
        task: &str,
        annotation: TaskAnnotation,
    ) -> Result<TimedProcessModel, ModelError> {
        if !annotation.is_valid() {
            return Err(ModelError::InvalidWeights(task.to_string()));
        }
        match self.annotations.get_mut(task) {
            Some(slot) => *slot = annotation,
            None => return Err(ModelError::UnknownTask(task.to_string())),
        }
        Ok(self)
    }

    pub fn override_key(
        mut self,
        key: DistanceKey,
        weights: PartialAnnotation,
    ) -> Result<TimedProcessModel, ModelError> {
        let names: &[&str] = match key.kind {
            KeyKind::Duration => &[key.from.as_str()],
            KeyKind::Distance => &[key.from.as_str(), key.to.as_str()],
        };
        for name in names {
            if !self.annotations.contains_key(*name) {
                return Err(ModelError::UnknownOverrideTask {
                    key: key.to_string(),
                    task: name.to_string(),
                });
            }
        }
        let probe = TaskAnnotation {
            omega: weights.omega.unwrap_or(0.0),
            kappa: weights.kappa.unwrap_or(0.0),
        };
        if !probe.is_valid() {
            return Err(ModelError::InvalidWeights(key.to_string()));
        }
        self.overrides.insert(key, weights);
        Ok(self)
    }

    pub fn root(&self) -> &ModelNode {
        &self.root
    }

    pub fn defaults(&self) -> TaskAnnotation {
        self.defaults
    }

    pub fn profile(&self) -> &TemporalProfile {
        &self.profile
    }

    pub fn has_task(&self, name: &str) -> bool {
        self.annotations.contains_key(name)
    }

    pub fn task_count(&self) -> usize {
        self.annotations.len()
    }

    pub fn annotation(&self, task: &str) -> Option<TaskAnnotation> {
        self.annotations.get(task).copied()
    }

    /// (ω, κ) for a key: per-key override, then the governing task's
    /// annotation, then the model defaults. Resolved field by field.
    pub fn weights(&self, key: &DistanceKey) -> TaskAnnotation {
        let task = self
            .annotations
            .get(key.governing_task())
            .copied()
            .unwrap_or(self.defaults);
        match self.overrides.get(key) {
            Some(o) => TaskAnnotation {
                omega: o.omega.unwrap_or(task.omega),
                kappa: o.kappa.unwrap_or(task.kappa),
            },
            None => task,
        }
    }

    /// Replaces the profile wholesale. Duration entries for activities that
    /// are not model tasks are kept but reported.
    pub fn infuse(mut self, profile: TemporalProfile) -> TimedProcessModel {
        for (key, _) in profile.durations() {
            if !self.has_task(&key.from) {
                warn!("profile has a duration for '{}', which is not a model task", key.from);
            }
        }
        self.profile = profile;
        self
    }

    pub fn load<R: Read>(mut input: R) -> Result<TimedProcessModel, ModelError> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        Self::from_json(&bytes)
    }

    pub fn from_json(bytes: &[u8]) -> Result<TimedProcessModel, ModelError> {
        let file: ModelFile = serde_json::from_slice(bytes)?;
        let defaults = file.defaults.unwrap_or_default();
        let mut model = TimedProcessModel::with_defaults(file.root, defaults)?;
        for (task, partial) in file.annotations {
            let ann = TaskAnnotation {
                omega: partial.omega.unwrap_or(defaults.omega),
                kappa: partial.kappa.unwrap_or(defaults.kappa),
            };
            model = model.annotate(&task, ann)?;
        }
        for entry in file.distance_overrides {
            model = model.override_key(entry.key, entry.weights)?;
        }
        if let Some(profile) = file.profile {
            for (key, stats) in profile.iter() {
                if !stats.is_valid() {
                    return Err(ProfileError::Stats {
                        key: key.to_string(),
                        stats: *stats,
                    }
                    .into());
                }
                if key.kind == KeyKind::Duration && !model.has_task(&key.from) {
                    return Err(ModelError::ForeignDuration(key.from.clone()));
                }
            }
            model.profile = profile;
        }
        Ok(model)
    }

    /// Canonical JSON; the profile is embedded only when non-empty.
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            root: self.root.clone(),
            annotations: self
                .annotations
                .iter()
                .map(|(k, a)| {
                    (
                        k.clone(),
                        PartialAnnotation {
                            omega: Some(a.omega),
                            kappa: Some(a.kappa),
                        },
                    )
                })
                .collect(),
            distance_overrides: self
                .overrides
                .iter()
                .map(|(k, w)| OverrideEntry {
                    key: k.clone(),
                    weights: *w,
                })
                .collect(),
            defaults: Some(self.defaults),
            profile: (!self.profile.is_empty()).then(|| self.profile.clone()),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }
}
