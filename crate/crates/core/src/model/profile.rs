//! Temporal profile: statistics per task duration and per temporal distance.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyKind {
    Duration,
    Distance,
}

/// Either the duration of one activity or the distance `|from to|` between
/// the completion of `from` and the start of `to`.
///
/// Serialized as `duration:A` or `distance:A->B`. Inside names, `\` and `>`
/// are backslash-escaped so the first unescaped `->` is always the separator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DistanceKey {
    pub kind: KeyKind,
    pub from: String,
    pub to: String,
}

impl DistanceKey {
    pub fn duration(activity: impl Into<String>) -> DistanceKey {
        DistanceKey {
            kind: KeyKind::Duration,
            from: activity.into(),
            to: String::new(),
        }
    }

    pub fn distance(from: impl Into<String>, to: impl Into<String>) -> DistanceKey {
        DistanceKey {
            kind: KeyKind::Distance,
            from: from.into(),
            to: to.into(),
        }
    }

    /// The task whose annotation governs this key: the activity itself for
    /// durations, the target for distances.
    pub fn governing_task(&self) -> &str {
        match self.kind {
            KeyKind::Duration => &self.from,
            KeyKind::Distance => &self.to,
        }
    }
}

fn escape(name: &str, out: &mut String) {
    for c in name.chars() {
        if c == '\\' || c == '>' {
            out.push('\\');
        }
        out.push(c);
    }
}

impl fmt::Display for DistanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::with_capacity(self.from.len() + self.to.len() + 12);
        match self.kind {
            KeyKind::Duration => {
                s.push_str("duration:");
                escape(&self.from, &mut s);
            }
            KeyKind::Distance => {
                s.push_str("distance:");
                escape(&self.from, &mut s);
                s.push_str("->");
                escape(&self.to, &mut s);
            }
        }
        f.write_str(&s)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KeyParseError {
    #[error("key '{0}' lacks a 'duration:' or 'distance:' prefix")]
    Prefix(String),
    #[error("key '{0}' has a dangling escape")]
    Escape(String),
    #[error("distance key '{0}' has no '->' separator")]
    Separator(String),
    #[error("key '{0}' has an empty activity name")]
    Empty(String),
    #[error("duration key '{0}' contains an unescaped '>'")]
    Stray(String),
}

/// Splits on unescaped `->`, unescaping both sides.
fn unescape_parts(body: &str, whole: &str) -> Result<Vec<String>, KeyParseError> {
    let mut parts = vec![String::new()];
    let mut chars = body.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some(n) => parts.last_mut().unwrap().push(n),
                None => return Err(KeyParseError::Escape(whole.to_string())),
            },
            '-' if chars.peek() == Some(&'>') => {
                chars.next();
                parts.push(String::new());
            }
            '>' => return Err(KeyParseError::Stray(whole.to_string())),
            c => parts.last_mut().unwrap().push(c),
        }
    }
    Ok(parts)
}

impl FromStr for DistanceKey {
    type Err = KeyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(body) = s.strip_prefix("duration:") {
            let mut parts = unescape_parts(body, s)?;
            if parts.len() != 1 {
                return Err(KeyParseError::Stray(s.to_string()));
            }
            let name = parts.pop().unwrap();
            if name.is_empty() {
                return Err(KeyParseError::Empty(s.to_string()));
            }
            Ok(DistanceKey::duration(name))
        } else if let Some(body) = s.strip_prefix("distance:") {
            let parts = unescape_parts(body, s)?;
            if parts.len() != 2 {
                return Err(KeyParseError::Separator(s.to_string()));
            }
            let [from, to]: [String; 2] = parts.try_into().unwrap();
            if from.is_empty() || to.is_empty() {
                return Err(KeyParseError::Empty(s.to_string()));
            }
            Ok(DistanceKey::distance(from, to))
        } else {
            Err(KeyParseError::Prefix(s.to_string()))
        }
    }
}

impl Serialize for DistanceKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DistanceKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Sample statistics in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    pub n: u64,
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

impl DistanceStats {
    pub fn is_valid(&self) -> bool {
        self.n >= 1
            && self.stddev >= 0.0
            && self.min <= self.mean
            && self.mean <= self.max
            && [self.mean, self.stddev, self.min, self.max]
                .iter()
                .all(|v| v.is_finite())
    }
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("profile JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid statistics for {key}: {stats:?}")]
    Stats { key: String, stats: DistanceStats },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemporalProfile {
    entries: BTreeMap<DistanceKey, DistanceStats>,
}

impl TemporalProfile {
    pub fn new() -> TemporalProfile {
        TemporalProfile::default()
    }

    pub fn insert(&mut self, key: DistanceKey, stats: DistanceStats) -> Option<DistanceStats> {
        self.entries.insert(key, stats)
    }

    pub fn get(&self, key: &DistanceKey) -> Option<&DistanceStats> {
        self.entries.get(key)
    }

    pub fn duration(&self, activity: &str) -> Option<&DistanceStats> {
        self.entries.get(&DistanceKey::duration(activity))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DistanceKey, &DistanceStats)> {
        self.entries.iter()
    }

    pub fn durations(&self) -> impl Iterator<Item = (&DistanceKey, &DistanceStats)> {
        self.entries.iter().filter(|(k, _)| k.kind == KeyKind::Duration)
    }

    pub fn distances(&self) -> impl Iterator<Item = (&DistanceKey, &DistanceStats)> {
        self.entries.iter().filter(|(k, _)| k.kind == KeyKind::Distance)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    pub fn from_json(bytes: &[u8]) -> Result<TemporalProfile, ProfileError> {
        let profile: TemporalProfile = serde_json::from_slice(bytes)?;
        for (k, s) in profile.iter() {
            if !s.is_valid() {
                return Err(ProfileError::Stats {
                    key: k.to_string(),
                    stats: *s,
                });
            }
        }
        Ok(profile)
    }
}

impl FromIterator<(DistanceKey, DistanceStats)> for TemporalProfile {
    fn from_iter<I: IntoIterator<Item = (DistanceKey, DistanceStats)>>(iter: I) -> Self {
        TemporalProfile {
            entries: iter.into_iter().collect(),
        }
    }
}

// The file form is keyed by the rendered key string; sorting by that string
// keeps the output canonical.
impl Serialize for TemporalProfile {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rendered: BTreeMap<String, &DistanceStats> =
            self.entries.iter().map(|(k, v)| (k.to_string(), v)).collect();
        rendered.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TemporalProfile {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<DistanceKey, DistanceStats>::deserialize(d)?;
        Ok(TemporalProfile { entries: raw })
    }
}
