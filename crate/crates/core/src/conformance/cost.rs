use serde::{Deserialize, Serialize};

use crate::model::{DistanceKey, DistanceStats, TimedProcessModel};

/// Number of standard deviations between `x` and the mean.
///
/// With `σ = 0` an exact hit scores 0 and anything else scores `+∞`, which
/// exceeds every finite κ.
pub fn z_score(x: f64, stats: &DistanceStats) -> f64 {
    let diff = (x - stats.mean).abs();
    if stats.stddev > 0.0 {
        diff / stats.stddev
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Whether `z` counts as a deviation for threshold `kappa`.
pub fn exceeds(z: f64, kappa: f64, inclusive: bool) -> bool {
    if inclusive {
        z >= kappa
    } else {
        z > kappa
    }
}

/// Outcome of costing one observation against a profile entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assessment {
    pub z: f64,
    pub omega: f64,
    pub kappa: f64,
    pub deviates: bool,
    pub cost: f64,
}

/// Parameters shared by every cost evaluation of one checking run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Global multiplier φ.
    pub phi: f64,
    /// Trigger at `z >= κ` instead of `z > κ`.
    pub inclusive_threshold: bool,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            phi: 1.0,
            inclusive_threshold: false,
        }
    }
}

/// `ω·φ·z` once the z-score passes κ, otherwise 0. A zero weight silences
/// the entry even for an infinite z.
pub fn weighted_cost(z: f64, omega: f64, kappa: f64, params: CostParams) -> (bool, f64) {
    if !exceeds(z, kappa, params.inclusive_threshold) {
        return (false, 0.0);
    }
    let weight = omega * params.phi;
    if weight == 0.0 {
        (true, 0.0)
    } else {
        (true, weight * z)
    }
}

/// `None` when the profile has no entry for `key`.
pub fn assess(
    x: f64,
    key: &DistanceKey,
    model: &TimedProcessModel,
    params: CostParams,
) -> Option<Assessment> {
    let stats = model.profile().get(key)?;
    let weights = model.weights(key);
    let z = z_score(x, stats);
    let (deviates, cost) = weighted_cost(z, weights.omega, weights.kappa, params);
    Some(Assessment {
        z,
        omega: weights.omega,
        kappa: weights.kappa,
        deviates,
        cost,
    })
}

/// Temporal deviation cost of observing `x` seconds for `key`.
pub fn temporal_cost(
    x: f64,
    key: &DistanceKey,
    model: &TimedProcessModel,
    params: CostParams,
) -> f64 {
    assess(x, key, model, params).map_or(0.0, |a| a.cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelNode, PartialAnnotation, TaskAnnotation, TemporalProfile};

    fn stats(mean: f64, stddev: f64) -> DistanceStats {
        DistanceStats {
            n: 5,
            mean,
            stddev,
            min: mean - 2.0 * stddev,
            max: mean + 2.0 * stddev,
        }
    }

    /// Model A;B with the illustrating profile and weights.
    fn example_model() -> TimedProcessModel {
        let profile: TemporalProfile = [
            (DistanceKey::duration("A"), stats(20.0, 4.0)),
            (DistanceKey::distance("A", "B"), stats(3.0, 0.5)),
            (DistanceKey::duration("B"), stats(6.0, 0.5)),
        ]
        .into_iter()
        .collect();
        TimedProcessModel::new(ModelNode::Sequence(vec![
            ModelNode::task("A"),
            ModelNode::task("B"),
        ]))
        .unwrap()
        .annotate("B", TaskAnnotation { omega: 1.0, kappa: 2.0 })
        .unwrap()
        .override_key(
            DistanceKey::distance("A", "B"),
            PartialAnnotation {
                omega: Some(2.0),
                kappa: Some(3.0),
            },
        )
        .unwrap()
        .infuse(profile)
    }

    #[test]
    fn z_scores_of_the_illustrating_example() {
        assert_eq!(z_score(19.0, &stats(20.0, 4.0)), 0.25);
        assert_eq!(z_score(10.0, &stats(3.0, 0.5)), 14.0);
        assert_eq!(z_score(7.0, &stats(6.0, 0.5)), 2.0);
        assert_eq!(z_score(42.0, &stats(42.0, 3.0)), 0.0);
    }

    #[test]
    fn zero_stddev_branches() {
        assert_eq!(z_score(5.0, &stats(5.0, 0.0)), 0.0);
        let z = z_score(5.5, &stats(5.0, 0.0));
        assert!(z.is_infinite());
        assert!(exceeds(z, 1e300, false));
        assert_eq!(weighted_cost(z, 0.0, 3.0, CostParams::default()), (true, 0.0));
    }

    #[test]
    fn distance_cost_uses_the_key_override() {
        let m = example_model();
        let cost = temporal_cost(10.0, &DistanceKey::distance("A", "B"), &m, CostParams::default());
        assert_eq!(cost, 28.0);
    }

    #[test]
    fn missing_key_costs_nothing() {
        let m = example_model();
        let key = DistanceKey::distance("A", "C");
        assert_eq!(temporal_cost(1e9, &key, &m, CostParams::default()), 0.0);
        assert!(assess(1e9, &key, &m, CostParams::default()).is_none());
    }

    #[test]
    fn threshold_strictness() {
        let m = example_model();
        let key = DistanceKey::duration("B");
        let strict = assess(7.0, &key, &m, CostParams::default()).unwrap();
        assert_eq!((strict.z, strict.kappa, strict.deviates, strict.cost), (2.0, 2.0, false, 0.0));
        let inclusive = assess(
            7.0,
            &key,
            &m,
            CostParams {
                phi: 1.0,
                inclusive_threshold: true,
            },
        )
        .unwrap();
        // ω·φ·z with ω = 1, φ = 1, z = 2
        assert_eq!((inclusive.deviates, inclusive.cost), (true, 2.0));
    }

    #[test]
    fn below_threshold_costs_nothing() {
        let m = example_model();
        assert_eq!(
            temporal_cost(19.0, &DistanceKey::duration("A"), &m, CostParams::default()),
            0.0
        );
    }

    #[test]
    fn cost_is_linear_in_phi() {
        let m = example_model();
        let key = DistanceKey::distance("A", "B");
        let one = temporal_cost(10.0, &key, &m, CostParams { phi: 1.0, inclusive_threshold: false });
        let two = temporal_cost(10.0, &key, &m, CostParams { phi: 2.0, inclusive_threshold: false });
        assert_eq!(two, 2.0 * one);
    }
}
