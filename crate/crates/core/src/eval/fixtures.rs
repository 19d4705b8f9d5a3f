//! Models and expected values shipped with the crate.

use crate::model::TimedProcessModel;

use super::ExpectedValues;

/// The 24 BPIC 2012 activities as one sequence, κ = 3 and ω = 1 throughout.
pub const BPIC12_MODEL: &str = include_str!("../../fixtures/bpic12.model.json");
/// Published duration and distance tables plus checking results for BPIC 2012.
pub const BPIC12_EXPECTED: &str = include_str!("../../fixtures/bpic12.expected.json");
pub const BPIC12_EXPERIMENT: &str = include_str!("../../fixtures/bpic12.experiment.json");
/// Turning and robot cell: ω = 0 for the forking task, ω = 1 for machining.
pub const MANUFACTURING_MODEL: &str = include_str!("../../fixtures/manufacturing.model.json");

pub fn bpic12_model() -> TimedProcessModel {
    TimedProcessModel::from_json(BPIC12_MODEL.as_bytes()).expect("bundled model is valid")
}

pub fn bpic12_expected() -> ExpectedValues {
    serde_json::from_str(BPIC12_EXPECTED).expect("bundled table is valid")
}

pub fn manufacturing_model() -> TimedProcessModel {
    TimedProcessModel::from_json(MANUFACTURING_MODEL.as_bytes()).expect("bundled model is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DistanceKey;

    #[test]
    fn bpic12_fixtures_load() {
        assert_eq!(bpic12_model().task_count(), 24);
        let e = bpic12_expected();
        assert_eq!(e.profile.len(), 18);
        let fraud = e
            .profile
            .iter()
            .find(|r| r.key == DistanceKey::duration("W_Beoordelen fraude"))
            .unwrap();
        assert_eq!((fraud.n, fraud.mean, fraud.stddev), (211, 73.77, 640.81));
        assert_eq!(e.checking.unwrap().distance_deviations, Some(259));
        let spec: super::super::ExperimentSpec = serde_json::from_str(BPIC12_EXPERIMENT).unwrap();
        assert_eq!(spec.train_traces, Some(10469));
        assert_eq!(spec.miner.min_support, 200);
    }

    #[test]
    fn manufacturing_weights() {
        let m = manufacturing_model();
        assert_eq!(m.annotation("Fork Part").unwrap().omega, 0.0);
        assert_eq!(m.annotation("MT45 Machining").unwrap().omega, 1.0);
        assert_eq!(m.annotation("IRB2600 Unload to Tray").unwrap().kappa, 4.0);
        assert_eq!(m.root().parallel_count(), 2);
    }
}
