#![no_main]

use libfuzzer_sys::fuzz_target;
use tempograph::eval::ExperimentSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = serde_json::from_slice::<ExperimentSpec>(data) {
        let _ = spec.validate();
    }
});
