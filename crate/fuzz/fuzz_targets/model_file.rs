#![no_main]

use libfuzzer_sys::fuzz_target;
use tempograph::TimedProcessModel;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = TimedProcessModel::from_json(data) {
        let again = TimedProcessModel::from_json(model.to_json().as_bytes()).unwrap();
        assert_eq!(again.task_count(), model.task_count());
    }
});
