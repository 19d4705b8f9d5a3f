#![no_main]

use libfuzzer_sys::fuzz_target;
use tempograph::CostReport;

fuzz_target!(|data: &[u8]| {
    let _ = CostReport::from_json(data);
});
