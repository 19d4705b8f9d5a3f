#![no_main]

use libfuzzer_sys::fuzz_target;
use tempograph::TemporalProfile;

fuzz_target!(|data: &[u8]| {
    let _ = TemporalProfile::from_json(data);
});
