#![no_main]

use libfuzzer_sys::fuzz_target;
use tempograph::DistanceKey;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(key) = s.parse::<DistanceKey>() {
            assert_eq!(key.to_string().parse::<DistanceKey>().unwrap(), key);
        }
    }
});
