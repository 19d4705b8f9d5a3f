#![no_main]

use libfuzzer_sys::fuzz_target;
use tempograph::ingest::{decode_line, encode_line, LineEvents};

fuzz_target!(|data: &[u8]| {
    if let Ok(line) = std::str::from_utf8(data) {
        if let Ok(event) = decode_line(line) {
            assert_eq!(decode_line(&encode_line(&event)).unwrap(), event);
        }
    }
    for _ in LineEvents::new(data) {}
});
