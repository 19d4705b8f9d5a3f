#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(parsed) = tempograph::ingest::parse_xes_bytes(data) {
        for trace in &parsed.log.traces {
            assert!(trace.events.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        }
    }
});
