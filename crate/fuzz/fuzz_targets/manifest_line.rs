#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(line) = std::str::from_utf8(data) {
        // Must reject malformed lines with an error, never panic.
        let _ = trendclass::ingest::parse_manifest_line(line);
    }
});
