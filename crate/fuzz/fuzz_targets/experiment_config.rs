#![no_main]

use libfuzzer_sys::fuzz_target;
use trendclass::pipeline::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(config) = serde_json::from_slice::<ExperimentConfig>(data) {
        let _ = serde_json::to_string(&config);
    }
});
