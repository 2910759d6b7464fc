#![no_main]

use libfuzzer_sys::fuzz_target;
use trendclass::synth::SynthParams;

fuzz_target!(|data: &[u8]| {
    if let Ok(params) = serde_json::from_slice::<SynthParams>(data) {
        // Partial configs fill in defaults; derived views and
        // re-serialization must never panic.
        let _ = params.class_blind();
        let _ = serde_json::to_string(&params);
    }
});
