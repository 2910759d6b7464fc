#![no_main]

use libfuzzer_sys::fuzz_target;
use trendclass::features::TrendFeaturesDoc;

fuzz_target!(|data: &[u8]| {
    if let Ok(doc) = serde_json::from_slice::<TrendFeaturesDoc>(data) {
        // Validation must classify arbitrary decoded documents without
        // panicking; matrix() must be safe on validated documents.
        if doc.validate().is_ok() {
            let _ = doc.matrix();
        }
    }
});
