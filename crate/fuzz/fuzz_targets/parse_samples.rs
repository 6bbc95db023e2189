#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(values) = densecraft::io::parse_samples(text, Path::new("fuzz.csv")) {
            assert!(values.len() >= 2);
            assert!(values.iter().all(|v| v.is_finite()));
        }
    }
});
