#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(table) = densecraft::io::parse_density_csv(text, Path::new("fuzz.csv")) {
            let n = table.grid.len();
            assert!(table.mean.len() == n && table.lower.len() == n && table.upper.len() == n);
        }
    }
});
