#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = densecraft::config::RunConfig::from_json(text) {
            let _ = cfg.clone().or(densecraft::config::RunConfig::default());
        }
    }
});
