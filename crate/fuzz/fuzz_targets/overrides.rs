#![no_main]

use libfuzzer_sys::fuzz_target;
use schemnet_core::pipeline::{effective_overrides, Override};

fuzz_target!(|data: &[u8]| {
    if let Ok(log) = serde_json::from_slice::<Vec<Override>>(data) {
        assert!(effective_overrides(&log).len() <= log.len());
    }
});
