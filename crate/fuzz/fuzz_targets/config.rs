#![no_main]

use libfuzzer_sys::fuzz_target;
use schemnet_core::config::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut cfg = Config::default();
    if cfg.apply_text(text).is_ok() {
        let mut echo = Config::default();
        echo.apply_text(&cfg.to_text()).expect("echoed config parses");
    }
});
