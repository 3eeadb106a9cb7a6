#![no_main]

use libfuzzer_sys::fuzz_target;
use schemnet_core::netlist::parse_spice_value;
use schemnet_core::text::label::parse_value;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let _ = parse_value(s);
    let _ = parse_spice_value(s);
});
