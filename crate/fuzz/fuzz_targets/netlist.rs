#![no_main]

use libfuzzer_sys::fuzz_target;
use schemnet_core::netlist::parse_netlist;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(n) = parse_netlist(text) {
        let _ = n.to_spice();
    }
});
