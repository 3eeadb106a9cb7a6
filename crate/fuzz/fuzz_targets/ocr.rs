#![no_main]

use libfuzzer_sys::fuzz_target;
use schemnet_core::text::OcrDoc;

fuzz_target!(|data: &[u8]| {
    let _ = OcrDoc::from_json(data);
});
