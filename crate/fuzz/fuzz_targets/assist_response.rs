#![no_main]

use libfuzzer_sys::fuzz_target;
use schemnet_assist::{AssistRequest, AssistResponse};

fuzz_target!(|data: &[u8]| {
    let _ = serde_json::from_slice::<AssistResponse>(data);
    let _ = serde_json::from_slice::<AssistRequest>(data);
});
