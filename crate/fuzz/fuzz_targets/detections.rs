#![no_main]

use libfuzzer_sys::fuzz_target;
use schemnet_core::detect::{ingest_detections, DetectionDoc};

fuzz_target!(|data: &[u8]| {
    let Ok(doc) = DetectionDoc::from_json(data) else { return };
    if let Ok(ing) = ingest_detections(&doc, None) {
        // ingesting our own output must be a fixed point
        let again = DetectionDoc::from_components(&ing.components, doc.image.width, doc.image.height);
        let twice = ingest_detections(&again, None).expect("re-ingest");
        assert_eq!(twice.components, ing.components);
    }
});
